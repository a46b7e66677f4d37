#pragma once

#include "proxyhedge/factorizer.hpp"
#include "proxyhedge/grid_field.hpp"
#include "proxyhedge/market_model.hpp"
#include "proxyhedge/nelder_mead.hpp"
#include "proxyhedge/splitting_solver.hpp"
#include "proxyhedge/transform.hpp"

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace proxyhedge {

/// Value function of the unhedged Merton investor: -exp(-gamma x e^{r tau} - eta^2 tau / 2).
double merton_value(double x, double tau, const MarketModel& model);

struct SolveDiagnostics {
    int time_steps = 0;
    std::vector<int> nodes;
    double initial_min = 0.0;
    double initial_max = 0.0;
    bool bounds_respected = true;
};

struct Solution {
    GridField field;          // Phi in factorized coordinates at tau = T
    Eigen::VectorXd u_star;   // spot mapped to factorized coordinates
    double phi_at_spot = 0.0;
    double price = 0.0;
    SolveDiagnostics diagnostics;
};

/// Factorizes once and prices any number of static hedges for one market.
class Pricer {
public:
    Pricer(MarketModel model, SolverConfig cfg);
    /// Uses a caller-supplied factorization, e.g. one with rescaled columns.
    Pricer(MarketModel model, SolverConfig cfg, FactorizedSystem fs);

    /// Buyer's (or, for Side::Sell, seller's) indifference price of the claim net of the static hedge.
    Solution solve(std::span<const double> alpha, Side side = Side::Buy) const;
    Solution solve(std::span<const double> alpha, Side side, const SolverConfig& cfg) const;
    double price(std::span<const double> alpha, Side side = Side::Buy) const { return solve(alpha, side).price; }

    const MarketModel& model() const { return model_; }
    const SolverConfig& config() const { return cfg_; }
    const FactorizedSystem& factorization() const { return fs_; }
    const CoordinateMap& coordinates() const { return map_; }

private:
    MarketModel model_;
    SolverConfig cfg_;
    FactorizedSystem fs_;
    CoordinateMap map_;
};

struct PriceResult {
    double price = 0.0;
    double phi_at_spot = 0.0;
};

PriceResult price_given_alpha(const MarketModel& model, std::span<const double> alpha, const SolverConfig& cfg,
                              Side side = Side::Buy);

/// pi* = e^{-rT}/(gamma sigma_x) (eta + sum_j b_j d/du_j log Phi(u*)), with central differences on the grid.
/// The cash argument cancels under exponential utility and is accepted for interface symmetry.
double dynamic_hedge(const MarketModel& model, const FactorizedSystem& fs, const GridField& field,
                     const Eigen::VectorXd& u_star, double x = 0.0);

struct OptimizeOptions {
    NelderMeadOptions search;
    std::optional<SolverConfig> search_config; // coarser grid for the search; final alpha re-priced with the main one
    Side side = Side::Buy;
};

struct PricingResult {
    double price = 0.0;
    Eigen::VectorXd alpha;
    double pi = 0.0;
    double phi_at_spot = 0.0;
    Eigen::VectorXd u_star;
    FactorizedSystem factorization;
    SolveDiagnostics diagnostics;
    std::vector<NelderMeadTracePoint> trace; // objective values are prices, not their negatives
    int evaluations = 0;
    bool converged = true;
    std::vector<std::string> warnings;
};

/// Prices at alpha_init when N = 0; otherwise maximizes g over the static hedge box.
PricingResult optimize_static_hedge(const MarketModel& model, const SolverConfig& cfg,
                                    const Eigen::VectorXd& alpha_init = {}, const OptimizeOptions& opts = {});

/// Full pricing at a fixed alpha, with the dynamic hedge.
PricingResult evaluate_hedge(const Pricer& pricer, std::span<const double> alpha, Side side = Side::Buy);

struct ImpliedGammaOptions {
    double gamma_lo = 1e-3;
    double gamma_hi = 50.0;
    double relative_tolerance = 1e-5;
    int max_iterations = 200;
};

/// Risk aversion reproducing observed_price, by bisection in log gamma.
double implied_gamma(const MarketModel& model, double observed_price, const SolverConfig& cfg,
                     std::span<const double> alpha = {}, const ImpliedGammaOptions& opts = {});

/// Indifference price of min(Y_i, K_i) alone, with the index as the only hedge:
/// -e^{-rT}/(gamma(1-rho^2)) log E[exp(-gamma(1-rho^2) min(Y_T, K))], by Gauss-Hermite quadrature.
double single_claim_oracle(const MarketModel& model, int asset = 0, int nodes = 200);

/// e^{-rT} E[min(Y_T, K)] under the drift-adjusted log-dynamics; the small-gamma limit of the oracle.
/// Integrated with the quadrature split at the strike.
double marginal_price(const MarketModel& model, int asset, int nodes = 200);

} // namespace proxyhedge
