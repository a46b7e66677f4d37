#pragma once

#include <Eigen/Dense>
#include <vector>

namespace proxyhedge {

/// Piecewise-constant function of calendar time on [0, T].
///
/// Segment k holds `values[k]` on (ends[k-1], ends[k]] with ends[-1] = 0.
/// The last segment is extended flat past its end point.
class TermStructure {
public:
    TermStructure() = default;
    explicit TermStructure(double constant);
    TermStructure(std::vector<double> ends, std::vector<double> values);

    double value(double t) const;
    /// Exact integral over [t0, t1].
    double integral(double t0, double t1) const;
    TermStructure shifted(double offset) const;

    const std::vector<double>& ends() const { return ends_; }
    const std::vector<double>& values() const { return values_; }
    bool is_constant() const { return values_.size() == 1; }

    friend bool operator==(const TermStructure&, const TermStructure&) = default;

private:
    std::vector<double> ends_;
    std::vector<double> values_;
};

/// Market description for the illiquid claim on Y_0, N proxies Y_1..Y_N and the index.
///
/// Asset 0 is the illiquid underlying. A strike of zero denotes a zero-notional
/// claim (payoff min(Y, 0) = 0); the log-moneyness reference then falls back to
/// the spot.
struct MarketModel {
    int n_proxies = 0;
    std::vector<double> spots;
    std::vector<double> strikes;
    std::vector<TermStructure> drifts;
    std::vector<double> vols;
    Eigen::MatrixXd corr_yy;
    Eigen::VectorXd corr_xy;
    double index_drift = 0.0;
    double index_vol = 0.2;
    double rate = 0.0;
    double maturity = 1.0;
    double risk_aversion = 1.0;
    std::vector<double> proxy_prices;

    int n_assets() const { return n_proxies + 1; }
    /// Scale K_i used for z_i = log(y_i / K_i); spot when K_i = 0.
    double moneyness_reference(int i) const;

    /// Throws ConfigError naming the violated invariant.
    void validate() const;
};

constexpr double kCorrelationEigenFloor = -1e-12;

/// Assembled (N+2)x(N+2) correlation matrix, index first.
Eigen::MatrixXd full_correlation(const MarketModel& model);

double sharpe_ratio(const MarketModel& model);

struct QuadraticData {
    Eigen::MatrixXd A; // A_ij = rho_ij sigma_i sigma_j
    Eigen::VectorXd a; // a_i = rho_{x,y_i} sigma_i
};

QuadraticData build_quadratic_data(const MarketModel& model);

struct EffectiveDrifts {
    std::vector<TermStructure> mu_hat; // mu_i - sigma_i^2/2 - eta_x rho_{x,y_i} sigma_i, in calendar time
    Eigen::VectorXd mean;              // M(tau): average of mu_hat over the last tau years
};

/// Drift-adjusted log-dynamics and their average over [T - tau, T].
/// At tau = 0 the mean is the instantaneous value at maturity.
EffectiveDrifts effective_drifts(const MarketModel& model, double tau);

} // namespace proxyhedge
