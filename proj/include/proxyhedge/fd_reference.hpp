#pragma once

#include "proxyhedge/grid_field.hpp"
#include "proxyhedge/market_model.hpp"
#include "proxyhedge/transform.hpp"

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>
#include <span>
#include <vector>

namespace proxyhedge {

struct FDConfig {
    std::vector<int> nodes{101}; // per axis; a single entry applies to every axis
    int time_steps = 200;
    double domain_sd = 6.0;
    double theta = 0.5;
    int rannacher_steps = 2;        // fully implicit start-up steps against the payoff kink
    double cfl_limit = 1.0;         // explicit quadratic-gradient term, checked when theta < 1
    double divergence_tolerance = 1e-2; // relative to the data range

    int nodes_for(int axis) const;
    void validate(int dims) const;
};

/// Coefficients of phi_tau = mu(tau).grad phi + 1/2 div(A grad phi) - (a.grad phi)^2 / (2 phi).
struct FdOperator {
    Eigen::MatrixXd A;
    Eigen::VectorXd a;
    std::function<Eigen::VectorXd(double tau)> drift; // empty means zero drift
};

/// Douglas theta-scheme: per-axis drift and diffusion implicit, cross-derivative
/// and quadratic-gradient terms explicit; linear extrapolation at the edges.
/// Supports up to three dimensions. `data_range` bounds the initial data over the whole
/// space; the grid's own min and max are used when it is absent.
GridField fd_evolve(GridField initial, const FdOperator& op, double horizon, const FDConfig& cfg,
                    std::optional<std::pair<double, double>> data_range = std::nullopt);

struct FdSolution {
    GridField field;       // Phi on the log-moneyness grid at tau = T
    Eigen::VectorXd z_spot;
    double phi_at_spot = 0.0;
};

/// Solves the untransformed log-moneyness PDE for Phi (N <= 2) from the capped-payoff terminal data.
FdSolution fd_solve(const MarketModel& model, std::span<const double> alpha, const FDConfig& cfg,
                    Side side = Side::Buy);

} // namespace proxyhedge
