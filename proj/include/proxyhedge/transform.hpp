#pragma once

#include "proxyhedge/factorizer.hpp"
#include "proxyhedge/market_model.hpp"

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace proxyhedge {

/// Log-moneyness z <-> factorized coordinates u at time-to-maturity tau.
///
/// u = R^T (z + tau M(tau)), where tau M(tau) is the integrated effective drift.
/// The drift shift is applied in z-space; it is what removes the first-order
/// terms from the transformed PDE.
class CoordinateMap {
public:
    CoordinateMap(const MarketModel& model, const Eigen::MatrixXd& R);

    Eigen::VectorXd to_factorized(const Eigen::VectorXd& z, double tau) const;
    Eigen::VectorXd from_factorized(const Eigen::VectorXd& u, double tau) const;

    /// Integrated effective drift over [T - tau, T], i.e. tau * M(tau).
    Eigen::VectorXd drift_shift(double tau) const;

    const Eigen::MatrixXd& R() const { return R_; }
    const Eigen::MatrixXd& R_inv_transpose() const { return RinvT_; }
    double maturity() const { return maturity_; }

private:
    Eigen::MatrixXd R_;
    Eigen::MatrixXd RinvT_;
    std::vector<TermStructure> mu_hat_;
    double maturity_;
};

/// z_i = log(y_i / K_i) at the model's spot (K_i replaced by the spot when zero).
Eigen::VectorXd spot_log_moneyness(const MarketModel& model);

/// Sign applied to the whole static-hedge payoff; Sell prices the opposite position.
enum class Side { Buy, Sell };

/// exp(-gamma * s * (min(Y_0,K_0) - sum_i alpha_i min(Y_i,K_i))) at log-moneyness z.
double terminal_condition(std::span<const double> z, std::span<const double> alpha, const MarketModel& model,
                          Side side = Side::Buy);

} // namespace proxyhedge
