#include "proxyhedge/transform.hpp"

#include "proxyhedge/errors.hpp"

#include <algorithm>
#include <cmath>

namespace proxyhedge {

CoordinateMap::CoordinateMap(const MarketModel& model, const Eigen::MatrixXd& R)
    : R_(R), mu_hat_(effective_drifts(model, 0.0).mu_hat), maturity_(model.maturity) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(R_);
    if (std::abs(lu.determinant()) <= 1e-12 || !lu.isInvertible()) {
        throw NumericalError("transform", "transformation matrix R is singular");
    }
    RinvT_ = lu.inverse().transpose();
}

Eigen::VectorXd CoordinateMap::drift_shift(double tau) const {
    if (!(tau >= 0.0) || tau > maturity_ * (1.0 + 1e-14)) {
        throw NumericalError("transform", "tau outside [0, T]");
    }
    Eigen::VectorXd s(static_cast<Eigen::Index>(mu_hat_.size()));
    for (std::size_t i = 0; i < mu_hat_.size(); ++i) {
        s[static_cast<Eigen::Index>(i)] = mu_hat_[i].integral(maturity_ - tau, maturity_);
    }
    return s;
}

Eigen::VectorXd CoordinateMap::to_factorized(const Eigen::VectorXd& z, double tau) const {
    return R_.transpose() * (z + drift_shift(tau));
}

Eigen::VectorXd CoordinateMap::from_factorized(const Eigen::VectorXd& u, double tau) const {
    return RinvT_ * u - drift_shift(tau);
}

Eigen::VectorXd spot_log_moneyness(const MarketModel& model) {
    Eigen::VectorXd z(model.n_assets());
    for (int i = 0; i < model.n_assets(); ++i) z[i] = std::log(model.spots[i] / model.moneyness_reference(i));
    return z;
}

double terminal_condition(std::span<const double> z, std::span<const double> alpha, const MarketModel& model,
                          Side side) {
    auto capped = [&](int i) { return std::min(model.moneyness_reference(i) * std::exp(z[i]), model.strikes[i]); };
    double payoff = capped(0);
    for (int i = 1; i < model.n_assets(); ++i) payoff -= alpha[i - 1] * capped(i);
    const double sign = side == Side::Buy ? 1.0 : -1.0;
    return std::exp(-model.risk_aversion * sign * payoff);
}

} // namespace proxyhedge
