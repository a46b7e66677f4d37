#include "proxyhedge/market_model.hpp"

#include "proxyhedge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace proxyhedge {

TermStructure::TermStructure(double constant) : ends_{0.0}, values_{constant} {}

TermStructure::TermStructure(std::vector<double> ends, std::vector<double> values)
    : ends_(std::move(ends)), values_(std::move(values)) {
    if (ends_.empty() || ends_.size() != values_.size()) {
        throw ConfigError("term structure: ends and values must be non-empty and of equal length");
    }
    for (std::size_t k = 0; k < ends_.size(); ++k) {
        if (!std::isfinite(ends_[k]) || !std::isfinite(values_[k])) {
            throw ConfigError("term structure: non-finite entry");
        }
        if (k > 0 && !(ends_[k] > ends_[k - 1])) {
            throw ConfigError("term structure: segment ends must be strictly increasing");
        }
    }
    if (ends_.front() < 0.0) {
        throw ConfigError("term structure: segment ends must be non-negative");
    }
}

double TermStructure::value(double t) const {
    for (std::size_t k = 0; k < ends_.size(); ++k) {
        if (t <= ends_[k]) return values_[k];
    }
    return values_.back();
}

double TermStructure::integral(double t0, double t1) const {
    if (t1 < t0) return -integral(t1, t0);
    // First segment extends to -inf, last to +inf.
    double total = 0.0;
    for (std::size_t k = 0; k < ends_.size(); ++k) {
        const double lo = k == 0 ? t0 : std::max(t0, ends_[k - 1]);
        const double hi = k + 1 == ends_.size() ? t1 : std::min(t1, ends_[k]);
        if (hi > lo) total += values_[k] * (hi - lo);
    }
    return total;
}

TermStructure TermStructure::shifted(double offset) const {
    std::vector<double> v = values_;
    for (double& x : v) x += offset;
    return TermStructure(ends_, std::move(v));
}

double MarketModel::moneyness_reference(int i) const {
    return strikes[i] > 0.0 ? strikes[i] : spots[i];
}

Eigen::MatrixXd full_correlation(const MarketModel& model) {
    const int n = model.n_assets();
    Eigen::MatrixXd c(n + 1, n + 1);
    c(0, 0) = 1.0;
    c.block(1, 1, n, n) = model.corr_yy;
    c.block(0, 1, 1, n) = model.corr_xy.transpose();
    c.block(1, 0, n, 1) = model.corr_xy;
    return c;
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

void check_psd(const Eigen::MatrixXd& m, const std::string& name) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < kCorrelationEigenFloor) {
        std::ostringstream os;
        os.precision(6);
        os << name << " is not positive semi-definite: smallest eigenvalue " << lo
           << " < " << kCorrelationEigenFloor;
        throw ConfigError(os.str());
    }
}

} // namespace

void MarketModel::validate() const {
    require(n_proxies >= 0, "n_proxies must be >= 0");
    const auto n = static_cast<std::size_t>(n_assets());
    require(spots.size() == n, "spots must have n_proxies + 1 entries");
    require(strikes.size() == n, "strikes must have n_proxies + 1 entries");
    require(drifts.size() == n, "drifts must have n_proxies + 1 entries");
    require(vols.size() == n, "vols must have n_proxies + 1 entries");
    require(proxy_prices.size() == n - 1, "proxy_prices must have n_proxies entries");
    require(corr_yy.rows() == static_cast<Eigen::Index>(n) && corr_yy.cols() == static_cast<Eigen::Index>(n),
            "corr_yy must be (n_proxies + 1) x (n_proxies + 1)");
    require(corr_xy.size() == static_cast<Eigen::Index>(n), "corr_xy must have n_proxies + 1 entries");
    for (std::size_t i = 0; i < n; ++i) {
        require(std::isfinite(spots[i]) && spots[i] > 0.0, "spots must be > 0");
        require(std::isfinite(strikes[i]) && strikes[i] >= 0.0, "strikes must be >= 0");
        require(std::isfinite(vols[i]) && vols[i] > 0.0, "vols must be > 0");
        require(std::abs(corr_xy[i]) <= 1.0, "|corr_xy| must be <= 1");
    }
    require(strikes[0] >= 0.0, "strikes[0] must be >= 0");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        require(std::isfinite(proxy_prices[i]) && proxy_prices[i] >= 0.0, "proxy_prices must be >= 0");
    }
    for (Eigen::Index i = 0; i < corr_yy.rows(); ++i) {
        require(std::abs(corr_yy(i, i) - 1.0) <= 1e-12, "corr_yy must have unit diagonal");
        for (Eigen::Index j = 0; j < corr_yy.cols(); ++j) {
            require(std::isfinite(corr_yy(i, j)), "corr_yy entries must be finite");
            require(std::abs(corr_yy(i, j) - corr_yy(j, i)) <= 1e-12, "corr_yy must be symmetric");
        }
    }
    require(std::isfinite(index_vol) && index_vol > 0.0, "index_vol must be > 0");
    require(std::isfinite(index_drift), "index_drift must be finite");
    require(std::isfinite(rate), "rate must be finite");
    require(std::isfinite(maturity) && maturity > 0.0, "maturity must be > 0");
    require(std::isfinite(risk_aversion) && risk_aversion > 0.0, "risk_aversion must be > 0");
    check_psd(corr_yy, "corr_yy");
    check_psd(full_correlation(*this), "full correlation matrix (index + assets)");
}

double sharpe_ratio(const MarketModel& model) {
    return (model.index_drift - model.rate) / model.index_vol;
}

QuadraticData build_quadratic_data(const MarketModel& model) {
    const int n = model.n_assets();
    QuadraticData q{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) q.A(i, j) = model.corr_yy(i, j) * model.vols[i] * model.vols[j];
        q.a[i] = model.corr_xy[i] * model.vols[i];
    }
    return q;
}

EffectiveDrifts effective_drifts(const MarketModel& model, double tau) {
    if (!(tau >= 0.0) || tau > model.maturity) {
        throw ConfigError("effective_drifts: tau must lie in [0, T]");
    }
    const double eta = sharpe_ratio(model);
    const int n = model.n_assets();
    EffectiveDrifts out{{}, Eigen::VectorXd(n)};
    out.mu_hat.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double sig = model.vols[i];
        TermStructure mh = model.drifts[i].shifted(-0.5 * sig * sig - eta * model.corr_xy[i] * sig);
        const double t0 = model.maturity - tau;
        out.mean[i] = tau > 0.0 ? mh.integral(t0, model.maturity) / tau : mh.value(model.maturity);
        out.mu_hat.push_back(std::move(mh));
    }
    return out;
}

} // namespace proxyhedge
