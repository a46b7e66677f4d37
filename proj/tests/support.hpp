#pragma once

// Shared fixtures and hand-rolled generators for the test binaries.

#include "proxyhedge/market_model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

namespace testing_support {

using proxyhedge::MarketModel;
using proxyhedge::TermStructure;

inline MarketModel make_model(int n_proxies) {
    MarketModel m;
    const int n = n_proxies + 1;
    m.n_proxies = n_proxies;
    m.spots.assign(static_cast<std::size_t>(n), 1.0);
    m.strikes.assign(static_cast<std::size_t>(n), 1.0);
    m.drifts.assign(static_cast<std::size_t>(n), TermStructure(0.05));
    m.vols.assign(static_cast<std::size_t>(n), 0.3);
    m.corr_yy = Eigen::MatrixXd::Identity(n, n);
    m.corr_xy = Eigen::VectorXd::Zero(n);
    m.index_drift = 0.07;
    m.index_vol = 0.2;
    m.rate = 0.0;
    m.maturity = 1.0;
    m.risk_aversion = 0.5;
    m.proxy_prices.assign(static_cast<std::size_t>(n_proxies), 0.0);
    return m;
}

// N = 3 market with the correlations and volatilities of the worked factorization example.
inline MarketModel worked_example_model() {
    MarketModel m = make_model(3);
    m.vols = {0.3, 0.25, 0.35, 0.5};
    m.corr_yy.resize(4, 4);
    m.corr_yy << 1.0, 0.9, 0.6, 0.5,
                 0.9, 1.0, 0.75, 0.7,
                 0.6, 0.75, 1.0, 0.6,
                 0.5, 0.7, 0.6, 1.0;
    m.corr_xy.resize(4);
    m.corr_xy << 0.23, 0.34, 0.45, 0.4;
    return m;
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    std::mt19937_64& engine() { return rng_; }

    // Random correlation matrix from normalized Gram vectors; `extra` > 0 keeps it well conditioned.
    Eigen::MatrixXd correlation(int n, int extra = 2) {
        Eigen::MatrixXd b(n, n + extra);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n + extra; ++j) b(i, j) = normal();
            b.row(i).normalize();
        }
        Eigen::MatrixXd c = b * b.transpose();
        for (int i = 0; i < n; ++i) c(i, i) = 1.0;
        return c;
    }

    Eigen::MatrixXd symmetric_psd(int n) {
        Eigen::MatrixXd b(n, n + 1);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n + 1; ++j) b(i, j) = normal();
        }
        return b * b.transpose() / static_cast<double>(n + 1);
    }

    // Valid market with N proxies: index + assets drawn from one joint correlation matrix.
    MarketModel market(int n_proxies) {
        MarketModel m = make_model(n_proxies);
        const int n = n_proxies + 1;
        const Eigen::MatrixXd full = correlation(n + 1);
        m.corr_xy = full.block(1, 0, n, 1);
        m.corr_yy = full.block(1, 1, n, n);
        for (int i = 0; i < n; ++i) {
            m.vols[static_cast<std::size_t>(i)] = uniform(0.1, 0.5);
            m.spots[static_cast<std::size_t>(i)] = uniform(0.7, 1.3);
            m.strikes[static_cast<std::size_t>(i)] = uniform(0.7, 1.3);
            m.drifts[static_cast<std::size_t>(i)] = TermStructure(uniform(-0.05, 0.1));
        }
        return m;
    }

private:
    std::mt19937_64 rng_;
};

struct MonteCarloEstimate {
    double mean;
    double standard_error;
};

// E[exp(-c min(Y_T, K))] for log Y_T ~ N(log_mean, log_sd^2), by plain sampling.
inline MonteCarloEstimate monte_carlo_exp_capped(double log_mean, double log_sd, double strike, double c,
                                                 long paths, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    double s = 0.0, s2 = 0.0;
    for (long k = 0; k < paths; ++k) {
        const double v = std::exp(-c * std::min(std::exp(log_mean + log_sd * n01(rng)), strike));
        s += v;
        s2 += v * v;
    }
    const double mean = s / static_cast<double>(paths);
    const double var = s2 / static_cast<double>(paths) - mean * mean;
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(paths))};
}

// Composite Simpson rule of f against the standard normal density on [-12, 12].
template <class F>
double simpson_normal(F&& f, int intervals = 20000) {
    const double a = -12.0, b = 12.0, h = (b - a) / intervals;
    double acc = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double x = a + i * h;
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f(x) * std::exp(-0.5 * x * x);
    }
    return acc * h / 3.0 / std::sqrt(2.0 * M_PI);
}

} // namespace testing_support
