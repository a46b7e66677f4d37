#include "proxyhedge/errors.hpp"
#include "proxyhedge/fd_reference.hpp"
#include "proxyhedge/gauss_engine.hpp"
#include "proxyhedge/pricer.hpp"
#include "proxyhedge/splitting_solver.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace proxyhedge;
using testing_support::Gen;
using testing_support::make_model;

namespace {

GridField line(double lo, double hi, int m) { return GridField({GridAxis{lo, (hi - lo) / (m - 1), m}}); }

double fd_price(const MarketModel& m, const std::vector<double>& alpha, const FDConfig& cfg) {
    const FdSolution s = fd_solve(m, alpha, cfg);
    double hedge = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) hedge += alpha[i] * m.proxy_prices[i];
    return -std::exp(-m.rate * m.maturity) / m.risk_aversion * std::log(s.phi_at_spot) + hedge;
}

MarketModel correlated_pair() {
    MarketModel m = make_model(1);
    m.corr_yy << 1.0, 0.6, 0.6, 1.0;
    m.corr_xy << 0.3, 0.5;
    m.vols = {0.3, 0.25};
    m.proxy_prices = {0.85};
    return m;
}

} // namespace

TEST_CASE("constant data is a fixed point") {
    GridField f({GridAxis{-1.0, 0.05, 41}, GridAxis{-1.0, 0.1, 21}}, 1.0);
    FdOperator op{(Eigen::Matrix2d() << 0.09, 0.03, 0.03, 0.04).finished(), Eigen::Vector2d(0.05, 0.1),
                  [](double) { return Eigen::Vector2d(0.02, -0.03).eval(); }};
    FDConfig cfg;
    cfg.time_steps = 20;
    const GridField r = fd_evolve(f, op, 1.0, cfg);
    for (double v : r.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("vanishing risk aversion leaves phi at one") {
    MarketModel m = correlated_pair();
    m.risk_aversion = 1e-14;
    FDConfig cfg;
    cfg.nodes = {41};
    cfg.time_steps = 20;
    const FdSolution s = fd_solve(m, std::vector<double>{0.5}, cfg);
    for (double v : s.field.values()) CHECK(std::abs(v - 1.0) <= 1e-12);
}

TEST_CASE("uncorrelated N = 1 market matches heat-propagated terminal data") {
    // rho_xy = 0 and a diagonal rho_yy remove the nonlinear term; Phi is the terminal data
    // spread by sigma_i^2 T per axis and shifted by the integrated drift.
    MarketModel m = make_model(1);
    m.vols = {0.3, 0.2};
    m.proxy_prices = {0.9};
    const std::vector<double> alpha{0.7};
    FDConfig cfg;
    cfg.nodes = {121};
    cfg.time_steps = 200;
    const FdSolution s = fd_solve(m, alpha, cfg);

    GridField data = s.field;
    std::vector<double> c(2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data.coordinates(i, c);
        data[i] = terminal_condition(c, alpha, m);
    }
    const double T = m.maturity;
    const GridField heat = heat_step_separable(data, std::vector<double>{0.09, 0.04}, T, std::vector<int>{0, 1});
    const EffectiveDrifts ed = effective_drifts(m, T);
    const std::vector<double> shifted{s.z_spot[0] + ed.mu_hat[0].integral(0.0, T),
                                      s.z_spot[1] + ed.mu_hat[1].integral(0.0, T)};
    const double oracle = readout(heat, shifted);
    MESSAGE("fd " << s.phi_at_spot << " heat " << oracle);
    CHECK(std::abs(s.phi_at_spot - oracle) <= 1e-3 * oracle);
}

TEST_CASE("linear 1-d problem matches the heat kernel with a drift shift") {
    // u_tau = mu u_z + 1/2 A u_zz: u(tau, z) = heat(A tau)[u0](z + mu tau).
    const double A = 0.09, mu = 0.2, T = 0.5, v0 = 0.04;
    GridField f = line(-3.0, 3.0, 301);
    for (int i = 0; i < 301; ++i) {
        const double z = f.axis(0).node(i);
        f[static_cast<std::size_t>(i)] = 1.0 + std::exp(-z * z / (2.0 * v0));
    }
    FdOperator op{Eigen::MatrixXd::Constant(1, 1, A), Eigen::VectorXd::Zero(1),
                  [mu](double) { return Eigen::VectorXd::Constant(1, mu); }};
    FDConfig cfg;
    cfg.time_steps = 200;
    const GridField fd = fd_evolve(f, op, T, cfg);

    const std::vector<double> coeff{A};
    const std::vector<int> axes{0};
    const GridField heat = heat_step_separable(f, coeff, T, axes);
    double err = 0.0;
    for (int i = 0; i < 301; ++i) {
        const double z = f.axis(0).node(i);
        if (std::abs(z) > 1.5) continue;
        const double shifted = readout(heat, std::vector<double>{z + mu * T});
        const double v1 = v0 + A * T;
        const double analytic = 1.0 + std::sqrt(v0 / v1) * std::exp(-(z + mu * T) * (z + mu * T) / (2.0 * v1));
        err = std::max(err, std::abs(fd[static_cast<std::size_t>(i)] - shifted));
        CHECK(shifted == doctest::Approx(analytic).epsilon(1e-5));
    }
    MESSAGE("max |fd - heat| = " << err);
    CHECK(err <= 1e-3);
}

TEST_CASE("linear 2-d problem with correlation matches the Gaussian covariance update") {
    const Eigen::Matrix2d A = (Eigen::Matrix2d() << 0.09, 0.045, 0.045, 0.0625).finished();
    const Eigen::Matrix2d V0 = 0.05 * Eigen::Matrix2d::Identity();
    const double T = 0.5;
    const Eigen::Matrix2d V1 = V0 + A * T;
    GridField f({GridAxis{-2.0, 0.04, 101}, GridAxis{-2.0, 0.04, 101}});
    std::vector<double> c(2);
    auto bump = [](const Eigen::Matrix2d& V, double x, double y) {
        const Eigen::Vector2d v(x, y);
        return std::exp(-0.5 * v.dot(V.inverse() * v)) / std::sqrt(V.determinant());
    };
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.coordinates(i, c);
        f[i] = 1.0 + bump(V0, c[0], c[1]) * std::sqrt(V0.determinant());
    }
    FdOperator op{A, Eigen::Vector2d::Zero(), {}};
    FDConfig cfg;
    cfg.time_steps = 100;
    const GridField r = fd_evolve(f, op, T, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.coordinates(i, c);
        if (std::abs(c[0]) > 1.0 || std::abs(c[1]) > 1.0) continue;
        err = std::max(err, std::abs(r[i] - 1.0 - bump(V1, c[0], c[1]) * std::sqrt(V0.determinant())));
    }
    MESSAGE("max error = " << err);
    CHECK(err <= 1e-3);
}

TEST_CASE("N = 1 nonlinear problem agrees with the splitting solver") {
    const MarketModel m = correlated_pair();
    const std::vector<double> alpha{0.5};
    FDConfig fcfg;
    fcfg.nodes = {161};
    fcfg.time_steps = 160;
    const double fd = fd_price(m, alpha, fcfg);
    SolverConfig scfg;
    scfg.nodes = {161};
    scfg.time_steps = 16;
    const double split = price_given_alpha(m, alpha, scfg).price;
    MESSAGE("fd " << fd << " splitting " << split);
    CHECK(std::abs(fd - split) <= 1e-2 * std::abs(fd));
}

TEST_CASE("self-convergence under refinement") {
    // Smooth nonlinear problem on nested grids; the sampled node is shared by all three.
    FdOperator op{Eigen::MatrixXd::Constant(1, 1, 0.09), Eigen::VectorXd::Constant(1, 0.2),
                  [](double) { return Eigen::VectorXd::Constant(1, 0.05); }};
    std::vector<double> phi;
    for (int k : {1, 2, 4}) {
        const int m = 60 * k + 1;
        GridField f = line(-3.0, 3.0, m);
        for (int i = 0; i < m; ++i) f[static_cast<std::size_t>(i)] = 1.5 + 0.5 * std::tanh(2.0 * f.axis(0).node(i));
        FDConfig cfg;
        cfg.time_steps = 20 * k;
        const GridField r = fd_evolve(f, op, 0.5, cfg);
        phi.push_back(r[static_cast<std::size_t>(33 * k)]);
    }
    const double ratio = std::abs(phi[0] - phi[1]) / std::abs(phi[1] - phi[2]);
    MESSAGE("successive differences " << phi[0] - phi[1] << ", " << phi[1] - phi[2] << ", ratio " << ratio);
    CHECK(ratio >= 1.8);
}

TEST_CASE("property: solutions stay positive and within the data range") {
    Gen g(5);
    for (int t = 0; t < 20; ++t) {
        MarketModel m = g.market(g.integer(0, 1));
        m.risk_aversion = g.uniform(0.1, 2.0);
        std::vector<double> alpha(static_cast<std::size_t>(m.n_proxies));
        for (double& a : alpha) a = g.uniform(-1.0, 1.0);
        FDConfig cfg;
        cfg.nodes = {m.n_proxies == 0 ? 101 : 41};
        cfg.time_steps = 50;
        const Side side = g.integer(0, 1) ? Side::Buy : Side::Sell;
        const FdSolution s = fd_solve(m, alpha, cfg, side);
        // Sup and inf of the payoff exponent over all prices, widened by the divergence tolerance.
        const double sign = side == Side::Buy ? 1.0 : -1.0;
        double lo = -sign * m.risk_aversion * m.strikes[0], hi = 0.0;
        if (lo > 0.0) std::swap(lo, hi);
        for (int i = 1; i < m.n_assets(); ++i) {
            const double c = sign * m.risk_aversion * alpha[static_cast<std::size_t>(i - 1)] * m.strikes[static_cast<std::size_t>(i)];
            (c > 0.0 ? hi : lo) += c;
        }
        const double slack = cfg.divergence_tolerance * (std::exp(hi) - std::exp(lo));
        CHECK(s.phi_at_spot > 0.0);
        for (double v : s.field.values()) {
            CHECK(v > 0.0);
            CHECK(v >= std::exp(lo) - slack);
            CHECK(v <= std::exp(hi) + slack);
        }
    }
}

TEST_CASE("stability guards") {
    SUBCASE("CFL on the explicit gradient term") {
        GridField f = line(-1.0, 1.0, 201);
        for (int i = 0; i < 201; ++i) f[static_cast<std::size_t>(i)] = std::exp(-5.0 * std::tanh(20.0 * f.axis(0).node(i)));
        FdOperator op{Eigen::MatrixXd::Constant(1, 1, 0.09), Eigen::VectorXd::Constant(1, 0.25), {}};
        FDConfig cfg;
        cfg.time_steps = 1;
        cfg.rannacher_steps = 0;
        CHECK_THROWS_WITH_AS(fd_evolve(f, op, 1.0, cfg), doctest::Contains("CFL"), NumericalError);
    }
    SUBCASE("divergence of an explicit step") {
        GridField f = line(-1.0, 1.0, 201);
        for (int i = 0; i < 201; ++i) f[static_cast<std::size_t>(i)] = 1.0 + (i % 2 ? 0.1 : 0.0);
        FdOperator op{Eigen::MatrixXd::Constant(1, 1, 0.09), Eigen::VectorXd::Zero(1), {}};
        FDConfig cfg;
        cfg.theta = 0.0;
        cfg.rannacher_steps = 0;
        cfg.time_steps = 2;
        CHECK_THROWS_WITH_AS(fd_evolve(f, op, 1.0, cfg), doctest::Contains("refine"), NumericalError);
    }
}

TEST_CASE("configuration errors") {
    FDConfig cfg;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    cfg.nodes = {4};
    CHECK_THROWS_AS(cfg.validate(1), ConfigError);
    cfg.nodes = {101};
    cfg.theta = 1.5;
    CHECK_THROWS_AS(cfg.validate(1), ConfigError);
    CHECK_THROWS_AS(fd_solve(make_model(3), std::vector<double>(3, 0.0), FDConfig{}), ConfigError);
    CHECK_THROWS_AS(fd_solve(make_model(1), std::vector<double>{}, FDConfig{}), ConfigError);
}
