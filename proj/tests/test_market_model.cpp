#include "proxyhedge/errors.hpp"
#include "proxyhedge/market_model.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace proxyhedge;
using testing_support::Gen;
using testing_support::make_model;
using testing_support::worked_example_model;

TEST_CASE("sharpe ratio") {
    MarketModel m = make_model(0);
    m.rate = 0.05;
    m.index_drift = 0.05;
    CHECK(sharpe_ratio(m) == 0.0);
    m.index_drift = 0.08;
    m.rate = 0.03;
    m.index_vol = 0.25;
    CHECK(sharpe_ratio(m) == doctest::Approx(0.2).epsilon(1e-14));
    m.index_drift = 0.03;
    m.rate = 0.08;
    CHECK(sharpe_ratio(m) == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("quadratic data") {
    const QuadraticData q = build_quadratic_data(worked_example_model());
    CHECK(q.A(0, 0) == doctest::Approx(0.09).epsilon(1e-14));
    CHECK(q.a[0] == doctest::Approx(0.069).epsilon(1e-14));
    CHECK(q.A(1, 3) == doctest::Approx(0.7 * 0.25 * 0.5).epsilon(1e-14));
    CHECK((q.A - q.A.transpose()).norm() == 0.0);

    MarketModel unit = make_model(2);
    unit.vols = {1.0, 1.0, 1.0};
    CHECK(build_quadratic_data(unit).A.isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST_CASE("effective drifts") {
    MarketModel m = make_model(1);
    m.rate = 0.03;
    m.drifts = {TermStructure(0.03), TermStructure(0.03)};
    m.vols = {0.2, 0.4};
    const EffectiveDrifts e = effective_drifts(m, 0.5);
    CHECK(e.mu_hat[0].value(0.3) == doctest::Approx(0.03 - 0.02));
    CHECK(e.mu_hat[1].value(0.3) == doctest::Approx(0.03 - 0.08));

    SUBCASE("constant drift gives a constant mean") {
        for (double tau : {0.0, 0.1, 0.7, 1.0}) {
            CHECK(effective_drifts(m, tau).mean[1] == doctest::Approx(0.03 - 0.08).epsilon(1e-14));
        }
    }

    SUBCASE("piecewise average") {
        MarketModel p = make_model(0);
        p.maturity = 2.0;
        p.corr_xy[0] = 0.0;
        const double shift = 0.5 * p.vols[0] * p.vols[0];
        p.drifts = {TermStructure({1.0, 2.0}, {0.1 + shift, 0.2 + shift})};
        CHECK(effective_drifts(p, 2.0).mean[0] == doctest::Approx(0.15).epsilon(1e-14));
        // The last tau years are the latest calendar segment.
        CHECK(effective_drifts(p, 1.0).mean[0] == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(effective_drifts(p, 0.0).mean[0] == doctest::Approx(0.2).epsilon(1e-14));
    }

    CHECK_THROWS_AS(effective_drifts(m, -0.1), ConfigError);
    CHECK_THROWS_AS(effective_drifts(m, 1.5), ConfigError);
}

TEST_CASE("term structure integral matches a fine Riemann sum") {
    const TermStructure t({0.3, 0.55, 1.2}, {0.1, -0.4, 0.25});
    for (auto [a, b] : {std::pair{0.0, 1.2}, {0.1, 0.6}, {0.5, 1.0}, {0.0, 0.3}}) {
        const int n = 200000;
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += t.value(a + (i + 0.5) * (b - a) / n) * (b - a) / n;
        CHECK(t.integral(a, b) == doctest::Approx(s).epsilon(1e-5));
    }
}

TEST_CASE("tau * M(tau) is continuous and piecewise linear") {
    MarketModel m = make_model(0);
    m.maturity = 2.0;
    m.drifts = {TermStructure({0.5, 1.3, 2.0}, {0.2, -0.1, 0.05})};
    auto tm = [&](double tau) { return tau * effective_drifts(m, tau).mean[0]; };
    // Calendar breakpoints 0.5 and 1.3 sit at tau = 1.5 and 0.7.
    for (double knot : {0.7, 1.5}) {
        CHECK(tm(knot - 1e-9) == doctest::Approx(tm(knot + 1e-9)).epsilon(1e-8));
    }
    for (double tau : {0.2, 1.0, 1.8}) {
        const double h = 0.05;
        CHECK(tm(tau + h) - 2.0 * tm(tau) + tm(tau - h) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("validation names the broken invariant") {
    MarketModel m = make_model(1);
    m.corr_yy << 1.0, 1.2, 1.2, 1.0;
    try {
        m.validate();
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("smallest eigenvalue") != std::string::npos);
    }
    MarketModel x = make_model(1);
    x.corr_xy << 1.5, 0.0;
    CHECK_THROWS_AS(x.validate(), ConfigError);

    // Pairwise fine, jointly inconsistent with the index.
    MarketModel j = make_model(1);
    j.corr_yy << 1.0, -0.9, -0.9, 1.0;
    j.corr_xy << 0.9, 0.9;
    CHECK_THROWS_WITH_AS(j.validate(), doctest::Contains("full correlation"), ConfigError);
}

TEST_CASE("property: A is symmetric PSD for random valid models") {
    Gen g(11);
    for (int t = 0; t < 200; ++t) {
        const MarketModel m = g.market(g.integer(0, 5));
        REQUIRE_NOTHROW(m.validate());
        const QuadraticData q = build_quadratic_data(m);
        CHECK((q.A - q.A.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.A);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
}
