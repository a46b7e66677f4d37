#include "proxyhedge/errors.hpp"
#include "proxyhedge/factorizer.hpp"
#include "proxyhedge/market_model.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace proxyhedge;
using testing_support::Gen;
using testing_support::worked_example_model;

namespace {

QuadraticData example_data() { return build_quadratic_data(worked_example_model()); }

// Independent route to the root: column 0 of R must be parallel to x = A^{-1} a, and
// (D A x)_i = lambda x_i with D_N = -1 fixes every d_i.
Eigen::VectorXd closed_form_root(const Eigen::MatrixXd& A, const Eigen::VectorXd& a) {
    const Eigen::Index n = a.size();
    const Eigen::VectorXd x = A.fullPivLu().solve(a);
    const double lambda = -a[n - 1] / x[n - 1];
    Eigen::VectorXd d(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) d[i] = lambda * x[i] / a[i];
    return d;
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

const Eigen::MatrixXd kA1 = (Eigen::MatrixXd(2, 2) << 0.09, 0.036, 0.036, 0.0625).finished();
const Eigen::VectorXd ka1 = (Eigen::VectorXd(2) << 0.069, 0.085).finished();

double n1_root() {
    auto c1 = [](double d) { return residual_map(Eigen::VectorXd::Constant(1, d), kA1, ka1).C[0]; };
    // Scan [-10, 10] for sign changes and bisect each; eigenvector reordering makes C jump,
    // so only a bracket whose midpoint converges to zero counts.
    double prev = -10.0;
    double fprev = c1(prev);
    for (int i = 1; i <= 4000; ++i) {
        const double x = -10.0 + 20.0 * i / 4000.0;
        const double fx = c1(x);
        if ((fx < 0.0) != (fprev < 0.0)) {
            const double root = bisect_root(c1, prev, x);
            if (std::abs(c1(root)) < 1e-12) return root;
        }
        prev = x;
        fprev = fx;
    }
    FAIL("no sign change found");
    return 0.0;
}

} // namespace

TEST_CASE("residual map: diagonal A with a on axis 0 has zero residual") {
    Eigen::MatrixXd A = Eigen::Vector3d(0.09, 0.04, 0.16).asDiagonal();
    Eigen::VectorXd a = Eigen::Vector3d(0.1, 0.0, 0.0);
    for (double d : {0.3, 1.7}) {
        const ResidualMap r = residual_map(Eigen::VectorXd::Constant(2, d), A, a);
        CHECK(r.C.cwiseAbs().maxCoeff() < 1e-15);
        // R is a signed permutation.
        CHECK((r.R.cwiseAbs() * Eigen::Vector3d::Ones()).isApprox(Eigen::Vector3d::Ones()));
        CHECK(r.R.col(0).cwiseAbs().isApprox(Eigen::Vector3d(1, 0, 0)));
    }
}

TEST_CASE("residual map: printed worked-example diagonal is not a root (documented deviation)") {
    // The printed D = diag(-0.06108, 0.2718, -0.1145, -1) leaves |C| near 5e-2 under any column
    // scaling, so the claimed 1e-3 cannot hold; the unique root is checked below.
    const QuadraticData q = example_data();
    const ResidualMap r = residual_map(Eigen::Vector3d(-0.06108, 0.2718, -0.1145), q.A, q.a);
    const double norm = r.C.norm();
    MESSAGE("residual norm at the printed diagonal: " << norm);
    CHECK(norm > 1e-2);
}

TEST_CASE("residual map: N = 1 bisection oracle") {
    const double root = n1_root();
    const ResidualMap r = residual_map(Eigen::VectorXd::Constant(1, root), kA1, ka1);
    CHECK(std::abs(r.C[0]) < 1e-12);

    const FactorizedSystem fs = build_transform(kA1, ka1);
    CHECK(fs.D[0] == doctest::Approx(root).epsilon(1e-10));
    CHECK(fs.residual <= 1e-12);
}

TEST_CASE("build transform: worked example") {
    const QuadraticData q = example_data();
    const FactorizedSystem fs = build_transform(q.A, q.a);
    CHECK(fs.residual <= 1e-12);
    CHECK(fs.D[3] == -1.0);

    // The root is unique; it is fixed by the conjugate direction A^{-1} a.
    const Eigen::VectorXd d = closed_form_root(q.A, q.a);
    for (int i = 0; i < 3; ++i) CHECK(fs.D[i] == doctest::Approx(d[i]).epsilon(1e-9));
    CHECK(fs.D[0] == doctest::Approx(1.65738).epsilon(1e-5));
    CHECK(fs.D[1] == doctest::Approx(0.91608).epsilon(1e-5));
    CHECK(fs.D[2] == doctest::Approx(-2.96147).epsilon(1e-5));

    // Scale-free invariant: b0^2 / p0 = a^T A^{-1} a for every column normalization.
    const double quad = q.a.dot(q.A.ldlt().solve(q.a));
    CHECK(fs.beta / fs.p[0] == doctest::Approx(quad).epsilon(1e-10));
    CHECK(quad == doctest::Approx(0.23677).epsilon(1e-4));
    CHECK(fs.p[0] == doctest::Approx(0.149459).epsilon(1e-5));
    CHECK(std::abs(fs.b[0]) == doctest::Approx(0.188116).epsilon(1e-5));

    const FactorizationReport rep = verify_factorization(fs, q.A, q.a);
    CHECK(rep.passed);
}

TEST_CASE("build transform: printed p and b0 are unreachable under any column scaling (documented deviation)") {
    // The printed (p0, b0) = (0.0678, -0.1446) give b0^2/p0 = 0.308, which is scale invariant
    // and must equal a^T A^{-1} a = 0.2368 for any exact factorization.
    const QuadraticData q = example_data();
    const double printed_ratio = 0.1446 * 0.1446 / 0.0678;
    const double exact = q.a.dot(q.A.ldlt().solve(q.a));
    MESSAGE("printed b0^2/p0 = " << printed_ratio << ", exact a^T A^-1 a = " << exact);
    CHECK(std::abs(printed_ratio - exact) > 0.05);
}

TEST_CASE("build transform: single asset") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Constant(1, 1, 0.09);
    Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.069);
    const FactorizedSystem fs = build_transform(A, a);
    CHECK(fs.D[0] == -1.0);
    CHECK(std::abs(fs.R(0, 0)) == 1.0);
    CHECK(fs.p[0] == doctest::Approx(0.09));
    CHECK(std::abs(fs.b[0]) == doctest::Approx(0.069));
}

TEST_CASE("build transform: errors") {
    Eigen::MatrixXd singular(2, 2);
    singular << 0.09, 0.09, 0.09, 0.09;
    CHECK_THROWS_AS(build_transform(singular, Eigen::Vector2d(0.02, 0.02)), StiffnessError);
    Eigen::MatrixXd asym(2, 2);
    asym << 0.09, 0.01, 0.02, 0.09;
    CHECK_THROWS_AS(build_transform(asym, Eigen::Vector2d(0.02, 0.02)), NumericalError);
    FactorizeOptions tight;
    tight.max_iterations = 1;
    tight.tolerance = 1e-300;
    const QuadraticData q = example_data();
    CHECK_THROWS_WITH_AS(build_transform(q.A, q.a, tight), doctest::Contains("last residual"), NumericalError);
}

TEST_CASE("verify factorization detects corruption") {
    const QuadraticData q = example_data();
    FactorizedSystem fs = build_transform(q.A, q.a);
    CHECK(verify_factorization(fs, q.A, q.a).passed);
    Gen g(5);
    for (Eigen::Index i = 0; i < fs.R.rows(); ++i) {
        for (Eigen::Index j = 0; j < fs.R.cols(); ++j) fs.R(i, j) += 1e-3 * g.normal();
    }
    CHECK_FALSE(verify_factorization(fs, q.A, q.a).passed);
}

TEST_CASE("property: random factorizations verify") {
    Gen g(2024);
    int passed = 0;
    for (int t = 0; t < 100; ++t) {
        const int n = g.integer(1, 5);
        const QuadraticData q = build_quadratic_data(g.market(n));
        const FactorizedSystem fs = build_transform(q.A, q.a);
        const FactorizationReport rep = verify_factorization(fs, q.A, q.a);
        if (rep.passed) {
            ++passed;
        } else {
            MESSAGE("case " << t << ": off-diagonal " << rep.max_off_diagonal << ", residual " << rep.residual);
        }
        CHECK((fs.p.array() > 0.0).all());
    }
    CHECK(passed == 100);
}

TEST_CASE("property: eigenvectors of D*A diagonalize A") {
    Gen g(77);
    int checked = 0;
    int attempts = 0;
    while (checked < 100 && attempts < 1000) {
        ++attempts;
        const int n = g.integer(2, 6);
        const Eigen::MatrixXd A = g.symmetric_psd(n) + 0.05 * Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd d(n - 1);
        for (int i = 0; i < n - 1; ++i) d[i] = g.uniform(-3.0, 3.0);
        ResidualMap r;
        try {
            r = residual_map(d, A, Eigen::VectorXd::Zero(n));
        } catch (const NumericalError&) {
            continue; // complex spectrum; the property needs real eigenvectors
        }
        const Eigen::MatrixXd P = r.R.transpose() * A * r.R;
        const double off = (P - Eigen::MatrixXd(P.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
        CHECK(off <= 1e-8 * A.cwiseAbs().rowwise().sum().maxCoeff());
        CHECK(r.R.colwise().norm().isApprox(Eigen::RowVectorXd::Ones(n)));
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("property: column scaling covariance") {
    Gen g(9);
    for (int t = 0; t < 30; ++t) {
        const QuadraticData q = build_quadratic_data(g.market(g.integer(1, 4)));
        const FactorizedSystem base = build_transform(q.A, q.a);
        const int k = g.integer(0, base.dim() - 1);
        const double c = g.uniform(0.2, 3.0);
        FactorizedSystem s = base;
        rescale_column(s, q.A, q.a, k, c);
        CHECK(s.p[k] == doctest::Approx(c * c * base.p[k]).epsilon(1e-12));
        CHECK(std::abs(s.b[k] - c * base.b[k]) <= 1e-12 * (std::abs(c * base.b[k]) + 1e-3));
        CHECK(s.residual <= std::max(1.0, c) * 1e-12);
        CHECK(s.beta / s.p[0] == doctest::Approx(base.beta / base.p[0]).epsilon(1e-12));
    }
}

TEST_CASE("property: symmetric-square-root identity") {
    // With -D positive, R^T A R = Xi^{-1} L Xi^{-1}, Xi = R^{-1} S^{1/2} Rbar, S = -D,
    // Rbar the orthonormal eigenvectors of S^{1/2} A S^{1/2} in R's column order and L = -Lambda.
    Gen g(31);
    for (int t = 0; t < 50; ++t) {
        const int n = g.integer(2, 6);
        const Eigen::MatrixXd A = g.symmetric_psd(n) + 0.05 * Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd d(n - 1);
        for (int i = 0; i < n - 1; ++i) d[i] = -g.uniform(0.2, 3.0);
        const ResidualMap r = residual_map(d, A, Eigen::VectorXd::Zero(n));
        Eigen::VectorXd s(n);
        s.head(n - 1) = -d;
        s[n - 1] = 1.0;
        const Eigen::VectorXd sh = s.cwiseSqrt();
        const Eigen::MatrixXd sym = sh.asDiagonal() * A * sh.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        Eigen::MatrixXd rbar(n, n);
        for (int k = 0; k < n; ++k) {
            Eigen::Index match = 0;
            (es.eigenvalues().array() + r.lambda[k]).abs().minCoeff(&match);
            rbar.col(k) = es.eigenvectors().col(match);
        }
        const Eigen::MatrixXd xi = r.R.inverse() * sh.asDiagonal() * rbar;
        const Eigen::MatrixXd xi_inv = xi.inverse();
        const Eigen::MatrixXd lhs = r.R.transpose() * A * r.R;
        const Eigen::MatrixXd rhs = xi_inv * Eigen::MatrixXd((-r.lambda).asDiagonal()) * xi_inv;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9 * A.cwiseAbs().maxCoeff());
        // Xi is diagonal: the two eigenbases differ only by column scaling.
        CHECK((xi - Eigen::MatrixXd(xi.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-9);
    }
}
