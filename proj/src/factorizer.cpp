#include "proxyhedge/factorizer.hpp"

#include "proxyhedge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

namespace proxyhedge {

namespace {

double condition_number(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double lo = s[s.size() - 1];
    return lo > 0.0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

void fill_derived(FactorizedSystem& fs, const Eigen::MatrixXd& A, const Eigen::VectorXd& a) {
    fs.p = (fs.R.transpose() * A * fs.R).diagonal();
    fs.b = fs.R.transpose() * a;
    fs.beta = fs.b[0] * fs.b[0];
    fs.residual = fs.b.size() > 1 ? fs.b.tail(fs.b.size() - 1).cwiseAbs().maxCoeff() : 0.0;
}

std::optional<ResidualMap> try_residual(const Eigen::VectorXd& d, const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& a) {
    try {
        return residual_map(d, A, a);
    } catch (const NumericalError&) {
        return std::nullopt;
    }
}

struct NewtonOutcome {
    Eigen::VectorXd d;
    std::optional<ResidualMap> last;
    int iterations = 0;
    bool converged = false;
};

NewtonOutcome damped_newton(Eigen::VectorXd d, const Eigen::MatrixXd& A, const Eigen::VectorXd& a,
                            const FactorizeOptions& opts) {
    NewtonOutcome out;
    out.last = try_residual(d, A, a);
    out.d = d;
    if (!out.last) return out;
    const Eigen::Index n = d.size();
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Eigen::VectorXd& C = out.last->C;
        if (C.cwiseAbs().maxCoeff() <= opts.tolerance) {
            out.converged = true;
            return out;
        }
        out.iterations = it + 1;
        Eigen::MatrixXd J(n, n);
        bool jac_ok = true;
        for (Eigen::Index k = 0; k < n && jac_ok; ++k) {
            const double h = 1e-7 * std::max(1.0, std::abs(out.d[k]));
            Eigen::VectorXd dk = out.d;
            dk[k] += h;
            auto rk = try_residual(dk, A, a);
            if (rk) {
                J.col(k) = (rk->C - C) / h;
                continue;
            }
            dk[k] = out.d[k] - h;
            rk = try_residual(dk, A, a);
            if (!rk) jac_ok = false;
            else J.col(k) = (C - rk->C) / h;
        }
        if (!jac_ok) return out;
        const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-C);
        if (!step.allFinite()) return out;

        const double norm0 = C.norm();
        double damping = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, damping *= 0.5) {
            Eigen::VectorXd trial = out.d + damping * step;
            auto rt = try_residual(trial, A, a);
            if (rt && rt->C.norm() < norm0) {
                out.d = std::move(trial);
                out.last = std::move(rt);
                accepted = true;
                break;
            }
        }
        if (!accepted) return out;
    }
    out.converged = out.last->C.cwiseAbs().maxCoeff() <= opts.tolerance;
    return out;
}

// Column 0 of any exact solution is parallel to A^{-1} a; matching the
// eigenvector condition on that column gives d in closed form whenever all
// components of a and A^{-1} a are non-zero.
std::optional<Eigen::VectorXd> conjugate_direction_seed(const Eigen::MatrixXd& A, const Eigen::VectorXd& a) {
    const Eigen::Index n = a.size();
    const Eigen::VectorXd x = A.ldlt().solve(a);
    const double scale = a.cwiseAbs().maxCoeff();
    if (!x.allFinite() || scale == 0.0) return std::nullopt;
    const double xs = x.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(a[i]) < 1e-12 * scale || std::abs(x[i]) < 1e-12 * xs) return std::nullopt;
    }
    Eigen::VectorXd d(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) d[i] = -(a[n - 1] / x[n - 1]) * x[i] / a[i];
    return d;
}

} // namespace

ResidualMap residual_map(const Eigen::VectorXd& d, const Eigen::MatrixXd& A, const Eigen::VectorXd& a) {
    const Eigen::Index n = A.rows();
    if (d.size() != n - 1 || a.size() != n || A.cols() != n) {
        throw NumericalError("factorize", "residual_map: dimension mismatch");
    }
    if (!d.allFinite()) throw NumericalError("factorize", "residual_map: non-finite diagonal");

    Eigen::VectorXd diag(n);
    diag.head(n - 1) = d;
    diag[n - 1] = -1.0;
    const Eigen::MatrixXd DA = diag.asDiagonal() * A;

    Eigen::EigenSolver<Eigen::MatrixXd> es(DA);
    if (es.info() != Eigen::Success) {
        throw StiffnessError("eigendecomposition of D*A failed", std::numeric_limits<double>::infinity());
    }
    const Eigen::VectorXcd ev = es.eigenvalues();
    const double spectral_scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(ev[j].imag()) > 1e-10 * spectral_scale) {
            throw NumericalError("factorize", "D*A has complex eigenvalues (" + fmt_double(ev[j].real()) +
                                                  " + " + fmt_double(ev[j].imag()) + "i)");
        }
    }
    Eigen::MatrixXd V = es.eigenvectors().real();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double nrm = V.col(j).norm();
        if (!(nrm > 0.0)) throw StiffnessError("D*A has a null eigenvector", std::numeric_limits<double>::infinity());
        V.col(j) /= nrm;
        Eigen::Index imax = 0;
        V.col(j).cwiseAbs().maxCoeff(&imax);
        if (V(imax, j) < 0.0) V.col(j) *= -1.0;
    }
    const double cond = condition_number(V);
    if (!(cond < 1e12)) {
        throw StiffnessError("D*A is defective or nearly so (eigenvector condition " + fmt_double(cond) + ")", cond);
    }

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return ev[i].real() > ev[j].real(); });
    const Eigen::VectorXd bAll = V.transpose() * a;
    std::size_t lead = 0;
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (std::abs(bAll[order[k]]) > std::abs(bAll[order[lead]])) lead = k;
    }
    std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lead),
                order.begin() + static_cast<std::ptrdiff_t>(lead) + 1);

    ResidualMap out{Eigen::VectorXd(n - 1), Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        out.R.col(k) = V.col(order[k]);
        out.lambda[k] = ev[order[k]].real();
    }
    for (Eigen::Index k = 1; k < n; ++k) out.C[k - 1] = bAll[order[k]];
    return out;
}

FactorizedSystem build_transform(const Eigen::MatrixXd& A, const Eigen::VectorXd& a,
                                 const FactorizeOptions& opts, Eigen::VectorXd d_init) {
    const Eigen::Index n = A.rows();
    if (n < 1 || A.cols() != n || a.size() != n) {
        throw NumericalError("factorize", "dimension mismatch between A and a");
    }
    if (!(opts.tolerance > 0.0)) throw NumericalError("factorize", "tolerance must be > 0");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff())) {
        throw NumericalError("factorize", "A must be symmetric");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(A, Eigen::EigenvaluesOnly);
    const double lo = sym.eigenvalues().minCoeff();
    const double hi = sym.eigenvalues().maxCoeff();
    const double condA = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(condA <= opts.max_condition)) {
        throw StiffnessError("correlation matrix is near-singular (condition number " + fmt_double(condA) +
                                 "); D*A is too stiff to resolve its eigenvectors in double precision",
                             condA);
    }

    FactorizedSystem fs;
    if (n == 1) {
        fs.D = Eigen::VectorXd::Constant(1, -1.0);
        fs.R = Eigen::MatrixXd::Identity(1, 1);
        fs.lambda = -A.diagonal();
        fill_derived(fs, A, a);
        return fs;
    }

    if (d_init.size() == 0) d_init = Eigen::VectorXd::Constant(n - 1, 0.01);
    if (d_init.size() != n - 1) throw NumericalError("factorize", "d_init must have N entries");

    NewtonOutcome nw = damped_newton(d_init, A, a, opts);
    int total_iterations = nw.iterations;
    if (!nw.converged) {
        if (auto seed = conjugate_direction_seed(A, a)) {
            NewtonOutcome retry = damped_newton(*seed, A, a, opts);
            total_iterations += retry.iterations;
            if (retry.converged || !nw.last ||
                (retry.last && retry.last->C.norm() < nw.last->C.norm())) {
                nw = std::move(retry);
            }
        }
    }
    if (!nw.converged) {
        const double last = nw.last ? nw.last->C.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
        throw NumericalError("factorize", "root solve for D did not converge after " +
                                              std::to_string(total_iterations) + " iterations (last residual " +
                                              fmt_double(last) + ")");
    }

    fs.D.resize(n);
    fs.D.head(n - 1) = nw.d;
    fs.D[n - 1] = -1.0;
    fs.R = nw.last->R;
    fs.lambda = nw.last->lambda;
    fs.iterations = total_iterations;
    fill_derived(fs, A, a);

    const double condR = condition_number(fs.R);
    if (!(condR <= opts.max_condition)) {
        throw StiffnessError("transformation matrix is ill-conditioned (condition number " + fmt_double(condR) + ")",
                             condR);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(fs.p[i] > 0.0)) {
            throw NumericalError("factorize", "non-positive diffusion coefficient p[" + std::to_string(i) +
                                                  "] = " + fmt_double(fs.p[i]));
        }
    }
    return fs;
}

FactorizationReport verify_factorization(const FactorizedSystem& fs, const Eigen::MatrixXd& A,
                                         const Eigen::VectorXd& a, double residual_limit) {
    FactorizationReport rep;
    const Eigen::MatrixXd P = fs.R.transpose() * A * fs.R;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        for (Eigen::Index j = 0; j < P.cols(); ++j) {
            if (i != j) rep.max_off_diagonal = std::max(rep.max_off_diagonal, std::abs(P(i, j)));
        }
    }
    // Infinity norm: max absolute row sum.
    rep.off_diagonal_limit = 1e-8 * A.cwiseAbs().rowwise().sum().maxCoeff();
    const Eigen::VectorXd b = fs.R.transpose() * a;
    rep.residual = b.size() > 1 ? b.tail(b.size() - 1).cwiseAbs().maxCoeff() : 0.0;
    rep.residual_limit = residual_limit;
    rep.passed = rep.max_off_diagonal <= rep.off_diagonal_limit && rep.residual <= rep.residual_limit;
    return rep;
}

void rescale_column(FactorizedSystem& fs, const Eigen::MatrixXd& A, const Eigen::VectorXd& a, int k, double c) {
    fs.R.col(k) *= c;
    fill_derived(fs, A, a);
}

} // namespace proxyhedge
