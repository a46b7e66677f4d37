#pragma once

#include <Eigen/Dense>

namespace proxyhedge {

/// Linear map to coordinates in which the diffusion is diagonal and the
/// quadratic-gradient term only involves axis 0.
///
/// Columns of R are unit-norm eigenvectors of D*A, sign fixed so the
/// largest-magnitude component is positive. Column 0 carries the hedge
/// direction; the remaining columns follow in descending eigenvalue order.
struct FactorizedSystem {
    Eigen::VectorXd D;      // length N+1, D[N] = -1
    Eigen::MatrixXd R;
    Eigen::VectorXd lambda; // eigenvalues of D*A in column order
    Eigen::VectorXd p;      // diag(R^T A R)
    Eigen::VectorXd b;      // a^T R
    double beta = 0.0;      // b_0^2, coefficient of the quadratic-gradient term
    double residual = 0.0;  // max_{i>=1} |b_i|
    int iterations = 0;

    int dim() const { return static_cast<int>(p.size()); }
};

struct ResidualMap {
    Eigen::VectorXd C;      // signed (a R)_i, i = 1..N
    Eigen::MatrixXd R;
    Eigen::VectorXd lambda;
};

/// Eigendecomposition of diag(d, -1) * A with the column convention above.
/// Throws NumericalError on complex or defective spectra.
ResidualMap residual_map(const Eigen::VectorXd& d, const Eigen::MatrixXd& A, const Eigen::VectorXd& a);

struct FactorizeOptions {
    double tolerance = 1e-12;
    int max_iterations = 200;
    double max_condition = 1e10;
};

/// Solves (a R)_i = 0, i >= 1, for the N free diagonal entries of D by damped
/// Newton with a forward-difference Jacobian.
///
/// `d_init` defaults to 0.01 in every entry when empty. Errors:
/// StiffnessError for near-singular A or an ill-conditioned eigenbasis;
/// NumericalError on non-convergence or a non-positive diffusion coefficient.
FactorizedSystem build_transform(const Eigen::MatrixXd& A, const Eigen::VectorXd& a,
                                 const FactorizeOptions& opts = {},
                                 Eigen::VectorXd d_init = {});

struct FactorizationReport {
    double max_off_diagonal = 0.0; // max_{i != j} |(R^T A R)_ij|
    double off_diagonal_limit = 0.0;
    double residual = 0.0;
    double residual_limit = 0.0;
    bool passed = false;
};

FactorizationReport verify_factorization(const FactorizedSystem& fs, const Eigen::MatrixXd& A,
                                         const Eigen::VectorXd& a, double residual_limit = 1e-10);

/// Rescales column k of R by c and recomputes p, b, beta consistently.
void rescale_column(FactorizedSystem& fs, const Eigen::MatrixXd& A, const Eigen::VectorXd& a, int k, double c);

} // namespace proxyhedge
