#pragma once

#include "proxyhedge/factorizer.hpp"
#include "proxyhedge/gauss_engine.hpp"
#include "proxyhedge/grid_field.hpp"

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <vector>

namespace proxyhedge {

struct SolverConfig {
    std::vector<int> nodes{129}; // per axis; a single entry applies to every axis
    int time_steps = 32;
    int ifgt_order = 8;
    double domain_sd = 6.0;
    double cole_hopf_guard = 1e-6;
    KernelMethod kernel = KernelMethod::Auto;
    double cluster_radius = 0.15;
    double bound_tolerance = 1e-8;
    double factor_tolerance = 1e-12;
    int threads = 1;
    std::ostream* diagnostics = nullptr; // per-step min/max and timing when set

    int nodes_for(int axis) const;
    KernelOptions kernel_options() const;
    void validate(int dims) const;
};

/// Tensor grid centered on `center` with half-width domain_sd * sqrt(p_k T) per axis.
GridField make_factorized_grid(const Eigen::VectorXd& center, const Eigen::VectorXd& p, double maturity,
                               const SolverConfig& cfg);

/// Exact solve of phi_t = 1/2 p0 phi_xx - 1/2 beta phi_x^2 / phi along axis 0 for dt:
/// phi^(1 - beta/p0) obeys the heat equation, so it is propagated and mapped back.
void cole_hopf_substep_inplace(GridField& field, double p0, double beta, double dt, const KernelOptions& opts,
                               double guard = 1e-6);
GridField cole_hopf_substep(const GridField& field, double p0, double beta, double dt, const KernelOptions& opts,
                            double guard = 1e-6);

/// Half nonlinear step on axis 0, full heat step on axes 1..N, half nonlinear step.
void strang_step_inplace(GridField& field, const FactorizedSystem& fs, double dt, const SolverConfig& cfg);
GridField strang_step(const GridField& field, const FactorizedSystem& fs, double dt, const SolverConfig& cfg);

struct StepDiagnostics {
    int step = 0;
    double tau = 0.0;
    double min = 0.0;
    double max = 0.0;
    bool within_bounds = true;
};

struct EvolveResult {
    GridField field;
    std::vector<StepDiagnostics> steps;
    double initial_min = 0.0;
    double initial_max = 0.0;
    bool bounds_respected = true;
};

/// J Strang steps of size T/J. Aborts with the step index on a non-positive or
/// non-finite field; bound excursions beyond bound_tolerance are only flagged.
EvolveResult evolve(GridField phi0, const FactorizedSystem& fs, double maturity, const SolverConfig& cfg);

/// Tensor-product cubic interpolation, each 1-D pass clamped to its four nodes.
double readout(const GridField& field, std::span<const double> point);

} // namespace proxyhedge
