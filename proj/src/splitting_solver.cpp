#include "proxyhedge/splitting_solver.hpp"

#include "proxyhedge/errors.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace proxyhedge {

int SolverConfig::nodes_for(int axis) const {
    if (nodes.empty()) return 129;
    return nodes.size() == 1 ? nodes.front() : nodes.at(static_cast<std::size_t>(axis));
}

KernelOptions SolverConfig::kernel_options() const {
    KernelOptions k;
    k.method = kernel;
    k.order = ifgt_order;
    k.cluster_radius = cluster_radius;
    k.threads = threads;
    return k;
}

void SolverConfig::validate(int dims) const {
    if (time_steps < 1) throw ConfigError("solver.time_steps must be >= 1");
    if (ifgt_order < 2) throw ConfigError("solver.ifgt_order must be >= 2");
    if (!(domain_sd > 0.0)) throw ConfigError("solver.domain_sd must be > 0");
    if (!(cole_hopf_guard > 0.0)) throw ConfigError("solver.cole_hopf_guard must be > 0");
    if (threads < 1) throw ConfigError("solver.threads must be >= 1");
    if (nodes.size() > 1 && static_cast<int>(nodes.size()) != dims) {
        throw ConfigError("solver.nodes must have one entry or one per axis (" + std::to_string(dims) + ")");
    }
    for (int k = 0; k < dims; ++k) {
        if (nodes_for(k) < 8) throw ConfigError("solver.nodes must be >= 8 per axis");
    }
}

GridField make_factorized_grid(const Eigen::VectorXd& center, const Eigen::VectorXd& p, double maturity,
                               const SolverConfig& cfg) {
    const int d = static_cast<int>(center.size());
    cfg.validate(d);
    std::vector<GridAxis> axes(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        const double half = cfg.domain_sd * std::sqrt(p[k] * maturity);
        const int m = cfg.nodes_for(k);
        axes[static_cast<std::size_t>(k)] = GridAxis{center[k] - half, 2.0 * half / (m - 1), m};
    }
    return GridField(std::move(axes));
}

namespace {

void require_positive(const GridField& field, const char* stage) {
    for (double v : field.values()) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw NumericalError(stage, "field must be positive and finite");
        }
    }
}

} // namespace

void cole_hopf_substep_inplace(GridField& field, double p0, double beta, double dt, const KernelOptions& opts,
                               double guard) {
    if (!(p0 > 0.0)) throw NumericalError("cole_hopf", "p0 must be > 0");
    const double kappa = 1.0 - beta / p0;
    if (!(std::abs(kappa) > guard)) {
        std::ostringstream os;
        os << "exponent 1 - beta/p0 = " << kappa
           << " is within the singularity guard; use the finite-difference reference solver";
        throw NumericalError("cole_hopf", os.str());
    }
    require_positive(field, "cole_hopf");
    AxisHeatKernel kernel(field.axis(0), p0, dt, opts);
    std::span<double> v = field.values();
    if (beta == 0.0) {
        apply_along_axis(field, 0, kernel, opts.threads);
        return;
    }
    for (double& x : v) x = std::pow(x, kappa);
    apply_along_axis(field, 0, kernel, opts.threads);
    const double inv = 1.0 / kappa;
    for (double& x : v) x = std::pow(x, inv);
}

GridField cole_hopf_substep(const GridField& field, double p0, double beta, double dt, const KernelOptions& opts,
                            double guard) {
    GridField out = field;
    cole_hopf_substep_inplace(out, p0, beta, dt, opts, guard);
    return out;
}

void strang_step_inplace(GridField& field, const FactorizedSystem& fs, double dt, const SolverConfig& cfg) {
    if (field.dims() != fs.dim()) throw NumericalError("strang_step", "grid and factorization dimensions differ");
    const KernelOptions opts = cfg.kernel_options();
    cole_hopf_substep_inplace(field, fs.p[0], fs.beta, 0.5 * dt, opts, cfg.cole_hopf_guard);
    std::vector<int> linear_axes;
    for (int k = 1; k < field.dims(); ++k) linear_axes.push_back(k);
    if (!linear_axes.empty()) {
        std::vector<double> coeff(fs.p.data(), fs.p.data() + fs.p.size());
        heat_step_separable_inplace(field, coeff, dt, linear_axes, opts);
    }
    cole_hopf_substep_inplace(field, fs.p[0], fs.beta, 0.5 * dt, opts, cfg.cole_hopf_guard);
    field.tau += dt;
}

GridField strang_step(const GridField& field, const FactorizedSystem& fs, double dt, const SolverConfig& cfg) {
    GridField out = field;
    strang_step_inplace(out, fs, dt, cfg);
    return out;
}

EvolveResult evolve(GridField phi0, const FactorizedSystem& fs, double maturity, const SolverConfig& cfg) {
    cfg.validate(phi0.dims());
    EvolveResult res;
    require_positive(phi0, "evolve");
    auto [lo, hi] = std::minmax_element(phi0.values().begin(), phi0.values().end());
    res.initial_min = *lo;
    res.initial_max = *hi;
    res.field = std::move(phi0);
    const double dt = maturity / cfg.time_steps;
    const double tol = cfg.bound_tolerance * std::max(1.0, res.initial_max);
    res.steps.reserve(static_cast<std::size_t>(cfg.time_steps));
    for (int j = 0; j < cfg.time_steps; ++j) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            strang_step_inplace(res.field, fs, dt, cfg);
        } catch (const NumericalError& e) {
            throw NumericalError("evolve", "step " + std::to_string(j + 1) + ": " + e.what());
        }
        StepDiagnostics sd;
        sd.step = j + 1;
        sd.tau = res.field.tau;
        sd.min = std::numeric_limits<double>::infinity();
        sd.max = -sd.min;
        for (double v : res.field.values()) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw NumericalError("evolve", "step " + std::to_string(j + 1) + ": non-positive or non-finite value");
            }
            sd.min = std::min(sd.min, v);
            sd.max = std::max(sd.max, v);
        }
        sd.within_bounds = sd.min >= res.initial_min - tol && sd.max <= res.initial_max + tol;
        res.bounds_respected = res.bounds_respected && sd.within_bounds;
        res.steps.push_back(sd);
        if (cfg.diagnostics) {
            const auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
            *cfg.diagnostics << "step " << sd.step << " tau=" << sd.tau << " min=" << sd.min << " max=" << sd.max
                             << (sd.within_bounds ? "" : " OUT-OF-BOUNDS") << " time_us=" << us.count() << '\n';
        }
    }
    return res;
}

double readout(const GridField& field, std::span<const double> point) {
    const int d = field.dims();
    if (static_cast<int>(point.size()) != d) throw NumericalError("readout", "point dimension mismatch");
    std::vector<int> base(static_cast<std::size_t>(d));
    std::vector<int> width(static_cast<std::size_t>(d));
    std::vector<std::array<double, 4>> weights(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        const GridAxis& ax = field.axis(k);
        const double x = point[static_cast<std::size_t>(k)];
        const double slack = 1e-9 * ax.step;
        if (!(x >= ax.origin - slack && x <= ax.back() + slack)) {
            std::ostringstream os;
            os << "point " << x << " on axis " << k << " lies outside [" << ax.origin << ", " << ax.back()
               << "]; increase solver.domain_sd to cover it";
            throw NumericalError("readout", os.str());
        }
        double s = (x - ax.origin) / ax.step;
        if (std::abs(s - std::round(s)) < 1e-10) s = std::round(s);
        const int n = std::min(ax.count, 4);
        int i0 = static_cast<int>(std::floor(s)) - (n == 4 ? 1 : 0);
        i0 = std::clamp(i0, 0, ax.count - n);
        base[static_cast<std::size_t>(k)] = i0;
        width[static_cast<std::size_t>(k)] = n;
        auto& w = weights[static_cast<std::size_t>(k)];
        for (int a = 0; a < n; ++a) {
            double l = 1.0;
            for (int b = 0; b < n; ++b) {
                if (b != a) l *= (s - (i0 + b)) / static_cast<double>(a - b);
            }
            w[static_cast<std::size_t>(a)] = l;
        }
    }

    // Gather the local block, then contract the last axis repeatedly.
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(width[static_cast<std::size_t>(k)]);
    std::vector<double> block(total);
    std::vector<int> local(static_cast<std::size_t>(d), 0);
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (std::size_t q = 0; q < total; ++q) {
        std::size_t rem = q;
        for (int k = d - 1; k >= 0; --k) {
            const auto ks = static_cast<std::size_t>(k);
            local[ks] = static_cast<int>(rem % static_cast<std::size_t>(width[ks]));
            rem /= static_cast<std::size_t>(width[ks]);
            idx[ks] = base[ks] + local[ks];
        }
        block[q] = field[field.flat_of(idx)];
    }
    for (int k = d - 1; k >= 0; --k) {
        const auto ks = static_cast<std::size_t>(k);
        const auto n = static_cast<std::size_t>(width[ks]);
        const std::size_t groups = block.size() / n;
        std::vector<double> next(groups);
        for (std::size_t g = 0; g < groups; ++g) {
            double acc = 0.0;
            double mn = std::numeric_limits<double>::infinity();
            double mx = -mn;
            for (std::size_t a = 0; a < n; ++a) {
                const double v = block[g * n + a];
                acc += weights[ks][a] * v;
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            next[g] = std::clamp(acc, mn, mx);
        }
        block = std::move(next);
    }
    return block.front();
}

} // namespace proxyhedge
