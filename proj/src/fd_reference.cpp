#include "proxyhedge/fd_reference.hpp"

#include "proxyhedge/errors.hpp"
#include "proxyhedge/splitting_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace proxyhedge {

int FDConfig::nodes_for(int axis) const {
    if (nodes.empty()) return 101;
    return nodes.size() == 1 ? nodes.front() : nodes.at(static_cast<std::size_t>(axis));
}

void FDConfig::validate(int dims) const {
    if (dims < 1 || dims > 3) throw ConfigError("fd: only 1 to 3 dimensions are supported");
    if (time_steps < 1) throw ConfigError("fd.time_steps must be >= 1");
    if (!(domain_sd > 0.0)) throw ConfigError("fd.domain_sd must be > 0");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("fd.theta must lie in [0, 1]");
    if (rannacher_steps < 0) throw ConfigError("fd.rannacher_steps must be >= 0");
    if (!(cfl_limit > 0.0)) throw ConfigError("fd.cfl_limit must be > 0");
    if (!(divergence_tolerance >= 0.0)) throw ConfigError("fd.divergence_tolerance must be >= 0");
    if (nodes.size() > 1 && static_cast<int>(nodes.size()) != dims) {
        throw ConfigError("fd.nodes must have one entry or one per axis (" + std::to_string(dims) + ")");
    }
    for (int k = 0; k < dims; ++k) {
        if (nodes_for(k) < 5) throw ConfigError("fd.nodes must be >= 5 per axis");
    }
}

namespace {

bool on_boundary(const GridField& f, std::size_t flat) {
    for (int k = 0; k < f.dims(); ++k) {
        const int i = static_cast<int>((flat / f.stride(k)) % static_cast<std::size_t>(f.axis(k).count));
        if (i == 0 || i == f.axis(k).count - 1) return true;
    }
    return false;
}

int index_along(const GridField& f, std::size_t flat, int k) {
    return static_cast<int>((flat / f.stride(k)) % static_cast<std::size_t>(f.axis(k).count));
}

// Boundary nodes follow the two nearest inner nodes linearly, axis by axis.
void extrapolate_edges(GridField& f) {
    std::span<double> v = f.values();
    for (int k = 0; k < f.dims(); ++k) {
        const std::size_t s = f.stride(k);
        const int m = f.axis(k).count;
        for (std::size_t flat = 0; flat < f.size(); ++flat) {
            if (index_along(f, flat, k) != 0) continue;
            v[flat] = 2.0 * v[flat + s] - v[flat + 2 * s];
            const std::size_t last = flat + s * static_cast<std::size_t>(m - 1);
            v[last] = 2.0 * v[last - s] - v[last - 2 * s];
        }
    }
}

struct Derivatives {
    double first[3];
    double second[3][3];
};

Derivatives derivatives_at(const GridField& f, std::size_t flat) {
    Derivatives d{};
    const int n = f.dims();
    std::span<const double> v = f.values();
    for (int i = 0; i < n; ++i) {
        const std::size_t si = f.stride(i);
        const double hi = f.axis(i).step;
        d.first[i] = (v[flat + si] - v[flat - si]) / (2.0 * hi);
        d.second[i][i] = (v[flat + si] - 2.0 * v[flat] + v[flat - si]) / (hi * hi);
        for (int j = i + 1; j < n; ++j) {
            const std::size_t sj = f.stride(j);
            const double hj = f.axis(j).step;
            const double c = (v[flat + si + sj] - v[flat + si - sj] - v[flat - si + sj] + v[flat - si - sj]) /
                             (4.0 * hi * hj);
            d.second[i][j] = c;
            d.second[j][i] = c;
        }
    }
    return d;
}

void thomas(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
            std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

} // namespace

GridField fd_evolve(GridField initial, const FdOperator& op, double horizon, const FDConfig& cfg,
                    std::optional<std::pair<double, double>> data_range) {
    const int n = initial.dims();
    cfg.validate(n);
    if (op.A.rows() != n || op.A.cols() != n || op.a.size() != n) {
        throw NumericalError("fd_reference", "operator dimension does not match the grid");
    }
    for (int k = 0; k < n; ++k) {
        if (initial.axis(k).count < 5) throw NumericalError("fd_reference", "at least 5 nodes per axis required");
    }
    GridField u = std::move(initial);
    std::span<double> uv = u.values();
    auto [lo_it, hi_it] = std::minmax_element(uv.begin(), uv.end());
    if (!(*lo_it > 0.0)) throw NumericalError("fd_reference", "initial data must be positive");
    const double lo = data_range ? std::min(data_range->first, *lo_it) : *lo_it;
    const double hi = data_range ? std::max(data_range->second, *hi_it) : *hi_it;
    const double tol = cfg.divergence_tolerance * (hi - lo) + 1e-12 * hi;

    const double dt = horizon / cfg.time_steps;
    const std::size_t size = u.size();
    std::vector<double> y(size), explicit_part(size);
    std::vector<std::vector<double>> l_axis(static_cast<std::size_t>(n), std::vector<double>(size, 0.0));
    std::vector<double> lower, diag, upper, rhs;

    for (int step = 0; step < cfg.time_steps; ++step) {
        const double theta = step < cfg.rannacher_steps ? 1.0 : cfg.theta;
        const double tau_mid = (step + 0.5) * dt;
        Eigen::VectorXd mu = op.drift ? op.drift(tau_mid) : Eigen::VectorXd::Zero(n);

        double cfl = 0.0;
        for (std::size_t flat = 0; flat < size; ++flat) {
            explicit_part[flat] = 0.0;
            if (on_boundary(u, flat)) continue;
            const Derivatives d = derivatives_at(u, flat);
            double grad_a = 0.0;
            double full = 0.0;
            for (int i = 0; i < n; ++i) {
                grad_a += op.a[i] * d.first[i];
                const double li = mu[i] * d.first[i] + 0.5 * op.A(i, i) * d.second[i][i];
                l_axis[static_cast<std::size_t>(i)][flat] = li;
                full += li;
                for (int j = i + 1; j < n; ++j) full += op.A(i, j) * d.second[i][j];
            }
            full -= grad_a * grad_a / (2.0 * uv[flat]);
            explicit_part[flat] = full;
            if (theta < 1.0) {
                const double speed = 0.5 * std::abs(grad_a / uv[flat]);
                double c = 0.0;
                for (int i = 0; i < n; ++i) c += speed * std::abs(op.a[i]) * dt / u.axis(i).step;
                cfl = std::max(cfl, c);
            }
        }
        if (cfl > cfg.cfl_limit) {
            std::ostringstream os;
            os << "CFL number " << cfl << " of the explicit gradient term exceeds " << cfg.cfl_limit
               << " at step " << step + 1 << "; increase fd.time_steps";
            throw NumericalError("fd_reference", os.str());
        }

        for (std::size_t flat = 0; flat < size; ++flat) y[flat] = uv[flat] + dt * explicit_part[flat];

        for (int k = 0; k < n; ++k) {
            const GridAxis& ax = u.axis(k);
            const std::size_t s = u.stride(k);
            const int m = ax.count;
            const double h = ax.step;
            const double diff = 0.5 * op.A(k, k) / (h * h);
            const double adv = mu[k] / (2.0 * h);
            const double l_minus = diff - adv;
            const double l_plus = diff + adv;
            const double c = theta * dt;
            const std::size_t inner = static_cast<std::size_t>(m - 2);
            rhs.resize(inner);
            for (std::size_t flat = 0; flat < size; ++flat) {
                if (index_along(u, flat, k) != 0) continue;
                bool interior = true;
                for (int j = 0; j < n && interior; ++j) {
                    if (j == k) continue;
                    const int ij = index_along(u, flat, j);
                    interior = ij > 0 && ij < u.axis(j).count - 1;
                }
                if (!interior) continue;
                diag.assign(inner, 1.0 + c * 2.0 * diff);
                lower.assign(inner, -c * l_minus);
                upper.assign(inner, -c * l_plus);
                // U_0 = 2 U_1 - U_2 and its mirror image at the far edge.
                diag.front() += 2.0 * lower.front();
                upper.front() -= lower.front();
                diag.back() += 2.0 * upper.back();
                lower.back() -= upper.back();
                for (std::size_t q = 0; q < inner; ++q) {
                    const std::size_t node = flat + (q + 1) * s;
                    rhs[q] = y[node] - c * l_axis[static_cast<std::size_t>(k)][node];
                }
                thomas(lower, diag, upper, rhs);
                for (std::size_t q = 0; q < inner; ++q) y[flat + (q + 1) * s] = rhs[q];
            }
        }

        for (std::size_t flat = 0; flat < size; ++flat) {
            if (!on_boundary(u, flat)) uv[flat] = y[flat];
        }
        extrapolate_edges(u);
        u.tau += dt;

        for (double x : uv) {
            if (!std::isfinite(x) || !(x > 0.0) || x < lo - tol || x > hi + tol) {
                std::ostringstream os;
                os << "solution left [" << lo - tol << ", " << hi + tol << "] at step " << step + 1
                   << " (value " << x << "); refine fd.time_steps or fd.nodes";
                throw NumericalError("fd_reference", os.str());
            }
        }
    }
    return u;
}

FdSolution fd_solve(const MarketModel& model, std::span<const double> alpha, const FDConfig& cfg, Side side) {
    const int n = model.n_assets();
    if (n > 3) throw ConfigError("fd_reference supports at most two proxies");
    if (static_cast<int>(alpha.size()) != model.n_proxies) {
        throw ConfigError("alpha must have one entry per proxy");
    }
    cfg.validate(n);
    const QuadraticData q = build_quadratic_data(model);
    const std::vector<TermStructure> mu_hat = effective_drifts(model, model.maturity).mu_hat;
    const double T = model.maturity;

    FdSolution out;
    out.z_spot = spot_log_moneyness(model);
    std::vector<GridAxis> axes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double shift = mu_hat[static_cast<std::size_t>(i)].integral(0.0, T);
        const double half = cfg.domain_sd * model.vols[i] * std::sqrt(T);
        const double a = std::min(out.z_spot[i], out.z_spot[i] + shift) - half;
        const double b = std::max(out.z_spot[i], out.z_spot[i] + shift) + half;
        const int m = cfg.nodes_for(i);
        axes[static_cast<std::size_t>(i)] = GridAxis{a, (b - a) / (m - 1), m};
    }
    GridField phi0(std::move(axes));
    std::vector<double> z(static_cast<std::size_t>(n));
    for (std::size_t flat = 0; flat < phi0.size(); ++flat) {
        phi0.coordinates(flat, z);
        phi0[flat] = terminal_condition(z, alpha, model, side);
    }

    FdOperator op{q.A, q.a, [&mu_hat, T, n](double tau) {
                      Eigen::VectorXd mu(n);
                      for (int i = 0; i < n; ++i) mu[i] = mu_hat[static_cast<std::size_t>(i)].value(T - tau);
                      return mu;
                  }};
    // The payoff exponent is sum_j c_j min(Y_j, K_j) with each min in [0, K_j].
    const double sign = side == Side::Buy ? 1.0 : -1.0;
    double e_lo = 0.0, e_hi = 0.0;
    for (int j = 0; j < n; ++j) {
        const double c = model.risk_aversion * sign * (j == 0 ? -1.0 : alpha[static_cast<std::size_t>(j - 1)]);
        e_lo += std::min(c, 0.0) * model.strikes[static_cast<std::size_t>(j)];
        e_hi += std::max(c, 0.0) * model.strikes[static_cast<std::size_t>(j)];
    }
    out.field = fd_evolve(std::move(phi0), op, T, cfg, std::pair{std::exp(e_lo), std::exp(e_hi)});
    std::vector<double> spot(out.z_spot.data(), out.z_spot.data() + n);
    out.phi_at_spot = readout(out.field, spot);
    return out;
}

} // namespace proxyhedge
