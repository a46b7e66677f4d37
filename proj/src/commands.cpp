#include "proxyhedge/commands.hpp"

#include "proxyhedge/errors.hpp"
#include "proxyhedge/factorizer.hpp"
#include "proxyhedge/fd_reference.hpp"
#include "proxyhedge/gauss_engine.hpp"
#include "proxyhedge/pricer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

namespace proxyhedge {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string fmt_vec(const Eigen::VectorXd& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
}

std::string fmt_ints(const std::vector<int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
}

void apply_options(RunConfig& cfg, const CommandOptions& opts) {
    if (opts.threads) cfg.solver.threads = *opts.threads;
    cfg.solver.diagnostics = opts.verbose ? opts.diagnostics : nullptr;
}

void write_header(std::ostream& os, const char* kind, const RunConfig& cfg) {
    os << "proxyhedge " << kind << " report v1\n";
    os << "config_hash: " << config_hash_hex(cfg) << '\n';
    os << "n_proxies: " << cfg.market.n_proxies << '\n';
}

void write_factorization(std::ostream& os, const FactorizedSystem& fs, const FactorizationReport& rep) {
    os << "factorization:\n";
    os << "  D: " << fmt_vec(fs.D) << '\n';
    os << "  R:\n";
    for (Eigen::Index i = 0; i < fs.R.rows(); ++i) os << "    - " << fmt_vec(fs.R.row(i).transpose()) << '\n';
    os << "  lambda: " << fmt_vec(fs.lambda) << '\n';
    os << "  p: " << fmt_vec(fs.p) << '\n';
    os << "  b: " << fmt_vec(fs.b) << '\n';
    os << "  b0: " << fmt(fs.b[0]) << '\n';
    os << "  beta: " << fmt(fs.beta) << '\n';
    os << "  cole_hopf_exponent: " << fmt(1.0 - fs.beta / fs.p[0]) << '\n';
    os << "  residual: " << fmt(fs.residual) << '\n';
    os << "  iterations: " << fs.iterations << '\n';
    os << "  max_off_diagonal: " << fmt(rep.max_off_diagonal) << '\n';
    os << "  verified: " << (rep.passed ? "true" : "false") << '\n';
}

void write_failure(std::ostream& os, int code, const std::string& stage, const std::string& message) {
    os << "status: error\n";
    os << "exit_code: " << code << '\n';
    os << "failed_stage: " << stage << '\n';
    os << "message: " << message << '\n';
}

// Runs body and converts exceptions into a failure block naming the stage.
template <class F>
int guarded(std::ostream& os, std::string& stage, F&& body) {
    try {
        body();
        os << "status: ok\n";
        return kExitOk;
    } catch (const StiffnessError& e) {
        write_failure(os, kExitNumerical, e.stage(), std::string(e.what()) + " (condition " + fmt(e.condition()) + ")");
        return kExitNumerical;
    } catch (const NumericalError& e) {
        write_failure(os, kExitNumerical, e.stage(), e.what());
        return kExitNumerical;
    } catch (const ConfigError& e) {
        write_failure(os, kExitConfig, stage, e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        write_failure(os, kExitNumerical, stage, e.what());
        return kExitNumerical;
    }
}

FactorizedSystem factorize_with_report(const RunConfig& cfg, std::ostream& os) {
    const QuadraticData q = build_quadratic_data(cfg.market);
    FactorizeOptions fo;
    fo.tolerance = cfg.solver.factor_tolerance;
    FactorizedSystem fs = build_transform(q.A, q.a, fo);
    write_factorization(os, fs, verify_factorization(fs, q.A, q.a, std::max(1e-10, cfg.solver.factor_tolerance)));
    return fs;
}

void write_pricing(std::ostream& os, const RunConfig& cfg, const PricingResult& r) {
    os << "pricing:\n";
    os << "  side: " << (cfg.run.side == Side::Buy ? "buy" : "sell") << '\n';
    os << "  price: " << fmt(r.price) << '\n';
    os << "  alpha: " << fmt_vec(r.alpha) << '\n';
    os << "  pi: " << fmt(r.pi) << '\n';
    os << "  phi_at_spot: " << fmt(r.phi_at_spot) << '\n';
    os << "  u_star: " << fmt_vec(r.u_star) << '\n';
    os << "grid:\n";
    os << "  nodes: " << fmt_ints(r.diagnostics.nodes) << '\n';
    os << "  time_steps: " << r.diagnostics.time_steps << '\n';
    os << "  phi0_range: [" << fmt(r.diagnostics.initial_min) << ", " << fmt(r.diagnostics.initial_max) << "]\n";
    os << "  bounds_respected: " << (r.diagnostics.bounds_respected ? "true" : "false") << '\n';
    if (cfg.market.n_proxies > 0 && cfg.run.optimize) {
        os << "optimizer:\n";
        os << "  evaluations: " << r.evaluations << '\n';
        os << "  converged: " << (r.converged ? "true" : "false") << '\n';
        os << "  trace:\n";
        for (const auto& t : r.trace) os << "    - {alpha: " << fmt_vec(t.x) << ", price: " << fmt(t.f) << "}\n";
    }
    os << "warnings:" << (r.warnings.empty() ? " []" : "") << '\n';
    for (const auto& w : r.warnings) os << "  - " << w << '\n';
}

} // namespace

int run_factorize(RunConfig cfg, std::ostream& report, const CommandOptions& opts) {
    apply_options(cfg, opts);
    write_header(report, "factorize", cfg);
    std::string stage = "factorize";
    return guarded(report, stage, [&] { factorize_with_report(cfg, report); });
}

int run_price(RunConfig cfg, std::ostream& report, const CommandOptions& opts) {
    apply_options(cfg, opts);
    write_header(report, "price", cfg);
    for (const auto& w : cfg.warnings) report << "config_warning: " << w << '\n';
    std::string stage = "factorize";
    return guarded(report, stage, [&] {
        const FactorizedSystem fs = factorize_with_report(cfg, report);
        stage = "price";
        const Pricer pricer(cfg.market, cfg.solver, fs);
        const int n = cfg.market.n_proxies;
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n && !cfg.run.alpha.empty(); ++i) alpha[i] = cfg.run.alpha[static_cast<std::size_t>(i)];
        PricingResult r;
        if (n > 0 && cfg.run.optimize) {
            stage = "optimize";
            OptimizeOptions oo;
            oo.side = cfg.run.side;
            oo.search.lower = cfg.run.alpha_lower;
            oo.search.upper = cfg.run.alpha_upper;
            oo.search.max_evaluations = cfg.run.max_evaluations;
            if (cfg.run.search_nodes) {
                SolverConfig coarse = cfg.solver;
                coarse.nodes = {*cfg.run.search_nodes};
                coarse.diagnostics = nullptr;
                oo.search_config = coarse;
            }
            r = optimize_static_hedge(cfg.market, cfg.solver, alpha, oo);
        } else {
            r = evaluate_hedge(pricer, std::span<const double>(alpha.data(), static_cast<std::size_t>(n)), cfg.run.side);
        }
        write_pricing(report, cfg, r);
    });
}

int run_implied_gamma(RunConfig cfg, std::ostream& report, const CommandOptions& opts) {
    apply_options(cfg, opts);
    write_header(report, "implied-gamma", cfg);
    std::string stage = "implied_gamma";
    return guarded(report, stage, [&] {
        if (!cfg.run.observed_price) throw ConfigError("run.observed_price is required for implied-gamma");
        std::vector<double> alpha = cfg.run.alpha;
        ImpliedGammaOptions io;
        io.gamma_lo = cfg.run.gamma_lower;
        io.gamma_hi = cfg.run.gamma_upper;
        const double g = implied_gamma(cfg.market, *cfg.run.observed_price, cfg.solver, alpha, io);
        MarketModel m = cfg.market;
        m.risk_aversion = g;
        if (alpha.empty()) alpha.assign(static_cast<std::size_t>(m.n_proxies), 0.0);
        const double check = Pricer(m, cfg.solver).price(alpha);
        report << "implied_gamma: " << fmt(g) << '\n';
        report << "observed_price: " << fmt(*cfg.run.observed_price) << '\n';
        report << "repriced: " << fmt(check) << '\n';
    });
}

namespace {

struct Cell {
    int d, m, p, j;
};

struct Timed {
    std::vector<double> values;
    long long ns = 0;
};

template <class F>
Timed timed(int repeats, F&& f) {
    Timed t;
    long long best = -1;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> v = f();
        const auto ns =
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
        if (best < 0 || ns < best) best = ns;
        t.values = std::move(v);
    }
    t.ns = best;
    return t;
}

double max_rel_error(const std::vector<double>& x, const std::vector<double>& ref, const std::vector<char>* mask = nullptr) {
    double scale = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        scale = std::max(scale, std::abs(ref[i]));
        err = std::max(err, std::abs(x[i] - ref[i]));
    }
    return scale > 0.0 ? err / scale : err;
}

std::vector<GridAxis> unit_axes(int d, int m) {
    return std::vector<GridAxis>(static_cast<std::size_t>(d), GridAxis{-1.0, 2.0 / (m - 1), m});
}

} // namespace

int run_benchmark(RunConfig cfg, std::ostream& csv, const CommandOptions& opts) {
    apply_options(cfg, opts);
    const BenchmarkOptions& b = cfg.run.benchmark;
    csv << kBenchmarkHeader << '\n';
    std::mt19937_64 rng(b.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double h = b.bandwidth;

    for (int d : b.dims) {
        for (int m : b.nodes) {
            for (int J : b.time_steps) {
                const double points = std::pow(static_cast<double>(m), d);
                // Shared initial data and direct reference for every order in this (d, M, J) cell.
                std::vector<double> phases(static_cast<std::size_t>(d));
                for (double& ph : phases) ph = phase(rng);
                auto emit = [&](const char* method, int p, long long ns, double err, const std::string& status) {
                    csv << method << ',' << d << ',' << m << ',' << p << ',' << J << ',' << taylor_term_count(d, p)
                        << ',' << ns << ',' << (std::isnan(err) ? std::string("") : fmt(err)) << ',' << status << '\n';
                };
                if (points > static_cast<double>(b.max_points)) {
                    for (int p : b.orders) {
                        for (const char* meth : {"direct", "ifgt_separable", "ifgt_dvariate", "fd_reference"}) {
                            emit(meth, p, 0, std::nan(""), "skipped_resource_limit");
                        }
                    }
                    continue;
                }
                GridField init(unit_axes(d, m));
                std::vector<double> coord(static_cast<std::size_t>(d));
                for (std::size_t f = 0; f < init.size(); ++f) {
                    init.coordinates(f, coord);
                    double v = 1.0;
                    for (int k = 0; k < d; ++k) {
                        v *= 1.0 + 0.3 * std::sin(std::numbers::pi * (k + 1) * coord[static_cast<std::size_t>(k)] +
                                                  phases[static_cast<std::size_t>(k)]);
                    }
                    init[f] = v;
                }
                std::vector<double> pts(init.size() * static_cast<std::size_t>(d));
                for (std::size_t f = 0; f < init.size(); ++f) {
                    init.coordinates(f, std::span<double>(pts.data() + f * static_cast<std::size_t>(d),
                                                          static_cast<std::size_t>(d)));
                }
                const std::vector<double> w0(init.values().begin(), init.values().end());

                const bool direct_ok = points * points * J <= static_cast<double>(b.max_direct_work);
                Timed direct;
                if (direct_ok) {
                    direct = timed(b.repeats, [&] {
                        std::vector<double> v = w0;
                        for (int s = 0; s < J; ++s) v = direct_gauss_nd(d, pts, v, pts, h);
                        return v;
                    });
                }

                // Heat-equation equivalent of J raw kernel sums, for the FD row.
                std::vector<char> interior(init.size(), 1);
                const double reach = 6.0 * h * std::sqrt(static_cast<double>(J)) + 2.0 * init.axis(0).step;
                for (std::size_t f = 0; f < init.size(); ++f) {
                    init.coordinates(f, coord);
                    for (double c : coord) {
                        if (std::abs(c) > 1.0 - reach) interior[f] = 0;
                    }
                }

                for (int p : b.orders) {
                    if (direct_ok) {
                        emit("direct", p, direct.ns, 0.0, "ok");
                    } else {
                        emit("direct", p, 0, std::nan(""), "skipped_resource_limit");
                    }

                    const Timed sep = timed(b.repeats, [&] {
                        GridField g = init;
                        std::vector<Ifgt1dPlan> plans;
                        for (int k = 0; k < d; ++k) {
                            const std::vector<double> nodes = g.axis(k).nodes();
                            plans.emplace_back(nodes, nodes, h, p, cfg.solver.cluster_radius);
                        }
                        std::vector<double> fiber, out;
                        std::span<double> v = g.values();
                        for (int s = 0; s < J; ++s) {
                            for (int k = 0; k < d; ++k) {
                                const std::size_t stride = g.stride(k);
                                const auto len = static_cast<std::size_t>(g.axis(k).count);
                                fiber.resize(len);
                                out.resize(len);
                                for (std::size_t f = 0; f < g.size(); ++f) {
                                    if ((f / stride) % len != 0) continue;
                                    for (std::size_t q = 0; q < len; ++q) fiber[q] = v[f + q * stride];
                                    plans[static_cast<std::size_t>(k)].apply(fiber, out);
                                    for (std::size_t q = 0; q < len; ++q) v[f + q * stride] = out[q];
                                }
                            }
                        }
                        return std::vector<double>(v.begin(), v.end());
                    });
                    emit("ifgt_separable", p, sep.ns, direct_ok ? max_rel_error(sep.values, direct.values) : std::nan(""),
                         "ok");

                    if (d <= 3) {
                        const Timed dv = timed(b.repeats, [&] {
                            std::vector<double> v = w0;
                            for (int s = 0; s < J; ++s) v = ifgt_nd(d, pts, v, pts, h, p, cfg.solver.cluster_radius);
                            return v;
                        });
                        emit("ifgt_dvariate", p, dv.ns, direct_ok ? max_rel_error(dv.values, direct.values) : std::nan(""),
                             "ok");
                    } else {
                        emit("ifgt_dvariate", p, 0, std::nan(""), "skipped_unsupported_dimension");
                    }

                    if (d <= 2) {
                        std::string status = "ok";
                        Timed fd;
                        try {
                            fd = timed(b.repeats, [&] {
                                FdOperator op{Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d), {}};
                                FDConfig fc = cfg.fd;
                                fc.nodes = {m};
                                GridField g = fd_evolve(init, op, 0.5 * h * h * J, fc);
                                const double scale = std::pow(std::sqrt(std::numbers::pi) * h / init.axis(0).step, d * J);
                                std::vector<double> v(g.values().begin(), g.values().end());
                                for (double& x : v) x *= scale;
                                return v;
                            });
                        } catch (const std::exception&) {
                            status = "error";
                        }
                        const double err = status == "ok" && direct_ok ? max_rel_error(fd.values, direct.values, &interior)
                                                                       : std::nan("");
                        emit("fd_reference", p, fd.ns, err, status);
                    } else {
                        emit("fd_reference", p, 0, std::nan(""), "skipped_unsupported_dimension");
                    }
                }
            }
        }
    }
    return kExitOk;
}

int run_command(const std::string& command, const std::string& config_text, std::ostream& out,
                const CommandOptions& opts) {
    RunConfig cfg;
    try {
        cfg = parse_config(config_text);
    } catch (const ConfigError& e) {
        out << "proxyhedge " << command << " report v1\n";
        write_failure(out, kExitConfig, "config", e.what());
        return kExitConfig;
    }
    if (command == "price") return run_price(std::move(cfg), out, opts);
    if (command == "factorize") return run_factorize(std::move(cfg), out, opts);
    if (command == "implied-gamma") return run_implied_gamma(std::move(cfg), out, opts);
    if (command == "benchmark") return run_benchmark(std::move(cfg), out, opts);
    out << "unknown command " << command << '\n';
    return kExitConfig;
}

} // namespace proxyhedge
