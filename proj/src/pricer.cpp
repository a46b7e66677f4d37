#include "proxyhedge/pricer.hpp"

#include "proxyhedge/errors.hpp"
#include "proxyhedge/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace proxyhedge {

namespace {

constexpr std::size_t kMaxGridNodes = 60'000'000;

FactorizedSystem factorize_model(const MarketModel& model, const SolverConfig& cfg) {
    model.validate();
    const QuadraticData q = build_quadratic_data(model);
    FactorizeOptions fo;
    fo.tolerance = cfg.factor_tolerance;
    return build_transform(q.A, q.a, fo);
}

double proxy_cost(const MarketModel& model, std::span<const double> alpha) {
    double c = 0.0;
    for (int i = 0; i < model.n_proxies; ++i) {
        c += alpha[static_cast<std::size_t>(i)] * model.proxy_prices[static_cast<std::size_t>(i)];
    }
    return c;
}

} // namespace

double merton_value(double x, double tau, const MarketModel& model) {
    const double eta = sharpe_ratio(model);
    return -std::exp(-model.risk_aversion * x * std::exp(model.rate * tau) - 0.5 * eta * eta * tau);
}

Pricer::Pricer(MarketModel model, SolverConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)), fs_(factorize_model(model_, cfg_)), map_(model_, fs_.R) {}

Pricer::Pricer(MarketModel model, SolverConfig cfg, FactorizedSystem fs)
    : model_(std::move(model)), cfg_(std::move(cfg)), fs_(std::move(fs)), map_(model_, fs_.R) {
    model_.validate();
    if (fs_.dim() != model_.n_assets()) throw ConfigError("factorization dimension does not match the model");
}

Solution Pricer::solve(std::span<const double> alpha, Side side) const { return solve(alpha, side, cfg_); }

Solution Pricer::solve(std::span<const double> alpha, Side side, const SolverConfig& cfg) const {
    const int n = model_.n_assets();
    if (static_cast<int>(alpha.size()) != model_.n_proxies) {
        throw ConfigError("alpha must have one entry per proxy (" + std::to_string(model_.n_proxies) + ")");
    }
    cfg.validate(n);
    std::size_t total = 1;
    for (int k = 0; k < n; ++k) total *= static_cast<std::size_t>(cfg.nodes_for(k));
    if (total > kMaxGridNodes) {
        throw ConfigError("solver.nodes gives " + std::to_string(total) + " grid points, above the limit of " +
                          std::to_string(kMaxGridNodes));
    }

    const double T = model_.maturity;
    Solution sol;
    sol.u_star = map_.to_factorized(spot_log_moneyness(model_), T);
    GridField phi0 = make_factorized_grid(sol.u_star, fs_.p, T, cfg);
    std::vector<double> coords(static_cast<std::size_t>(n));
    Eigen::VectorXd u(n);
    for (std::size_t flat = 0; flat < phi0.size(); ++flat) {
        phi0.coordinates(flat, coords);
        for (int k = 0; k < n; ++k) u[k] = coords[static_cast<std::size_t>(k)];
        const Eigen::VectorXd z = map_.from_factorized(u, 0.0);
        phi0[flat] = terminal_condition(std::span<const double>(z.data(), static_cast<std::size_t>(n)), alpha,
                                        model_, side);
    }

    EvolveResult ev = evolve(std::move(phi0), fs_, T, cfg);
    sol.diagnostics.time_steps = cfg.time_steps;
    for (int k = 0; k < n; ++k) sol.diagnostics.nodes.push_back(cfg.nodes_for(k));
    sol.diagnostics.initial_min = ev.initial_min;
    sol.diagnostics.initial_max = ev.initial_max;
    sol.diagnostics.bounds_respected = ev.bounds_respected;
    sol.field = std::move(ev.field);
    sol.phi_at_spot = readout(sol.field, std::span<const double>(sol.u_star.data(), static_cast<std::size_t>(n)));
    if (!(sol.phi_at_spot > 0.0) || !std::isfinite(sol.phi_at_spot)) {
        throw NumericalError("readout", "non-positive value function at the spot");
    }

    const double sign = side == Side::Buy ? 1.0 : -1.0;
    const double raw = -std::exp(-model_.rate * T) * std::log(sol.phi_at_spot) / model_.risk_aversion +
                       sign * proxy_cost(model_, alpha);
    sol.price = sign * raw;
    return sol;
}

PriceResult price_given_alpha(const MarketModel& model, std::span<const double> alpha, const SolverConfig& cfg,
                              Side side) {
    const Solution s = Pricer(model, cfg).solve(alpha, side);
    return {s.price, s.phi_at_spot};
}

double dynamic_hedge(const MarketModel& model, const FactorizedSystem& fs, const GridField& field,
                     const Eigen::VectorXd& u_star, double /*x*/) {
    const int n = field.dims();
    if (u_star.size() != n || fs.dim() != n) throw NumericalError("dynamic_hedge", "dimension mismatch");
    double slope = 0.0;
    std::vector<double> pt(u_star.data(), u_star.data() + n);
    for (int j = 0; j < n; ++j) {
        if (fs.b[j] == 0.0) continue;
        const GridAxis& ax = field.axis(j);
        const double h = ax.step;
        const double x0 = u_star[j];
        if (x0 - h < ax.origin - 1e-12 * h || x0 + h > ax.back() + 1e-12 * h) {
            throw NumericalError("dynamic_hedge", "derivative stencil leaves the grid on axis " + std::to_string(j));
        }
        pt[static_cast<std::size_t>(j)] = x0 + h;
        const double up = std::log(readout(field, pt));
        pt[static_cast<std::size_t>(j)] = x0 - h;
        const double dn = std::log(readout(field, pt));
        pt[static_cast<std::size_t>(j)] = x0;
        slope += fs.b[j] * (up - dn) / (2.0 * h);
    }
    const double eta = sharpe_ratio(model);
    return std::exp(-model.rate * model.maturity) / (model.risk_aversion * model.index_vol) * (eta + slope);
}

PricingResult evaluate_hedge(const Pricer& pricer, std::span<const double> alpha, Side side) {
    const Solution s = pricer.solve(alpha, side);
    PricingResult r;
    r.price = s.price;
    r.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    r.phi_at_spot = s.phi_at_spot;
    r.u_star = s.u_star;
    r.factorization = pricer.factorization();
    r.diagnostics = s.diagnostics;
    r.pi = dynamic_hedge(pricer.model(), pricer.factorization(), s.field, s.u_star);
    if (!s.diagnostics.bounds_respected) {
        r.warnings.push_back("value function left the initial data range beyond solver.bound_tolerance");
    }
    return r;
}

PricingResult optimize_static_hedge(const MarketModel& model, const SolverConfig& cfg, const Eigen::VectorXd& alpha_init,
                                    const OptimizeOptions& opts) {
    const Pricer pricer(model, cfg);
    const int n = model.n_proxies;
    Eigen::VectorXd start = alpha_init.size() == 0 ? Eigen::VectorXd::Zero(n) : alpha_init;
    if (start.size() != n) throw ConfigError("alpha_init must have one entry per proxy");
    if (n == 0) return evaluate_hedge(pricer, {}, opts.side);

    const SolverConfig& search_cfg = opts.search_config ? *opts.search_config : cfg;
    auto objective = [&](const Eigen::VectorXd& a) {
        return -pricer.solve(std::span<const double>(a.data(), static_cast<std::size_t>(n)), opts.side, search_cfg)
                    .price;
    };
    NelderMeadResult nm = nelder_mead_minimize(objective, start, opts.search);

    PricingResult r = evaluate_hedge(pricer, std::span<const double>(nm.x.data(), static_cast<std::size_t>(n)),
                                     opts.side);
    r.evaluations = nm.evaluations;
    r.converged = nm.converged;
    r.trace = std::move(nm.trace);
    for (auto& t : r.trace) t.f = -t.f;
    if (!nm.converged) {
        r.warnings.push_back("static-hedge search stopped at the evaluation budget (" +
                             std::to_string(opts.search.max_evaluations) + ") before converging");
    }
    return r;
}

double implied_gamma(const MarketModel& model, double observed_price, const SolverConfig& cfg,
                     std::span<const double> alpha, const ImpliedGammaOptions& opts) {
    if (!(opts.gamma_lo > 0.0 && opts.gamma_lo < opts.gamma_hi)) {
        throw ConfigError("implied_gamma: need 0 < gamma_lo < gamma_hi");
    }
    std::vector<double> a(alpha.begin(), alpha.end());
    if (a.empty()) a.assign(static_cast<std::size_t>(model.n_proxies), 0.0);
    MarketModel m = model;
    m.risk_aversion = 1.0;
    const Pricer base(m, cfg);
    auto price_at = [&](double gamma) {
        MarketModel mg = m;
        mg.risk_aversion = gamma;
        return Pricer(mg, cfg, base.factorization()).price(a);
    };
    double lo = opts.gamma_lo;
    double hi = opts.gamma_hi;
    const double p_lo = price_at(lo);
    const double p_hi = price_at(hi);
    if (observed_price > p_lo || observed_price < p_hi) {
        std::ostringstream os;
        os.precision(10);
        os << "observed price " << observed_price << " outside the attainable range [" << p_hi << ", " << p_lo
           << "] for gamma in [" << lo << ", " << hi << "]";
        throw NumericalError("implied_gamma", os.str());
    }
    for (int it = 0; it < opts.max_iterations && hi / lo - 1.0 > opts.relative_tolerance; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (price_at(mid) >= observed_price) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

namespace {

struct ClaimLaw {
    double log_mean;
    double log_sd;
    double strike;

    // Standard-normal level at which Y_T reaches the strike.
    double kink() const {
        return strike > 0.0 ? (std::log(strike) - log_mean) / log_sd : -std::numeric_limits<double>::infinity();
    }
};

ClaimLaw claim_law(const MarketModel& model, int asset) {
    if (asset < 0 || asset >= model.n_assets()) throw ConfigError("asset index out of range");
    const auto i = static_cast<std::size_t>(asset);
    const EffectiveDrifts ed = effective_drifts(model, model.maturity);
    const double T = model.maturity;
    return {std::log(model.spots[i]) + ed.mu_hat[i].integral(0.0, T), model.vols[i] * std::sqrt(T), model.strikes[i]};
}

} // namespace

double single_claim_oracle(const MarketModel& model, int asset, int nodes) {
    const double rho = model.corr_xy[asset];
    if (!(std::abs(rho) < 1.0)) throw ConfigError("single_claim_oracle: |rho| must be < 1");
    const ClaimLaw law = claim_law(model, asset);
    if (nodes < 64) throw ConfigError("single_claim_oracle: at least 64 quadrature nodes required");
    const double c = model.risk_aversion * (1.0 - rho * rho);
    const double cap = std::max(law.strike, 0.0);
    const QuadratureRule rule = gauss_hermite(nodes);
    const double e = normal_expectation(
        rule, [&](double xi) { return std::exp(-c * std::min(std::exp(law.log_mean + law.log_sd * xi), cap)); });
    return -std::exp(-model.rate * model.maturity) / c * std::log(e);
}

double marginal_price(const MarketModel& model, int asset, int nodes) {
    const ClaimLaw law = claim_law(model, asset);
    const double e = normal_expectation_split([&](double xi) { return std::exp(law.log_mean + law.log_sd * xi); },
                                              std::max(law.strike, 0.0), law.kink(), nodes);
    return std::exp(-model.rate * model.maturity) * e;
}

} // namespace proxyhedge
