#include "proxyhedge/config.hpp"

#include "proxyhedge/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <type_traits>

namespace proxyhedge {

namespace {

std::string at_line(const YAML::Node& n, const std::string& msg) {
    const YAML::Mark m = n.Mark();
    if (m.line < 0) return msg;
    return "line " + std::to_string(m.line + 1) + ": " + msg;
}

// A mapping section that remembers which keys were read.
class Section {
public:
    Section(YAML::Node node, std::string name, std::vector<std::string>& warnings)
        : node_(std::move(node)), name_(std::move(name)), warnings_(warnings) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) {
            throw ConfigError(at_line(node_, name_ + " must be a mapping"));
        }
    }

    YAML::Node get(const std::string& key) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
        return node_[key];
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_ && node_.IsMap() && node_[key];
    }

    std::string path(const std::string& key) const { return name_ + "." + key; }
    const YAML::Node& node() const { return node_; }

    void warn_unknown() {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const std::string k = kv.first.as<std::string>();
            if (!seen_.count(k)) warnings_.push_back(at_line(kv.first, "unknown key " + path(k) + " ignored"));
        }
    }

private:
    YAML::Node node_;
    std::string name_;
    std::vector<std::string>& warnings_;
    std::set<std::string> seen_;
};

template <class T>
T as(const YAML::Node& n, const std::string& what) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(at_line(n, what + " has the wrong type"));
    }
}

template <class T>
T required(Section& s, const std::string& key) {
    YAML::Node n = s.get(key);
    if (!n) throw ConfigError(at_line(s.node(), "missing required field " + s.path(key)));
    return as<T>(n, s.path(key));
}

template <class T>
T optional(Section& s, const std::string& key, T fallback) {
    YAML::Node n = s.get(key);
    return n ? as<T>(n, s.path(key)) : fallback;
}

// Scalar or sequence of integers.
std::vector<int> int_list(Section& s, const std::string& key, std::vector<int> fallback) {
    YAML::Node n = s.get(key);
    if (!n) return fallback;
    if (n.IsScalar()) return {as<int>(n, s.path(key))};
    return as<std::vector<int>>(n, s.path(key));
}

TermStructure parse_drift(const YAML::Node& n, const std::string& what) {
    if (n.IsScalar()) return TermStructure(as<double>(n, what));
    if (!n.IsSequence() || n.size() == 0) {
        throw ConfigError(at_line(n, what + " must be a number or a list of {until, value} segments"));
    }
    std::vector<double> ends, values;
    for (const auto& seg : n) {
        if (!seg.IsMap() || !seg["until"] || !seg["value"]) {
            throw ConfigError(at_line(seg, what + " segments need 'until' and 'value'"));
        }
        ends.push_back(as<double>(seg["until"], what + ".until"));
        values.push_back(as<double>(seg["value"], what + ".value"));
    }
    try {
        return TermStructure(std::move(ends), std::move(values));
    } catch (const ConfigError& e) {
        throw ConfigError(at_line(n, what + ": " + e.what()));
    }
}

Eigen::MatrixXd parse_matrix(const YAML::Node& n, const std::string& what) {
    const auto rows = as<std::vector<std::vector<double>>>(n, what);
    const auto r = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != r) {
            throw ConfigError(at_line(n, what + " must be square"));
        }
        for (Eigen::Index j = 0; j < r; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
}

KernelMethod parse_kernel(const YAML::Node& n) {
    const std::string s = as<std::string>(n, "solver.kernel");
    if (s == "auto") return KernelMethod::Auto;
    if (s == "stencil") return KernelMethod::Stencil;
    if (s == "ifgt") return KernelMethod::Ifgt;
    throw ConfigError(at_line(n, "solver.kernel must be auto, stencil or ifgt"));
}

const char* kernel_name(KernelMethod k) {
    switch (k) {
    case KernelMethod::Stencil: return "stencil";
    case KernelMethod::Ifgt: return "ifgt";
    default: return "auto";
    }
}

void parse_market(Section& s, RunConfig& cfg, std::map<std::string, YAML::Node>& lines) {
    MarketModel& m = cfg.market;
    auto track = [&](const std::string& key) {
        YAML::Node n = s.get(key);
        if (n) lines.emplace(key, n);
        return n;
    };
    m.spots = required<std::vector<double>>(s, "spots");
    track("spots");
    const int n_assets = static_cast<int>(m.spots.size());
    if (n_assets < 1) throw ConfigError(at_line(s.get("spots"), "market.spots must not be empty"));
    m.n_proxies = optional<int>(s, "n_proxies", n_assets - 1);
    track("n_proxies");
    if (m.n_proxies != n_assets - 1) {
        throw ConfigError(at_line(s.get("n_proxies"), "market.n_proxies must equal len(spots) - 1"));
    }
    m.strikes = required<std::vector<double>>(s, "strikes");
    track("strikes");
    m.vols = required<std::vector<double>>(s, "vols");
    track("vols");
    m.maturity = required<double>(s, "maturity");
    track("maturity");
    m.risk_aversion = required<double>(s, "risk_aversion");
    track("risk_aversion");

    if (YAML::Node d = track("drifts")) {
        if (!d.IsSequence()) throw ConfigError(at_line(d, "market.drifts must be a list, one entry per asset"));
        for (std::size_t i = 0; i < d.size(); ++i) {
            m.drifts.push_back(parse_drift(d[i], "market.drifts[" + std::to_string(i) + "]"));
        }
    } else {
        m.drifts.assign(static_cast<std::size_t>(n_assets), TermStructure(0.0));
    }

    if (YAML::Node c = track("corr_yy")) {
        m.corr_yy = parse_matrix(c, "market.corr_yy");
    } else {
        m.corr_yy = Eigen::MatrixXd::Identity(n_assets, n_assets);
    }
    if (YAML::Node c = track("corr_xy")) {
        const auto v = as<std::vector<double>>(c, "market.corr_xy");
        m.corr_xy = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else {
        m.corr_xy = Eigen::VectorXd::Zero(n_assets);
    }
    m.index_drift = optional<double>(s, "index_drift", 0.0);
    track("index_drift");
    m.index_vol = optional<double>(s, "index_vol", 0.2);
    track("index_vol");
    m.rate = optional<double>(s, "rate", 0.0);
    track("rate");
    if (m.n_proxies > 0) {
        m.proxy_prices = required<std::vector<double>>(s, "proxy_prices");
    } else {
        m.proxy_prices = optional<std::vector<double>>(s, "proxy_prices", {});
    }
    track("proxy_prices");
}

void validate_market(const RunConfig& cfg, const Section& s, const std::map<std::string, YAML::Node>& lines) {
    try {
        cfg.market.validate();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        const YAML::Node* where = &s.node();
        std::size_t best = std::string::npos;
        for (const auto& [key, node] : lines) {
            const std::size_t pos = msg.find(key);
            if (pos < best) {
                where = &node;
                best = pos;
            }
        }
        if (best == std::string::npos && msg.rfind("full correlation", 0) == 0 && lines.count("corr_xy")) where = &lines.at("corr_xy");
        throw ConfigError(at_line(*where, "market: " + msg));
    }
}

void parse_solver(Section& s, SolverConfig& c) {
    c.nodes = int_list(s, "nodes", c.nodes);
    c.time_steps = optional<int>(s, "time_steps", c.time_steps);
    c.ifgt_order = optional<int>(s, "ifgt_order", c.ifgt_order);
    c.domain_sd = optional<double>(s, "domain_sd", c.domain_sd);
    c.cole_hopf_guard = optional<double>(s, "cole_hopf_guard", c.cole_hopf_guard);
    if (YAML::Node k = s.get("kernel")) c.kernel = parse_kernel(k);
    c.cluster_radius = optional<double>(s, "cluster_radius", c.cluster_radius);
    c.bound_tolerance = optional<double>(s, "bound_tolerance", c.bound_tolerance);
    c.factor_tolerance = optional<double>(s, "factor_tolerance", c.factor_tolerance);
    c.threads = optional<int>(s, "threads", c.threads);
}

void parse_fd(Section& s, FDConfig& c) {
    c.nodes = int_list(s, "nodes", c.nodes);
    c.time_steps = optional<int>(s, "time_steps", c.time_steps);
    c.domain_sd = optional<double>(s, "domain_sd", c.domain_sd);
    c.theta = optional<double>(s, "theta", c.theta);
    c.rannacher_steps = optional<int>(s, "rannacher_steps", c.rannacher_steps);
    c.cfl_limit = optional<double>(s, "cfl_limit", c.cfl_limit);
    c.divergence_tolerance = optional<double>(s, "divergence_tolerance", c.divergence_tolerance);
}

std::pair<double, double> parse_pair(Section& s, const std::string& key, std::pair<double, double> fallback) {
    YAML::Node n = s.get(key);
    if (!n) return fallback;
    const auto v = as<std::vector<double>>(n, s.path(key));
    if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError(at_line(n, s.path(key) + " must be [lower, upper]"));
    return {v[0], v[1]};
}

void parse_run(Section& s, RunOptions& r, std::vector<std::string>& warnings) {
    if (YAML::Node n = s.get("side")) {
        const std::string side = as<std::string>(n, "run.side");
        if (side == "buy") {
            r.side = Side::Buy;
        } else if (side == "sell") {
            r.side = Side::Sell;
        } else {
            throw ConfigError(at_line(n, "run.side must be buy or sell"));
        }
    }
    r.optimize = optional<bool>(s, "optimize", r.optimize);
    r.alpha = optional<std::vector<double>>(s, "alpha", r.alpha);
    std::tie(r.alpha_lower, r.alpha_upper) = parse_pair(s, "alpha_bounds", {r.alpha_lower, r.alpha_upper});
    r.max_evaluations = optional<int>(s, "max_evaluations", r.max_evaluations);
    if (s.has("search_nodes")) r.search_nodes = required<int>(s, "search_nodes");
    if (s.has("observed_price")) r.observed_price = required<double>(s, "observed_price");
    std::tie(r.gamma_lower, r.gamma_upper) = parse_pair(s, "gamma_bracket", {r.gamma_lower, r.gamma_upper});

    Section b(s.get("benchmark"), "run.benchmark", warnings);
    BenchmarkOptions& bo = r.benchmark;
    bo.dims = int_list(b, "dims", bo.dims);
    bo.nodes = int_list(b, "nodes", bo.nodes);
    bo.orders = int_list(b, "orders", bo.orders);
    bo.time_steps = int_list(b, "time_steps", bo.time_steps);
    bo.bandwidth = optional<double>(b, "bandwidth", bo.bandwidth);
    bo.repeats = optional<int>(b, "repeats", bo.repeats);
    bo.max_points = optional<std::int64_t>(b, "max_points", bo.max_points);
    bo.max_direct_work = optional<std::int64_t>(b, "max_direct_work", bo.max_direct_work);
    bo.seed = optional<std::uint64_t>(b, "seed", bo.seed);
    b.warn_unknown();
}

void validate_run(const RunConfig& cfg, Section& s) {
    const RunOptions& r = cfg.run;
    if (!r.alpha.empty() && static_cast<int>(r.alpha.size()) != cfg.market.n_proxies) {
        throw ConfigError(at_line(s.get("alpha"), "run.alpha must have n_proxies entries"));
    }
    if (r.max_evaluations < cfg.market.n_proxies + 1) {
        throw ConfigError(at_line(s.get("max_evaluations"), "run.max_evaluations must exceed n_proxies"));
    }
    if (r.search_nodes && *r.search_nodes < 8) {
        throw ConfigError(at_line(s.get("search_nodes"), "run.search_nodes must be >= 8"));
    }
    if (!(r.gamma_lower > 0.0)) throw ConfigError(at_line(s.get("gamma_bracket"), "run.gamma_bracket must be positive"));
    const BenchmarkOptions& b = r.benchmark;
    auto all = [](const std::vector<int>& v, int lo) {
        for (int x : v) {
            if (x < lo) return false;
        }
        return !v.empty();
    };
    if (!all(b.dims, 1) || !all(b.nodes, 8) || !all(b.orders, 1) || !all(b.time_steps, 1) || b.repeats < 1 ||
        !(b.bandwidth > 0.0) || b.max_points < 1) {
        throw ConfigError(at_line(s.get("benchmark"), "run.benchmark lists must be non-empty with positive entries"));
    }
}

std::string num(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

template <class T>
std::string list(const std::vector<T>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        if constexpr (std::is_floating_point_v<T>) {
            s += num(v[i]);
        } else {
            s += std::to_string(v[i]);
        }
    }
    return s + "]";
}

std::string drift_text(const TermStructure& t) {
    if (t.is_constant()) return num(t.values().front());
    std::string s = "[";
    for (std::size_t k = 0; k < t.values().size(); ++k) {
        if (k) s += ", ";
        s += "{until: " + num(t.ends()[k]) + ", value: " + num(t.values()[k]) + "}";
    }
    return s + "]";
}

} // namespace

RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": malformed document: " + e.msg);
    }
    if (!root.IsMap()) throw ConfigError("config must be a mapping with sections market, solver, fd, run");

    RunConfig cfg;
    std::set<std::string> known{"market", "solver", "fd", "run"};
    for (const auto& kv : root) {
        const std::string k = kv.first.as<std::string>();
        if (!known.count(k)) cfg.warnings.push_back(at_line(kv.first, "unknown section " + k + " ignored"));
    }
    if (!root["market"]) throw ConfigError("missing required section market");

    Section market(root["market"], "market", cfg.warnings);
    std::map<std::string, YAML::Node> lines;
    parse_market(market, cfg, lines);
    market.warn_unknown();
    validate_market(cfg, market, lines);

    Section solver(root["solver"], "solver", cfg.warnings);
    parse_solver(solver, cfg.solver);
    solver.warn_unknown();
    try {
        cfg.solver.validate(cfg.market.n_assets());
    } catch (const ConfigError& e) {
        throw ConfigError(at_line(root["solver"] ? root["solver"] : root, e.what()));
    }

    Section fd(root["fd"], "fd", cfg.warnings);
    parse_fd(fd, cfg.fd);
    fd.warn_unknown();
    try {
        cfg.fd.validate(cfg.fd.nodes.size() > 1 ? static_cast<int>(cfg.fd.nodes.size()) : 1);
    } catch (const ConfigError& e) {
        throw ConfigError(at_line(root["fd"] ? root["fd"] : root, e.what()));
    }

    Section run(root["run"], "run", cfg.warnings);
    parse_run(run, cfg.run, cfg.warnings);
    run.warn_unknown();
    validate_run(cfg, run);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string emit_config(const RunConfig& cfg) {
    const MarketModel& m = cfg.market;
    std::ostringstream os;
    os << "market:\n";
    os << "  n_proxies: " << m.n_proxies << '\n';
    os << "  spots: " << list(m.spots) << '\n';
    os << "  strikes: " << list(m.strikes) << '\n';
    os << "  drifts: [";
    for (std::size_t i = 0; i < m.drifts.size(); ++i) os << (i ? ", " : "") << drift_text(m.drifts[i]);
    os << "]\n";
    os << "  vols: " << list(m.vols) << '\n';
    os << "  corr_yy: [";
    for (Eigen::Index i = 0; i < m.corr_yy.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index j = 0; j < m.corr_yy.cols(); ++j) row.push_back(m.corr_yy(i, j));
        os << (i ? ", " : "") << list(row);
    }
    os << "]\n";
    os << "  corr_xy: " << list(std::vector<double>(m.corr_xy.data(), m.corr_xy.data() + m.corr_xy.size())) << '\n';
    os << "  index_drift: " << num(m.index_drift) << '\n';
    os << "  index_vol: " << num(m.index_vol) << '\n';
    os << "  rate: " << num(m.rate) << '\n';
    os << "  maturity: " << num(m.maturity) << '\n';
    os << "  risk_aversion: " << num(m.risk_aversion) << '\n';
    os << "  proxy_prices: " << list(m.proxy_prices) << '\n';

    const SolverConfig& s = cfg.solver;
    os << "solver:\n";
    os << "  nodes: " << list(s.nodes) << '\n';
    os << "  time_steps: " << s.time_steps << '\n';
    os << "  ifgt_order: " << s.ifgt_order << '\n';
    os << "  domain_sd: " << num(s.domain_sd) << '\n';
    os << "  cole_hopf_guard: " << num(s.cole_hopf_guard) << '\n';
    os << "  kernel: " << kernel_name(s.kernel) << '\n';
    os << "  cluster_radius: " << num(s.cluster_radius) << '\n';
    os << "  bound_tolerance: " << num(s.bound_tolerance) << '\n';
    os << "  factor_tolerance: " << num(s.factor_tolerance) << '\n';
    os << "  threads: " << s.threads << '\n';

    const FDConfig& f = cfg.fd;
    os << "fd:\n";
    os << "  nodes: " << list(f.nodes) << '\n';
    os << "  time_steps: " << f.time_steps << '\n';
    os << "  domain_sd: " << num(f.domain_sd) << '\n';
    os << "  theta: " << num(f.theta) << '\n';
    os << "  rannacher_steps: " << f.rannacher_steps << '\n';
    os << "  cfl_limit: " << num(f.cfl_limit) << '\n';
    os << "  divergence_tolerance: " << num(f.divergence_tolerance) << '\n';

    const RunOptions& r = cfg.run;
    os << "run:\n";
    os << "  side: " << (r.side == Side::Buy ? "buy" : "sell") << '\n';
    os << "  optimize: " << (r.optimize ? "true" : "false") << '\n';
    os << "  alpha: " << list(r.alpha) << '\n';
    os << "  alpha_bounds: [" << num(r.alpha_lower) << ", " << num(r.alpha_upper) << "]\n";
    os << "  max_evaluations: " << r.max_evaluations << '\n';
    if (r.search_nodes) os << "  search_nodes: " << *r.search_nodes << '\n';
    if (r.observed_price) os << "  observed_price: " << num(*r.observed_price) << '\n';
    os << "  gamma_bracket: [" << num(r.gamma_lower) << ", " << num(r.gamma_upper) << "]\n";
    const BenchmarkOptions& b = r.benchmark;
    os << "  benchmark:\n";
    os << "    dims: " << list(b.dims) << '\n';
    os << "    nodes: " << list(b.nodes) << '\n';
    os << "    orders: " << list(b.orders) << '\n';
    os << "    time_steps: " << list(b.time_steps) << '\n';
    os << "    bandwidth: " << num(b.bandwidth) << '\n';
    os << "    repeats: " << b.repeats << '\n';
    os << "    max_points: " << b.max_points << '\n';
    os << "    max_direct_work: " << b.max_direct_work << '\n';
    os << "    seed: " << b.seed << '\n';
    return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : emit_config(cfg)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

} // namespace proxyhedge
