#pragma once

#include "proxyhedge/fd_reference.hpp"
#include "proxyhedge/market_model.hpp"
#include "proxyhedge/splitting_solver.hpp"
#include "proxyhedge/transform.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace proxyhedge {

struct BenchmarkOptions {
    std::vector<int> dims{1};
    std::vector<int> nodes{256, 512, 1024};
    std::vector<int> orders{4, 8};
    std::vector<int> time_steps{1};
    double bandwidth = 0.1;   // absolute kernel width on the unit-cube grid
    int repeats = 3;          // the minimum wall time over repeats is reported
    std::int64_t max_points = 4'000'000; // cells above this grid size are skipped
    std::int64_t max_direct_work = 20'000'000'000; // source-target pairs for the direct method
    std::uint64_t seed = 1;
};

struct RunOptions {
    Side side = Side::Buy;
    bool optimize = true;
    std::vector<double> alpha;  // starting point, or the fixed hedge when optimize is false
    double alpha_lower = -5.0;
    double alpha_upper = 5.0;
    int max_evaluations = 200;
    std::optional<int> search_nodes; // coarser per-axis node count while searching
    std::optional<double> observed_price;
    double gamma_lower = 1e-3;
    double gamma_upper = 50.0;
    BenchmarkOptions benchmark;
};

struct RunConfig {
    MarketModel market;
    SolverConfig solver;
    FDConfig fd;
    RunOptions run;
    std::vector<std::string> warnings; // unknown keys, not part of the canonical form
};

/// Parses the YAML document with sections market, solver, fd, run.
/// Errors are ConfigError messages prefixed with the offending line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical YAML form; parse_config(emit_config(c)) reproduces c.
std::string emit_config(const RunConfig& cfg);

/// FNV-1a over the canonical form.
std::uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

} // namespace proxyhedge
