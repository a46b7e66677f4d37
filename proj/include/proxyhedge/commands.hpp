#pragma once

#include "proxyhedge/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace proxyhedge {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

struct CommandOptions {
    bool verbose = false;
    std::optional<int> threads;
    std::ostream* diagnostics = nullptr; // verbose per-step output; never part of the report
};

/// Each command writes a deterministic text report (CSV for the benchmark) and
/// returns an exit code. Failures are reported with the stage that raised them.
int run_price(RunConfig cfg, std::ostream& report, const CommandOptions& opts = {});
int run_factorize(RunConfig cfg, std::ostream& report, const CommandOptions& opts = {});
int run_implied_gamma(RunConfig cfg, std::ostream& report, const CommandOptions& opts = {});
int run_benchmark(RunConfig cfg, std::ostream& csv, const CommandOptions& opts = {});

/// Loads the config text and dispatches by subcommand name; config errors exit with kExitConfig.
int run_command(const std::string& command, const std::string& config_text, std::ostream& out,
                const CommandOptions& opts = {});

inline constexpr const char* kBenchmarkHeader = "method,d,M,p,J,f_dp,wall_time_ns,max_rel_error,status";

} // namespace proxyhedge
