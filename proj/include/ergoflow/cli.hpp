#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergoflow/coeffs.hpp"

namespace ergoflow {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Effective configuration of one CLI run: the model plus the numeric knobs
/// every command shares, and the command-specific extras. Defaults are
/// filled at parse time so the sidecar echo is always complete.
struct RunConfig {
    ModelSpec model;                        // defaults to ou(beta = 1)
    double dt = 1e-3;
    double window = 40.0;
    int n_grid = 16384;
    std::uint64_t seed = 1;
    std::optional<double> escape_threshold; // default: model-derived
    std::map<std::string, double> params;   // command-specific scalars
    std::vector<double> x0_list;            // probe points (command-specific default)
    std::vector<double> dt_list;            // oracle-check step sizes
    std::string f_expr = "x";               // spde-residual observable
    std::string method = "all";             // gamma command method selector

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

/// Parses a config from JSON text; throws config_error naming the offending
/// field path. An empty object yields the defaults above.
RunConfig parse_config_json(const std::string& text);
/// Reads and parses a config file; empty path yields the defaults.
RunConfig load_config(const std::string& path);

struct RunResult {
    int exit_code = 0;     // 0 ok, 2 validation failure, 3 non-convergence
    std::string message;   // human-readable status / failure reason
};

/// Executes one command, writing the primary artifact to `out` (CSV, or JSON
/// for the gamma/gap commands) and the sidecar to `out + ".json"`. The
/// sidecar always carries {config_echo, versions: {spec: "1"}, timings};
/// timings are deterministic work counters, never wall-clock.
RunResult run_command(const std::string& command, const RunConfig& cfg, const std::string& out);

/// %.17g rendering used for every float in CSV and JSON artifacts.
std::string format_g17(double v);

} // namespace ergoflow
