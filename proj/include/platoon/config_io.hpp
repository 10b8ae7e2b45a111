#pragma once

// JSON scenario files. Keys follow the usual symbols of the model (L_b, L_c,
// v_min, u_max, rho, s0, l_c, alpha, v_d, a, b, gamma, T_h, T_p, T_c, tau,
// w_r, Q). Horizons are written in seconds and stored in steps:
// steps = round(seconds / tau). Omitted fields keep their defaults.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "platoon/scenario.hpp"

namespace platoon::io {

/// Parse or schema error. `where` names the field path or "line L, column C".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

/// Parses JSON text; reports syntax errors with line and column.
nlohmann::json parse_json_text(const std::string& text);

/// Builds a config from JSON without validating invariants.
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& config);

/// Reads, parses and validates a scenario file. Schema problems throw
/// ConfigError, invariant breaches throw ValidationError.
ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig load_config_text(const std::string& text);

/// Horizon conversion used for all T_* fields.
int seconds_to_steps(double seconds, double tau);

}  // namespace platoon::io
