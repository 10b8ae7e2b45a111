#pragma once

// Parameter sweeps: one base scenario, one swept parameter, several values and
// repetitions, runs dispatched over a worker pool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "platoon/scenario.hpp"

namespace platoon::sweep {

/// Swept parameters. Horizon values are in seconds; N is rounded.
inline constexpr const char* kParameters[] = {"T_p", "T_c", "tau", "rho", "N"};

struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
    int repetitions = 1;
    ScenarioConfig base;
    /// Same initial-condition seed for every value of a repetition, so the
    /// values are compared on identical traffic. When false the value index
    /// is mixed into the seed as well.
    bool common_random_numbers = true;
    int threads = 0;  ///< 0 = hardware concurrency

    void validate() const;
};

struct SweepRow {
    int value_index = 0;
    double value = 0.0;
    int repetition = 0;
    std::uint64_t seed = 0;
    std::string status;  ///< ok | collision | error: ...
    bool formed = false;
    std::optional<double> formation_time;
    int hard_violations = 0;
    int rear_end_violations = 0;
    int speed_violations = 0;
    double mean_abs_u = 0.0;
};

/// Copy of `base` with one parameter replaced. Throws ValidationError for an
/// unknown name.
ScenarioConfig apply_parameter(const ScenarioConfig& base, const std::string& name, double value);

std::uint64_t derive_seed(std::uint64_t base, int value_index, int repetition, bool include_value);

std::vector<SweepRow> run_sweep(const SweepSpec& spec);

SweepSpec load_sweep(const std::filesystem::path& path);

void write_sweep_csv(std::ostream& out, const std::string& parameter, std::span<const SweepRow> rows);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Mean formation time per value over formed repetitions (NaN if none formed).
std::vector<double> mean_formation_times(const SweepSpec& spec, std::span<const SweepRow> rows);

}  // namespace platoon::sweep
