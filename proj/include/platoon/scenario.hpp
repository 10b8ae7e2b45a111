#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "platoon/cfm.hpp"
#include "platoon/core_model.hpp"
#include "platoon/mpc_controller.hpp"

namespace platoon {

/// RMSE thresholds for declaring the platoon formed.
struct FormationCriteria {
    double eps_dp = 1.0;   ///< headway RMSE bound [m]
    double eps_v = 0.25;   ///< speed RMSE bound [m/s]
    int hold_steps = 20;   ///< consecutive steps both bounds must hold

    void validate() const;
    bool operator==(const FormationCriteria&) const = default;
};

struct SpeedBand {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const SpeedBand&) const = default;
};

/// Order of the drawn HDV speeds along the chain.
enum class SpeedOrder { Descending, Random };

/// Either explicit per-vehicle states or a seeded random draw. In the random
/// draw the CAV starts at `cav_position`, each HDV trails its predecessor by
/// its safe spacing rho v + s0 plus a uniform margin.
struct InitialConditions {
    std::uint64_t seed = 7;
    std::optional<double> cav_position;  ///< defaults to the control-zone entry
    SpeedBand cav_speed{26.0, 28.0};
    SpeedBand hdv_speed{18.0, 24.0};
    SpeedBand gap_margin{0.5, 3.0};
    /// Descending: each HDV is no faster than the one ahead of it.
    SpeedOrder hdv_speed_order = SpeedOrder::Descending;
    /// Explicit (position, speed) per vehicle, CAV first. Overrides the draw.
    std::vector<VehicleState> vehicles;

    bool operator==(const InitialConditions&) const = default;
};

/// How the CAV drives while outside the control zone.
enum class LeaderMode { Cruise, FreeRoadCfm };

struct OutputOptions {
    std::string dir;
    std::string format = "csv";  ///< csv | json
    int downsample = 1;
    bool operator==(const OutputOptions&) const = default;
};

struct ScenarioConfig {
    RoadGeometry geometry;
    Bounds bounds;
    int N = 4;
    cfm::ModelParams cfm = cfm::OvmParams{};
    mpc::ControllerParams controller;
    FormationCriteria criteria;
    InitialConditions init;
    LeaderMode leader_outside = LeaderMode::Cruise;
    OutputOptions outputs;

    /// Check every invariant; throws ValidationError naming the first breach.
    void validate() const;

    /// Car-following parameters with rho and s0 taken from `bounds`.
    cfm::ModelParams model() const;

    bool operator==(const ScenarioConfig& o) const;
};

/// Initial fleet (CAV first) for the configured draw or explicit states.
std::vector<VehicleState> initial_fleet(const ScenarioConfig& config);

/// Fleet cruising at a common speed with every HDV at the model's
/// equilibrium gap, CAV at `cav_position`.
std::vector<VehicleState> formed_platoon(const ScenarioConfig& config, double speed,
                                         double cav_position);

}  // namespace platoon
