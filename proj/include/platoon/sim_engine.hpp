#pragma once

// Closed-loop simulation of one CAV leading N-1 car-following HDVs through the
// buffer and control zones.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "platoon/scenario.hpp"

namespace platoon::sim {

struct FleetState {
    std::vector<VehicleState> states;  ///< index 0 = CAV
    long step = 0;
    double time = 0.0;
};

/// What the coordinator hands the CAV each step: exact positions and speeds.
struct InformationSet {
    std::vector<double> positions;
    std::vector<double> speeds;

    std::vector<VehicleState> as_states() const;
};

InformationSet coordinator_snapshot(const FleetState& fleet);

struct FormationMetrics {
    double rmse_dp = 0.0;  ///< RMS deviation of the N-1 headways from their mean
    double rmse_v = 0.0;   ///< RMS deviation of the N speeds from their mean
};

FormationMetrics formation_metrics(std::span<const VehicleState> fleet, double veh_len);

/// Tracks how long both RMSE bounds have held. Formation is latched at the
/// first step of the first window of `hold_steps` consecutive compliant steps.
class FormationDetector {
public:
    explicit FormationDetector(FormationCriteria criteria) : criteria_(criteria) {}

    struct Sample {
        FormationMetrics metrics;
        bool within = false;
        bool formed = false;
    };

    Sample update(std::span<const VehicleState> fleet, double veh_len, long step);

    bool formed() const { return formation_step_.has_value(); }
    std::optional<long> formation_step() const { return formation_step_; }

private:
    FormationCriteria criteria_;
    int run_ = 0;
    long run_start_ = 0;
    std::optional<long> formation_step_;
};

/// One-shot detector evaluation on a single snapshot.
struct DetectResult {
    double rmse_dp = 0.0;
    double rmse_v = 0.0;
    bool formed = false;
};
DetectResult detect_formation(std::span<const VehicleState> fleet, const FormationCriteria& criteria,
                              double veh_len);

enum class Zone { Buffer, Control, Exited };
std::string to_string(Zone z);
Zone zone_of(double position, const RoadGeometry& geometry);

struct TraceRow {
    long step = 0;
    double time = 0.0;
    std::vector<VehicleState> vehicles;  ///< accel = input applied over [k, k+1)
    std::vector<double> headways;        ///< N-1 gaps, vehicle 2..N
    double u_star = 0.0;                 ///< CAV input
    bool mpc_active = false;
    Zone zone = Zone::Buffer;
    double rmse_dp = 0.0;
    double rmse_v = 0.0;
    int qp_iterations = 0;
    std::string qp_status;
    double qp_objective = 0.0;
    double slack = 0.0;
    int active_constraints = 0;
    bool scenario_fault = false;
};

struct ViolationCounts {
    int control_bound = 0;    ///< CAV input outside [u_min, u_max]
    int head_to_tail = 0;     ///< e11 < (N-1) s0
    int leader_follower = 0;  ///< e12 < s0
    int rear_end = 0;         ///< any pair with gap < rho v + s0
    int cav_speed = 0;        ///< CAV speed outside [v_min, v_max]
    int hdv_speed = 0;        ///< any HDV speed outside [v_min, v_max]

    int hard() const { return control_bound + head_to_tail + leader_follower; }
};

struct TraceSummary {
    std::optional<double> formation_time;
    std::optional<long> formation_step;
    ViolationCounts violations;
    bool collision = false;
    std::string abort_reason;
    std::optional<double> control_entry_time;  ///< t^c
    std::optional<double> control_exit_time;   ///< t^f, when the CAV left the zone
    std::optional<double> cruise_exit_time;    ///< t^e = t^c + L_c / v1(t^c)
    bool formed_before_exit = false;
    int scenario_faults = 0;
    int max_qp_iterations = 0;
    double mean_abs_u = 0.0;
    double runtime_seconds = 0.0;
};

struct SimulationTrace {
    std::vector<TraceRow> rows;
    TraceSummary summary;
    double tau = 0.0;
    int vehicle_count = 0;
};

/// Accelerations for every vehicle from the step-k states alone. Vehicles are
/// visited in `order` (all indices, any permutation); the result does not
/// depend on it.
std::vector<double> hdv_accelerations(const FleetState& fleet, const ScenarioConfig& config,
                                      std::span<const int> order);

/// Integrate all vehicles one step with the given (unclamped) inputs.
FleetState advance(const FleetState& fleet, std::span<const double> inputs, double tau,
                   const Bounds& bounds);

/// Runs the configured scenario to T_h. A collision stops the run early with
/// summary.collision set; the rows recorded so far are kept.
SimulationTrace run(const ScenarioConfig& config);

}  // namespace platoon::sim
