#include "platoon/sim_engine.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace platoon::sim {

std::vector<VehicleState> InformationSet::as_states() const {
    std::vector<VehicleState> out(positions.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].position = positions[i];
        out[i].speed = speeds[i];
    }
    return out;
}

InformationSet coordinator_snapshot(const FleetState& fleet) {
    InformationSet info;
    info.positions.reserve(fleet.states.size());
    info.speeds.reserve(fleet.states.size());
    for (const auto& s : fleet.states) {
        info.positions.push_back(s.position);
        info.speeds.push_back(s.speed);
    }
    return info;
}

FormationMetrics formation_metrics(std::span<const VehicleState> fleet, double veh_len) {
    if (fleet.size() < 2) throw ValidationError("formation metrics need N >= 2");
    const auto n = fleet.size();
    std::vector<double> gaps(n - 1);
    for (std::size_t i = 1; i < n; ++i) gaps[i - 1] = headway(fleet[i - 1], fleet[i], veh_len);

    auto rms_about_mean = [](const auto& xs) {
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(xs.size()));
    };
    std::vector<double> speeds(n);
    for (std::size_t i = 0; i < n; ++i) speeds[i] = fleet[i].speed;
    return {rms_about_mean(gaps), rms_about_mean(speeds)};
}

FormationDetector::Sample FormationDetector::update(std::span<const VehicleState> fleet,
                                                    double veh_len, long step) {
    Sample s;
    s.metrics = formation_metrics(fleet, veh_len);
    s.within = s.metrics.rmse_dp <= criteria_.eps_dp && s.metrics.rmse_v <= criteria_.eps_v;
    if (s.within) {
        if (run_ == 0) run_start_ = step;
        ++run_;
        if (!formation_step_ && run_ >= criteria_.hold_steps) formation_step_ = run_start_;
    } else {
        run_ = 0;
    }
    s.formed = formed();
    return s;
}

DetectResult detect_formation(std::span<const VehicleState> fleet, const FormationCriteria& criteria,
                              double veh_len) {
    FormationDetector det(criteria);
    FormationDetector::Sample s;
    // A frozen snapshot held for the whole window.
    for (int k = 0; k < criteria.hold_steps; ++k) s = det.update(fleet, veh_len, k);
    return {s.metrics.rmse_dp, s.metrics.rmse_v, s.formed};
}

std::string to_string(Zone z) {
    switch (z) {
        case Zone::Buffer: return "buffer";
        case Zone::Control: return "control";
        case Zone::Exited: return "exited";
    }
    return "?";
}

Zone zone_of(double position, const RoadGeometry& geometry) {
    if (position < geometry.control_entry()) return Zone::Buffer;
    if (position <= geometry.control_exit()) return Zone::Control;
    return Zone::Exited;
}

std::vector<double> hdv_accelerations(const FleetState& fleet, const ScenarioConfig& config,
                                      std::span<const int> order) {
    const auto model = config.model();
    const auto& states = fleet.states;
    std::vector<double> out(states.size(), 0.0);
    for (int i : order) {
        const auto idx = static_cast<std::size_t>(i);
        double u = 0.0;
        if (idx == 0) {
            u = cfm::free_road_accel(states[0].speed, model);
        } else {
            const auto& lead = states[idx - 1];
            const auto& self = states[idx];
            u = cfm::accel({headway(lead, self, config.bounds.veh_len), approach_rate(lead, self),
                            self.speed},
                           model);
        }
        out[idx] = config.bounds.clamp_accel(u);
    }
    return out;
}

FleetState advance(const FleetState& fleet, std::span<const double> inputs, double tau,
                   const Bounds& bounds) {
    FleetState next;
    next.step = fleet.step + 1;
    next.time = static_cast<double>(next.step) * tau;
    next.states.reserve(fleet.states.size());
    for (std::size_t i = 0; i < fleet.states.size(); ++i)
        next.states.push_back(euler_step(fleet.states[i], inputs[i], tau, bounds));
    return next;
}

SimulationTrace run(const ScenarioConfig& config) {
    config.validate();
    const auto wall_start = std::chrono::steady_clock::now();
    const auto& bounds = config.bounds;
    const auto& geo = config.geometry;
    const double tau = config.controller.tau;
    const int N = config.N;
    const long K = config.controller.T_h;

    SimulationTrace trace;
    trace.tau = tau;
    trace.vehicle_count = N;
    trace.rows.reserve(static_cast<std::size_t>(K) + 1);
    auto& summary = trace.summary;

    FleetState fleet{initial_fleet(config), 0, 0.0};
    mpc::Controller controller(config.controller, bounds, N);
    FormationDetector detector(config.criteria);
    std::vector<int> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);

    double abs_u_sum = 0.0;
    long mpc_steps = 0;
    bool was_in_zone = false;

    for (long k = 0; k <= K; ++k) {
        TraceRow row;
        row.step = k;
        row.time = static_cast<double>(k) * tau;
        const auto& cav = fleet.states.front();
        row.zone = zone_of(cav.position, geo);

        if (row.zone == Zone::Control && !summary.control_entry_time) {
            summary.control_entry_time = row.time;
            summary.cruise_exit_time = row.time + geo.control_len / cav.speed;
        }
        if (row.zone == Zone::Exited && was_in_zone && !summary.control_exit_time)
            summary.control_exit_time = row.time;
        was_in_zone = was_in_zone || row.zone == Zone::Control;

        const auto sample = detector.update(fleet.states, bounds.veh_len, k);
        row.rmse_dp = sample.metrics.rmse_dp;
        row.rmse_v = sample.metrics.rmse_v;

        std::vector<double> inputs = hdv_accelerations(fleet, config, order);
        if (row.zone == Zone::Control) {
            const auto info = coordinator_snapshot(fleet);
            const auto step = controller.step(info.as_states());
            inputs[0] = step.u;
            row.mpc_active = true;
            row.qp_iterations = step.diag.iterations;
            row.qp_status = qp::to_string(step.diag.status);
            row.qp_objective = step.diag.objective;
            row.slack = step.diag.slack;
            row.active_constraints = static_cast<int>(step.diag.active_set.size());
            row.scenario_fault = step.diag.scenario_fault;
            if (step.diag.scenario_fault) ++summary.scenario_faults;
            if (step.moves.size() > 0 && (step.moves(0) < bounds.u_min - 1e-9 ||
                                          step.moves(0) > bounds.u_max + 1e-9))
                ++summary.violations.control_bound;
            summary.max_qp_iterations = std::max(summary.max_qp_iterations, step.diag.iterations);
            abs_u_sum += std::abs(step.u);
            ++mpc_steps;
        } else if (config.leader_outside == LeaderMode::Cruise) {
            inputs[0] = 0.0;
        }
        row.u_star = inputs[0];

        // Constraint bookkeeping on the step-k state.
        const auto& s = fleet.states;
        const double e11 = s.front().position - s.back().position - (N - 1) * bounds.veh_len;
        const double e12 = s[0].position - s[1].position - bounds.veh_len;
        if (e11 < (N - 1) * bounds.s0) ++summary.violations.head_to_tail;
        if (e12 < bounds.s0) ++summary.violations.leader_follower;
        bool rear_end_ok = true;
        for (int i = 1; i < N; ++i) {
            const double gap = headway(s[i - 1], s[i], bounds.veh_len);
            row.headways.push_back(gap);
            rear_end_ok = rear_end_ok && gap >= dynamic_spacing(s[i], bounds);
        }
        if (!rear_end_ok) ++summary.violations.rear_end;
        if (s[0].speed < bounds.v_min || s[0].speed > bounds.v_max) ++summary.violations.cav_speed;
        for (int i = 1; i < N; ++i)
            if (s[i].speed < bounds.v_min || s[i].speed > bounds.v_max) {
                ++summary.violations.hdv_speed;
                break;
            }

        row.vehicles = s;
        for (int i = 0; i < N; ++i) row.vehicles[i].accel = bounds.clamp_accel(inputs[i]);
        trace.rows.push_back(std::move(row));

        if (k == K) break;
        fleet = advance(fleet, inputs, tau, bounds);
        for (int i = 1; i < N; ++i) {
            const double gap = fleet.states[i - 1].position - fleet.states[i].position - bounds.veh_len;
            if (!(gap > 0.0)) {
                std::ostringstream os;
                os << "collision between vehicles " << i << " and " << i + 1 << " at t = "
                   << fleet.time << " s (gap " << gap << " m)";
                summary.collision = true;
                summary.abort_reason = os.str();
                break;
            }
        }
        if (summary.collision) {
            TraceRow last;
            last.step = fleet.step;
            last.time = fleet.time;
            last.vehicles = fleet.states;
            last.zone = zone_of(fleet.states.front().position, geo);
            for (int i = 1; i < N; ++i)
                last.headways.push_back(fleet.states[i - 1].position - fleet.states[i].position -
                                        bounds.veh_len);
            trace.rows.push_back(std::move(last));
            break;
        }
    }

    if (auto step = detector.formation_step()) {
        summary.formation_step = *step;
        summary.formation_time = static_cast<double>(*step) * tau;
        summary.formed_before_exit =
            !summary.control_exit_time || *summary.formation_time <= *summary.control_exit_time;
    }
    summary.mean_abs_u = mpc_steps ? abs_u_sum / static_cast<double>(mpc_steps) : 0.0;
    summary.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return trace;
}

}  // namespace platoon::sim
