#include "platoon/trace_io.hpp"

#include <cstdio>
#include <sstream>

namespace platoon::io {

using nlohmann::json;

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

template <class T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

bool keep_row(std::size_t i, std::size_t count, int downsample) {
    return downsample <= 1 || i % static_cast<std::size_t>(downsample) == 0 || i + 1 == count;
}

}  // namespace

std::string trace_csv_header(int n) {
    std::ostringstream os;
    os << "step,time,zone,mpc_active,u_star,rmse_dp,rmse_v,qp_status,qp_iterations,"
          "qp_objective,slack,active_constraints,scenario_fault";
    for (int i = 1; i <= n; ++i) os << ",p_" << i << ",v_" << i << ",u_" << i;
    for (int i = 2; i <= n; ++i) os << ",dp_" << i;
    return os.str();
}

void write_trace_csv(std::ostream& out, const sim::SimulationTrace& trace, int downsample) {
    out << trace_csv_header(trace.vehicle_count) << '\n';
    const auto count = trace.rows.size();
    for (std::size_t i = 0; i < count; ++i) {
        if (!keep_row(i, count, downsample)) continue;
        const auto& r = trace.rows[i];
        out << r.step << ',' << fmt(r.time) << ',' << sim::to_string(r.zone) << ','
            << (r.mpc_active ? 1 : 0) << ',' << fmt(r.u_star) << ',' << fmt(r.rmse_dp) << ','
            << fmt(r.rmse_v) << ',' << r.qp_status << ',' << r.qp_iterations << ','
            << fmt(r.qp_objective) << ',' << fmt(r.slack) << ',' << r.active_constraints << ','
            << (r.scenario_fault ? 1 : 0);
        for (const auto& v : r.vehicles)
            out << ',' << fmt(v.position) << ',' << fmt(v.speed) << ',' << fmt(v.accel);
        for (double gap : r.headways) out << ',' << fmt(gap);
        out << '\n';
    }
}

json trace_json(const sim::SimulationTrace& trace, int downsample) {
    json rows = json::array();
    const auto count = trace.rows.size();
    for (std::size_t i = 0; i < count; ++i) {
        if (!keep_row(i, count, downsample)) continue;
        const auto& r = trace.rows[i];
        json vehicles = json::array();
        for (const auto& v : r.vehicles) vehicles.push_back({{"p", v.position}, {"v", v.speed}, {"u", v.accel}});
        rows.push_back({{"step", r.step},
                        {"time", r.time},
                        {"zone", sim::to_string(r.zone)},
                        {"mpc_active", r.mpc_active},
                        {"u_star", r.u_star},
                        {"rmse_dp", r.rmse_dp},
                        {"rmse_v", r.rmse_v},
                        {"qp_status", r.qp_status},
                        {"qp_iterations", r.qp_iterations},
                        {"qp_objective", r.qp_objective},
                        {"slack", r.slack},
                        {"active_constraints", r.active_constraints},
                        {"scenario_fault", r.scenario_fault},
                        {"vehicles", vehicles},
                        {"headways", r.headways}});
    }
    return {{"schema_version", kTraceSchemaVersion},
            {"tau", trace.tau},
            {"N", trace.vehicle_count},
            {"rows", rows}};
}

json summary_json(const sim::SimulationTrace& trace) {
    const auto& s = trace.summary;
    json final_states = json::array();
    if (!trace.rows.empty())
        for (const auto& v : trace.rows.back().vehicles)
            final_states.push_back({{"p", v.position}, {"v", v.speed}, {"u", v.accel}});
    return {{"formed", s.formation_time.has_value()},
            {"formation_time", optional_json(s.formation_time)},
            {"formation_step", optional_json(s.formation_step)},
            {"formed_before_exit", s.formed_before_exit},
            {"control_entry_time", optional_json(s.control_entry_time)},
            {"control_exit_time", optional_json(s.control_exit_time)},
            {"cruise_exit_time", optional_json(s.cruise_exit_time)},
            {"collision", s.collision},
            {"abort_reason", s.abort_reason},
            {"violations",
             {{"control_bound", s.violations.control_bound},
              {"head_to_tail", s.violations.head_to_tail},
              {"leader_follower", s.violations.leader_follower},
              {"rear_end", s.violations.rear_end},
              {"cav_speed", s.violations.cav_speed},
              {"hdv_speed", s.violations.hdv_speed},
              {"hard_total", s.violations.hard()}}},
            {"scenario_faults", s.scenario_faults},
            {"rows", trace.rows.size()},
            {"final_states", final_states}};
}

json metrics_json(const sim::SimulationTrace& trace) {
    const auto& s = trace.summary;
    const auto* last = trace.rows.empty() ? nullptr : &trace.rows.back();
    return {{"formation_time", optional_json(s.formation_time)},
            {"final_rmse_dp", last ? last->rmse_dp : 0.0},
            {"final_rmse_v", last ? last->rmse_v : 0.0},
            {"mean_abs_u", s.mean_abs_u},
            {"max_qp_iterations", s.max_qp_iterations},
            {"hard_violations", s.violations.hard()},
            {"rear_end_violations", s.violations.rear_end},
            {"runtime_seconds", s.runtime_seconds}};
}

}  // namespace platoon::io
