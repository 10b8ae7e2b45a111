#pragma once

// Trace serialisation.
//
// CSV layout (schema version 1), one row per recorded step:
//   step,time,zone,mpc_active,u_star,rmse_dp,rmse_v,qp_status,qp_iterations,
//   qp_objective,slack,active_constraints,scenario_fault,
//   p_1,v_1,u_1, ..., p_N,v_N,u_N, dp_2, ..., dp_N
// Reals are printed with %.12g.

#include <ostream>
#include <string>

#include "json.hpp"

#include "platoon/scenario.hpp"
#include "platoon/sim_engine.hpp"

namespace platoon::io {

inline constexpr int kTraceSchemaVersion = 1;

std::string trace_csv_header(int vehicle_count);

/// Writes every `downsample`-th row (always including the last one).
void write_trace_csv(std::ostream& out, const sim::SimulationTrace& trace, int downsample = 1);

nlohmann::json trace_json(const sim::SimulationTrace& trace, int downsample = 1);

/// Formation time, violation counts, exit times and final vehicle states.
nlohmann::json summary_json(const sim::SimulationTrace& trace);

/// Flat scalar metrics for scripting.
nlohmann::json metrics_json(const sim::SimulationTrace& trace);

}  // namespace platoon::io
