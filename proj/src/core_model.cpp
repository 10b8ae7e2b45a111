#include "platoon/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace platoon {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace

void RoadGeometry::validate() const {
    require(std::isfinite(buffer_len) && buffer_len > 0, "L_b must be positive");
    require(std::isfinite(control_len) && control_len > 0, "L_c must be positive");
}

double Bounds::clamp_accel(double u) const { return std::clamp(u, u_min, u_max); }

void Bounds::validate() const {
    require(std::isfinite(v_min) && std::isfinite(v_max) && v_min >= 0 && v_min < v_max,
            "speed bounds must satisfy 0 <= v_min < v_max");
    require(std::isfinite(u_min) && std::isfinite(u_max) && u_min < 0 && u_max > 0,
            "control bounds must satisfy u_min < 0 < u_max");
    require(std::isfinite(rho) && rho > 0, "rho must be positive");
    require(std::isfinite(s0) && s0 > 0, "s0 must be positive");
    require(std::isfinite(veh_len) && veh_len > 0, "l_c must be positive");
}

double dynamic_spacing(double speed, const Bounds& bounds) {
    return bounds.rho * speed + bounds.s0;
}

double dynamic_spacing(const VehicleState& state, const Bounds& bounds) {
    return dynamic_spacing(state.speed, bounds);
}

double headway(const VehicleState& leader, const VehicleState& follower, double veh_len) {
    if (!(leader.position > follower.position)) {
        std::ostringstream os;
        os << "vehicle ordering violated: leader at " << leader.position
           << " m is not ahead of follower at " << follower.position << " m";
        throw OrderingError(os.str());
    }
    return leader.position - follower.position - veh_len;
}

double approach_rate(const VehicleState& leader, const VehicleState& follower) {
    return leader.speed - follower.speed;
}

bool rear_end_satisfied(const VehicleState& leader, const VehicleState& follower,
                        const Bounds& bounds) {
    return headway(leader, follower, bounds.veh_len) >= dynamic_spacing(follower, bounds);
}

VehicleState euler_step(const VehicleState& state, double u, double tau, const Bounds& bounds) {
    if (!(tau > 0)) throw ValidationError("time step must be positive");
    double applied = bounds.clamp_accel(u);
    // Floor at standstill: shrink the input so the vehicle stops exactly at
    // the end of the step instead of rolling backwards.
    if (state.speed + applied * tau < 0.0) applied = -state.speed / tau;

    VehicleState next;
    next.position = state.position + state.speed * tau + 0.5 * applied * tau * tau;
    next.speed = std::max(0.0, state.speed + applied * tau);
    next.accel = applied;
    return next;
}

}  // namespace platoon
