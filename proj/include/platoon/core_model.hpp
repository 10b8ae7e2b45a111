#pragma once

// Longitudinal vehicle kinematics, roadway geometry and the safety-spacing
// definitions shared by the controller and the simulator.

#include <stdexcept>
#include <string>

namespace platoon {

/// Raised when an input violates a documented invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when simulated vehicles end up out of order or overlapping.
class OrderingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct VehicleState {
    double position = 0.0;  ///< front bumper [m]
    double speed = 0.0;     ///< [m/s]
    double accel = 0.0;     ///< last applied input [m/s^2]

    bool operator==(const VehicleState&) const = default;
};

struct RoadGeometry {
    double buffer_len = 500.0;
    double control_len = 1500.0;

    double total_len() const { return buffer_len + control_len; }
    /// Global coordinate of the control-zone entry.
    double control_entry() const { return buffer_len; }
    double control_exit() const { return buffer_len + control_len; }
    bool in_control_zone(double position) const {
        return position >= control_entry() && position <= control_exit();
    }

    void validate() const;
    bool operator==(const RoadGeometry&) const = default;
};

struct Bounds {
    double v_min = 10.0;
    double v_max = 30.0;
    double u_min = -3.0;
    double u_max = 2.0;
    double rho = 1.5;      ///< safe time headway [s]
    double s0 = 2.0;       ///< standstill distance [m]
    double veh_len = 5.0;  ///< l_c [m]

    double clamp_accel(double u) const;
    void validate() const;
    bool operator==(const Bounds&) const = default;
};

/// Safe following distance rho * v + s0 for a vehicle travelling at `speed`.
double dynamic_spacing(double speed, const Bounds& bounds);
double dynamic_spacing(const VehicleState& state, const Bounds& bounds);

/// Bumper-to-bumper gap p_{i-1} - p_i - l_c. Throws OrderingError when the
/// follower is not strictly behind the leader.
double headway(const VehicleState& leader, const VehicleState& follower, double veh_len);

/// Speed of the predecessor minus speed of the follower.
double approach_rate(const VehicleState& leader, const VehicleState& follower);

/// Rear-end collision avoidance: gap >= rho * v_follower + s0.
bool rear_end_satisfied(const VehicleState& leader, const VehicleState& follower,
                        const Bounds& bounds);

/// Zero-order-hold double-integrator step. The input is clamped to
/// [u_min, u_max] first; the resulting speed is floored at 0. If the vehicle
/// would stop inside the step the position is advanced only to the stop point
/// and the recorded input is the one that brings it to rest.
VehicleState euler_step(const VehicleState& state, double u, double tau, const Bounds& bounds);

}  // namespace platoon
