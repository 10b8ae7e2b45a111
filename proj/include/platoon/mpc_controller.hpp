#pragma once

// Receding-horizon controller for the lead automated vehicle. The CAV state is
// augmented with the head-to-tail gap (CAV to last HDV) and the leader-follower
// gap (CAV to first HDV); HDV speeds enter as a measured disturbance held
// constant over the horizon. Each step compiles a condensed QP over the
// control moves plus one speed slack and applies the first move.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "platoon/core_model.hpp"
#include "platoon/qp_solver.hpp"

namespace platoon::mpc {

inline constexpr int kStateDim = 4;
inline constexpr int kOutputDim = 3;
inline constexpr int kDisturbanceDim = 2;

struct AugmentedState {
    double p1 = 0.0;
    double v1 = 0.0;
    double e11 = 0.0;  ///< head-to-tail gap, CAV to vehicle N
    double e12 = 0.0;  ///< leader-follower gap, CAV to vehicle 2

    Eigen::Vector4d vec() const { return {p1, v1, e11, e12}; }

    /// Builds the state from an ordered fleet (index 0 = CAV). Needs >= 2 vehicles.
    static AugmentedState from_fleet(std::span<const VehicleState> fleet, double veh_len);
};

struct Disturbance {
    double vN = 0.0;  ///< speed of the last HDV
    double v2 = 0.0;  ///< speed of the first HDV

    Eigen::Vector2d vec() const { return {vN, v2}; }
    static Disturbance from_fleet(std::span<const VehicleState> fleet);
};

/// Horizons are in steps of length tau.
struct ControllerParams {
    int T_p = 100;
    int T_c = 20;
    double tau = 0.1;
    double q_v = 0.2;
    double q_e1 = 0.0;
    double q_e2 = 0.0;
    double w_r = 5.0;
    double slack_penalty = 1e5;
    int T_h = 650;
    qp::Settings solver;

    void validate() const;
    bool operator==(const ControllerParams& o) const {
        return T_p == o.T_p && T_c == o.T_c && tau == o.tau && q_v == o.q_v && q_e1 == o.q_e1 &&
               q_e2 == o.q_e2 && w_r == o.w_r && slack_penalty == o.slack_penalty && T_h == o.T_h &&
               solver.feas_tol == o.solver.feas_tol && solver.stat_tol == o.solver.stat_tol &&
               solver.max_iter == o.solver.max_iter;
    }
};

struct SystemMatrices {
    Eigen::Matrix4d A;
    Eigen::Vector4d Bu;
    Eigen::Matrix<double, 4, 2> Bw;
    Eigen::Matrix<double, 3, 4> C;
};

/// Zero-order-hold discretisation of the augmented CAV dynamics.
SystemMatrices build_system_matrices(double tau);

/// Condensed horizon operators. Predicted states and outputs for steps
/// 1..T_p are stacked as
///     X = A_tilde x + Bu_tilde U + Bd_tilde W
///     Y = C_tilde x + Du_tilde U + Dd_tilde W
/// where U holds T_c moves (zero afterwards) and W holds T_p disturbances.
struct PredictionMatrices {
    int T_p = 0;
    int T_c = 0;
    Eigen::MatrixXd A_tilde;   ///< 4 T_p x 4
    Eigen::MatrixXd Bu_tilde;  ///< 4 T_p x T_c
    Eigen::MatrixXd Bd_tilde;  ///< 4 T_p x 2 T_p
    Eigen::MatrixXd C_tilde;   ///< 3 T_p x 4
    Eigen::MatrixXd Du_tilde;  ///< 3 T_p x T_c
    Eigen::MatrixXd Dd_tilde;  ///< 3 T_p x 2 T_p
};

PredictionMatrices build_prediction(const SystemMatrices& sys, int T_p, int T_c);

/// Output reference [v_N, (N-1)(s0 + rho v_N), s0 + rho v_2].
Eigen::Vector3d reference_output(const Disturbance& w, int N, const Bounds& bounds);

/// Row groups of the inequality system, in storage order.
enum class RowGroup { InputUpper, InputLower, HeadToTail, LeaderFollower, SpeedUpper, SpeedLower, SlackSign };
std::string to_string(RowGroup g);

struct RowLabel {
    RowGroup group;
    int step;  ///< move index (input rows) or prediction step 1..T_p; 0 for the slack row
};

/// Condensed QP over z = [u(k) .. u(k+T_c-1), sigma]:
///     min 0.5 z'Hz + f'z + constant   s.t.  A_ineq z <= b_ineq
/// The objective without the slack term equals the tracking/effort cost J.
struct QpProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd f;
    double constant = 0.0;
    Eigen::MatrixXd A_ineq;
    Eigen::VectorXd b_ineq;
    int T_p = 0;
    int T_c = 0;

    int slack_index() const { return T_c; }
    int decision_count() const { return T_c + 1; }
    RowLabel label(int row) const;
};

/// Thrown on inconsistent dimensions or non-finite data.
class ControllerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

QpProblem assemble_qp(const AugmentedState& x, const Disturbance& w, const PredictionMatrices& pred,
                      const ControllerParams& params, const Bounds& bounds, int N);

/// Tracking plus effort cost of a move sequence, evaluated by stepping the
/// augmented dynamics forward (no condensed matrices involved).
double evaluate_cost(const AugmentedState& x, const Disturbance& w, std::span<const double> moves,
                     const ControllerParams& params, const Bounds& bounds, int N);

struct Diagnostics {
    double objective = 0.0;  ///< J at the optimal moves
    double slack = 0.0;
    int iterations = 0;
    qp::Status status = qp::Status::Optimal;
    std::vector<int> active_set;
    double max_violation = 0.0;
    bool scenario_fault = false;
    std::string fault;  ///< violated row when a fault is raised
};

struct StepResult {
    double u = 0.0;
    Eigen::VectorXd moves;  ///< full optimal move sequence
    Diagnostics diag;
};

/// One CAV controller. Keeps the previous solution to warm-start the next QP,
/// so an instance must not be shared between concurrent callers.
class Controller {
public:
    Controller(ControllerParams params, Bounds bounds, int vehicle_count);

    /// Solve at the current fleet snapshot (positions and speeds, CAV first).
    StepResult step(std::span<const VehicleState> fleet);

    /// Solve for an explicit state/disturbance pair.
    StepResult step(const AugmentedState& x, const Disturbance& w);

    void reset_warm_start() { warm_ = {}; }

    const PredictionMatrices& prediction() const { return pred_; }
    const ControllerParams& params() const { return params_; }

private:
    ControllerParams params_;
    Bounds bounds_;
    int n_;
    SystemMatrices sys_;
    PredictionMatrices pred_;
    qp::WarmStart warm_;
};

}  // namespace platoon::mpc
