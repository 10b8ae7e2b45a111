#include "platoon/mpc_controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace platoon::mpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

AugmentedState AugmentedState::from_fleet(std::span<const VehicleState> fleet, double veh_len) {
    if (fleet.size() < 2) throw ControllerError("controller needs at least one trailing HDV (N >= 2)");
    const auto n = static_cast<double>(fleet.size());
    const auto& cav = fleet.front();
    return {cav.position, cav.speed, cav.position - fleet.back().position - (n - 1.0) * veh_len,
            cav.position - fleet[1].position - veh_len};
}

Disturbance Disturbance::from_fleet(std::span<const VehicleState> fleet) {
    if (fleet.size() < 2) throw ControllerError("controller needs at least one trailing HDV (N >= 2)");
    return {fleet.back().speed, fleet[1].speed};
}

void ControllerParams::validate() const {
    auto fail = [](const std::string& what) { throw ValidationError(what); };
    if (T_p < 1) fail("T_p must be at least one step");
    if (T_c < 1) fail("T_c must be at least one step");
    if (T_c > T_p) fail("T_c must not exceed T_p");
    if (!(tau > 0) || !std::isfinite(tau)) fail("tau must be positive");
    if (!(q_v >= 0) || !(q_e1 >= 0) || !(q_e2 >= 0)) fail("output weights Q must be non-negative");
    if (!(w_r > 0)) fail("input weight w_r must be positive");
    if (!(slack_penalty > 0)) fail("slack_penalty must be positive");
    if (T_h < 1) fail("T_h must be at least one step");
    if (!(solver.feas_tol > 0) || !(solver.stat_tol > 0) || solver.max_iter < 1)
        fail("solver tolerances must be positive");
}

SystemMatrices build_system_matrices(double tau) {
    if (!(tau > 0)) throw ValidationError("tau must be positive");
    SystemMatrices s;
    // clang-format off
    s.A << 1, tau, 0, 0,
           0, 1,   0, 0,
           0, tau, 1, 0,
           0, tau, 0, 1;
    s.Bu << 0.5 * tau * tau, tau, 0.5 * tau * tau, 0.5 * tau * tau;
    s.Bw << 0,    0,
            0,    0,
            -tau, 0,
            0,    -tau;
    s.C << 0, 1, 0, 0,
           0, 0, 1, 0,
           0, 0, 0, 1;
    // clang-format on
    return s;
}

PredictionMatrices build_prediction(const SystemMatrices& sys, int T_p, int T_c) {
    if (T_p < 1 || T_c < 1) throw ValidationError("horizons must be at least one step");
    if (T_c > T_p) throw ValidationError("T_c must not exceed T_p");

    // powers[n] = A^n, n = 0..T_p
    std::vector<Eigen::Matrix4d> powers(static_cast<std::size_t>(T_p) + 1);
    powers[0].setIdentity();
    for (int n = 1; n <= T_p; ++n) powers[n] = sys.A * powers[n - 1];

    PredictionMatrices p;
    p.T_p = T_p;
    p.T_c = T_c;
    p.A_tilde.setZero(kStateDim * T_p, kStateDim);
    p.Bu_tilde.setZero(kStateDim * T_p, T_c);
    p.Bd_tilde.setZero(kStateDim * T_p, kDisturbanceDim * T_p);
    for (int n = 1; n <= T_p; ++n) {
        const int r = kStateDim * (n - 1);
        p.A_tilde.middleRows<kStateDim>(r) = powers[n];
        for (int m = 1; m <= std::min(n, T_c); ++m)
            p.Bu_tilde.block<kStateDim, 1>(r, m - 1) = powers[n - m] * sys.Bu;
        for (int j = 1; j <= n; ++j)
            p.Bd_tilde.block<kStateDim, kDisturbanceDim>(r, kDisturbanceDim * (j - 1)) =
                powers[n - j] * sys.Bw;
    }

    MatrixXd c_bar = MatrixXd::Zero(kOutputDim * T_p, kStateDim * T_p);
    for (int n = 0; n < T_p; ++n)
        c_bar.block<kOutputDim, kStateDim>(kOutputDim * n, kStateDim * n) = sys.C;
    p.C_tilde = c_bar * p.A_tilde;
    p.Du_tilde = c_bar * p.Bu_tilde;
    p.Dd_tilde = c_bar * p.Bd_tilde;
    return p;
}

Eigen::Vector3d reference_output(const Disturbance& w, int N, const Bounds& bounds) {
    const double followers = static_cast<double>(N - 1);
    return {w.vN, followers * (bounds.s0 + bounds.rho * w.vN), bounds.s0 + bounds.rho * w.v2};
}

std::string to_string(RowGroup g) {
    switch (g) {
        case RowGroup::InputUpper: return "u <= u_max";
        case RowGroup::InputLower: return "u >= u_min";
        case RowGroup::HeadToTail: return "e11 >= (N-1) s0";
        case RowGroup::LeaderFollower: return "e12 >= s0";
        case RowGroup::SpeedUpper: return "v <= v_max + slack";
        case RowGroup::SpeedLower: return "v >= v_min - slack";
        case RowGroup::SlackSign: return "slack >= 0";
    }
    return "?";
}

RowLabel QpProblem::label(int row) const {
    const int groups[] = {T_c, T_c, T_p, T_p, T_p, T_p, 1};
    int offset = 0;
    for (int g = 0; g < 7; ++g) {
        if (row < offset + groups[g]) {
            const int idx = row - offset;
            const int step = g == 6 ? 0 : (g < 2 ? idx : idx + 1);
            return {static_cast<RowGroup>(g), step};
        }
        offset += groups[g];
    }
    throw ControllerError("row index out of range");
}

QpProblem assemble_qp(const AugmentedState& x, const Disturbance& w, const PredictionMatrices& pred,
                      const ControllerParams& params, const Bounds& bounds, int N) {
    const int T_p = pred.T_p;
    const int T_c = pred.T_c;
    if (N < 2) throw ControllerError("controller needs N >= 2");
    if (T_p != params.T_p || T_c != params.T_c)
        throw ControllerError("prediction matrices were built for different horizons");
    if (pred.Du_tilde.rows() != kOutputDim * T_p || pred.Du_tilde.cols() != T_c ||
        pred.C_tilde.rows() != kOutputDim * T_p || pred.Dd_tilde.cols() != kDisturbanceDim * T_p)
        throw ControllerError("prediction matrix dimensions are inconsistent");
    const Eigen::Vector4d xv = x.vec();
    const Eigen::Vector2d wv = w.vec();
    if (!xv.allFinite() || !wv.allFinite()) throw ControllerError("non-finite state or disturbance");

    const VectorXd W = wv.replicate(T_p, 1);
    const VectorXd free_y = pred.C_tilde * xv + pred.Dd_tilde * W;
    const Eigen::Vector3d yr = reference_output(w, N, bounds);
    const VectorXd residual = free_y - yr.replicate(T_p, 1);
    const Eigen::Vector3d q(params.q_v, params.q_e1, params.q_e2);
    const VectorXd q_bar = q.replicate(T_p, 1);

    QpProblem qp;
    qp.T_p = T_p;
    qp.T_c = T_c;
    const int n_dec = T_c + 1;
    const MatrixXd& Du = pred.Du_tilde;

    MatrixXd H = MatrixXd::Zero(n_dec, n_dec);
    H.topLeftCorner(T_c, T_c) = Du.transpose() * q_bar.asDiagonal() * Du;
    H.topLeftCorner(T_c, T_c).diagonal().array() += params.w_r;
    H(T_c, T_c) = 2.0 * params.slack_penalty;
    qp.H = 0.5 * (H + H.transpose());

    qp.f = VectorXd::Zero(n_dec);
    qp.f.head(T_c) = Du.transpose() * (q_bar.asDiagonal() * residual);
    qp.constant = 0.5 * residual.dot(q_bar.asDiagonal() * residual);

    const int rows = 2 * T_c + 4 * T_p + 1;
    qp.A_ineq = MatrixXd::Zero(rows, n_dec);
    qp.b_ineq = VectorXd::Zero(rows);
    int r = 0;
    for (int m = 0; m < T_c; ++m, ++r) {
        qp.A_ineq(r, m) = 1.0;
        qp.b_ineq(r) = bounds.u_max;
    }
    for (int m = 0; m < T_c; ++m, ++r) {
        qp.A_ineq(r, m) = -1.0;
        qp.b_ineq(r) = -bounds.u_min;
    }
    const double tail_floor = static_cast<double>(N - 1) * bounds.s0;
    for (int n = 0; n < T_p; ++n, ++r) {
        const int y = kOutputDim * n + 1;
        qp.A_ineq.row(r).head(T_c) = -Du.row(y);
        qp.b_ineq(r) = free_y(y) - tail_floor;
    }
    for (int n = 0; n < T_p; ++n, ++r) {
        const int y = kOutputDim * n + 2;
        qp.A_ineq.row(r).head(T_c) = -Du.row(y);
        qp.b_ineq(r) = free_y(y) - bounds.s0;
    }
    for (int n = 0; n < T_p; ++n, ++r) {
        const int y = kOutputDim * n;
        qp.A_ineq.row(r).head(T_c) = Du.row(y);
        qp.A_ineq(r, T_c) = -1.0;
        qp.b_ineq(r) = bounds.v_max - free_y(y);
    }
    for (int n = 0; n < T_p; ++n, ++r) {
        const int y = kOutputDim * n;
        qp.A_ineq.row(r).head(T_c) = -Du.row(y);
        qp.A_ineq(r, T_c) = -1.0;
        qp.b_ineq(r) = free_y(y) - bounds.v_min;
    }
    qp.A_ineq(r, T_c) = -1.0;
    qp.b_ineq(r) = 0.0;

    if (!qp.H.allFinite() || !qp.f.allFinite() || !qp.A_ineq.allFinite() || !qp.b_ineq.allFinite())
        throw ControllerError("assembled QP contains non-finite entries");
    return qp;
}

double evaluate_cost(const AugmentedState& x0, const Disturbance& w, std::span<const double> moves,
                     const ControllerParams& params, const Bounds& bounds, int N) {
    const double tau = params.tau;
    const Eigen::Vector3d yr = reference_output(w, N, bounds);
    double p = x0.p1, v = x0.v1, e11 = x0.e11, e12 = x0.e12;
    double cost = 0.0;
    for (int n = 0; n < params.T_p; ++n) {
        const double u = static_cast<std::size_t>(n) < moves.size() && n < params.T_c ? moves[n] : 0.0;
        const double half = 0.5 * u * tau * tau;
        p += v * tau + half;
        e11 += (v - w.vN) * tau + half;
        e12 += (v - w.v2) * tau + half;
        v += u * tau;
        const double dv = v - yr(0), d1 = e11 - yr(1), d2 = e12 - yr(2);
        cost += 0.5 * (params.q_v * dv * dv + params.q_e1 * d1 * d1 + params.q_e2 * d2 * d2);
    }
    for (int m = 0; m < params.T_c && static_cast<std::size_t>(m) < moves.size(); ++m)
        cost += 0.5 * params.w_r * moves[m] * moves[m];
    return cost;
}

Controller::Controller(ControllerParams params, Bounds bounds, int vehicle_count)
    : params_(params), bounds_(bounds), n_(vehicle_count) {
    params_.validate();
    bounds_.validate();
    if (n_ < 2) throw ControllerError("controller needs N >= 2");
    sys_ = build_system_matrices(params_.tau);
    pred_ = build_prediction(sys_, params_.T_p, params_.T_c);
}

StepResult Controller::step(std::span<const VehicleState> fleet) {
    if (static_cast<int>(fleet.size()) != n_) {
        std::ostringstream os;
        os << "controller configured for N = " << n_ << " vehicles, snapshot has " << fleet.size();
        throw ControllerError(os.str());
    }
    return step(AugmentedState::from_fleet(fleet, bounds_.veh_len), Disturbance::from_fleet(fleet));
}

StepResult Controller::step(const AugmentedState& x, const Disturbance& w) {
    const QpProblem qp = assemble_qp(x, w, pred_, params_, bounds_, n_);
    const qp::Solution sol =
        qp::solve(qp.H, qp.f, qp.A_ineq, qp.b_ineq, params_.solver, warm_.z.size() ? &warm_ : nullptr);

    StepResult out;
    out.moves = sol.z.head(params_.T_c);
    out.diag.iterations = sol.iterations;
    out.diag.status = sol.status;
    out.diag.active_set = sol.active_set;
    out.diag.max_violation = sol.max_violation;
    out.diag.slack = sol.z(qp.slack_index());
    out.diag.objective = sol.objective + qp.constant -
                         params_.slack_penalty * out.diag.slack * out.diag.slack;

    if (sol.status == qp::Status::Infeasible) {
        // Safety rows cannot be met with admissible inputs: brake as hard as
        // allowed and report the most violated row.
        Eigen::Index worst = 0;
        (qp.A_ineq * sol.z - qp.b_ineq).maxCoeff(&worst);
        const RowLabel lbl = qp.label(static_cast<int>(worst));
        std::ostringstream os;
        os << to_string(lbl.group) << " at step " << lbl.step << " violated by " << sol.max_violation;
        out.diag.scenario_fault = true;
        out.diag.fault = os.str();
        out.u = bounds_.u_min;
        warm_ = {};
        return out;
    }

    out.u = bounds_.clamp_accel(sol.z(0));
    warm_.z = VectorXd::Zero(sol.z.size());
    warm_.z.head(params_.T_c - 1) = sol.z.segment(1, params_.T_c - 1);
    warm_.z(qp.slack_index()) = out.diag.slack;
    warm_.active_set = sol.active_set;
    return out;
}

}  // namespace platoon::mpc
