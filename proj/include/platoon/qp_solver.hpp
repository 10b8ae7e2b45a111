#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace platoon::qp {

enum class Status { Optimal, MaxIter, Infeasible };
std::string to_string(Status s);

struct Settings {
    double feas_tol = 1e-8;
    double stat_tol = 1e-8;
    int max_iter = 200;
};

/// First-order optimality measures at a point.
struct Kkt {
    double stationarity = 0.0;     ///< ||H z + f + A^T lambda||_inf
    double primal = 0.0;           ///< max(0, max(A z - b))
    double dual = 0.0;             ///< max(0, -min lambda)
    double complementarity = 0.0;  ///< max |lambda_i (b_i - a_i z)|
};

struct Solution {
    Eigen::VectorXd z;
    Eigen::VectorXd multipliers;  ///< one per inequality row, zero when inactive
    std::vector<int> active_set;  ///< working set at termination, ascending
    double objective = 0.0;       ///< 0.5 z'Hz + f'z
    Status status = Status::Infeasible;
    int iterations = 0;
    double max_violation = 0.0;
    Kkt kkt;
    std::vector<double> objective_history;  ///< objective after each primal step
};

/// Hint from a previous solve of a nearby problem.
struct WarmStart {
    Eigen::VectorXd z;
    std::vector<int> active_set;
};

/// Thrown on malformed problem data (dimension mismatch, non-finite entries,
/// H not symmetric positive definite).
class ProblemError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double objective(const Eigen::MatrixXd& H, const Eigen::VectorXd& f, const Eigen::VectorXd& z);

Kkt kkt_residuals(const Eigen::MatrixXd& H, const Eigen::VectorXd& f, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& b, const Eigen::VectorXd& z,
                  const Eigen::VectorXd& multipliers);

/// Primal active-set method for
///     min 0.5 z'Hz + f'z   s.t.  A z <= b
/// with H symmetric positive definite. Equality-constrained subproblems are
/// solved in range-space form with a Cholesky factor of H. A feasible start is
/// taken from the warm start, the unconstrained minimiser, or an elastic
/// phase-one problem, in that order.
Solution solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& f, const Eigen::MatrixXd& A,
               const Eigen::VectorXd& b, const Settings& settings = {},
               const WarmStart* warm = nullptr);

}  // namespace platoon::qp
