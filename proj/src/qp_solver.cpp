#include "platoon/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace platoon::qp {

namespace {

using Eigen::LLT;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kElasticPenalty = 1e6;

MatrixXd rows_of(const MatrixXd& A, const std::vector<int>& idx) {
    MatrixXd out(static_cast<Eigen::Index>(idx.size()), A.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = A.row(idx[k]);
    return out;
}

VectorXd entries_of(const VectorXd& b, const std::vector<int>& idx) {
    VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = b(idx[k]);
    return out;
}

double max_violation(const MatrixXd& A, const VectorXd& b, const VectorXd& z) {
    if (A.rows() == 0) return 0.0;
    return std::max(0.0, (A * z - b).maxCoeff());
}

// Range-space solver for equality-constrained subproblems on a working set.
class WorkingSetSystem {
public:
    WorkingSetSystem(const LLT<MatrixXd>& h_factor, const MatrixXd& A) : h_(h_factor), a_(A) {}

    // Factor S = A_W H^-1 A_W^T. Returns false if the rows are dependent.
    bool factor(const std::vector<int>& working) {
        aw_ = rows_of(a_, working);
        if (aw_.rows() == 0) return true;
        hinv_awt_ = h_.solve(aw_.transpose());
        s_.compute(aw_ * hinv_awt_);
        if (s_.info() != Eigen::Success) return false;
        // Reject near-singular S; LLT alone accepts tiny pivots.
        const double diag_min = s_.matrixLLT().diagonal().minCoeff();
        const double diag_max = s_.matrixLLT().diagonal().maxCoeff();
        return diag_min > 1e-10 * diag_max;
    }

    // Step p and multipliers lambda solving
    //   H p + g + A_W^T lambda = 0,  A_W p = 0.
    // Returns the size of the unconstrained step H^-1 g.
    double step(const VectorXd& g, VectorXd& p, VectorXd& lambda) const {
        const VectorXd hinv_g = h_.solve(g);
        const double free_norm = hinv_g.lpNorm<Eigen::Infinity>();
        if (aw_.rows() == 0) {
            lambda.resize(0);
            p = -hinv_g;
            return free_norm;
        }
        lambda = -s_.solve(aw_ * hinv_g);
        p = -hinv_g - hinv_awt_ * lambda;
        if (aw_.rows() == aw_.cols()) p.setZero();
        return free_norm;
    }

    // Minimiser of 0.5 z'Hz + f'z subject to A_W z = b_W.
    VectorXd equality_minimiser(const VectorXd& f, const VectorXd& b_w) const {
        const VectorXd hinv_f = h_.solve(f);
        if (aw_.rows() == 0) return -hinv_f;
        const VectorXd lambda = -s_.solve(b_w + aw_ * hinv_f);
        return -hinv_f - hinv_awt_ * lambda;
    }

private:
    const LLT<MatrixXd>& h_;
    const MatrixXd& a_;
    MatrixXd aw_;
    MatrixXd hinv_awt_;
    LLT<MatrixXd> s_;
};

struct PrimalResult {
    Status status = Status::MaxIter;
    int iterations = 0;
    VectorXd lambda_w;
};

// Primal active-set iterations from a feasible z with working set W whose
// rows are active at z and linearly independent.
PrimalResult run_primal(const MatrixXd& H, const LLT<MatrixXd>& h_factor, const VectorXd& f,
                        const MatrixXd& A, const VectorXd& b, VectorXd& z, std::vector<int>& W,
                        int max_iter, double stat_tol, std::vector<double>* history) {
    const auto m = A.rows();
    WorkingSetSystem sys(h_factor, A);
    std::vector<char> in_w(static_cast<std::size_t>(m), 0);
    for (int i : W) in_w[static_cast<std::size_t>(i)] = 1;

    PrimalResult res;
    VectorXd p, lambda;
    bool refactor = true;
    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        if (refactor) {
            sys.factor(W);
            refactor = false;
        }
        const VectorXd g = H * z + f;
        const double free_norm = sys.step(g, p, lambda);

        const double p_norm = p.lpNorm<Eigen::Infinity>();
        if (p_norm <= 1e-12 * std::max({1.0, z.lpNorm<Eigen::Infinity>(), free_norm})) {
            // Stationary on the working set; check multiplier signs.
            int drop = -1;
            double most_negative = -stat_tol;
            for (Eigen::Index k = 0; k < lambda.size(); ++k) {
                if (lambda(k) < most_negative) {
                    most_negative = lambda(k);
                    drop = static_cast<int>(k);
                }
            }
            if (drop < 0) {
                res.status = Status::Optimal;
                res.lambda_w = lambda;
                return res;
            }
            in_w[static_cast<std::size_t>(W[static_cast<std::size_t>(drop)])] = 0;
            W.erase(W.begin() + drop);
            refactor = true;
            continue;
        }

        double alpha = 1.0;
        int blocking = -1;
        const VectorXd ap = A * p;
        const VectorXd slack = b - A * z;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (in_w[static_cast<std::size_t>(i)]) continue;
            if (ap(i) <= 1e-14 * A.row(i).lpNorm<Eigen::Infinity>() * p_norm) continue;
            const double ratio = std::max(0.0, slack(i)) / ap(i);
            if (ratio < alpha) {
                alpha = ratio;
                blocking = static_cast<int>(i);
            }
        }
        z += alpha * p;
        if (history) history->push_back(objective(H, f, z));
        if (blocking >= 0) {
            W.insert(std::upper_bound(W.begin(), W.end(), blocking), blocking);
            in_w[static_cast<std::size_t>(blocking)] = 1;
            refactor = true;
        }
    }
    sys.factor(W);
    sys.step(H * z + f, p, lambda);
    res.lambda_w = lambda;
    return res;
}

void validate(const MatrixXd& H, const VectorXd& f, const MatrixXd& A, const VectorXd& b) {
    const auto n = H.rows();
    std::ostringstream os;
    if (n == 0 || H.cols() != n) os << "H must be square and non-empty; ";
    if (f.size() != n) os << "f has " << f.size() << " entries, expected " << n << "; ";
    if (A.rows() > 0 && A.cols() != n) os << "A has " << A.cols() << " columns, expected " << n << "; ";
    if (b.size() != A.rows()) os << "b has " << b.size() << " entries, expected " << A.rows() << "; ";
    if (!os.str().empty()) throw ProblemError("QP dimension mismatch: " + os.str());
    if (!H.allFinite() || !f.allFinite() || !A.allFinite() || !b.allFinite())
        throw ProblemError("QP data contains non-finite entries");
    const double asym = (H - H.transpose()).lpNorm<Eigen::Infinity>();
    if (asym > 1e-12 * std::max(1.0, H.lpNorm<Eigen::Infinity>()))
        throw ProblemError("H is not symmetric");
}

// Find a point satisfying A z <= b by minimising the largest violation t with
// a proximal term: min M t + 1/2 (|z - z0|^2 + t^2), A z - t <= b, t >= 0.
std::pair<VectorXd, int> phase_one(const MatrixXd& A, const VectorXd& b, const VectorXd& z0,
                                   int max_iter) {
    const auto n = A.cols();
    const auto m = A.rows();
    MatrixXd H1 = MatrixXd::Identity(n + 1, n + 1);
    VectorXd f1(n + 1);
    f1.head(n) = -z0;
    f1(n) = kElasticPenalty;
    MatrixXd A1 = MatrixXd::Zero(m + 1, n + 1);
    A1.topLeftCorner(m, n) = A;
    A1.col(n).head(m).setConstant(-1.0);
    A1(m, n) = -1.0;
    VectorXd b1 = VectorXd::Zero(m + 1);
    b1.head(m) = b;

    VectorXd y(n + 1);
    y.head(n) = z0;
    y(n) = max_violation(A, b, z0);
    LLT<MatrixXd> factor(H1);
    std::vector<int> W;
    const auto res = run_primal(H1, factor, f1, A1, b1, y, W, max_iter, 1e-10, nullptr);
    return {y.head(n), res.iterations};
}

}  // namespace

std::string to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::MaxIter: return "max_iter";
        case Status::Infeasible: return "infeasible";
    }
    return "unknown";
}

double objective(const MatrixXd& H, const VectorXd& f, const VectorXd& z) {
    return 0.5 * z.dot(H * z) + f.dot(z);
}

Kkt kkt_residuals(const MatrixXd& H, const VectorXd& f, const MatrixXd& A, const VectorXd& b,
                  const VectorXd& z, const VectorXd& multipliers) {
    Kkt k;
    VectorXd grad = H * z + f;
    if (A.rows() > 0) grad += A.transpose() * multipliers;
    k.stationarity = grad.lpNorm<Eigen::Infinity>();
    k.primal = max_violation(A, b, z);
    if (multipliers.size() > 0) {
        k.dual = std::max(0.0, -multipliers.minCoeff());
        k.complementarity = (multipliers.array() * (b - A * z).array()).abs().maxCoeff();
    }
    return k;
}

Solution solve(const MatrixXd& H, const VectorXd& f, const MatrixXd& A, const VectorXd& b,
               const Settings& settings, const WarmStart* warm) {
    validate(H, f, A, b);
    const auto n = H.rows();
    const auto m = A.rows();
    LLT<MatrixXd> h_factor(H);
    if (h_factor.info() != Eigen::Success) throw ProblemError("H is not positive definite");

    Solution sol;
    sol.multipliers = VectorXd::Zero(m);
    std::vector<int> W;
    std::optional<VectorXd> start;
    WorkingSetSystem sys(h_factor, A);

    if (warm && !warm->active_set.empty()) {
        std::vector<int> guess = warm->active_set;
        std::sort(guess.begin(), guess.end());
        guess.erase(std::unique(guess.begin(), guess.end()), guess.end());
        const bool in_range = std::all_of(guess.begin(), guess.end(),
                                          [&](int i) { return i >= 0 && i < m; });
        if (in_range && static_cast<Eigen::Index>(guess.size()) <= n && sys.factor(guess)) {
            VectorXd z = sys.equality_minimiser(f, entries_of(b, guess));
            if (max_violation(A, b, z) <= settings.feas_tol) {
                start = z;
                W = guess;
            }
        }
    }
    VectorXd fallback = (warm && warm->z.size() == n) ? warm->z : VectorXd(h_factor.solve(-f));
    if (!start && max_violation(A, b, fallback) <= settings.feas_tol) start = fallback;
    if (!start) {
        const VectorXd unconstrained = h_factor.solve(-f);
        if (max_violation(A, b, unconstrained) <= settings.feas_tol) start = unconstrained;
    }
    if (!start) {
        auto [z, iters] = phase_one(A, b, fallback, 10 * static_cast<int>(n + m));
        sol.iterations += iters;
        if (max_violation(A, b, z) > settings.feas_tol) {
            sol.z = z;
            sol.objective = objective(H, f, z);
            sol.status = Status::Infeasible;
            sol.max_violation = max_violation(A, b, z);
            sol.kkt = kkt_residuals(H, f, A, b, z, sol.multipliers);
            return sol;
        }
        start = z;
    }

    VectorXd z = *start;
    const auto res = run_primal(H, h_factor, f, A, b, z, W, settings.max_iter, settings.stat_tol,
                                &sol.objective_history);
    sol.iterations += res.iterations;
    sol.status = res.status;
    for (std::size_t k = 0; k < W.size(); ++k)
        sol.multipliers(W[k]) = res.lambda_w(static_cast<Eigen::Index>(k));
    sol.z = z;
    sol.active_set = W;
    sol.objective = objective(H, f, z);
    sol.max_violation = max_violation(A, b, z);
    sol.kkt = kkt_residuals(H, f, A, b, z, sol.multipliers);
    if (sol.status == Status::Optimal && sol.max_violation > settings.feas_tol)
        sol.status = Status::MaxIter;
    return sol;
}

}  // namespace platoon::qp
