#include "trafnet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace trafnet {

namespace {

enum class Status { Basic, AtLower, AtUpper };

constexpr double kPivotTolerance = 1e-12;
constexpr int kMaxIterations = 100000;

}  // namespace

LpSolution solve_bounded_lp(const BoundedLp& lp, double tol) {
    const Eigen::Index m = lp.A.rows();
    const Eigen::Index n = lp.A.cols();
    if (lp.b.size() != m || lp.c.size() != n || lp.upper.size() != n) {
        throw std::invalid_argument("bounded LP dimensions do not match");
    }
    if (m > 0 && lp.b.minCoeff() < 0.0) throw std::invalid_argument("bounded LP needs b >= 0");
    if (n > 0 && lp.upper.minCoeff() < 0.0) throw std::invalid_argument("bounded LP needs upper bounds >= 0");

    const Eigen::Index total = n + m;
    Matrix T(m, total);  // B^{-1} [A I]
    T << lp.A, Matrix::Identity(m, m);
    Vector cost = Vector::Zero(total);
    cost.head(n) = lp.c;
    Vector upper = Vector::Constant(total, kInfinity);
    upper.head(n) = lp.upper;
    Vector x = Vector::Zero(total);
    x.tail(m) = lp.b;

    std::vector<Status> status(static_cast<std::size_t>(total), Status::AtLower);
    std::vector<Eigen::Index> basic(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        basic[static_cast<std::size_t>(i)] = n + i;
        status[static_cast<std::size_t>(n + i)] = Status::Basic;
    }

    auto reduced_costs = [&]() {
        Vector cb(m);
        for (Eigen::Index i = 0; i < m; ++i) cb[i] = cost[basic[static_cast<std::size_t>(i)]];
        Vector d = cost - T.transpose() * cb;
        for (Eigen::Index i = 0; i < m; ++i) d[basic[static_cast<std::size_t>(i)]] = 0.0;
        return d;
    };

    LpSolution sol;
    for (;;) {
        if (++sol.iterations > kMaxIterations) throw std::runtime_error("simplex iteration limit reached");
        const Vector d = reduced_costs();

        // Bland: lowest-index improving variable enters.
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < total; ++j) {
            const Status s = status[static_cast<std::size_t>(j)];
            if (s == Status::AtLower && d[j] > tol && upper[j] > 0.0) {
                enter = j;
                break;
            }
            if (s == Status::AtUpper && d[j] < -tol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;

        const double dir = status[static_cast<std::size_t>(enter)] == Status::AtLower ? 1.0 : -1.0;
        double step = upper[enter];  // bound flip
        Eigen::Index leave_row = -1;
        Eigen::Index leave_var = enter;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double rate = -dir * T(i, enter);
            const Eigen::Index b = basic[static_cast<std::size_t>(i)];
            double limit = kInfinity;
            if (rate < -kPivotTolerance) {
                limit = std::max(x[b], 0.0) / -rate;
            } else if (rate > kPivotTolerance && std::isfinite(upper[b])) {
                limit = std::max(upper[b] - x[b], 0.0) / rate;
            } else {
                continue;
            }
            if (limit < step || (limit == step && b < leave_var)) {
                step = limit;
                leave_row = i;
                leave_var = b;
            }
        }
        if (!std::isfinite(step)) throw std::runtime_error("linear program is unbounded");

        x[enter] += dir * step;
        for (Eigen::Index i = 0; i < m; ++i) x[basic[static_cast<std::size_t>(i)]] -= dir * T(i, enter) * step;

        if (leave_row < 0) {
            // Entering variable moves to its other bound; basis unchanged.
            status[static_cast<std::size_t>(enter)] = dir > 0 ? Status::AtUpper : Status::AtLower;
            x[enter] = dir > 0 ? upper[enter] : 0.0;
            continue;
        }

        const double rate = -dir * T(leave_row, enter);
        const bool to_upper = rate > 0.0;
        status[static_cast<std::size_t>(leave_var)] = to_upper ? Status::AtUpper : Status::AtLower;
        x[leave_var] = to_upper ? upper[leave_var] : 0.0;
        status[static_cast<std::size_t>(enter)] = Status::Basic;
        basic[static_cast<std::size_t>(leave_row)] = enter;

        T.row(leave_row) /= T(leave_row, enter);
        for (Eigen::Index i = 0; i < m; ++i) {
            if (i != leave_row && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave_row);
        }
    }

    sol.x = x.head(n);
    sol.objective = lp.c.dot(sol.x);
    Vector cb(m);
    for (Eigen::Index i = 0; i < m; ++i) cb[i] = cost[basic[static_cast<std::size_t>(i)]];
    sol.duals = T.rightCols(m).transpose() * cb;
    sol.reduced_costs = lp.c - lp.A.transpose() * sol.duals;

    const Vector d = reduced_costs();
    for (Eigen::Index j = 0; j < total; ++j) {
        const Status s = status[static_cast<std::size_t>(j)];
        if (s != Status::Basic && upper[j] > 0.0 && std::abs(d[j]) <= tol) sol.alternative_optima = true;
    }
    return sol;
}

double complementarity_violation(const BoundedLp& lp, const LpSolution& sol) {
    double worst = 0.0;
    const Vector Ax = lp.A * sol.x;
    for (Eigen::Index i = 0; i < lp.b.size(); ++i) {
        worst = std::max(worst, Ax[i] - lp.b[i]);
        worst = std::max(worst, -sol.duals[i]);
        worst = std::max(worst, std::abs(sol.duals[i] * (lp.b[i] - Ax[i])));
    }
    for (Eigen::Index j = 0; j < sol.x.size(); ++j) {
        const double xj = sol.x[j];
        const double dj = sol.reduced_costs[j];
        worst = std::max(worst, -xj);
        worst = std::max(worst, xj - lp.upper[j]);
        if (dj > 0.0) {
            const double room = lp.upper[j] - xj;
            worst = std::max(worst, std::isfinite(room) ? dj * room : dj);
        } else {
            worst = std::max(worst, -dj * xj);
        }
    }
    return worst;
}

}  // namespace trafnet
