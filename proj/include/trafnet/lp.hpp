/**
 * @file lp.hpp
 * @brief Bounded-variable primal simplex for  max c'x  s.t.  A x <= b,  0 <= x <= u.
 *
 * Requires b >= 0 so the origin is a feasible starting vertex; no phase one
 * is needed. Entering and leaving variables follow Bland's rule.
 */

#pragma once

#include "trafnet/network.hpp"

namespace trafnet {

struct BoundedLp {
    Matrix A;
    Vector b;
    Vector c;
    Vector upper;  // may contain +inf
};

struct LpSolution {
    Vector x;
    double objective = 0.0;
    Vector duals;          // one per row of A, nonnegative at optimum
    Vector reduced_costs;  // c - A' duals
    /// A nonbasic variable has zero reduced cost: the optimizer may not be unique.
    bool alternative_optima = false;
    int iterations = 0;
};

/// Throws std::invalid_argument for malformed input and std::runtime_error if unbounded.
LpSolution solve_bounded_lp(const BoundedLp& lp, double tol = 1e-9);

/// Largest violation of primal feasibility, dual feasibility and complementary slackness.
double complementarity_violation(const BoundedLp& lp, const LpSolution& sol);

}  // namespace trafnet
