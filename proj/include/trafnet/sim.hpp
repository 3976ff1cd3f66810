/**
 * @file sim.hpp
 * @brief Fixed-step RK4 integration of the network ODE.
 *
 * Two coordinate systems are supported. The plain one integrates densities
 * directly. The compactified one maps every onramp density x to x / (1 + x)
 * so that a diverging queue approaches 1; at exactly 1 the onramp is
 * treated as saturated and discharges its demand supremum.
 */

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "trafnet/dynamics.hpp"

namespace trafnet {

/// Piecewise-constant input flows: values[i] applies from start_times[i] on.
struct InputSchedule {
    std::vector<double> start_times;
    std::vector<Vector> values;

    static InputSchedule constant(Vector d);
    const Vector& at(double t) const;
};

struct Trajectory {
    bool compact = false;             // states hold compactified onramp coordinates
    std::vector<double> times;        // hours
    std::vector<Vector> states;
    std::vector<FlowSolution> flows;
    std::vector<Vector> rates;        // vector field in original coordinates
    std::vector<double> residuals;    // max |F| over ordinary links
    double max_clamp = 0.0;           // largest relative clamp applied after a step
};

/// Relative clamp above which a step is rejected.
inline constexpr double kClampTolerance = 1e-6;

/**
 * @brief Integrates from `initial` over [0, horizon] with step dt.
 *
 * Samples are stored every `stride` steps (and always at the final time).
 * Throws StepRejected when a step leaves the domain by more than
 * kClampTolerance relative to the link's density scale.
 */
Trajectory simulate(const Network& net, const State& initial, const InputSchedule& inputs, double horizon,
                    double dt, std::size_t stride = 1);

// ---------------------------------------------------------------------------
// Compactified coordinates

using CompactState = Vector;

CompactState compactify(const Network& net, const State& rho);

struct ExpandedState {
    State rho;             // saturated onramps hold 0 and must be read through `saturated`
    Saturation saturated;
};

ExpandedState expand(const Network& net, const CompactState& hat);

/// Vector field in original coordinates, extended to saturated onramps by continuity.
Vector extended_field(const Network& net, const CompactState& hat, const Vector& input_flows);

/// Vector field in compactified coordinates: onramp rows scaled by (1 - hat)^2.
Vector compact_field(const Network& net, const CompactState& hat, const Vector& input_flows);

Trajectory simulate_compactified(const Network& net, const CompactState& initial, const Vector& input_flows,
                                 double horizon, double dt, std::size_t stride = 1);

// ---------------------------------------------------------------------------
// Settling

struct SettleOptions {
    double tol = 0.0;           // <= 0 selects 1e-4 * largest ordinary capacity
    double window = 1.0;        // hours of steady onramp outflow required
    double max_horizon = 200.0;
    double dt = 1e-3;
    double divergence_threshold = 0.999;  // compact coordinate a growing queue must reach
    std::optional<CompactState> initial;  // zero state when empty
};

struct SettleResult {
    CompactState state;
    ExpandedState expanded;
    FlowSolution flows;
    Vector field;                // extended vector field at the settled state
    std::vector<bool> diverging; // onramps whose queue grows without bound
    bool converged = false;
    double time = 0.0;
    double tol = 0.0;
};

/**
 * @brief Runs the compactified dynamics until flows stop changing.
 *
 * Converged when every ordinary |F| <= tol, no onramp queue is draining
 * faster than tol, every growing queue has reached divergence_threshold in
 * compact coordinates, and every onramp outflow stayed within tol over the
 * trailing window. Non-convergence is reported, not thrown.
 */
SettleResult settle(const Network& net, const Vector& input_flows, const SettleOptions& options = {});

double default_tolerance(const Network& net);

// ---------------------------------------------------------------------------

/// CSV with header t,<densities>,<outflows>,residual and one row per sample.
void write_csv(std::ostream& out, const Network& net, const Trajectory& traj);

}  // namespace trafnet
