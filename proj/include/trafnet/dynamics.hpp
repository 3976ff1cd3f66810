/**
 * @file dynamics.hpp
 * @brief Proportional-priority / FIFO junction flows and the density ODE.
 *
 * At every non-sink junction all incoming demands are scaled by one factor
 * alpha in [0, 1], the largest value for which no outgoing link receives more
 * than its supply. Sink junctions discharge full demand. Each link's density
 * then evolves as inflow minus outflow (input flow minus outflow on onramps).
 */

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trafnet/network.hpp"

namespace trafnet {

/// Densities indexed by link. Onramps in [0, inf), ordinary links in [0, jam].
using State = Vector;

/// Onramps whose queue is infinite; they discharge their demand supremum.
using Saturation = std::vector<bool>;

/// Relative tolerance under which two junction constraints count as tied.
inline constexpr double kTieTolerance = 1e-12;

struct JunctionAlpha {
    double alpha = 1.0;
    /// Outgoing links whose supply constraint attains alpha, sorted by link order.
    std::vector<LinkIndex> binding;
    /// Gap between the selected candidate and the next one (1 counts as a candidate).
    double margin = kInfinity;
};

JunctionAlpha junction_alpha(const Network& net, const State& rho, JunctionIndex v, const Saturation& saturated = {});

struct JunctionMode {
    /// Outgoing link whose supply fixes alpha; empty means unconstrained.
    std::optional<LinkIndex> bound;
    std::vector<LinkIndex> binding;
    double margin = kInfinity;
};

/// Smooth branch of the vector field selected at every junction.
struct Mode {
    std::vector<JunctionMode> junctions;

    bool all_unconstrained() const;
    /// Smallest junction margin; near zero means the state sits on a mode boundary.
    double margin() const;
    std::string label(const Network& net) const;

    static Mode unconstrained(const Network& net);
};

struct FlowSolution {
    Vector alpha;    // per junction
    Vector outflow;  // per link
    Vector inflow;   // per link; zero for onramps
    Mode mode;
};

FlowSolution flows(const Network& net, const State& rho, const Saturation& saturated = {});

/// F(rho): d - f_out on onramps and f_in - f_out on ordinary links.
Vector vector_field(const Network& net, const State& rho, const Vector& input_flows,
                    const Saturation& saturated = {});
Vector vector_field(const Network& net, const FlowSolution& sol, const Vector& input_flows);

enum class TieBreak {
    LowestOrder,  // pick the binding link that comes first in link order
    Throw,        // raise DegenerateMode on any tie
};

Mode active_mode(const Network& net, const State& rho, TieBreak tie = TieBreak::LowestOrder);

/// Jacobian of the smooth branch selected by `mode`, evaluated at rho.
Matrix mode_jacobian(const Network& net, const State& rho, const Mode& mode, const Saturation& saturated = {});

/// Jacobian of the branch that is active at rho.
Matrix jacobian(const Network& net, const State& rho, TieBreak tie = TieBreak::LowestOrder);

/// Clamps every density into the domain; returns the largest correction applied.
double clamp_to_domain(const Network& net, State& rho);

}  // namespace trafnet
