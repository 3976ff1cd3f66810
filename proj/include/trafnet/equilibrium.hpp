/**
 * @file equilibrium.hpp
 * @brief Equilibria under constant input flows.
 *
 * Feasible inputs have a closed-form equilibrium flow (I - A)^{-1} B d and a
 * unique free-flow equilibrium density. Infeasible inputs are settled by
 * simulation in compactified coordinates; onramps whose queue diverges are
 * reported with infinite density.
 */

#pragma once

#include <optional>
#include <vector>

#include "trafnet/sim.hpp"

namespace trafnet {

enum class Feasibility { StrictlyFeasible, Feasible, Infeasible };

std::string_view to_string(Feasibility f);

/// Equilibrium density; onramp queues may be infinite.
struct Density {
    double value = 0.0;
    bool infinite = false;

    static Density finite(double v) { return {v, false}; }
    static Density unbounded() { return {kInfinity, true}; }
};

enum class Uniqueness { Unique, Unknown };

struct JacobianCertificate {
    std::vector<LinkIndex> link_order;
    Matrix jacobian;           // rows and columns in link_order
    bool lower_triangular = false;
    double diagonal_max = 0.0;
    double upper_max = 0.0;    // largest |entry| strictly above the diagonal

    bool hurwitz() const { return lower_triangular && diagonal_max < 0.0; }
};

struct EquilibriumResult {
    Feasibility classification = Feasibility::Infeasible;
    /// (I - A)^{-1} B d on ordinary links, d on onramps; defined for every input.
    Vector balance_flows;
    /// Equilibrium flows per link; empty until an equilibrium is computed.
    Vector flows;
    /// Equilibrium densities per link; empty until computed.
    std::vector<Density> densities;
    bool unique_flow = true;
    Uniqueness density_uniqueness = Uniqueness::Unknown;
    std::optional<JacobianCertificate> certificate;
    /// Settling details for simulated equilibria.
    std::optional<SettleResult> settled;
};

/// Relative slack of the feasibility inequality.
inline constexpr double kFeasibilityTolerance = 1e-9;

/// True when every onramp can discharge its input flow at some finite density.
bool admissible(const Network& net, const Vector& input_flows);

/// Feasibility classification; flows are filled when feasible. Throws InadmissibleDemand.
EquilibriumResult classify(const Network& net, const Vector& input_flows);

/// Free-flow equilibrium densities for a feasible input. Throws InversionFailure.
EquilibriumResult freeflow_equilibrium(const Network& net, const Vector& input_flows);

/// Jacobian at a strictly feasible free-flow equilibrium. Throws CertificateFailed.
JacobianCertificate stability_certificate(const Network& net, const EquilibriumResult& eq);

/// Simulated equilibrium for any input flow. Throws NotConverged.
EquilibriumResult equilibrium_infeasible(const Network& net, const Vector& input_flows,
                                         const SettleOptions& options = {});

/// Free-flow equilibrium when feasible, simulated equilibrium otherwise.
EquilibriumResult equilibrium(const Network& net, const Vector& input_flows, const SettleOptions& options = {});

}  // namespace trafnet
