/**
 * @file analysis.hpp
 * @brief Qualitative diagnostics: cooperativity, compartmental structure,
 *        and descent of the weighted one-norm of the vector field.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "trafnet/sim.hpp"

namespace trafnet {

// ---------------------------------------------------------------------------
// Cooperativity

/// Negative off-diagonal entry dF_row/drho_col of the active mode's jacobian.
struct CooperativityViolation {
    State state;
    Mode mode;
    LinkIndex row = 0;
    LinkIndex col = 0;
    double value = 0.0;        // analytic entry
    double finite_difference = 0.0;
};

struct CooperativityReport {
    /// Off-diagonals of the all-free-flow jacobian were >= -1e-12 at every sample.
    bool cooperative_in_freeflow = true;
    std::size_t samples = 0;
    std::size_t skipped = 0;       // too close to a mode boundary or diagram kink
    std::size_t unconfirmed = 0;   // negative analytic entries the finite difference did not reproduce
    /// First violations found (up to the scan's cap), each confirmed by finite differences.
    std::vector<CooperativityViolation> violations;
    /// Number of confirmed violations per (row, col) link pair, over all samples.
    std::map<std::pair<LinkIndex, LinkIndex>, std::size_t> pair_counts;

    bool cooperative() const { return pair_counts.empty(); }
    bool has_violation(LinkIndex row, LinkIndex col) const { return pair_counts.count({row, col}) > 0; }
};

using StateSampler = std::function<State(std::mt19937_64&)>;

/// Ordinary densities uniform on (0, jam); onramp densities uniform on (0, 2 x demand density scale).
StateSampler uniform_sampler(const Network& net);

struct ScanOptions {
    std::uint64_t seed = 1;
    double boundary_margin = 1e-9;   // skip states this close to a mode switch
    double fd_step = 1e-6;
    double fd_tolerance = 1e-5;
    std::size_t max_recorded = 256;
};

CooperativityReport cooperativity_scan(const Network& net, const StateSampler& sampler, std::size_t n_samples,
                                       const ScanOptions& options = {});

/// Confirmed violations at a single state (empty when the state is degenerate or cooperative).
std::vector<CooperativityViolation> cooperativity_probe(const Network& net, const State& rho,
                                                        const ScanOptions& options = {});

// ---------------------------------------------------------------------------
// Compartmental structure

struct CompartmentalWeights {
    Vector W;                   // per link, in (0, 1]
    std::vector<double> gamma;  // off-network fraction per junction
    std::vector<double> w;      // per-link factor 1 - gamma at the link's head (1 when gamma = 1)
};

/// Weights for merge-only networks with one off-network fraction per junction. Throws ConditionsNotMet.
CompartmentalWeights compartmental_weights(const Network& net);

struct CompartmentalCheck {
    bool ok = true;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> negative_off_diagonals;
    std::vector<Eigen::Index> positive_columns;

    explicit operator bool() const { return ok; }
};

/// Off-diagonals >= -1e-12 and column sums <= 1e-12.
CompartmentalCheck is_compartmental(const Matrix& m);

// ---------------------------------------------------------------------------
// Lyapunov descent

struct LyapunovTrace {
    std::vector<double> times;
    std::vector<double> values;   // ||W F||_1 at each sample
    double max_increase = 0.0;    // largest step-to-step increase
    double slack = 0.0;           // allowed increase per step: 1e-6 V(0)

    bool nonincreasing() const { return max_increase <= slack; }
};

LyapunovTrace lyapunov_trace(const Network& net, const Trajectory& traj, const Vector& W);

}  // namespace trafnet
