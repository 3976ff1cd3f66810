/**
 * @file network.hpp
 * @brief Traffic network graph: junctions, ordinary links, onramps and split ratios.
 *
 * Links are addressed by their position in the network (LinkIndex); the opaque
 * string ids are kept for I/O. Densities, flows and input flows are dense
 * vectors over all links in that same order.
 */

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "trafnet/diagram.hpp"

namespace trafnet {

using LinkIndex = std::size_t;
using JunctionIndex = std::size_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LinkKind { Ordinary, Onramp };

struct Link {
    std::string id;
    LinkKind kind = LinkKind::Ordinary;
    std::optional<std::string> tail;  // none for onramps
    std::string head;
    Demand demand = Demand::piecewise_linear(1.0, 1.0);
    std::optional<Supply> supply;  // ordinary links only
    double meter = kInfinity;      // onramp metering rate, applied as min(demand, meter)
};

struct Split {
    std::string from;
    std::string to;
    double beta;
};

/**
 * @brief Immutable traffic network.
 *
 * Construction only checks referential integrity (known junction ids, unique
 * link ids, split entries naming existing links) and throws
 * std::invalid_argument otherwise. The modelling assumptions are checked by
 * validate(), which reports violations as data.
 */
class Network {
public:
    Network(std::vector<std::string> junctions, std::vector<Link> links, std::vector<Split> splits);

    std::size_t link_count() const { return links_.size(); }
    std::size_t junction_count() const { return junctions_.size(); }

    const Link& link(LinkIndex l) const { return links_[l]; }
    const std::vector<Link>& links() const { return links_; }
    const std::vector<std::string>& junction_ids() const { return junctions_; }
    const std::vector<Split>& splits() const { return splits_; }

    LinkIndex link_index(std::string_view id) const;
    JunctionIndex junction_index(std::string_view id) const;

    bool is_onramp(LinkIndex l) const { return links_[l].kind == LinkKind::Onramp; }
    std::optional<JunctionIndex> tail(LinkIndex l) const { return tail_[l]; }
    JunctionIndex head(LinkIndex l) const { return head_[l]; }

    std::span<const LinkIndex> incoming(JunctionIndex v) const { return incoming_[v]; }
    std::span<const LinkIndex> outgoing(JunctionIndex v) const { return outgoing_[v]; }
    bool is_sink(JunctionIndex v) const { return outgoing_[v].empty(); }

    std::span<const LinkIndex> onramps() const { return onramps_; }
    std::span<const LinkIndex> ordinary() const { return ordinary_; }

    /// Split ratio beta from link `from` to link `to`.
    double split(LinkIndex from, LinkIndex to) const { return beta_(from, to); }
    const Matrix& split_matrix() const { return beta_; }

    /// Fraction of the outflow of `l` routed off the network.
    double offramp_fraction(LinkIndex l) const;

    /// Demand including any metering cap.
    double demand(LinkIndex l, double rho) const;
    double demand_derivative(LinkIndex l, double rho) const;
    /// Supremum of the (metered) demand; the outflow of a saturated onramp.
    double demand_supremum(LinkIndex l) const;
    bool demand_attains_supremum(LinkIndex l) const;

    double supply(LinkIndex l, double rho) const { return links_[l].supply->operator()(rho); }
    double supply_derivative(LinkIndex l, double rho) const { return links_[l].supply->derivative(rho); }
    double jam_density(LinkIndex l) const { return links_[l].supply->jam_density(); }

    /// True when the junction graph over ordinary links has no directed cycle.
    bool acyclic() const { return !order_.empty() || links_.empty(); }

    /**
     * @brief Link enumeration consistent with a topological order of junctions.
     *
     * Incoming links of the first junction come first, then those of the
     * second, and so on; ties follow declaration order. Throws CycleDetected.
     */
    const std::vector<LinkIndex>& link_order() const;
    /// Position of each link in link_order(); identity when cyclic.
    std::size_t order_rank(LinkIndex l) const { return rank_[l]; }

    /// Copy with onramp metering rates replaced; rates are indexed by link.
    Network with_meters(const Vector& rates) const;

private:
    std::vector<std::string> junctions_;
    std::vector<Link> links_;
    std::vector<Split> splits_;
    std::unordered_map<std::string, LinkIndex> link_lookup_;
    std::unordered_map<std::string, JunctionIndex> junction_lookup_;
    std::vector<std::optional<JunctionIndex>> tail_;
    std::vector<JunctionIndex> head_;
    std::vector<std::vector<LinkIndex>> incoming_;
    std::vector<std::vector<LinkIndex>> outgoing_;
    std::vector<LinkIndex> onramps_;
    std::vector<LinkIndex> ordinary_;
    Matrix beta_;
    std::vector<LinkIndex> order_;
    std::vector<std::size_t> rank_;
};

// ---------------------------------------------------------------------------
// Validation

enum class Rule {
    LinkKind,           // onramp with tail/supply, ordinary link without them
    DiagramParameters,  // supply/demand parameters break monotonicity or boundedness
    CriticalPoint,      // supply and demand do not cross exactly once
    Acyclicity,
    SplitRange,      // beta outside [0, 1]
    SplitAdjacency,  // beta > 0 between links that do not meet
    SplitSum,        // total routed fraction above one
    PositiveTurning, // zero split between an incoming and outgoing link at a non-sink
    JunctionWithoutInflow,
    OnrampWithoutOutflow,
};

std::string_view to_string(Rule rule);

struct Violation {
    Rule rule;
    std::vector<std::string> elements;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(Rule rule) const;
};

ValidationReport validate(const Network& net);

// ---------------------------------------------------------------------------
// Routing

/**
 * @brief Matrices A (ordinary to ordinary) and B (onramp to ordinary) with
 * A(l, k) = beta(k, l), expressed in link_order restricted to each class.
 * Under this ordering A is strictly lower triangular.
 */
struct RoutingMatrices {
    std::vector<LinkIndex> ordinary;  // row and column order of A, rows of B
    std::vector<LinkIndex> onramps;   // column order of B
    Matrix A;
    Matrix B;
    std::vector<LinkIndex> link_order;
};

RoutingMatrices routing_matrices(const Network& net);

/// Solves (I - A) x = c by forward substitution; A must be strictly lower triangular.
Vector solve_unit_lower(const Matrix& A, const Vector& c);

/// Equilibrium ordinary-link flows (I - A)^{-1} B s for onramp flows s (in rm.onramps order).
Vector balance_flows(const RoutingMatrices& rm, const Vector& onramp_flows);

/// (I - A)^{-1} B, the map from onramp flows to ordinary-link flows.
Matrix propagation_matrix(const RoutingMatrices& rm);

CriticalPoint critical_point(const Network& net, LinkIndex l);

// ---------------------------------------------------------------------------
// Topology classes

/// Weakly connected junction graph whose undirected skeleton has no cycle.
bool is_polytree(const Network& net);

struct MergeStructure {
    bool merge_only = true;       // every junction has at most one outgoing link
    bool uniform_offramp = true;  // incoming links of each junction leave the network at one rate
    std::vector<double> gamma;    // off-network fraction per junction (1 at sinks)
    std::vector<std::string> offending;

    bool satisfied() const { return merge_only && uniform_offramp; }
};

MergeStructure merge_structure(const Network& net);
bool is_merge_only(const Network& net);

/// Input flow vector over all links from (onramp id, flow) pairs; other entries are zero.
Vector input_flows(const Network& net, std::initializer_list<std::pair<std::string_view, double>> flows);

}  // namespace trafnet
