#include "trafnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "trafnet/errors.hpp"

namespace trafnet {

namespace {

constexpr double kSplitTolerance = 1e-12;

// Kahn's algorithm over junctions, smallest remaining index first.
// Returns the topological order, or the junctions left on cycles.
std::pair<std::vector<JunctionIndex>, std::vector<JunctionIndex>> topo_sort(
    std::size_t n, const std::vector<std::vector<LinkIndex>>& outgoing,
    const std::vector<JunctionIndex>& head) {
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& out : outgoing) {
        for (LinkIndex l : out) ++indegree[head[l]];
    }
    std::vector<JunctionIndex> order;
    std::vector<bool> done(n, false);
    order.reserve(n);
    for (std::size_t step = 0; step < n; ++step) {
        auto next = n;
        for (JunctionIndex v = 0; v < n; ++v) {
            if (!done[v] && indegree[v] == 0) {
                next = v;
                break;
            }
        }
        if (next == n) break;
        done[next] = true;
        order.push_back(next);
        for (LinkIndex l : outgoing[next]) --indegree[head[l]];
    }
    std::vector<JunctionIndex> stuck;
    for (JunctionIndex v = 0; v < n; ++v) {
        if (!done[v]) stuck.push_back(v);
    }
    return {order, stuck};
}

}  // namespace

Network::Network(std::vector<std::string> junctions, std::vector<Link> links, std::vector<Split> splits)
    : junctions_(std::move(junctions)), links_(std::move(links)), splits_(std::move(splits)) {
    for (JunctionIndex v = 0; v < junctions_.size(); ++v) {
        if (!junction_lookup_.emplace(junctions_[v], v).second) {
            throw std::invalid_argument("duplicate junction id '" + junctions_[v] + "'");
        }
    }
    auto find_junction = [&](const std::string& id, const std::string& link) {
        auto it = junction_lookup_.find(id);
        if (it == junction_lookup_.end()) {
            throw std::invalid_argument("link '" + link + "' references unknown junction '" + id + "'");
        }
        return it->second;
    };

    const std::size_t n = links_.size();
    tail_.resize(n);
    head_.resize(n);
    incoming_.resize(junctions_.size());
    outgoing_.resize(junctions_.size());
    for (LinkIndex l = 0; l < n; ++l) {
        const Link& link = links_[l];
        if (!link_lookup_.emplace(link.id, l).second) {
            throw std::invalid_argument("duplicate link id '" + link.id + "'");
        }
        head_[l] = find_junction(link.head, link.id);
        incoming_[head_[l]].push_back(l);
        if (link.tail) {
            tail_[l] = find_junction(*link.tail, link.id);
            outgoing_[*tail_[l]].push_back(l);
        }
        (link.kind == LinkKind::Onramp ? onramps_ : ordinary_).push_back(l);
    }

    beta_ = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<bool> seen(n * n, false);
    for (const Split& s : splits_) {
        const LinkIndex from = link_index(s.from);
        const LinkIndex to = link_index(s.to);
        if (seen[from * n + to]) {
            throw std::invalid_argument("duplicate split entry " + s.from + " -> " + s.to);
        }
        seen[from * n + to] = true;
        beta_(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) = s.beta;
    }

    auto [junction_order, stuck] = topo_sort(junctions_.size(), outgoing_, head_);
    rank_.resize(n);
    if (stuck.empty()) {
        for (JunctionIndex v : junction_order) {
            for (LinkIndex l : incoming_[v]) order_.push_back(l);
        }
        for (std::size_t i = 0; i < order_.size(); ++i) rank_[order_[i]] = i;
    } else {
        std::iota(rank_.begin(), rank_.end(), std::size_t{0});
    }
}

LinkIndex Network::link_index(std::string_view id) const {
    auto it = link_lookup_.find(std::string(id));
    if (it == link_lookup_.end()) {
        throw std::invalid_argument("unknown link id '" + std::string(id) + "'");
    }
    return it->second;
}

JunctionIndex Network::junction_index(std::string_view id) const {
    auto it = junction_lookup_.find(std::string(id));
    if (it == junction_lookup_.end()) {
        throw std::invalid_argument("unknown junction id '" + std::string(id) + "'");
    }
    return it->second;
}

double Network::offramp_fraction(LinkIndex l) const {
    double routed = 0.0;
    for (LinkIndex k : outgoing_[head_[l]]) routed += split(l, k);
    return 1.0 - routed;
}

double Network::demand(LinkIndex l, double rho) const {
    return std::min(links_[l].demand(rho), links_[l].meter);
}

double Network::demand_derivative(LinkIndex l, double rho) const {
    const Link& link = links_[l];
    return link.demand(rho) <= link.meter ? link.demand.derivative(rho) : 0.0;
}

double Network::demand_supremum(LinkIndex l) const {
    return std::min(links_[l].demand.supremum(), links_[l].meter);
}

bool Network::demand_attains_supremum(LinkIndex l) const {
    return links_[l].demand.attains_supremum() || links_[l].meter < links_[l].demand.supremum();
}

const std::vector<LinkIndex>& Network::link_order() const {
    if (!acyclic()) {
        throw CycleDetected("junction graph contains a directed cycle");
    }
    return order_;
}

Network Network::with_meters(const Vector& rates) const {
    if (static_cast<std::size_t>(rates.size()) != links_.size()) {
        throw std::invalid_argument("metering rate vector must cover every link");
    }
    std::vector<Link> links = links_;
    for (LinkIndex l : onramps_) {
        const double m = rates[static_cast<Eigen::Index>(l)];
        if (!(m >= 0.0)) {
            throw std::invalid_argument("metering rate for onramp '" + links[l].id + "' must be nonnegative");
        }
        links[l].meter = m;
    }
    return Network(junctions_, std::move(links), splits_);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Rule rule) {
    switch (rule) {
        case Rule::LinkKind: return "link kind";
        case Rule::DiagramParameters: return "diagram parameters";
        case Rule::CriticalPoint: return "critical point";
        case Rule::Acyclicity: return "acyclicity";
        case Rule::SplitRange: return "split range";
        case Rule::SplitAdjacency: return "split adjacency";
        case Rule::SplitSum: return "split sum";
        case Rule::PositiveTurning: return "positive turning";
        case Rule::JunctionWithoutInflow: return "junction without inflow";
        case Rule::OnrampWithoutOutflow: return "onramp without outflow";
    }
    return "unknown";
}

bool ValidationReport::has(Rule rule) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; });
}

ValidationReport validate(const Network& net) {
    ValidationReport report;
    auto add = [&](Rule rule, std::vector<std::string> elements, std::string message) {
        report.violations.push_back({rule, std::move(elements), std::move(message)});
    };

    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        const Link& link = net.link(l);
        if (link.kind == LinkKind::Onramp) {
            if (link.tail) add(Rule::LinkKind, {link.id}, "onramp '" + link.id + "' must not have a tail junction");
            if (link.supply) add(Rule::LinkKind, {link.id}, "onramp '" + link.id + "' must not have a supply function");
        } else {
            if (!link.tail) add(Rule::LinkKind, {link.id}, "ordinary link '" + link.id + "' needs a tail junction");
            if (!link.supply) add(Rule::LinkKind, {link.id}, "ordinary link '" + link.id + "' needs a supply function");
        }
        if (auto err = link.demand.parameter_error()) {
            add(Rule::DiagramParameters, {link.id}, "link '" + link.id + "': " + *err);
        }
        if (link.supply) {
            if (auto err = link.supply->parameter_error()) {
                add(Rule::DiagramParameters, {link.id}, "link '" + link.id + "': " + *err);
            } else if (!link.demand.parameter_error()) {
                try {
                    critical_point(link.demand, *link.supply);
                } catch (const NoCrossing& e) {
                    add(Rule::CriticalPoint, {link.id}, "link '" + link.id + "': " + e.what());
                }
            }
        }
    }

    if (!net.acyclic()) {
        std::vector<std::vector<LinkIndex>> outgoing(net.junction_count());
        std::vector<JunctionIndex> head(net.link_count());
        for (JunctionIndex v = 0; v < net.junction_count(); ++v) {
            auto out = net.outgoing(v);
            outgoing[v].assign(out.begin(), out.end());
        }
        for (LinkIndex l = 0; l < net.link_count(); ++l) head[l] = net.head(l);
        auto stuck = topo_sort(net.junction_count(), outgoing, head).second;
        std::vector<std::string> ids;
        for (JunctionIndex v : stuck) ids.push_back(net.junction_ids()[v]);
        std::ostringstream msg;
        msg << "acyclicity violated: directed cycle among junctions";
        for (const auto& id : ids) msg << ' ' << id;
        add(Rule::Acyclicity, std::move(ids), msg.str());
    }

    const auto n = net.link_count();
    for (LinkIndex l = 0; l < n; ++l) {
        double total = 0.0;
        for (LinkIndex k = 0; k < n; ++k) {
            const double beta = net.split(l, k);
            if (beta == 0.0) continue;
            const Link& from = net.link(l);
            const Link& to = net.link(k);
            if (!(beta >= 0.0 && beta <= 1.0)) {
                add(Rule::SplitRange, {from.id, to.id}, "split " + from.id + " -> " + to.id + " outside [0, 1]");
            }
            if (beta > 0.0 && (!net.tail(k) || *net.tail(k) != net.head(l))) {
                add(Rule::SplitAdjacency, {from.id, to.id},
                    "split " + from.id + " -> " + to.id + " is positive but the links do not meet");
            }
            total += beta;
        }
        if (total > 1.0 + kSplitTolerance) {
            std::ostringstream msg;
            msg << "splits out of link '" << net.link(l).id << "' sum to " << total << " > 1";
            add(Rule::SplitSum, {net.link(l).id}, msg.str());
        }
    }

    for (JunctionIndex v = 0; v < net.junction_count(); ++v) {
        const std::string& vid = net.junction_ids()[v];
        if (net.incoming(v).empty()) {
            add(Rule::JunctionWithoutInflow, {vid}, "junction '" + vid + "' has no incoming link");
        }
        if (net.is_sink(v)) continue;
        for (LinkIndex l : net.incoming(v)) {
            for (LinkIndex k : net.outgoing(v)) {
                if (!(net.split(l, k) > 0.0)) {
                    add(Rule::PositiveTurning, {vid, net.link(l).id, net.link(k).id},
                        "junction '" + vid + "': split " + net.link(l).id + " -> " + net.link(k).id +
                            " must be positive");
                }
            }
        }
    }

    for (LinkIndex l : net.onramps()) {
        if (net.is_sink(net.head(l))) {
            add(Rule::OnrampWithoutOutflow, {net.link(l).id},
                "onramp '" + net.link(l).id + "' enters a junction with no outgoing link");
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

RoutingMatrices routing_matrices(const Network& net) {
    RoutingMatrices rm;
    rm.link_order = net.link_order();
    for (LinkIndex l : rm.link_order) {
        (net.is_onramp(l) ? rm.onramps : rm.ordinary).push_back(l);
    }
    const auto no = static_cast<Eigen::Index>(rm.ordinary.size());
    const auto nr = static_cast<Eigen::Index>(rm.onramps.size());
    rm.A = Matrix::Zero(no, no);
    rm.B = Matrix::Zero(no, nr);
    for (Eigen::Index i = 0; i < no; ++i) {
        for (Eigen::Index j = 0; j < no; ++j) {
            rm.A(i, j) = net.split(rm.ordinary[static_cast<std::size_t>(j)], rm.ordinary[static_cast<std::size_t>(i)]);
        }
        for (Eigen::Index j = 0; j < nr; ++j) {
            rm.B(i, j) = net.split(rm.onramps[static_cast<std::size_t>(j)], rm.ordinary[static_cast<std::size_t>(i)]);
        }
    }
    return rm;
}

Vector solve_unit_lower(const Matrix& A, const Vector& c) {
    const Eigen::Index n = A.rows();
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = c[i];
        for (Eigen::Index j = 0; j < i; ++j) acc += A(i, j) * x[j];
        x[i] = acc;
    }
    return x;
}

Vector balance_flows(const RoutingMatrices& rm, const Vector& onramp_flows) {
    return solve_unit_lower(rm.A, rm.B * onramp_flows);
}

Matrix propagation_matrix(const RoutingMatrices& rm) {
    Matrix G(rm.B.rows(), rm.B.cols());
    for (Eigen::Index j = 0; j < rm.B.cols(); ++j) G.col(j) = solve_unit_lower(rm.A, rm.B.col(j));
    return G;
}

CriticalPoint critical_point(const Network& net, LinkIndex l) {
    const Link& link = net.link(l);
    if (!link.supply) {
        throw NoCrossing("link '" + link.id + "' has no supply function");
    }
    return critical_point(link.demand, *link.supply);
}

// ---------------------------------------------------------------------------

bool is_polytree(const Network& net) {
    const std::size_t n = net.junction_count();
    if (n == 0) return false;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t components = n;
    for (LinkIndex l : net.ordinary()) {
        if (!net.tail(l)) continue;
        const auto a = find(*net.tail(l));
        const auto b = find(net.head(l));
        if (a == b) return false;  // undirected cycle (includes parallel links)
        parent[a] = b;
        --components;
    }
    return components == 1;
}

MergeStructure merge_structure(const Network& net) {
    MergeStructure ms;
    ms.gamma.assign(net.junction_count(), 1.0);
    for (JunctionIndex v = 0; v < net.junction_count(); ++v) {
        const std::string& vid = net.junction_ids()[v];
        if (net.outgoing(v).size() > 1) {
            ms.merge_only = false;
            ms.offending.push_back(vid + ": more than one outgoing link");
        }
        if (net.is_sink(v) || net.incoming(v).empty()) continue;
        const auto in = net.incoming(v);
        const double gamma = net.offramp_fraction(in.front());
        ms.gamma[v] = gamma;
        for (LinkIndex l : in) {
            if (std::abs(net.offramp_fraction(l) - gamma) > kSplitTolerance) {
                ms.uniform_offramp = false;
                ms.offending.push_back(vid + ": incoming links leave the network at different rates");
                break;
            }
        }
    }
    return ms;
}

bool is_merge_only(const Network& net) { return merge_structure(net).merge_only; }

Vector input_flows(const Network& net, std::initializer_list<std::pair<std::string_view, double>> flows) {
    Vector d = Vector::Zero(static_cast<Eigen::Index>(net.link_count()));
    for (const auto& [id, value] : flows) {
        const LinkIndex l = net.link_index(id);
        if (!net.is_onramp(l)) {
            throw std::invalid_argument("input flow given for ordinary link '" + std::string(id) + "'");
        }
        d[static_cast<Eigen::Index>(l)] = value;
    }
    return d;
}

}  // namespace trafnet
