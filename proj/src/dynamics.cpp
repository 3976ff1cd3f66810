#include "trafnet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trafnet/errors.hpp"

namespace trafnet {

namespace {

double link_demand(const Network& net, const State& rho, const Saturation& saturated, LinkIndex l) {
    if (!saturated.empty() && saturated[l]) return net.demand_supremum(l);
    return net.demand(l, rho[l]);
}

double link_demand_derivative(const Network& net, const State& rho, const Saturation& saturated, LinkIndex l) {
    if (!saturated.empty() && saturated[l]) return 0.0;
    return net.demand_derivative(l, rho[l]);
}

double aggregate_demand(const Network& net, const State& rho, const Saturation& saturated, JunctionIndex v,
                        LinkIndex k) {
    double total = 0.0;
    for (LinkIndex j : net.incoming(v)) total += net.split(j, k) * link_demand(net, rho, saturated, j);
    return total;
}

}  // namespace

JunctionAlpha junction_alpha(const Network& net, const State& rho, JunctionIndex v, const Saturation& saturated) {
    JunctionAlpha out;
    if (net.is_sink(v)) return out;

    std::vector<std::pair<double, LinkIndex>> ratios;
    for (LinkIndex k : net.outgoing(v)) {
        const double agg = aggregate_demand(net, rho, saturated, v, k);
        if (!(agg > 0.0)) continue;  // no demand for this link, constraint inactive
        ratios.emplace_back(std::max(net.supply(k, rho[k]), 0.0) / agg, k);
    }

    std::vector<double> candidates{1.0};
    for (const auto& [ratio, k] : ratios) candidates.push_back(ratio);
    std::sort(candidates.begin(), candidates.end());
    out.alpha = candidates.front();
    if (candidates.size() > 1) out.margin = candidates[1] - candidates[0];

    for (const auto& [ratio, k] : ratios) {
        if (ratio - out.alpha <= kTieTolerance * std::max(out.alpha, 1.0)) out.binding.push_back(k);
    }
    std::sort(out.binding.begin(), out.binding.end(),
              [&](LinkIndex a, LinkIndex b) { return net.order_rank(a) < net.order_rank(b); });
    return out;
}

bool Mode::all_unconstrained() const {
    return std::none_of(junctions.begin(), junctions.end(), [](const JunctionMode& j) { return j.bound.has_value(); });
}

double Mode::margin() const {
    double m = kInfinity;
    for (const auto& j : junctions) m = std::min(m, j.margin);
    return m;
}

std::string Mode::label(const Network& net) const {
    std::ostringstream out;
    for (JunctionIndex v = 0; v < junctions.size(); ++v) {
        if (v > 0) out << ' ';
        out << net.junction_ids()[v] << ':';
        if (junctions[v].bound) {
            out << "supply(" << net.link(*junctions[v].bound).id << ')';
        } else {
            out << "free";
        }
    }
    return out.str();
}

Mode Mode::unconstrained(const Network& net) {
    Mode m;
    m.junctions.resize(net.junction_count());
    return m;
}

FlowSolution flows(const Network& net, const State& rho, const Saturation& saturated) {
    const auto n = static_cast<Eigen::Index>(net.link_count());
    FlowSolution sol;
    sol.alpha = Vector::Ones(static_cast<Eigen::Index>(net.junction_count()));
    sol.outflow = Vector::Zero(n);
    sol.inflow = Vector::Zero(n);
    sol.mode.junctions.resize(net.junction_count());

    for (JunctionIndex v = 0; v < net.junction_count(); ++v) {
        const JunctionAlpha ja = junction_alpha(net, rho, v, saturated);
        sol.alpha[v] = ja.alpha;
        JunctionMode& jm = sol.mode.junctions[v];
        jm.binding = ja.binding;
        jm.margin = ja.margin;
        if (!ja.binding.empty()) jm.bound = ja.binding.front();
        for (LinkIndex l : net.incoming(v)) sol.outflow[l] = ja.alpha * link_demand(net, rho, saturated, l);
    }
    for (LinkIndex k : net.ordinary()) {
        if (!net.tail(k)) continue;
        double total = 0.0;
        for (LinkIndex l : net.incoming(*net.tail(k))) total += net.split(l, k) * sol.outflow[l];
        sol.inflow[k] = total;
    }
    return sol;
}

Vector vector_field(const Network& net, const FlowSolution& sol, const Vector& input_flows) {
    Vector F = sol.inflow - sol.outflow;
    for (LinkIndex l : net.onramps()) F[l] = input_flows[l] - sol.outflow[l];
    return F;
}

Vector vector_field(const Network& net, const State& rho, const Vector& input_flows, const Saturation& saturated) {
    return vector_field(net, flows(net, rho, saturated), input_flows);
}

Mode active_mode(const Network& net, const State& rho, TieBreak tie) {
    Mode mode = flows(net, rho).mode;
    if (tie == TieBreak::Throw) {
        for (JunctionIndex v = 0; v < mode.junctions.size(); ++v) {
            if (mode.junctions[v].margin <= kTieTolerance) {
                throw DegenerateMode("junction '" + net.junction_ids()[v] + "' has tied constraints");
            }
        }
    }
    return mode;
}

Matrix mode_jacobian(const Network& net, const State& rho, const Mode& mode, const Saturation& saturated) {
    const auto n = static_cast<Eigen::Index>(net.link_count());
    // Derivatives of every outflow with respect to every density.
    Matrix dout = Matrix::Zero(n, n);
    for (JunctionIndex v = 0; v < net.junction_count(); ++v) {
        const auto in = net.incoming(v);
        const auto& bound = mode.junctions[v].bound;
        if (net.is_sink(v) || !bound) {
            for (LinkIndex l : in) dout(l, l) = link_demand_derivative(net, rho, saturated, l);
            continue;
        }
        // alpha = supply_k / sum_j beta_jk demand_j
        const LinkIndex k = *bound;
        const double agg = aggregate_demand(net, rho, saturated, v, k);
        const double supply = net.supply(k, rho[k]);
        const double alpha = supply / agg;
        const double dalpha_dk = net.supply_derivative(k, rho[k]) / agg;
        for (LinkIndex l : in) {
            const double demand = link_demand(net, rho, saturated, l);
            dout(l, l) += alpha * link_demand_derivative(net, rho, saturated, l);
            dout(l, k) += demand * dalpha_dk;
            for (LinkIndex i : in) {
                const double dalpha_di =
                    -supply * net.split(i, k) * link_demand_derivative(net, rho, saturated, i) / (agg * agg);
                dout(l, i) += demand * dalpha_di;
            }
        }
    }
    // F = (P - I) f_out with P(l, j) = beta(j, l) on ordinary rows.
    Matrix J = -dout;
    for (LinkIndex l : net.ordinary()) {
        if (!net.tail(l)) continue;
        for (LinkIndex j : net.incoming(*net.tail(l))) {
            const double beta = net.split(j, l);
            if (beta != 0.0) J.row(l) += beta * dout.row(j);
        }
    }
    return J;
}

Matrix jacobian(const Network& net, const State& rho, TieBreak tie) {
    return mode_jacobian(net, rho, active_mode(net, rho, tie));
}

double clamp_to_domain(const Network& net, State& rho) {
    double worst = 0.0;
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        const double upper = net.is_onramp(l) ? kInfinity : net.jam_density(l);
        const double scale = net.is_onramp(l) ? net.link(l).demand.density_scale() : upper;
        const double clamped = std::clamp(rho[l], 0.0, upper);
        worst = std::max(worst, std::abs(clamped - rho[l]) / scale);
        rho[l] = clamped;
    }
    return worst;
}

}  // namespace trafnet
