#include "trafnet/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trafnet/errors.hpp"

namespace trafnet {

std::string_view to_string(Feasibility f) {
    switch (f) {
        case Feasibility::StrictlyFeasible: return "strictly feasible";
        case Feasibility::Feasible: return "feasible";
        case Feasibility::Infeasible: return "infeasible";
    }
    return "unknown";
}

namespace {

bool onramp_admissible(const Network& net, LinkIndex l, double d) {
    const double sup = net.demand_supremum(l);
    return net.demand_attains_supremum(l) ? d <= sup : d < sup;
}

// Flow balance solution scattered back onto link indices.
Vector link_balance(const Network& net, const Vector& input_flows) {
    const RoutingMatrices rm = routing_matrices(net);
    Vector d(static_cast<Eigen::Index>(rm.onramps.size()));
    for (std::size_t r = 0; r < rm.onramps.size(); ++r) d[static_cast<Eigen::Index>(r)] = input_flows[rm.onramps[r]];
    const Vector fo = balance_flows(rm, d);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(net.link_count()));
    for (LinkIndex l : rm.onramps) out[l] = input_flows[l];
    for (std::size_t i = 0; i < rm.ordinary.size(); ++i) out[rm.ordinary[i]] = fo[static_cast<Eigen::Index>(i)];
    return out;
}

}  // namespace

bool admissible(const Network& net, const Vector& input_flows) {
    for (LinkIndex l : net.onramps()) {
        if (!onramp_admissible(net, l, input_flows[l])) return false;
    }
    return true;
}

EquilibriumResult classify(const Network& net, const Vector& input_flows) {
    for (LinkIndex l : net.onramps()) {
        const double d = input_flows[l];
        if (!(d >= 0.0)) {
            throw InadmissibleDemand("input flow of onramp '" + net.link(l).id + "' must be nonnegative");
        }
        if (!onramp_admissible(net, l, d)) {
            std::ostringstream msg;
            msg << "input flow " << d << " of onramp '" << net.link(l).id << "' cannot be discharged (supremum "
                << net.demand_supremum(l) << ")";
            throw InadmissibleDemand(msg.str());
        }
    }

    EquilibriumResult res;
    res.balance_flows = link_balance(net, input_flows);
    bool feasible = true;
    bool strict = true;
    for (LinkIndex l : net.ordinary()) {
        const double cap = critical_point(net, l).flow;
        const double f = res.balance_flows[l];
        const double slack = kFeasibilityTolerance * std::max(cap, 1.0);
        if (f > cap + slack) feasible = false;
        if (f >= cap - slack) strict = false;
    }
    res.classification = !feasible ? Feasibility::Infeasible
                                   : (strict ? Feasibility::StrictlyFeasible : Feasibility::Feasible);
    if (feasible) res.flows = res.balance_flows;
    return res;
}

EquilibriumResult freeflow_equilibrium(const Network& net, const Vector& input_flows) {
    EquilibriumResult res = classify(net, input_flows);
    if (res.classification == Feasibility::Infeasible) {
        throw InversionFailure("input flow is infeasible; no free-flow equilibrium exists");
    }
    res.densities.assign(net.link_count(), Density{});
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        const Link& link = net.link(l);
        double f = res.flows[l];
        double rho = 0.0;
        if (link.kind == LinkKind::Ordinary) {
            const CriticalPoint cp = critical_point(net, l);
            f = std::min(f, cp.flow);  // within the feasibility slack
            if (link.demand.kind() == DiagramKind::PiecewiseLinear) {
                rho = link.demand.inverse(std::min(f, link.demand.capacity()));
            } else {
                // Bisection on [0, rho_crit]; the bracket always contains the root.
                double lo = 0.0;
                double hi = cp.density;
                for (int it = 0; it < 200 && hi - lo > 1e-10 * cp.density; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (link.demand(mid) < f ? lo : hi) = mid;
                }
                rho = 0.5 * (lo + hi);
            }
            rho = std::min(rho, cp.density);
        } else {
            rho = link.demand.inverse(f);
        }
        res.densities[l] = Density::finite(rho);
    }
    res.density_uniqueness =
        res.classification == Feasibility::StrictlyFeasible ? Uniqueness::Unique : Uniqueness::Unknown;
    if (res.classification == Feasibility::StrictlyFeasible) {
        res.certificate = stability_certificate(net, res);
    }
    return res;
}

JacobianCertificate stability_certificate(const Network& net, const EquilibriumResult& eq) {
    if (eq.classification != Feasibility::StrictlyFeasible || eq.densities.size() != net.link_count()) {
        throw CertificateFailed("certificate requires the free-flow equilibrium of a strictly feasible input");
    }
    State rho(static_cast<Eigen::Index>(net.link_count()));
    for (LinkIndex l = 0; l < net.link_count(); ++l) rho[l] = eq.densities[l].value;

    const Matrix J = mode_jacobian(net, rho, Mode::unconstrained(net));
    JacobianCertificate cert;
    cert.link_order = net.link_order();
    const auto n = static_cast<Eigen::Index>(cert.link_order.size());
    cert.jacobian.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cert.jacobian(i, j) = J(cert.link_order[static_cast<std::size_t>(i)], cert.link_order[static_cast<std::size_t>(j)]);
        }
    }
    const double scale = std::max(1.0, cert.jacobian.cwiseAbs().maxCoeff());
    cert.diagonal_max = n > 0 ? cert.jacobian.diagonal().maxCoeff() : -kInfinity;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) cert.upper_max = std::max(cert.upper_max, std::abs(cert.jacobian(i, j)));
    }
    cert.lower_triangular = cert.upper_max <= 1e-12 * scale;

    if (!cert.hurwitz()) {
        std::ostringstream msg;
        msg << "free-flow Jacobian check failed: largest upper entry " << cert.upper_max << ", largest diagonal "
            << cert.diagonal_max;
        throw CertificateFailed(msg.str());
    }
    return cert;
}

EquilibriumResult equilibrium_infeasible(const Network& net, const Vector& input_flows, const SettleOptions& options) {
    EquilibriumResult res;
    res.balance_flows = link_balance(net, input_flows);
    res.classification = Feasibility::Infeasible;
    if (admissible(net, input_flows)) res.classification = classify(net, input_flows).classification;

    SettleResult settled = settle(net, input_flows, options);
    if (!settled.converged) {
        std::ostringstream msg;
        msg << "flows did not settle within " << options.max_horizon << " hours (tolerance " << settled.tol << ")";
        throw NotConverged(msg.str());
    }
    res.flows = settled.flows.outflow;
    res.densities.assign(net.link_count(), Density{});
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        if (net.is_onramp(l) && (settled.diverging[l] || settled.expanded.saturated[l])) {
            res.densities[l] = Density::unbounded();
        } else {
            res.densities[l] = Density::finite(settled.expanded.rho[l]);
        }
    }
    res.unique_flow = is_polytree(net);
    res.density_uniqueness = Uniqueness::Unknown;
    res.settled = std::move(settled);
    return res;
}

EquilibriumResult equilibrium(const Network& net, const Vector& input_flows, const SettleOptions& options) {
    if (admissible(net, input_flows)) {
        EquilibriumResult c = classify(net, input_flows);
        if (c.classification != Feasibility::Infeasible) return freeflow_equilibrium(net, input_flows);
    }
    return equilibrium_infeasible(net, input_flows, options);
}

}  // namespace trafnet
