#include "trafnet/metering.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trafnet {

Network metered_network(const Network& net, const Vector& rates) { return net.with_meters(rates); }

BoundedLp metering_lp(const Network& net, const Vector& input_flows) {
    const RoutingMatrices rm = routing_matrices(net);
    BoundedLp lp;
    lp.A = propagation_matrix(rm);
    lp.b.resize(static_cast<Eigen::Index>(rm.ordinary.size()));
    for (std::size_t i = 0; i < rm.ordinary.size(); ++i) {
        lp.b[static_cast<Eigen::Index>(i)] = critical_point(net, rm.ordinary[i]).flow;
    }
    const auto nr = static_cast<Eigen::Index>(rm.onramps.size());
    lp.c = Vector::Ones(nr);
    lp.upper.resize(nr);
    for (Eigen::Index r = 0; r < nr; ++r) {
        const LinkIndex l = rm.onramps[static_cast<std::size_t>(r)];
        lp.upper[r] = std::max(0.0, std::min(input_flows[l], net.demand_supremum(l)));
    }
    return lp;
}

MeteringPlan optimal_metering(const Network& net, const Vector& input_flows) {
    const RoutingMatrices rm = routing_matrices(net);
    const BoundedLp lp = metering_lp(net, input_flows);
    const LpSolution sol = solve_bounded_lp(lp);

    const auto n = static_cast<Eigen::Index>(net.link_count());
    MeteringPlan plan;
    plan.rates = Vector::Constant(n, kInfinity);
    plan.service = Vector::Zero(n);
    plan.predicted_flows = Vector::Zero(n);
    for (std::size_t r = 0; r < rm.onramps.size(); ++r) {
        const LinkIndex l = rm.onramps[r];
        const double s = std::clamp(sol.x[static_cast<Eigen::Index>(r)], 0.0, lp.upper[static_cast<Eigen::Index>(r)]);
        plan.service[l] = s;
        plan.predicted_flows[l] = s;
        if (s < input_flows[l] - 1e-9 * std::max(1.0, input_flows[l])) plan.rates[l] = s;
    }
    const Vector fo = lp.A * sol.x;
    for (std::size_t i = 0; i < rm.ordinary.size(); ++i) plan.predicted_flows[rm.ordinary[i]] = fo[static_cast<Eigen::Index>(i)];
    plan.throughput = sol.objective;
    plan.alternative_optima = sol.alternative_optima;
    plan.complementarity = complementarity_violation(lp, sol);
    return plan;
}

PlanVerification verify_plan(const Network& net, const Vector& input_flows, const MeteringPlan& plan,
                             const SettleOptions& options) {
    const Network metered = metered_network(net, plan.rates);
    SettleOptions from_zero = options;
    from_zero.initial.reset();
    const SettleResult settled = settle(metered, input_flows, from_zero);

    PlanVerification report;
    report.settled_flows = settled.flows.outflow;
    report.deltas = report.settled_flows - plan.predicted_flows;
    report.densities.assign(net.link_count(), Density{});
    report.freeflow = true;
    bool flows_match = true;
    std::ostringstream issues;
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        double capacity = 0.0;
        if (net.is_onramp(l)) {
            capacity = net.demand_supremum(l);
            report.throughput += report.settled_flows[l];
            report.densities[l] = settled.diverging[l] || settled.expanded.saturated[l]
                                      ? Density::unbounded()
                                      : Density::finite(settled.expanded.rho[l]);
        } else {
            const CriticalPoint cp = critical_point(net, l);
            capacity = cp.flow;
            const double rho = settled.expanded.rho[l];
            report.densities[l] = Density::finite(rho);
            if (rho > cp.density * (1.0 + 1e-3)) {
                report.freeflow = false;
                issues << " link " << net.link(l).id << " congested (density " << rho << " > " << cp.density << ");";
            }
        }
        if (std::abs(report.deltas[l]) > 0.01 * capacity) {
            flows_match = false;
            issues << " link " << net.link(l).id << " flow off by " << report.deltas[l] << ';';
        }
    }
    for (JunctionIndex v = 0; v < net.junction_count(); ++v) {
        if (settled.flows.alpha[v] < 1.0 - 1e-6) {
            report.freeflow = false;
            issues << " junction " << net.junction_ids()[v] << " restricts flow (alpha " << settled.flows.alpha[v]
                   << ");";
        }
    }
    if (!settled.converged) issues << " metered network did not settle;";

    report.passed = settled.converged && flows_match && report.freeflow;
    report.message = report.passed ? "plan verified" : "plan verification failed:" + issues.str();
    if (!report.passed) throw VerificationFailed(report.message, report);
    return report;
}

}  // namespace trafnet
