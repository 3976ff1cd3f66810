/**
 * @file metering.hpp
 * @brief Throughput-optimal constant ramp metering.
 *
 * The optimal onramp service rates s solve
 *
 *     max  sum(s)
 *     s.t. 0 <= s <= min(d, demand supremum)
 *          (I - A)^{-1} B s <= critical flow of each ordinary link,
 *
 * the flow-balance equality having been eliminated exactly because I - A is
 * unit lower triangular. Onramps served below their input flow are metered at
 * s; the rest are left unmetered.
 */

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "trafnet/equilibrium.hpp"
#include "trafnet/errors.hpp"
#include "trafnet/lp.hpp"

namespace trafnet {

/// Network whose onramp demands are capped at `rates` (per link, +inf = unmetered).
Network metered_network(const Network& net, const Vector& rates);

struct MeteringPlan {
    Vector rates;            // per link; +inf for unmetered onramps and ordinary links
    Vector service;          // optimal onramp flows s*, per link (zero on ordinary links)
    Vector predicted_flows;  // equilibrium flow on every link
    double throughput = 0.0;
    bool alternative_optima = false;
    double complementarity = 0.0;  // LP optimality residual
};

MeteringPlan optimal_metering(const Network& net, const Vector& input_flows);

/// Bounded LP in onramp space, onramps in routing order.
BoundedLp metering_lp(const Network& net, const Vector& input_flows);

struct PlanVerification {
    bool passed = false;
    Vector settled_flows;
    Vector deltas;                   // settled - predicted, per link
    std::vector<Density> densities;  // settled densities of the metered network
    bool freeflow = false;           // every ordinary link at or below critical density, all alpha = 1
    double throughput = 0.0;
    std::string message;
};

class VerificationFailed : public Error {
public:
    VerificationFailed(const std::string& what, PlanVerification report)
        : Error(what), report_(std::move(report)) {}
    const PlanVerification& report() const { return report_; }

private:
    PlanVerification report_;
};

/// Simulates the metered network from the zero state and compares with the plan.
PlanVerification verify_plan(const Network& net, const Vector& input_flows, const MeteringPlan& plan,
                             const SettleOptions& options = {});

}  // namespace trafnet
