#include "trafnet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "trafnet/errors.hpp"

namespace trafnet {

namespace {

template <class Field, class Project>
Vector rk4_step(const Vector& x, double dt, const Vector& k1, Field&& field, Project&& project) {
    Vector stage = x + 0.5 * dt * k1;
    project(stage);
    const Vector k2 = field(stage);
    stage = x + 0.5 * dt * k2;
    project(stage);
    const Vector k3 = field(stage);
    stage = x + dt * k3;
    project(stage);
    const Vector k4 = field(stage);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double ordinary_residual(const Network& net, const Vector& F) {
    double worst = 0.0;
    for (LinkIndex l : net.ordinary()) worst = std::max(worst, std::abs(F[l]));
    return worst;
}

double clamp_compact(const Network& net, CompactState& hat) {
    double worst = 0.0;
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        const double upper = net.is_onramp(l) ? 1.0 : net.jam_density(l);
        const double clamped = std::clamp(hat[l], 0.0, upper);
        worst = std::max(worst, std::abs(clamped - hat[l]) / upper);
        hat[l] = clamped;
    }
    return worst;
}

// Near hat = 0 the onramp rows of the compactified field have slope about
// 2 (1 - hat) |F| in hat, i.e. thousands per hour for realistic input flows.
// A step of length h is split so that each substep keeps h_sub * slope small.
constexpr double kCompactStepBound = 0.2;

template <class Field, class Project>
CompactState compact_step(const Network& net, const CompactState& hat, double h, Field&& field, Project&& project) {
    Vector k1 = field(hat);
    double slope = 0.0;
    for (LinkIndex l : net.onramps()) {
        const double gap = 1.0 - hat[l];
        if (gap > 0.0) slope = std::max(slope, 2.0 * std::abs(k1[l]) / gap);
    }
    const auto parts = std::max<long long>(1, std::llround(std::ceil(h * slope / kCompactStepBound)));
    const double sub = h / static_cast<double>(parts);
    CompactState x = hat;
    for (long long p = 0; p < parts; ++p) {
        if (p > 0) k1 = field(x);
        x = rk4_step(x, sub, k1, field, project);
        if (p + 1 < parts) project(x);
    }
    return x;
}

std::size_t step_count(double horizon, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
    return static_cast<std::size_t>(std::llround(std::ceil(horizon / dt - 1e-9)));
}

}  // namespace

InputSchedule InputSchedule::constant(Vector d) { return {{0.0}, {std::move(d)}}; }

const Vector& InputSchedule::at(double t) const {
    if (values.empty()) throw std::logic_error("empty input schedule");
    std::size_t i = 0;
    while (i + 1 < start_times.size() && start_times[i + 1] <= t) ++i;
    return values[i];
}

Trajectory simulate(const Network& net, const State& initial, const InputSchedule& inputs, double horizon,
                    double dt, std::size_t stride) {
    const std::size_t steps = step_count(horizon, dt);
    stride = std::max<std::size_t>(stride, 1);
    Trajectory traj;
    State rho = initial;
    traj.max_clamp = clamp_to_domain(net, rho);

    auto record = [&](double t, const State& x) {
        FlowSolution sol = flows(net, x);
        Vector F = vector_field(net, sol, inputs.at(t));
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.residuals.push_back(ordinary_residual(net, F));
        traj.rates.push_back(std::move(F));
        traj.flows.push_back(std::move(sol));
    };

    record(0.0, rho);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double h = std::min(dt, horizon - t);
        const Vector& d = inputs.at(t);
        auto field = [&](const State& x) { return vector_field(net, x, d); };
        auto project = [&](State& x) { clamp_to_domain(net, x); };
        rho = rk4_step(rho, h, field(rho), field, project);
        const double clamp = clamp_to_domain(net, rho);
        traj.max_clamp = std::max(traj.max_clamp, clamp);
        if (clamp > kClampTolerance) {
            std::ostringstream msg;
            msg << "step at t=" << t << " left the domain by " << clamp
                << " (relative); reduce the time step";
            throw StepRejected(msg.str());
        }
        if ((i + 1) % stride == 0 || i + 1 == steps) record(t + h, rho);
    }
    return traj;
}

// ---------------------------------------------------------------------------

CompactState compactify(const Network& net, const State& rho) {
    CompactState hat = rho;
    for (LinkIndex l : net.onramps()) hat[l] = rho[l] / (1.0 + rho[l]);
    return hat;
}

ExpandedState expand(const Network& net, const CompactState& hat) {
    ExpandedState out{hat, Saturation(net.link_count(), false)};
    for (LinkIndex l : net.onramps()) {
        if (hat[l] >= 1.0) {
            out.saturated[l] = true;
            out.rho[l] = 0.0;
        } else {
            out.rho[l] = hat[l] / (1.0 - hat[l]);
        }
    }
    return out;
}

Vector extended_field(const Network& net, const CompactState& hat, const Vector& input_flows) {
    const ExpandedState x = expand(net, hat);
    return vector_field(net, x.rho, input_flows, x.saturated);
}

Vector compact_field(const Network& net, const CompactState& hat, const Vector& input_flows) {
    Vector F = extended_field(net, hat, input_flows);
    for (LinkIndex l : net.onramps()) {
        const double gap = std::max(1.0 - hat[l], 0.0);
        F[l] *= gap * gap;
    }
    return F;
}

Trajectory simulate_compactified(const Network& net, const CompactState& initial, const Vector& input_flows,
                                 double horizon, double dt, std::size_t stride) {
    const std::size_t steps = step_count(horizon, dt);
    stride = std::max<std::size_t>(stride, 1);
    Trajectory traj;
    traj.compact = true;
    CompactState hat = initial;
    traj.max_clamp = clamp_compact(net, hat);

    auto record = [&](double t, const CompactState& x) {
        const ExpandedState e = expand(net, x);
        FlowSolution sol = flows(net, e.rho, e.saturated);
        Vector F = vector_field(net, sol, input_flows);
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.residuals.push_back(ordinary_residual(net, F));
        traj.rates.push_back(std::move(F));
        traj.flows.push_back(std::move(sol));
    };

    auto field = [&](const CompactState& x) { return compact_field(net, x, input_flows); };
    auto project = [&](CompactState& x) { clamp_compact(net, x); };
    record(0.0, hat);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double h = std::min(dt, horizon - t);
        hat = compact_step(net, hat, h, field, project);
        traj.max_clamp = std::max(traj.max_clamp, clamp_compact(net, hat));
        if ((i + 1) % stride == 0 || i + 1 == steps) record(t + h, hat);
    }
    return traj;
}

// ---------------------------------------------------------------------------

double default_tolerance(const Network& net) {
    double cap = 0.0;
    for (LinkIndex l : net.ordinary()) cap = std::max(cap, critical_point(net, l).flow);
    if (cap == 0.0) {
        for (LinkIndex l : net.onramps()) cap = std::max(cap, net.demand_supremum(l));
    }
    return 1e-4 * cap;
}

SettleResult settle(const Network& net, const Vector& input_flows, const SettleOptions& options) {
    if (!(options.dt > 0.0)) throw std::invalid_argument("time step must be positive");
    SettleResult result;
    result.tol = options.tol > 0.0 ? options.tol : default_tolerance(net);
    const double tol = result.tol;

    CompactState hat = options.initial ? *options.initial
                                       : CompactState::Zero(static_cast<Eigen::Index>(net.link_count()));
    clamp_compact(net, hat);

    const auto check_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.01 / options.dt)));
    const std::size_t max_steps = step_count(options.max_horizon, options.dt);
    const auto onramps = net.onramps();
    std::deque<std::pair<double, Vector>> history;  // onramp outflows over the trailing window

    auto field = [&](const CompactState& x) { return compact_field(net, x, input_flows); };
    auto project = [&](CompactState& x) { clamp_compact(net, x); };

    auto fill = [&](double t, bool converged) {
        result.state = hat;
        result.expanded = expand(net, hat);
        result.flows = flows(net, result.expanded.rho, result.expanded.saturated);
        result.field = vector_field(net, result.flows, input_flows);
        result.diverging.assign(net.link_count(), false);
        for (LinkIndex l : onramps) result.diverging[l] = result.field[l] > tol;
        result.converged = converged;
        result.time = t;
    };

    for (std::size_t i = 0;; ++i) {
        const double t = static_cast<double>(i) * options.dt;
        if (i % check_every == 0 || i == max_steps) {
            const ExpandedState e = expand(net, hat);
            const FlowSolution sol = flows(net, e.rho, e.saturated);
            const Vector F = vector_field(net, sol, input_flows);
            Vector out(static_cast<Eigen::Index>(onramps.size()));
            for (std::size_t r = 0; r < onramps.size(); ++r) out[static_cast<Eigen::Index>(r)] = sol.outflow[onramps[r]];
            history.emplace_back(t, std::move(out));
            while (!history.empty() && history.front().first < t - options.window - 1e-12) history.pop_front();

            if (t >= options.window - 1e-12) {
                bool steady = ordinary_residual(net, F) <= tol;
                for (LinkIndex l : onramps) {
                    steady = steady && F[l] >= -tol && (F[l] <= tol || hat[l] >= options.divergence_threshold);
                }
                if (steady && !onramps.empty()) {
                    Vector lo = history.front().second;
                    Vector hi = lo;
                    for (const auto& [ts, v] : history) {
                        lo = lo.cwiseMin(v);
                        hi = hi.cwiseMax(v);
                    }
                    steady = (hi - lo).maxCoeff() <= tol;
                }
                if (steady) {
                    fill(t, true);
                    return result;
                }
            }
        }
        if (i == max_steps) break;
        hat = compact_step(net, hat, options.dt, field, project);
        clamp_compact(net, hat);
    }
    fill(options.max_horizon, false);
    return result;
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const Network& net, const Trajectory& traj) {
    out << 't';
    for (const Link& link : net.links()) {
        out << ',' << (traj.compact && link.kind == LinkKind::Onramp ? "rhohat_" : "rho_") << link.id;
    }
    for (const Link& link : net.links()) out << ",fout_" << link.id;
    out << ",residual\n";

    char buf[32];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
    };
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        put(traj.times[i]);
        for (Eigen::Index l = 0; l < traj.states[i].size(); ++l) {
            out << ',';
            put(traj.states[i][l]);
        }
        for (Eigen::Index l = 0; l < traj.flows[i].outflow.size(); ++l) {
            out << ',';
            put(traj.flows[i].outflow[l]);
        }
        out << ',';
        put(traj.residuals[i]);
        out << '\n';
    }
}

}  // namespace trafnet
