#include "trafnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "trafnet/errors.hpp"

namespace trafnet {

namespace {

constexpr double kSignTolerance = 1e-12;

/// Densities at which link l's diagrams (or its meter) are not differentiable.
std::vector<double> kinks(const Network& net, LinkIndex l) {
    std::vector<double> out;
    const Link& link = net.link(l);
    if (auto k = link.demand.kink()) out.push_back(*k);
    if (link.supply) {
        if (auto k = link.supply->kink()) out.push_back(*k);
    }
    if (std::isfinite(link.meter) && link.meter < link.demand.supremum()) {
        out.push_back(link.demand.inverse(link.meter));
    }
    return out;
}

double density_scale(const Network& net, LinkIndex l) {
    return net.is_onramp(l) ? net.link(l).demand.density_scale() : net.jam_density(l);
}

bool near_kink(const Network& net, const State& rho, double margin) {
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        const double scale = density_scale(net, l);
        for (double k : kinks(net, l)) {
            if (std::abs(rho[l] - k) <= margin * std::max(scale, 1.0)) return true;
        }
    }
    return false;
}

double central_difference(const Network& net, const State& rho, LinkIndex row, LinkIndex col, double h) {
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(net.link_count()));
    State up = rho;
    State down = rho;
    up[col] += h;
    down[col] -= h;
    return (vector_field(net, up, zero)[row] - vector_field(net, down, zero)[row]) / (2.0 * h);
}

bool degenerate(const Network& net, const State& rho, const Mode& mode, const ScanOptions& options) {
    return mode.margin() < options.boundary_margin || near_kink(net, rho, options.boundary_margin);
}

std::vector<CooperativityViolation> probe(const Network& net, const State& rho, const Mode& mode,
                                          const ScanOptions& options, std::size_t& unconfirmed) {
    std::vector<CooperativityViolation> found;
    const Matrix J = mode_jacobian(net, rho, mode);
    for (LinkIndex r = 0; r < net.link_count(); ++r) {
        for (LinkIndex c = 0; c < net.link_count(); ++c) {
            if (r == c || J(r, c) >= -kSignTolerance) continue;
            const double fd = central_difference(net, rho, r, c, options.fd_step);
            if (std::abs(fd - J(r, c)) > options.fd_tolerance || fd >= 0.0) {
                ++unconfirmed;
                continue;
            }
            found.push_back({rho, mode, r, c, J(r, c), fd});
        }
    }
    return found;
}

bool has_negative_off_diagonal(const Matrix& J) {
    for (Eigen::Index r = 0; r < J.rows(); ++r) {
        for (Eigen::Index c = 0; c < J.cols(); ++c) {
            if (r != c && J(r, c) < -kSignTolerance) return true;
        }
    }
    return false;
}

}  // namespace

StateSampler uniform_sampler(const Network& net) {
    std::vector<double> upper(net.link_count());
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        upper[l] = net.is_onramp(l) ? 2.0 * net.link(l).demand.density_scale() : net.jam_density(l);
    }
    return [upper](std::mt19937_64& rng) {
        State rho(static_cast<Eigen::Index>(upper.size()));
        for (std::size_t l = 0; l < upper.size(); ++l) {
            std::uniform_real_distribution<double> dist(0.0, upper[l]);
            double x = dist(rng);
            while (x <= 0.0) x = dist(rng);
            rho[static_cast<Eigen::Index>(l)] = x;
        }
        return rho;
    };
}

std::vector<CooperativityViolation> cooperativity_probe(const Network& net, const State& rho,
                                                        const ScanOptions& options) {
    const Mode mode = active_mode(net, rho);
    if (degenerate(net, rho, mode, options)) return {};
    std::size_t unconfirmed = 0;
    return probe(net, rho, mode, options, unconfirmed);
}

CooperativityReport cooperativity_scan(const Network& net, const StateSampler& sampler, std::size_t n_samples,
                                       const ScanOptions& options) {
    CooperativityReport report;
    std::mt19937_64 rng(options.seed);
    const Mode freeflow = Mode::unconstrained(net);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const State rho = sampler(rng);
        ++report.samples;
        if (near_kink(net, rho, options.boundary_margin)) {
            ++report.skipped;
            continue;
        }
        if (has_negative_off_diagonal(mode_jacobian(net, rho, freeflow))) report.cooperative_in_freeflow = false;

        const Mode mode = active_mode(net, rho);
        if (mode.margin() < options.boundary_margin) {
            ++report.skipped;
            continue;
        }
        for (auto& v : probe(net, rho, mode, options, report.unconfirmed)) {
            ++report.pair_counts[{v.row, v.col}];
            if (report.violations.size() < options.max_recorded) report.violations.push_back(std::move(v));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

CompartmentalWeights compartmental_weights(const Network& net) {
    const MergeStructure ms = merge_structure(net);
    if (!ms.merge_only || !ms.uniform_offramp) {
        std::ostringstream msg;
        msg << "weights need ";
        if (!ms.merge_only) msg << "a merge-only network (condition 1)";
        if (!ms.merge_only && !ms.uniform_offramp) msg << " and ";
        if (!ms.uniform_offramp) msg << "one off-network fraction per junction (condition 2)";
        msg << ':';
        for (const auto& o : ms.offending) msg << ' ' << o << ';';
        throw ConditionsNotMet(msg.str());
    }

    CompartmentalWeights cw;
    cw.gamma = ms.gamma;
    const auto n = static_cast<Eigen::Index>(net.link_count());
    cw.w.assign(net.link_count(), 1.0);
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        const double g = ms.gamma[net.head(l)];
        cw.w[l] = g < 1.0 ? 1.0 - g : 1.0;
    }
    // Downstream-first: a link's weight is its own factor times the weight of the unique next link.
    cw.W = Vector::Ones(n);
    const std::vector<LinkIndex> order = net.link_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const LinkIndex l = *it;
        const auto next = net.outgoing(net.head(l));
        cw.W[l] = cw.w[l] * (next.empty() ? 1.0 : cw.W[next.front()]);
    }
    return cw;
}

CompartmentalCheck is_compartmental(const Matrix& m) {
    CompartmentalCheck check;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (r != c && m(r, c) < -kSignTolerance) check.negative_off_diagonals.emplace_back(r, c);
        }
        if (m.col(c).sum() > kSignTolerance) check.positive_columns.push_back(c);
    }
    check.ok = check.negative_off_diagonals.empty() && check.positive_columns.empty();
    return check;
}

// ---------------------------------------------------------------------------

LyapunovTrace lyapunov_trace(const Network& net, const Trajectory& traj, const Vector& W) {
    if (W.size() != static_cast<Eigen::Index>(net.link_count())) {
        throw std::invalid_argument("weight vector does not match the network");
    }
    LyapunovTrace trace;
    trace.times = traj.times;
    trace.values.reserve(traj.rates.size());
    for (const Vector& F : traj.rates) trace.values.push_back(W.cwiseProduct(F).lpNorm<1>());
    if (!trace.values.empty()) trace.slack = 1e-6 * trace.values.front();
    for (std::size_t i = 1; i < trace.values.size(); ++i) {
        trace.max_increase = std::max(trace.max_increase, trace.values[i] - trace.values[i - 1]);
    }
    return trace;
}

}  // namespace trafnet
