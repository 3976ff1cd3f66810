// Command-line front end: validate, simulate, equilibrium, meter, analyze.
//
// Exit codes: 0 success, 1 network or plan rejected, 2 bad arguments or
// unreadable input, 3 simulation did not settle, 4 other model failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trafnet/analysis.hpp"
#include "trafnet/equilibrium.hpp"
#include "trafnet/errors.hpp"
#include "trafnet/io.hpp"
#include "trafnet/metering.hpp"

namespace fs = std::filesystem;
using namespace trafnet;

namespace {

enum Exit { kOk = 0, kRejected = 1, kBadArguments = 2, kNotConverged = 3, kFailure = 4 };

struct RunConfig {
    std::string network_path;
    std::vector<std::string> demands;  // id=value overrides
    double horizon = 10.0;
    double dt = 1e-3;
    double tol = 0.0;
    std::size_t stride = 10;
    bool compact = false;
    bool verify = false;
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    std::string output;
};

struct Usage : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::string fmt(double x) {
    std::ostringstream out;
    out << std::setprecision(6) << x;
    return out.str();
}

std::string fmt(const Density& d) { return d.infinite ? "inf" : fmt(d.value); }

Vector apply_overrides(const Network& net, Vector d, const std::vector<std::string>& overrides) {
    for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw Usage("--demand expects id=value, got '" + item + "'");
        const std::string id = item.substr(0, eq);
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw Usage("--demand value for '" + id + "' is not a number");
        }
        const LinkIndex l = net.link_index(id);
        if (!net.is_onramp(l)) throw Usage("--demand names ordinary link '" + id + "'");
        d[l] = value;
    }
    return d;
}

/// Explicit path, else the default output directory, else empty (standard output).
std::optional<fs::path> output_path(const RunConfig& cfg, const std::string& default_name) {
    const char* dir = std::getenv("TRAFNET_OUTPUT_DIR");
    if (!cfg.output.empty()) {
        if (cfg.output == "-") return std::nullopt;
        fs::path p(cfg.output);
        if (p.is_relative() && dir && *dir) p = fs::path(dir) / p;
        return p;
    }
    if (dir && *dir) return fs::path(dir) / default_name;
    return std::nullopt;
}

void with_output(const RunConfig& cfg, const std::string& default_name, const std::function<void(std::ostream&)>& fn) {
    const auto path = output_path(cfg, default_name);
    if (!path) {
        fn(std::cout);
        return;
    }
    if (path->has_parent_path()) fs::create_directories(path->parent_path());
    std::ofstream out(*path);
    if (!out) throw Usage("cannot write " + path->string());
    fn(out);
    std::cout << "wrote " << path->string() << '\n';
}

SettleOptions settle_options(const RunConfig& cfg, bool horizon_given) {
    SettleOptions opts;
    opts.tol = cfg.tol;
    opts.dt = cfg.dt;
    if (horizon_given) opts.max_horizon = cfg.horizon;
    return opts;
}

void print_validation(const ValidationReport& report) {
    if (report.ok()) {
        std::cout << "network OK\n";
        return;
    }
    for (const Violation& v : report.violations) {
        std::cout << to_string(v.rule) << ": " << v.message << '\n';
    }
}

// ---------------------------------------------------------------------------

int cmd_validate(const Network& net) {
    const ValidationReport report = validate(net);
    print_validation(report);
    return report.ok() ? kOk : kRejected;
}

int cmd_simulate(const Network& net, const Vector& d, const RunConfig& cfg) {
    const State zero = State::Zero(static_cast<Eigen::Index>(net.link_count()));
    const Trajectory traj = cfg.compact ? simulate_compactified(net, zero, d, cfg.horizon, cfg.dt, cfg.stride)
                                        : simulate(net, zero, InputSchedule::constant(d), cfg.horizon, cfg.dt, cfg.stride);
    with_output(cfg, "trajectory.csv", [&](std::ostream& out) { write_csv(out, net, traj); });
    return kOk;
}

int cmd_equilibrium(const Network& net, const Vector& d, const RunConfig& cfg, bool horizon_given) {
    const EquilibriumResult eq = equilibrium(net, d, settle_options(cfg, horizon_given));
    std::cout << "classification: " << to_string(eq.classification) << '\n';
    std::cout << "equilibrium flow: " << (eq.unique_flow ? "unique" : "not guaranteed unique") << '\n';
    std::cout << "equilibrium density: "
              << (eq.density_uniqueness == Uniqueness::Unique ? "unique" : "uniqueness not established") << '\n';
    if (eq.settled) std::cout << "settled after " << fmt(eq.settled->time) << " h\n";
    std::cout << std::left << std::setw(10) << "link" << std::setw(10) << "kind" << std::setw(14) << "balance"
              << std::setw(14) << "flow" << "density\n";
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        std::cout << std::setw(10) << net.link(l).id << std::setw(10) << (net.is_onramp(l) ? "onramp" : "ordinary")
                  << std::setw(14) << fmt(eq.balance_flows[l]) << std::setw(14) << fmt(eq.flows[l])
                  << fmt(eq.densities[l]) << '\n';
    }
    if (eq.certificate) {
        std::cout << "stability: Jacobian lower triangular in routing order, largest diagonal "
                  << fmt(eq.certificate->diagonal_max) << '\n';
    }
    return kOk;
}

int cmd_meter(const Network& net, const Vector& d, const RunConfig& cfg, bool horizon_given) {
    const MeteringPlan plan = optimal_metering(net, d);
    std::cout << std::left << std::setw(10) << "onramp" << std::setw(14) << "input" << std::setw(14) << "service"
              << "meter\n";
    for (LinkIndex l : net.onramps()) {
        std::cout << std::setw(10) << net.link(l).id << std::setw(14) << fmt(d[l]) << std::setw(14)
                  << fmt(plan.service[l]) << (std::isfinite(plan.rates[l]) ? fmt(plan.rates[l]) : "unmetered")
                  << '\n';
    }
    std::cout << "throughput: " << fmt(plan.throughput) << '\n';
    if (plan.alternative_optima) std::cout << "note: other plans reach the same throughput\n";
    std::cout << std::setw(10) << "link" << "predicted flow\n";
    for (LinkIndex l = 0; l < net.link_count(); ++l) {
        std::cout << std::setw(10) << net.link(l).id << fmt(plan.predicted_flows[l]) << '\n';
    }
    if (!cfg.verify) return kOk;

    try {
        const PlanVerification check = verify_plan(net, d, plan, settle_options(cfg, horizon_given));
        std::cout << "verification: passed (simulated throughput " << fmt(check.throughput) << ")\n";
        return kOk;
    } catch (const VerificationFailed& e) {
        std::cout << "verification: " << e.what() << '\n';
        return kRejected;
    }
}

int cmd_analyze(const Network& net, const Vector& d, const RunConfig& cfg) {
    const StateSampler sampler = uniform_sampler(net);
    ScanOptions scan;
    scan.seed = cfg.seed;
    const CooperativityReport report = cooperativity_scan(net, sampler, cfg.samples, scan);
    std::cout << "samples: " << report.samples << " (" << report.skipped << " skipped near mode boundaries)\n";
    std::cout << "free-flow mode cooperative: " << (report.cooperative_in_freeflow ? "yes" : "no") << '\n';
    std::cout << "cooperative at all samples: " << (report.cooperative() ? "yes" : "no") << '\n';
    if (!report.cooperative()) {
        std::cout << std::left << std::setw(10) << "row" << std::setw(10) << "column" << "states\n";
        for (const auto& [pair, count] : report.pair_counts) {
            std::cout << std::setw(10) << net.link(pair.first).id << std::setw(10) << net.link(pair.second).id
                      << count << '\n';
        }
    }

    CompartmentalWeights cw;
    try {
        cw = compartmental_weights(net);
    } catch (const ConditionsNotMet& e) {
        std::cout << "compartmental weights: not applicable (" << e.what() << ")\n";
        return kOk;
    }
    std::cout << std::setw(10) << "link" << "weight\n";
    for (LinkIndex l = 0; l < net.link_count(); ++l) std::cout << std::setw(10) << net.link(l).id << fmt(cw.W[l]) << '\n';

    std::mt19937_64 rng(cfg.seed);
    const Matrix W = cw.W.asDiagonal();
    std::size_t failures = 0;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
        const State rho = sampler(rng);
        if (!is_compartmental(W * jacobian(net, rho)).ok) ++failures;
    }
    std::cout << "weighted Jacobian compartmental: " << (cfg.samples - failures) << '/' << cfg.samples << " states\n";

    const Trajectory traj = simulate_compactified(net, compactify(net, sampler(rng)), d, cfg.horizon, cfg.dt, cfg.stride);
    const LyapunovTrace trace = lyapunov_trace(net, traj, cw.W);
    std::cout << "weighted norm of the vector field: " << fmt(trace.values.front()) << " -> "
              << fmt(trace.values.back()) << ", " << (trace.nonincreasing() ? "nonincreasing" : "increased")
              << " (largest step increase " << fmt(trace.max_increase) << ")\n";
    if (!cfg.output.empty() || std::getenv("TRAFNET_OUTPUT_DIR")) {
        with_output(cfg, "lyapunov.csv", [&](std::ostream& out) {
            out << "t,V\n";
            char buf[64];
            for (std::size_t i = 0; i < trace.values.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", trace.times[i], trace.values[i]);
                out << buf;
            }
        });
    }
    return failures == 0 && trace.nonincreasing() ? kOk : kRejected;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Macroscopic traffic network analysis"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("network", cfg.network_path, "Network JSON file")->required()->check(CLI::ExistingFile);
    };
    auto add_demand = [&](CLI::App* sub) {
        sub->add_option("--demand,-d", cfg.demands, "Onramp input flow override, id=value (repeatable)");
    };
    auto add_dynamics = [&](CLI::App* sub, const char* horizon_help) {
        sub->add_option("--dt", cfg.dt, "Integration step in hours")->check(CLI::PositiveNumber);
        return sub->add_option("--horizon", cfg.horizon, horizon_help)->check(CLI::PositiveNumber);
    };

    auto* validate_cmd = app.add_subcommand("validate", "Check the network against the model assumptions");
    add_common(validate_cmd);

    auto* simulate_cmd = app.add_subcommand("simulate", "Integrate from the empty network and write a CSV trajectory");
    add_common(simulate_cmd);
    add_demand(simulate_cmd);
    add_dynamics(simulate_cmd, "Simulated time in hours");
    simulate_cmd->add_option("--stride", cfg.stride, "Write every n-th step")->check(CLI::PositiveNumber);
    simulate_cmd->add_flag("--compact", cfg.compact, "Integrate in compactified onramp coordinates");
    simulate_cmd->add_option("--output,-o", cfg.output, "CSV path ('-' for standard output)");

    auto* equilibrium_cmd = app.add_subcommand("equilibrium", "Classify the input flows and report the equilibrium");
    add_common(equilibrium_cmd);
    add_demand(equilibrium_cmd);
    auto* eq_horizon = add_dynamics(equilibrium_cmd, "Longest simulated time when settling, in hours");
    equilibrium_cmd->add_option("--tol", cfg.tol, "Settling tolerance in veh/hr")->check(CLI::PositiveNumber);

    auto* meter_cmd = app.add_subcommand("meter", "Compute throughput-optimal constant ramp metering");
    add_common(meter_cmd);
    add_demand(meter_cmd);
    auto* meter_horizon = add_dynamics(meter_cmd, "Longest simulated time when verifying, in hours");
    meter_cmd->add_option("--tol", cfg.tol, "Settling tolerance in veh/hr")->check(CLI::PositiveNumber);
    meter_cmd->add_flag("--verify", cfg.verify, "Simulate the metered network and compare with the plan");

    auto* analyze_cmd = app.add_subcommand("analyze", "Cooperativity scan and compartmental checks");
    add_common(analyze_cmd);
    add_demand(analyze_cmd);
    add_dynamics(analyze_cmd, "Length of the Lyapunov trace run, in hours");
    analyze_cmd->add_option("--samples", cfg.samples, "Number of sampled states")->check(CLI::PositiveNumber);
    analyze_cmd->add_option("--seed", cfg.seed, "Sampler seed");
    analyze_cmd->add_option("--output,-o", cfg.output, "CSV path for the Lyapunov trace");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadArguments;
    }

    try {
        const NetworkFile file = load_network(cfg.network_path);
        const Network& net = file.network;
        if (validate_cmd->parsed()) return cmd_validate(net);

        const ValidationReport report = validate(net);
        if (!report.ok()) {
            print_validation(report);
            return kRejected;
        }
        const Vector d = apply_overrides(net, file.demands, cfg.demands);
        if (simulate_cmd->parsed()) return cmd_simulate(net, d, cfg);
        if (equilibrium_cmd->parsed()) return cmd_equilibrium(net, d, cfg, eq_horizon->count() > 0);
        if (meter_cmd->parsed()) return cmd_meter(net, d, cfg, meter_horizon->count() > 0);
        if (analyze_cmd->parsed()) return cmd_analyze(net, d, cfg);
    } catch (const NotConverged& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNotConverged;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadArguments;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kBadArguments;
}
