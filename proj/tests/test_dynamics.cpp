#include <random>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "oracles.hpp"
#include "random_network.hpp"
#include "trafnet/dynamics.hpp"
#include "trafnet/errors.hpp"

using namespace trafnet;
using trafnet::testing::bundled;

namespace {

struct Example2 {
    Network net = bundled("example2.json").network;
    LinkIndex l1 = net.link_index("1"), l2 = net.link_index("2"), l3 = net.link_index("3"),
              l4 = net.link_index("4"), l5 = net.link_index("5");
    JunctionIndex v1 = net.junction_index("v1"), v2 = net.junction_index("v2");

    /// Unmetered equilibrium: both onramp queues infinite, ordinary densities (270, 30, 90).
    std::pair<State, Saturation> congested() const {
        State rho = State::Zero(5);
        rho[l2] = 270.0;
        rho[l3] = 30.0;
        rho[l5] = 90.0;
        Saturation sat(5, false);
        sat[l1] = sat[l4] = true;
        return {rho, sat};
    }
};

}  // namespace

TEST(JunctionAlpha, CongestedMergeOfBundledExample) {
    const Example2 ex;
    const auto [rho, sat] = ex.congested();
    const JunctionAlpha a2 = junction_alpha(ex.net, rho, ex.v2, sat);
    EXPECT_NEAR(a2.alpha, 1.0 / 3.0, 1e-15);
    EXPECT_EQ(a2.binding, std::vector<LinkIndex>{ex.l5});

    // Scanning both constraints directly: alpha * 1500 <= 1000 and alpha * 1500 <= 3666.67.
    const JunctionAlpha a1 = junction_alpha(ex.net, rho, ex.v1, sat);
    EXPECT_NEAR(a1.alpha, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(a1.binding, std::vector<LinkIndex>{ex.l2});
    EXPECT_NEAR(a1.margin, 1.0 - 2.0 / 3.0, 1e-12);
}

TEST(JunctionAlpha, EmptyNetworkIsUnconstrained) {
    const Example2 ex;
    const State zero = State::Zero(5);
    for (JunctionIndex v = 0; v < ex.net.junction_count(); ++v) {
        const JunctionAlpha a = junction_alpha(ex.net, zero, v);
        EXPECT_EQ(a.alpha, 1.0);
        EXPECT_TRUE(a.binding.empty());
    }
    const FlowSolution sol = flows(ex.net, zero);
    EXPECT_EQ(sol.outflow.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(sol.inflow.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Flows, CongestedEquilibriumOfBundledExample) {
    const Example2 ex;
    const auto [rho, sat] = ex.congested();
    const FlowSolution sol = flows(ex.net, rho, sat);
    EXPECT_NEAR(sol.outflow[ex.l1], 2000.0, 1e-9);
    EXPECT_NEAR(sol.outflow[ex.l2], 1000.0, 1e-9);
    EXPECT_NEAR(sol.outflow[ex.l3], 1000.0, 1e-9);
    EXPECT_NEAR(sol.outflow[ex.l4], 2000.0, 1e-9);
    EXPECT_NEAR(sol.outflow[ex.l5], 3000.0, 1e-9);

    const Vector d = input_flows(ex.net, {{"1", 2500.0}, {"4", 2500.0}});
    const Vector F = vector_field(ex.net, sol, d);
    EXPECT_NEAR(F[ex.l1], 500.0, 1e-9);
    EXPECT_NEAR(F[ex.l4], 500.0, 1e-9);
    for (LinkIndex l : {ex.l2, ex.l3, ex.l5}) EXPECT_NEAR(F[l], 0.0, 1e-9);
}

TEST(Flows, MeteredEquilibriumOfBundledExample) {
    const Example2 ex;
    Vector rates = Vector::Constant(5, kInfinity);
    rates[ex.l4] = 1750.0;
    const Network metered = ex.net.with_meters(rates);
    State rho = State::Zero(5);
    rho[ex.l1] = 75.0;  // demand 2500
    rho[ex.l2] = rho[ex.l3] = 37.5;
    rho[ex.l5] = 90.0;
    Saturation sat(5, false);
    sat[ex.l4] = true;
    const FlowSolution sol = flows(metered, rho, sat);
    const double expected[] = {2500.0, 1250.0, 1250.0, 1750.0, 3000.0};
    for (LinkIndex l = 0; l < 5; ++l) EXPECT_NEAR(sol.outflow[l], expected[l], 1e-9) << l;
    for (Eigen::Index v = 0; v < sol.alpha.size(); ++v) EXPECT_NEAR(sol.alpha[v], 1.0, 1e-12);
}

TEST(VectorField, SingleOnrampIntoEmptyRoad) {
    const Network net({"a", "b"},
                      {Link{"r", LinkKind::Onramp, std::nullopt, "a", Demand::piecewise_linear(30.0, 2000.0), {}},
                       Link{"x", LinkKind::Ordinary, "a", "b", Demand::piecewise_linear(30.0, 3000.0),
                            Supply::piecewise_linear(10.0, 400.0)}},
                      {{"r", "x", 1.0}});
    const Vector d = input_flows(net, {{"r", 100.0}});
    const Vector F = vector_field(net, State::Zero(2), d);
    EXPECT_DOUBLE_EQ(F[0], 100.0);
    EXPECT_DOUBLE_EQ(F[1], 0.0);
}

TEST(Mode, SupplyBoundJunctionInTheDivergeExample) {
    // Onramp densities equal and below 2c/9; link 3 nearly jammed so its supply limits v1.
    const Network net = bundled("example1.json").network;
    State rho(4);
    rho << 300.0, 300.0, 340.0, 100.0;
    const Mode mode = active_mode(net, rho);
    const JunctionIndex v1 = net.junction_index("v1");
    ASSERT_TRUE(mode.junctions[v1].bound);
    EXPECT_EQ(*mode.junctions[v1].bound, net.link_index("3"));
    EXPECT_EQ(mode.label(net).substr(0, 12), "v1:supply(3)");

    // Scaling rho_2 by 9/2 triples the demand for link 3 and lowers the flow into link 4.
    const FlowSolution before = flows(net, rho);
    State more = rho;
    more[1] *= 4.5;
    const FlowSolution after = flows(net, more);
    EXPECT_NEAR(after.alpha[v1], before.alpha[v1] / 3.0, 1e-12);
    EXPECT_NEAR(after.inflow[3], 2.0 / 3.0 * before.alpha[v1] * 300.0, 1e-9);
    EXPECT_LT(after.inflow[3], before.inflow[3]);
}

TEST(Mode, TiesAreDetectedOnRequest) {
    const Network net = bundled("example2.json").network;
    // Link 5 supply exactly equals the aggregate demand 3000 at v2: tie between alpha = 1 and the constraint.
    State rho = State::Zero(5);
    rho[net.link_index("2")] = 37.5;
    rho[net.link_index("4")] = 1750.0 / (100.0 / 3.0);
    rho[net.link_index("5")] = 90.0;
    EXPECT_THROW(active_mode(net, rho, TieBreak::Throw), DegenerateMode);
    const Mode m = active_mode(net, rho, TieBreak::LowestOrder);
    EXPECT_TRUE(m.junctions[net.junction_index("v2")].bound.has_value());
}

TEST(Jacobian, MatchesFiniteDifferencesOnBundledNetworks) {
    std::mt19937_64 rng(3);
    for (const char* name : {"example1.json", "example2.json", "freeway.json"}) {
        const Network net = bundled(name).network;
        for (int i = 0; i < 50; ++i) {
            const State rho = trafnet::testing::nondegenerate_state(net, rng);
            EXPECT_LE(trafnet::testing::jacobian_error(net, rho), 1e-5) << name;
        }
    }
}

TEST(Jacobian, MatchesFiniteDifferencesOnRandomNetworks) {
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
        const Network net = trafnet::testing::random_dag(rng);
        for (int i = 0; i < 10; ++i) {
            worst = std::max(worst, trafnet::testing::jacobian_error(net, trafnet::testing::nondegenerate_state(net, rng)));
        }
    }
    EXPECT_LE(worst, 1e-5);
}

TEST(Jacobian, FreeflowModeHasNonnegativeOffDiagonals) {
    std::mt19937_64 rng(9);
    for (int n = 0; n < 20; ++n) {
        const Network net = trafnet::testing::random_dag(rng);
        const StateSampler sample = uniform_sampler(net);
        for (int i = 0; i < 20; ++i) {
            const State rho = sample(rng);
            Matrix J = mode_jacobian(net, rho, Mode::unconstrained(net));
            J.diagonal().setZero();
            EXPECT_GE(J.minCoeff(), -1e-12);
        }
    }
}

TEST(Properties, RandomStatesOnRandomNetworks) {
    std::mt19937_64 rng(21);
    std::size_t checked = 0;
    for (int n = 0; n < 20; ++n) {
        const Network net = trafnet::testing::random_dag(rng);
        ASSERT_TRUE(validate(net).ok());
        const StateSampler sample = uniform_sampler(net);
        const Vector d = trafnet::testing::random_heavy_demand(net, rng);
        for (int i = 0; i < 50; ++i) {
            const State rho = sample(rng);
            auto failures = trafnet::testing::flow_property_failures(net, rho);
            auto boundary = trafnet::testing::invariance_failures(net, rho, d);
            failures.insert(failures.end(), boundary.begin(), boundary.end());
            EXPECT_TRUE(failures.empty()) << failures.front();
            ++checked;
        }
    }
    EXPECT_EQ(checked, 1000u);
}

TEST(Properties, FieldIsLipschitzWithSlopeBound) {
    std::mt19937_64 rng(23);
    for (int n = 0; n < 10; ++n) {
        const Network net = trafnet::testing::random_dag(rng);
        // Crude global bound: diagram slopes at zero density, amplified by the smallest split.
        double slope = 0.0;
        for (LinkIndex l = 0; l < net.link_count(); ++l) {
            slope = std::max(slope, std::abs(net.demand_derivative(l, 0.0)));
            if (!net.is_onramp(l)) slope = std::max(slope, std::abs(net.supply_derivative(l, 0.0)));
        }
        const Matrix& beta = net.split_matrix();
        const double beta_min = (beta.array() > 0.0).select(beta.array(), 1.0).minCoeff();
        const double K = 4.0 * slope * static_cast<double>(net.link_count()) / beta_min;
        const StateSampler sample = uniform_sampler(net);
        const Vector d = Vector::Zero(static_cast<Eigen::Index>(net.link_count()));
        for (int i = 0; i < 20; ++i) {
            const State x = sample(rng);
            const State y = x + 1e-3 * (sample(rng) - x);
            const double lhs = (vector_field(net, x, d) - vector_field(net, y, d)).lpNorm<1>();
            EXPECT_LE(lhs, K * (x - y).lpNorm<1>() + 1e-9);
        }
    }
}

TEST(ClampToDomain, ReportsRelativeCorrection) {
    const Network net = bundled("example2.json").network;
    State rho = State::Zero(5);
    rho[net.link_index("2")] = 361.8;
    rho[net.link_index("1")] = -0.9;
    const double worst = clamp_to_domain(net, rho);
    EXPECT_NEAR(worst, 0.01, 1e-12);  // onramp: 0.9 / 90
    EXPECT_EQ(rho[net.link_index("2")], 360.0);
    EXPECT_EQ(rho[net.link_index("1")], 0.0);
}
