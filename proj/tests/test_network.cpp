#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "random_network.hpp"
#include "trafnet/errors.hpp"
#include "trafnet/network.hpp"

using namespace trafnet;
using trafnet::testing::bundled;

namespace {

Link onramp(const std::string& id, const std::string& head) {
    Link l;
    l.id = id;
    l.kind = LinkKind::Onramp;
    l.head = head;
    l.demand = Demand::piecewise_linear(100.0 / 3.0, 3000.0);
    return l;
}

Link road(const std::string& id, const std::string& tail, const std::string& head) {
    Link l;
    l.id = id;
    l.tail = tail;
    l.head = head;
    l.demand = Demand::piecewise_linear(100.0 / 3.0, 3000.0);
    l.supply = Supply::piecewise_linear(4000.0 / 360.0, 360.0);
    return l;
}

/// Chain r -> a -> b -> c -> sink with the given off-network fraction at every inner junction.
Network chain(double gamma) {
    return Network({"a", "b", "c", "d"},
                   {onramp("r", "a"), road("1", "a", "b"), road("2", "b", "c"), road("3", "c", "d")},
                   {{"r", "1", 1.0}, {"1", "2", 1.0 - gamma}, {"2", "3", 1.0 - gamma}});
}

}  // namespace

TEST(Network, ConstructionRejectsBrokenReferences) {
    EXPECT_THROW(Network({"a"}, {onramp("r", "zz")}, {}), std::invalid_argument);
    EXPECT_THROW(Network({"a", "b"}, {onramp("r", "a"), onramp("r", "a")}, {}), std::invalid_argument);
    EXPECT_THROW(Network({"a", "b"}, {onramp("r", "a"), road("1", "a", "b")}, {{"r", "x", 1.0}}),
                 std::invalid_argument);
    EXPECT_THROW(Network({"a", "a"}, {}, {}), std::invalid_argument);
}

TEST(Network, BundledExampleIsValid) {
    const Network net = bundled("example2.json").network;
    const ValidationReport report = validate(net);
    EXPECT_TRUE(report.ok()) << (report.violations.empty() ? "" : report.violations.front().message);
    EXPECT_EQ(net.onramps().size(), 2u);
    EXPECT_EQ(net.ordinary().size(), 3u);
    EXPECT_DOUBLE_EQ(net.offramp_fraction(net.link_index("1")), 0.0);
}

TEST(Network, RoutingMatricesOfBundledExample) {
    const Network net = bundled("example2.json").network;
    const RoutingMatrices rm = routing_matrices(net);
    auto row = [&](const char* id) {
        const LinkIndex l = net.link_index(id);
        return static_cast<Eigen::Index>(std::find(rm.ordinary.begin(), rm.ordinary.end(), l) - rm.ordinary.begin());
    };
    auto col = [&](const char* id) {
        const LinkIndex l = net.link_index(id);
        return static_cast<Eigen::Index>(std::find(rm.onramps.begin(), rm.onramps.end(), l) - rm.onramps.begin());
    };
    EXPECT_DOUBLE_EQ(rm.A(row("5"), row("2")), 1.0);
    EXPECT_DOUBLE_EQ(rm.A.sum(), 1.0);
    EXPECT_DOUBLE_EQ(rm.B(row("2"), col("1")), 0.5);
    EXPECT_DOUBLE_EQ(rm.B(row("3"), col("1")), 0.5);
    EXPECT_DOUBLE_EQ(rm.B(row("5"), col("4")), 1.0);
    EXPECT_DOUBLE_EQ(rm.B.sum(), 2.0);
    EXPECT_TRUE(rm.A.isLowerTriangular(0.0));
    EXPECT_DOUBLE_EQ(rm.A.diagonal().cwiseAbs().sum(), 0.0);

    // (2500, 2500) overloads link 5: 1250 + 2500.
    Vector s(2);
    s[col("1")] = 2500.0;
    s[col("4")] = 2500.0;
    const Vector f = balance_flows(rm, s);
    EXPECT_DOUBLE_EQ(f[row("5")], 3750.0);
}

TEST(Network, LinkOrderFollowsJunctionTopology) {
    const Network net = bundled("example2.json").network;
    const auto& order = net.link_order();
    ASSERT_EQ(order.size(), net.link_count());
    // Links entering v1 come before links entering v2, which come before link 5's head.
    EXPECT_LT(net.order_rank(net.link_index("1")), net.order_rank(net.link_index("2")));
    EXPECT_LT(net.order_rank(net.link_index("2")), net.order_rank(net.link_index("5")));
    EXPECT_LT(net.order_rank(net.link_index("4")), net.order_rank(net.link_index("5")));
}

TEST(Network, ForwardSubstitutionMatchesDenseSolve) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const Network net = trafnet::testing::random_dag(rng);
        ASSERT_TRUE(validate(net).ok());
        const RoutingMatrices rm = routing_matrices(net);
        ASSERT_TRUE(rm.A.isLowerTriangular(0.0));
        ASSERT_EQ(rm.A.diagonal().cwiseAbs().sum(), 0.0);
        const Vector c = Vector::Random(rm.A.rows()).cwiseAbs() * 1000.0;
        const Vector x = solve_unit_lower(rm.A, c);
        EXPECT_LE((x - trafnet::testing::dense_solve(rm.A, c)).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Validate, TwoCycleIsReported) {
    const Network net({"a", "b", "c"},
                      {onramp("r", "a"), road("ab", "a", "b"), road("ba", "b", "a"), road("bc", "b", "c")},
                      {{"r", "ab", 1.0}, {"ab", "ba", 0.5}, {"ab", "bc", 0.5}, {"ba", "ab", 1.0}});
    const ValidationReport report = validate(net);
    EXPECT_TRUE(report.has(Rule::Acyclicity));
    EXPECT_THROW(net.link_order(), CycleDetected);
    EXPECT_THROW(routing_matrices(net), CycleDetected);
}

TEST(Validate, SplitRules) {
    const Network over({"a", "b", "c"}, {onramp("r", "a"), road("1", "a", "b"), road("2", "a", "c")},
                       {{"r", "1", 0.7}, {"r", "2", 0.6}});
    EXPECT_TRUE(validate(over).has(Rule::SplitSum));

    const Network zero_turn({"a", "b", "c"}, {onramp("r", "a"), road("1", "a", "b"), road("2", "a", "c")},
                            {{"r", "1", 1.0}});
    EXPECT_TRUE(validate(zero_turn).has(Rule::PositiveTurning));

    const Network bad_range({"a", "b"}, {onramp("r", "a"), road("1", "a", "b")}, {{"r", "1", 1.5}});
    EXPECT_TRUE(validate(bad_range).has(Rule::SplitRange));

    const Network far({"a", "b", "c"}, {onramp("r", "a"), road("1", "a", "b"), road("2", "b", "c")},
                      {{"r", "1", 1.0}, {"r", "2", 0.5}, {"1", "2", 1.0}});
    EXPECT_TRUE(validate(far).has(Rule::SplitAdjacency));
}

TEST(Validate, StructuralRules) {
    const Network dangling({"a", "b"}, {onramp("r", "a")}, {});
    const ValidationReport report = validate(dangling);
    EXPECT_TRUE(report.has(Rule::OnrampWithoutOutflow));
    EXPECT_TRUE(report.has(Rule::JunctionWithoutInflow));

    Link odd = onramp("r", "a");
    odd.supply = Supply::piecewise_linear(1.0, 10.0);
    const Network kinds({"a", "b"}, {odd, road("1", "a", "b")}, {{"r", "1", 1.0}});
    EXPECT_TRUE(validate(kinds).has(Rule::LinkKind));

    Link flat = road("1", "a", "b");
    flat.demand = Demand::piecewise_linear(30.0, 1000.0);
    flat.supply = Supply::piecewise_linear(30.0, 100.0, 1000.0);
    const Network plateau({"a", "b"}, {onramp("r", "a"), flat}, {{"r", "1", 1.0}});
    EXPECT_TRUE(validate(plateau).has(Rule::CriticalPoint));

    Link negative = road("1", "a", "b");
    negative.demand = Demand::piecewise_linear(-1.0, 1000.0);
    const Network params({"a", "b"}, {onramp("r", "a"), negative}, {{"r", "1", 1.0}});
    EXPECT_TRUE(validate(params).has(Rule::DiagramParameters));
}

TEST(Topology, PolytreeAndMergeClasses) {
    const Network ex2 = bundled("example2.json").network;
    EXPECT_TRUE(is_polytree(ex2));
    EXPECT_FALSE(is_merge_only(ex2));

    const Network freeway = bundled("freeway.json").network;
    EXPECT_TRUE(is_polytree(freeway));
    const MergeStructure ms = merge_structure(freeway);
    EXPECT_TRUE(ms.satisfied());
    EXPECT_NEAR(ms.gamma[freeway.junction_index("v2")], 0.1, 1e-12);

    // Two parallel roads between the same junctions: connected, acyclic, not a polytree.
    const Network diamond({"a", "b"}, {onramp("r", "a"), road("1", "a", "b"), road("2", "a", "b")},
                          {{"r", "1", 0.5}, {"r", "2", 0.5}});
    EXPECT_FALSE(is_polytree(diamond));

    const Network uneven({"a", "b", "c"},
                         {onramp("r", "a"), onramp("q", "b"), road("1", "a", "b"), road("2", "b", "c")},
                         {{"r", "1", 1.0}, {"1", "2", 0.9}, {"q", "2", 0.8}});
    const MergeStructure m2 = merge_structure(uneven);
    EXPECT_TRUE(m2.merge_only);
    EXPECT_FALSE(m2.uniform_offramp);
}

TEST(Topology, RandomGeneratorsProduceTheirClasses) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const Network tree = trafnet::testing::random_polytree(rng);
        EXPECT_TRUE(validate(tree).ok());
        EXPECT_TRUE(is_polytree(tree));
        const Network merge = trafnet::testing::random_merge_network(rng);
        EXPECT_TRUE(validate(merge).ok());
        EXPECT_TRUE(merge_structure(merge).satisfied());
    }
}

TEST(Network, ChainHasUniformOfframps) {
    const Network net = chain(0.5);
    ASSERT_TRUE(validate(net).ok());
    const MergeStructure ms = merge_structure(net);
    EXPECT_TRUE(ms.satisfied());
    EXPECT_DOUBLE_EQ(ms.gamma[net.junction_index("b")], 0.5);
    EXPECT_DOUBLE_EQ(ms.gamma[net.junction_index("d")], 1.0);
}

TEST(Network, InputFlowsAndMeters) {
    const Network net = bundled("example2.json").network;
    const Vector d = input_flows(net, {{"1", 2500.0}, {"4", 1750.0}});
    EXPECT_DOUBLE_EQ(d[net.link_index("4")], 1750.0);
    EXPECT_DOUBLE_EQ(d[net.link_index("2")], 0.0);
    EXPECT_THROW(input_flows(net, {{"2", 1.0}}), std::invalid_argument);

    Vector rates = Vector::Constant(static_cast<Eigen::Index>(net.link_count()), kInfinity);
    rates[net.link_index("4")] = 1750.0;
    const Network metered = net.with_meters(rates);
    const LinkIndex r4 = net.link_index("4");
    EXPECT_DOUBLE_EQ(metered.demand(r4, 1000.0), 1750.0);
    EXPECT_DOUBLE_EQ(metered.demand(r4, 30.0), 1000.0);
    EXPECT_DOUBLE_EQ(metered.demand_supremum(r4), 1750.0);
    EXPECT_DOUBLE_EQ(metered.demand_derivative(r4, 1000.0), 0.0);
    EXPECT_DOUBLE_EQ(net.demand_supremum(r4), 6000.0);
}
