#include <doctest.h>

#include "fairflow/circulation.hpp"
#include "fairflow/random.hpp"
#include "support/oracles.hpp"

using namespace fairflow;

TEST_CASE("forced cycle carries its bounds") {
    CirculationNetwork net;
    net.num_nodes = 3;
    net.edges = {{0, 1, 1, 1, 1.0}, {1, 2, 1, 1, 2.0}, {2, 0, 1, 1, 3.0}};
    const auto result = solve_min_cost_circulation(net);
    REQUIRE(result.status == CirculationStatus::Optimal);
    CHECK(result.flow == std::vector<int64_t>{1, 1, 1});
    CHECK(result.cost == doctest::Approx(6.0));
}

TEST_CASE("parallel edges saturated by the return lower bound") {
    CirculationNetwork net;
    net.num_nodes = 2;
    net.edges = {{0, 1, 0, 1, 1.0}, {0, 1, 0, 1, 5.0}, {1, 0, 2, 2, 0.5}};
    const auto result = solve_min_cost_circulation(net);
    REQUIRE(result.status == CirculationStatus::Optimal);
    CHECK(result.flow == std::vector<int64_t>{1, 1, 2});
    CHECK(result.cost == doctest::Approx(7.0));
}

TEST_CASE("negative-cost cycle is taken to capacity") {
    CirculationNetwork net;
    net.num_nodes = 2;
    net.edges = {{0, 1, 0, 3, -2.0}, {1, 0, 0, 3, 1.0}};
    const auto result = solve_min_cost_circulation(net);
    REQUIRE(result.status == CirculationStatus::Optimal);
    CHECK(result.flow == std::vector<int64_t>{3, 3});
    CHECK(result.cost == doctest::Approx(-3.0));
}

TEST_CASE("unmeetable lower bound reports infeasible, not a silent zero") {
    CirculationNetwork net;
    net.num_nodes = 2;
    net.edges = {{0, 1, 2, 3, 1.0}};  // nothing returns to node 0
    const auto result = solve_min_cost_circulation(net);
    CHECK(result.status == CirculationStatus::Infeasible);
    CHECK(result.flow.empty());
}

TEST_CASE("verify_flow pinpoints violations") {
    CirculationNetwork net;
    net.num_nodes = 2;
    net.edges = {{0, 1, 1, 2, 1.0}, {1, 0, 0, 2, 0.0}};
    SUBCASE("zero flow breaks the lower bound") {
        const auto report = verify_flow(net, {0, 0});
        CHECK_FALSE(report.feasible);
        CHECK(report.lower_bound_violations == std::vector<int>{0});
    }
    SUBCASE("conserving in-bounds flow passes") {
        const auto report = verify_flow(net, {1, 1});
        CHECK(report.feasible);
        CHECK(report.cost == doctest::Approx(1.0));
    }
    SUBCASE("non-conserving flow shows residuals") {
        const auto report = verify_flow(net, {2, 1});
        CHECK_FALSE(report.feasible);
        CHECK(report.node_imbalance[0] == -1);
        CHECK(report.node_imbalance[1] == 1);
    }
}

TEST_CASE("matches brute force on random small networks") {
    Rng rng(1234u);
    int solved = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const CirculationNetwork net = test::random_network(rng);
        const auto oracle = test::brute_force_circulation(net, 1'000'000);
        const auto result = solve_min_cost_circulation(net);
        if (!oracle) {
            CHECK(result.status == CirculationStatus::Infeasible);
            continue;
        }
        ++solved;
        REQUIRE(result.status == CirculationStatus::Optimal);
        CHECK(result.scaled_cost == *oracle);
        const auto report = verify_flow(net, result.flow);
        CHECK(report.feasible);
    }
    CHECK(solved > 100);  // the generator must exercise the solvable side
}

TEST_CASE("identical input gives identical output") {
    Rng rng(77u);
    const CirculationNetwork net = test::random_network(rng);
    const auto a = solve_min_cost_circulation(net);
    const auto b = solve_min_cost_circulation(net);
    CHECK(a.status == b.status);
    CHECK(a.flow == b.flow);
    CHECK(a.scaled_cost == b.scaled_cost);
}

TEST_CASE("uncapped infinity is rejected") {
    CirculationNetwork net;
    net.num_nodes = 2;
    net.edges = {{0, 1, 0, std::numeric_limits<int64_t>::max() / 2, 1.0},
                 {1, 0, 0, 1, 0.0}};
    CHECK_THROWS_AS((void)solve_min_cost_circulation(net), std::invalid_argument);
}

TEST_CASE("dimacs dump lists every edge") {
    CirculationNetwork net;
    net.num_nodes = 2;
    net.edges = {{0, 1, 0, 1, 1.5}, {1, 0, 0, 1, 0.0}};
    const std::string dump = to_dimacs(net);
    CHECK(dump.find("p min 2 2") != std::string::npos);
    CHECK(dump.find("a 1 2 0 1 1.5") != std::string::npos);
}
