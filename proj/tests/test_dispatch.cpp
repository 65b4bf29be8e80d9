#include <doctest.h>

#include <algorithm>
#include <map>

#include "fairflow/dispatch.hpp"
#include "fairflow/random.hpp"
#include "support/oracles.hpp"

using namespace fairflow;

namespace {

// Appendix-C style fixture: three locations, two orders out of W1, two
// drivers, costs 10 and 8.
Instance wuhan_fixture() {
    Instance instance;
    instance.num_locations = 3;  // 0 = W1, 1 = W2, 2 = H
    instance.num_times = 2;
    instance.travel_time = TravelTime::constant(1);
    instance.cost = CostModel::location_pairs({{0, 1, 10.0}, {0, 2, 8.0}}, 0.0);
    instance.initial_drivers.assign(instance.num_states(), 0);
    instance.initial_drivers[instance.state_index(State{0, 0})] = 2;
    instance.demand = OrderList{{Arc{State{0, 0}, State{1, 1}}, 20.0},
                                {Arc{State{0, 0}, State{2, 1}}, 10.0}};
    instance.validate();
    return instance;
}

}  // namespace

TEST_CASE("marginal rewards follow the k v_k - (k-1) v_{k-1} recursion") {
    CHECK(marginal_rewards({10.0, 9.0, 8.0}) == std::vector<double>{10.0, 8.0, 6.0});
    CHECK(marginal_rewards({10.0, 4.0, 4.0}) == std::vector<double>{10.0, -2.0, 4.0});
    CHECK(marginal_rewards({7.0}) == std::vector<double>{7.0});
    CHECK_THROWS_AS((void)marginal_rewards({1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("regularity check flags the exact violation") {
    Instance instance = wuhan_fixture();
    SUBCASE("descending valuations are regular") {
        OrderList orders;
        for (double v : {10.0, 9.0, 8.0})
            orders.push_back({Arc{State{0, 0}, State{1, 1}}, v});
        instance.demand = orders;
        CHECK(check_regularity(instance).regular);
    }
    SUBCASE("the 10,4,4 book violates at k = 3") {
        OrderList orders;
        for (double v : {10.0, 4.0, 4.0})
            orders.push_back({Arc{State{0, 0}, State{1, 1}}, v});
        instance.demand = orders;
        const auto report = check_regularity(instance);
        REQUIRE_FALSE(report.regular);
        REQUIRE(report.violations.size() == 1);
        CHECK(report.violations[0].k == 3);
        CHECK(report.violations[0].marginal == doctest::Approx(4.0));
        CHECK(report.violations[0].previous == doctest::Approx(-2.0));
    }
    SUBCASE("no orders is vacuously regular") {
        instance.demand = OrderList{};
        CHECK(check_regularity(instance).regular);
    }
}

TEST_CASE("single state network has only the trivial edges") {
    Instance instance;
    instance.num_locations = 1;
    instance.num_times = 1;
    instance.initial_drivers = {1};
    instance.demand = OrderList{};
    const NlwcNetwork net = build_nlwc(instance);
    // e_{O,I}, e_{I,s}, e_{s,O}; no admissible arcs exist in a 1-slot horizon.
    REQUIRE(net.edges.size() == 3);
    const auto solution = edge_decompose_solve(net, SolveMode::ExactRegular);
    CHECK(solution.objective == doctest::Approx(0.0));
}

TEST_CASE("single order yields one unit edge with reward v - c") {
    Instance instance;
    instance.num_locations = 2;
    instance.num_times = 2;
    instance.travel_time = TravelTime::constant(1);
    instance.cost = CostModel::location_pairs({{0, 1, 2.0}}, 0.0);
    instance.initial_drivers.assign(4, 0);
    instance.initial_drivers[instance.state_index(State{0, 0})] = 1;
    instance.demand = OrderList{{Arc{State{0, 0}, State{1, 1}}, 5.0}};
    const NlwcNetwork net = build_nlwc(instance);
    const NlwcEdge* with_rider = nullptr;
    for (const NlwcEdge& e : net.edges)
        if (e.kind == NlwcEdgeKind::WithRider) with_rider = &e;
    REQUIRE(with_rider != nullptr);
    CHECK(with_rider->upper == 1);
    CHECK(with_rider->reward_seq == std::vector<double>{3.0});
    const auto solution = edge_decompose_solve(net, SolveMode::ExactRegular);
    CHECK(solution.objective == doctest::Approx(3.0));
}

TEST_CASE("Wuhan fixture: revenue 12, prices 20 and 10, one driver per arc") {
    const Instance instance = wuhan_fixture();
    const NlwcNetwork net = build_nlwc(instance);
    const auto solution = edge_decompose_solve(net, SolveMode::ExactRegular);
    CHECK(solution.objective == doctest::Approx(12.0));

    const DispatchPlan plan = extract_plan(net, solution, instance);
    CHECK(plan.revenue == doctest::Approx(12.0));
    CHECK(plan.income == doctest::Approx(30.0));
    std::map<Arc, PlanArc> arcs;
    for (const PlanArc& pa : plan.arcs) arcs[pa.arc] = pa;
    const Arc to_w2{State{0, 0}, State{1, 1}};
    const Arc to_h{State{0, 0}, State{2, 1}};
    CHECK(arcs.at(to_w2).with_rider == 1);
    CHECK(arcs.at(to_w2).price == doctest::Approx(20.0));
    CHECK(arcs.at(to_h).with_rider == 1);
    CHECK(arcs.at(to_h).price == doctest::Approx(10.0));

    const auto routes = decompose_routes(plan, instance);
    REQUIRE(routes.size() == 2);
    for (const DriverRoute& route : routes) {
        CHECK(route.start == State{0, 0});
        REQUIRE(route.steps.size() == 1);
        CHECK(route.steps[0].with_rider);
    }
    CHECK(brute_force_optimal(instance) == doctest::Approx(12.0));
}

TEST_CASE("k-th price rule on a two-order arc") {
    Instance instance;
    instance.num_locations = 2;
    instance.num_times = 2;
    instance.travel_time = TravelTime::constant(1);
    instance.cost = CostModel::location_pairs({{0, 1, 1.0}}, 0.0);
    instance.initial_drivers.assign(4, 0);
    instance.initial_drivers[instance.state_index(State{0, 0})] = 2;
    const Arc arc{State{0, 0}, State{1, 1}};
    instance.demand = OrderList{{arc, 10.0}, {arc, 9.0}};
    const NlwcNetwork net = build_nlwc(instance);
    const auto solution = edge_decompose_solve(net, SolveMode::ExactRegular);
    const DispatchPlan plan = extract_plan(net, solution, instance);
    std::map<Arc, PlanArc> arcs;
    for (const PlanArc& pa : plan.arcs) arcs[pa.arc] = pa;
    CHECK(arcs.at(arc).with_rider == 2);
    CHECK(arcs.at(arc).price == doctest::Approx(9.0));  // p = v_2
    CHECK(plan.income == doctest::Approx(18.0));
}

TEST_CASE("concave envelope") {
    SUBCASE("concave input is returned unchanged") {
        const std::vector<double> r{5.0, 8.5, 10.0};
        CHECK(concave_envelope(r) == r);
    }
    SUBCASE("worked example [5, 6, 12] -> [5, 8.5, 12]") {
        const auto env = concave_envelope({5.0, 6.0, 12.0});
        REQUIRE(env.size() == 3);
        CHECK(env[0] == doctest::Approx(5.0));
        CHECK(env[1] == doctest::Approx(8.5));
        CHECK(env[2] == doctest::Approx(12.0));
    }
    SUBCASE("anchoring at (0,0) constrains the first increment") {
        // Without the anchor [1, 10] would already be 'concave'.
        const auto env = concave_envelope({1.0, 10.0});
        CHECK(env[0] == doctest::Approx(5.0));
        CHECK(env[1] == doctest::Approx(10.0));
    }
    SUBCASE("matches the ironing LP on random sequences") {
        Rng rng(424242u);
        for (int trial = 0; trial < 120; ++trial) {
            const size_t n = 1 + rng.next_u64() % 8;
            std::vector<double> r(n);
            for (double& v : r) v = rng.uniform(-10.0, 10.0);
            const auto sweep = concave_envelope(r);
            const auto lp = test::envelope_lp(r);
            REQUIRE(sweep.size() == lp.size());
            for (size_t i = 0; i < n; ++i) CHECK(sweep[i] == doctest::Approx(lp[i]).epsilon(1e-9));
            // Dominance and non-increasing increments.
            double prev = 0.0, prev_inc = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < n; ++i) {
                CHECK(sweep[i] >= r[i] - 1e-12);
                const double inc = sweep[i] - prev;
                CHECK(inc <= prev_inc + 1e-9);
                prev_inc = inc;
                prev = sweep[i];
            }
        }
    }
}

TEST_CASE("exact mode rejects non-regular instances; ironed mode bounds them") {
    Instance instance = wuhan_fixture();
    OrderList orders;
    const Arc arc{State{0, 0}, State{1, 1}};
    for (double v : {10.0, 4.0, 4.0}) orders.push_back({arc, v});
    instance.demand = orders;
    instance.initial_drivers[instance.state_index(State{0, 0})] = 3;
    const NlwcNetwork net = build_nlwc(instance);
    CHECK_THROWS_AS((void)edge_decompose_solve(net, SolveMode::ExactRegular), std::domain_error);

    const auto ironed = edge_decompose_solve(net, SolveMode::Ironed);
    CHECK(ironed.ironed);
    const double optimum = brute_force_optimal(instance);
    CHECK(ironed.objective >= optimum - 1e-9);          // envelope dominates
    CHECK(ironed.realized_revenue <= optimum + 1e-9);   // realization is honest
}

TEST_CASE("zero drivers solve to an empty plan") {
    Instance instance = wuhan_fixture();
    instance.initial_drivers.assign(instance.num_states(), 0);
    const NlwcNetwork net = build_nlwc(instance);
    const auto solution = edge_decompose_solve(net, SolveMode::ExactRegular);
    CHECK(solution.objective == doctest::Approx(0.0));
    for (int64_t f : solution.flow) CHECK(f == 0);
}

TEST_CASE("brute force handles the stated degenerate cases") {
    Instance instance = wuhan_fixture();
    SUBCASE("no orders means zero revenue") {
        instance.demand = OrderList{};
        CHECK(brute_force_optimal(instance) == doctest::Approx(0.0));
    }
    SUBCASE("an order below cost is not served") {
        instance.demand = OrderList{{Arc{State{0, 0}, State{1, 1}}, 3.0}};  // c = 10
        instance.initial_drivers.assign(instance.num_states(), 0);
        instance.initial_drivers[instance.state_index(State{0, 0})] = 1;
        CHECK(brute_force_optimal(instance) == doctest::Approx(0.0));
    }
}

TEST_CASE("Algorithm 1 equals brute force on random regular instances") {
    Rng rng(987654321u);
    const SolveConfig config;
    int nontrivial = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const Instance instance = test::random_instance(rng);
        const double oracle = brute_force_optimal(instance);
        const NlwcNetwork net = build_nlwc(instance);
        const auto solution = edge_decompose_solve(net, SolveMode::ExactRegular, config);
        // Integer money: compare in scaled units, exactly.
        CHECK(solution.scaled_objective == std::llround(oracle * 1e6));
        if (oracle > 0) ++nontrivial;

        // Aggregated flow feasibility on (V0, E0).
        const DispatchPlan plan = extract_plan(net, solution, instance);
        const auto routes = decompose_routes(plan, instance);
        CHECK(static_cast<int64_t>(routes.size()) == instance.total_drivers());
        std::map<std::pair<Arc, bool>, int64_t> traversals;
        for (const auto& route : routes)
            for (const RouteStep& step : route.steps)
                traversals[{step.arc, step.with_rider}]++;
        for (const PlanArc& pa : plan.arcs) {
            CHECK(traversals[{pa.arc, true}] == pa.with_rider);
            CHECK(traversals[{pa.arc, false}] == pa.empty);
        }
    }
    CHECK(nontrivial > 10);
}

TEST_CASE("ironed first differences are non-increasing in the decomposition") {
    Rng rng(5150u);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 2 + rng.next_u64() % 6;
        std::vector<double> r(n);
        for (double& v : r) v = rng.uniform(-5.0, 15.0);
        const auto env = concave_envelope(r);
        double prev = env[0];
        for (size_t k = 1; k < n; ++k) {
            const double w = env[k] - env[k - 1];
            CHECK(w <= prev + 1e-9);
            prev = w;
        }
    }
}
