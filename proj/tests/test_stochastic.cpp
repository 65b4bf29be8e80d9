#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fairflow/random.hpp"
#include "fairflow/stochastic.hpp"
#include "support/oracles.hpp"

using namespace fairflow;

TEST_CASE("qualified rate") {
    const GaussianPoissonParams params{10.0, 2.0, 4.0};
    SUBCASE("price at the mean thins to half") {
        CHECK(qualified_rate(10.0, params) == doctest::Approx(2.0));
    }
    SUBCASE("price far below the mean keeps everything") {
        CHECK(qualified_rate(0.0, params) == doctest::Approx(4.0).epsilon(1e-6));
    }
    SUBCASE("Monte Carlo agrees with the thinning rate") {
        Rng rng(99u);
        const int64_t samples = 100'000;
        double qualified = 0.0;
        for (int64_t i = 0; i < samples; ++i) {
            const int64_t count = rng.poisson(params.lambda);
            for (int64_t k = 0; k < count; ++k)
                if (rng.normal(params.mu, params.sigma) >= 10.0) qualified += 1.0;
        }
        const double mean = qualified / static_cast<double>(samples);
        // 3-sigma CLT band around lambda/2 = 2, with the sqrt(2) slack factor.
        CHECK(std::abs(mean - 2.0) <=
              3.0 * std::sqrt(2.0 / static_cast<double>(samples)) * std::sqrt(2.0));
    }
}

TEST_CASE("theta closed forms and Monte Carlo") {
    SUBCASE("no drivers, no fulfilment") {
        CHECK(theta(0, 3.0) == 0.0);
    }
    SUBCASE("one driver serves with probability 1 - e^-lambda") {
        CHECK(theta(1, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)));
    }
    SUBCASE("tail-sum route equals the literal formula") {
        for (double lambda : {0.0, 0.3, 2.0, 8.0, 33.0}) {
            const auto all = theta_all(12, lambda);
            for (int64_t n = 1; n <= 12; ++n)
                CHECK(all[static_cast<size_t>(n - 1)] ==
                      doctest::Approx(theta(n, lambda)).epsilon(1e-12));
        }
    }
    SUBCASE("Monte Carlo mean of min(n, Pois) matches") {
        Rng rng(1729u);
        const int64_t draws = 1'000'000;
        double total = 0.0;
        for (int64_t i = 0; i < draws; ++i)
            total += static_cast<double>(std::min<int64_t>(3, rng.poisson(2.0)));
        CHECK(std::abs(total / static_cast<double>(draws) - theta(3, 2.0)) <= 0.005);
    }
    SUBCASE("monotone in n and capped by min(n, lambda)") {
        for (double lambda : {0.5, 2.0, 8.0}) {
            double prev = 0.0;
            for (int64_t n = 1; n <= 20; ++n) {
                const double value = theta(n, lambda);
                CHECK(value >= prev - 1e-12);
                CHECK(value <= std::min(static_cast<double>(n), lambda) + 1e-12);
                prev = value;
            }
        }
    }
}

TEST_CASE("qualified pmf equals the binomial-mixture series") {
    const GaussianPoissonParams params{10.0, 2.0, 4.0};
    for (double price : {6.0, 10.0, 13.0}) {
        const double phi = 0.5 * std::erfc(-(price - params.mu) /
                                           (params.sigma * std::sqrt(2.0)));
        const double acceptance = 1.0 - phi;  // P(v >= price)
        for (int64_t i = 0; i <= 12; ++i) {
            const double direct = pmf_qualified(i, params, price);
            const double series = test::binomial_mixture_pmf(i, acceptance, params.lambda);
            CHECK(direct == doctest::Approx(series).epsilon(1e-9));
        }
    }
    SUBCASE("pmf normalizes after truncation") {
        double total = 0.0;
        for (int64_t i = 0; i < 200; ++i) total += pmf_qualified(i, params, 9.0);
        CHECK(total >= 1.0 - 1e-11);
        CHECK(total <= 1.0 + 1e-11);
    }
    SUBCASE("zero qualified orders has mass e^-rate") {
        CHECK(pmf_qualified(0, params, 10.0) == doctest::Approx(std::exp(-2.0)));
    }
}

TEST_CASE("expected revenue") {
    const GaussianPoissonParams params{10.0, 2.0, 4.0};
    SUBCASE("no drivers, no revenue") {
        CHECK(expected_revenue(0, 8.0, params, 3.0) == 0.0);
    }
    SUBCASE("free rides cost c per driver") {
        CHECK(expected_revenue(2, 0.0, params, 3.0) == doctest::Approx(-6.0));
    }
    SUBCASE("degree-1 homogeneity in money") {
        const double alpha = 3.5;
        const GaussianPoissonParams scaled{alpha * params.mu, alpha * params.sigma,
                                           params.lambda};
        for (int64_t n : {1, 2, 5})
            CHECK(expected_revenue(n, alpha * 8.0, scaled, alpha * 3.0) ==
                  doctest::Approx(alpha * expected_revenue(n, 8.0, params, 3.0)));
    }
}

TEST_CASE("optimal price search") {
    SUBCASE("tiny sigma prices just under the common valuation") {
        const GaussianPoissonParams params{10.0, 0.01, 0.8};
        const auto opt = optimal_price(1, params, 2.0);
        CHECK(opt.price > 9.9);
        CHECK(opt.price < 10.05);
    }
    SUBCASE("cost above any valuation leaves a negative best") {
        const GaussianPoissonParams params{5.0, 0.5, 2.0};
        const auto opt = optimal_price(1, params, 50.0);
        CHECK(opt.value < 0.0);
    }
    SUBCASE("dense grid cannot beat the returned price") {
        Rng rng(31415u);
        for (int trial = 0; trial < 12; ++trial) {
            const GaussianPoissonParams params{rng.uniform(2.0, 15.0), rng.uniform(0.3, 3.0),
                                               rng.uniform(0.3, 6.0)};
            const double cost = rng.uniform(0.0, 3.0);
            const int64_t n = 1 + static_cast<int64_t>(rng.next_u64() % 5);
            const auto opt = optimal_price(n, params, cost);
            const double lo = std::max(0.0, params.mu - 5.0 * params.sigma);
            const double hi = params.mu + 5.0 * params.sigma;
            double best = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < 100'000; ++i) {
                const double p = lo + (hi - lo) * i / 99'999.0;
                best = std::max(best, expected_revenue(n, p, params, cost));
            }
            CHECK(std::abs(best - opt.value) <= 1e-6 * std::max(1.0, std::abs(opt.value)));
        }
    }
    SUBCASE("money scaling moves the argmax linearly") {
        const GaussianPoissonParams params{8.0, 1.5, 3.0};
        const double alpha = 2.5;
        const GaussianPoissonParams scaled{alpha * params.mu, alpha * params.sigma,
                                           params.lambda};
        const auto base = optimal_price(2, params, 1.0);
        const auto big = optimal_price(2, scaled, alpha * 1.0);
        CHECK(big.price == doctest::Approx(alpha * base.price).epsilon(1e-3));
        CHECK(big.value == doctest::Approx(alpha * base.value).epsilon(1e-6));
    }
}

TEST_CASE("reward tables") {
    SUBCASE("paper grid point mu=1 sigma=0.5 lambda=5 is concave") {
        const GaussianPoissonParams params{1.0, 0.5, 5.0};
        const auto table = stochastic_reward_table(params, 0.0, default_n_max(params.lambda));
        CHECK(table.concave);
        double prev = table.rewards[0];
        double prev_diff = prev;
        for (int64_t n = 2; n <= table.n_max(); ++n) {
            const double diff = table.rewards[n - 1] - table.rewards[n - 2];
            CHECK(diff <= prev_diff + 1e-9);
            prev_diff = diff;
        }
    }
    SUBCASE("no demand leaves pure cost") {
        const GaussianPoissonParams params{5.0, 1.0, 0.0};
        const auto table = stochastic_reward_table(params, 2.0, 4);
        for (int64_t n = 1; n <= 4; ++n)
            CHECK(table.rewards[n - 1] == doctest::Approx(-2.0 * n));
    }
    SUBCASE("representative parameter sweeps stay monotone non-increasing") {
        for (double sigma : {0.2, 0.8, 1.4})
            for (double lambda : {2.0, 9.0, 21.0}) {
                const GaussianPoissonParams params{1.0, sigma, lambda};
                const auto table =
                    stochastic_reward_table(params, 0.0, default_n_max(lambda));
                CHECK(table.concave);
            }
    }
}

TEST_CASE("stochastic dispatch") {
    SUBCASE("single arc, one driver: value is r(1)") {
        Instance world;
        world.num_locations = 2;
        world.num_times = 2;
        world.travel_time = TravelTime::constant(1);
        world.cost = CostModel::location_pairs({{0, 1, 2.0}}, 0.0);
        world.initial_drivers.assign(4, 0);
        world.initial_drivers[world.state_index(State{0, 0})] = 1;
        world.demand =
            DistributionList{{Arc{State{0, 0}, State{1, 1}}, {10.0, 1.0, 3.0}}};
        const auto result = solve_stochastic_dispatch(world);
        const auto table = stochastic_reward_table({10.0, 1.0, 3.0}, 2.0, 1);
        CHECK(result.value() == doctest::Approx(table.rewards[0]).epsilon(1e-9));
        // The plan price is the table's optimal single-driver price.
        bool found = false;
        for (const PlanArc& pa : result.plan.arcs)
            if (pa.with_rider == 1) {
                CHECK(pa.price == doctest::Approx(table.prices[0]).epsilon(1e-6));
                found = true;
            }
        CHECK(found);
    }
    SUBCASE("zero drivers, zero value") {
        Instance world = test::toy_stochastic_world();
        world.initial_drivers.assign(world.num_states(), 0);
        const auto result = solve_stochastic_dispatch(world);
        CHECK(result.value() == doctest::Approx(0.0));
    }
    SUBCASE("deterministic limit approaches the point-mass plan") {
        // Tight sigma, large lambda: the stochastic optimum approaches the
        // deterministic revenue with all valuations at mu.
        Instance world;
        world.num_locations = 2;
        world.num_times = 2;
        world.travel_time = TravelTime::constant(1);
        world.cost = CostModel::location_pairs({{0, 1, 2.0}}, 0.0);
        world.initial_drivers.assign(4, 0);
        world.initial_drivers[world.state_index(State{0, 0})] = 2;
        world.demand =
            DistributionList{{Arc{State{0, 0}, State{1, 1}}, {10.0, 0.01, 40.0}}};
        const auto stochastic = solve_stochastic_dispatch(world);

        Instance deterministic = world;
        OrderList orders;
        for (int i = 0; i < 40; ++i)
            orders.push_back({Arc{State{0, 0}, State{1, 1}}, 10.0});
        deterministic.demand = std::move(orders);
        const NlwcNetwork net = build_nlwc(deterministic);
        const auto det = edge_decompose_solve(net, SolveMode::ExactRegular);
        CHECK(stochastic.value() == doctest::Approx(det.objective).epsilon(0.02));
    }
}
