#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fairflow/learn.hpp"
#include "fairflow/random.hpp"
#include "support/oracles.hpp"

using namespace fairflow;

namespace {

std::vector<PriceObservation> synthetic_responses(double mu, double sigma, int count,
                                                  uint64_t seed) {
    Rng rng(seed);
    std::vector<PriceObservation> log;
    for (int i = 0; i < count; ++i) {
        const double price = rng.uniform(mu - 2.0 * sigma, mu + 2.0 * sigma);
        const bool accepted = rng.normal(mu, sigma) >= price;
        PriceObservation row;
        row.price = price;
        (accepted ? row.accepts : row.rejects) = 1;
        log.push_back(row);
    }
    return log;
}

}  // namespace

TEST_CASE("log-likelihood basics") {
    const GaussianPrior prior{10.0, 2.0, 1.5, 0.5};
    SUBCASE("no observations peaks exactly at the prior means") {
        const double at_mode = log_likelihood(prior.mu_mu, prior.mu_sigma, prior, {});
        for (double dm : {-0.3, 0.2})
            for (double ds : {-0.1, 0.25})
                CHECK(log_likelihood(prior.mu_mu + dm, prior.mu_sigma + ds, prior, {}) <
                      at_mode);
    }
    SUBCASE("an accept at a throwaway price barely moves the likelihood") {
        const std::vector<PriceObservation> obs{{0.01, 1, 0}};
        const double with = log_likelihood(prior.mu_mu, prior.mu_sigma, prior, obs);
        const double without = log_likelihood(prior.mu_mu, prior.mu_sigma, prior, {});
        CHECK(std::abs(with - without) < 1e-6);
    }
    SUBCASE("sigma must be positive") {
        CHECK_THROWS_AS((void)log_likelihood(10.0, 0.0, prior, {}), std::invalid_argument);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(8888u);
    for (int trial = 0; trial < 20; ++trial) {
        const GaussianPrior prior{rng.uniform(3.0, 12.0), rng.uniform(0.5, 3.0),
                                  rng.uniform(0.5, 2.5), rng.uniform(0.2, 1.0)};
        const auto obs = synthetic_responses(prior.mu_mu, prior.mu_sigma, 40, 100 + trial);
        const double mu = prior.mu_mu + rng.uniform(-1.0, 1.0);
        const double sigma = std::max(0.2, prior.mu_sigma + rng.uniform(-0.4, 0.4));
        const auto grad = log_likelihood_gradient(mu, sigma, prior, obs);
        const double h = 1e-6;
        const double fd_mu = (log_likelihood(mu + h, sigma, prior, obs) -
                              log_likelihood(mu - h, sigma, prior, obs)) /
                             (2.0 * h);
        const double fd_sigma = (log_likelihood(mu, sigma + h, prior, obs) -
                                 log_likelihood(mu, sigma - h, prior, obs)) /
                                (2.0 * h);
        CHECK(grad[0] == doctest::Approx(fd_mu).epsilon(1e-5));
        CHECK(grad[1] == doctest::Approx(fd_sigma).epsilon(1e-5));
    }
}

TEST_CASE("Laplace posterior") {
    const GaussianPrior prior{8.0, 1.5, 1.2, 0.4};
    SUBCASE("zero observations returns the prior exactly") {
        const auto result = laplace_posterior(prior, {});
        CHECK(result.posterior.mu_mu == prior.mu_mu);
        CHECK(result.posterior.sigma_mu == prior.sigma_mu);
        CHECK(result.posterior.mu_sigma == prior.mu_sigma);
        CHECK(result.posterior.sigma_sigma == prior.sigma_sigma);
    }
    SUBCASE("synthetic truth is recovered within three posterior widths") {
        const double true_mu = 9.1, true_sigma = 1.4;
        std::vector<PriceObservation> obs;
        Rng rng(13u);
        for (int i = 0; i < 10'000; ++i) {
            const double price = rng.uniform(true_mu - 3.0, true_mu + 3.0);
            const bool accepted = rng.normal(true_mu, true_sigma) >= price;
            PriceObservation row;
            row.price = price;
            (accepted ? row.accepts : row.rejects) = 1;
            obs.push_back(row);
        }
        const auto result = laplace_posterior(prior, obs);
        CHECK(std::abs(result.posterior.mu_mu - true_mu) <=
              3.0 * result.posterior.sigma_mu + 0.05);
        CHECK(result.posterior.sigma_mu < prior.sigma_mu);
        CHECK_FALSE(result.fallback_mu);
    }
    SUBCASE("posterior width shrinks as the log grows (nested sets)") {
        const auto big = synthetic_responses(prior.mu_mu, prior.mu_sigma + 0.3, 800, 5u);
        std::vector<double> widths;
        for (size_t n : {100ul, 400ul, 800ul}) {
            const std::vector<PriceObservation> slice(big.begin(), big.begin() + n);
            widths.push_back(laplace_posterior(prior, slice).posterior.sigma_mu);
        }
        CHECK(widths[1] <= widths[0] + 1e-9);
        CHECK(widths[2] <= widths[1] + 1e-9);
    }
    SUBCASE("replaying the same log is bit-for-bit reproducible") {
        const auto obs = synthetic_responses(8.0, 1.2, 120, 98u);
        const auto a = laplace_posterior(prior, obs);
        const auto b = laplace_posterior(prior, obs);
        CHECK(a.posterior.mu_mu == b.posterior.mu_mu);
        CHECK(a.posterior.sigma_mu == b.posterior.sigma_mu);
        CHECK(a.posterior.mu_sigma == b.posterior.mu_sigma);
        CHECK(a.posterior.sigma_sigma == b.posterior.sigma_sigma);
    }
}

TEST_CASE("lambda estimate") {
    CHECK(mle_lambda({3, 5, 4}) == doctest::Approx(4.0));
    CHECK(mle_lambda({0, 0, 0}) == 0.0);
    CHECK_THROWS_AS((void)mle_lambda({}), std::invalid_argument);
    SUBCASE("CLT recovery of a Poisson rate") {
        Rng rng(555u);
        const double lambda = 6.5;
        std::vector<int64_t> counts;
        for (int day = 0; day < 1000; ++day) counts.push_back(rng.poisson(lambda));
        CHECK(std::abs(mle_lambda(counts) - lambda) <= 3.0 * std::sqrt(lambda / 1000.0));
    }
}

TEST_CASE("degenerate priors start at the optimum") {
    const Instance world = test::toy_stochastic_world();
    std::vector<GaussianPrior> priors;
    LearnOptions options;
    for (const ArcDistribution& d : world.distributions()) {
        priors.push_back(GaussianPrior{d.params.mu, 1e-6, d.params.sigma, 1e-7});
        options.initial_lambdas.push_back(d.params.lambda);
    }
    const LearningCurve curve = ts_run(world, 3, priors, 31u, options);
    REQUIRE(curve.days.size() == 3);
    // Day-one parameters equal the truth, so the plan value is the optimum.
    CHECK(curve.days[0].expected_revenue ==
          doctest::Approx(curve.optimal_value).epsilon(1e-6));
}

TEST_CASE("fixed seed reproduces the whole curve") {
    const Instance world = test::toy_stochastic_world();
    const auto priors = priors_from_fare_model(world, FareModel{4.0, 2.0, 0.4, 0.2, 0.5});
    LearnOptions options;
    const LearningCurve a = ts_run(world, 6, priors, 12345u, options);
    const LearningCurve b = ts_run(world, 6, priors, 12345u, options);
    REQUIRE(a.days.size() == b.days.size());
    for (size_t i = 0; i < a.days.size(); ++i) {
        CHECK(a.days[i].revenue == b.days[i].revenue);
        CHECK(a.days[i].expected_revenue == b.days[i].expected_revenue);
    }
    CHECK(a.regret == b.regret);
}

TEST_CASE("curve accounting matches average_regret") {
    const Instance world = test::toy_stochastic_world();
    const auto priors = priors_from_fare_model(world, FareModel{4.0, 2.0, 0.4, 0.2, 0.5});
    const LearningCurve curve = ts_run(world, 5, priors, 99u);
    std::vector<double> revenues;
    for (const LearningDay& day : curve.days) revenues.push_back(day.revenue);
    CHECK(curve.regret == doctest::Approx(average_regret(revenues, curve.optimal_value)));
}

TEST_CASE("EE explores then jumps to a fixed plan") {
    const Instance world = test::toy_stochastic_world();
    // Exploration must bracket the truth for the one-shot fit to land; use
    // priors centered near the true values, as a tuned fare model would be.
    std::vector<GaussianPrior> priors;
    for (const ArcDistribution& d : world.distributions())
        priors.push_back(
            GaussianPrior{d.params.mu * 1.1, 0.35 * d.params.mu, d.params.sigma,
                          0.4 * d.params.sigma});
    LearnOptions options;
    const int explore = 6;
    const LearningCurve curve = ee_run(world, 14, explore, priors, 2222u, options);
    REQUIRE(curve.days.size() == 14);
    // The fitted phase holds one fixed plan: expected revenue is constant.
    for (int day = explore + 1; day < 14; ++day)
        CHECK(curve.days[day].expected_revenue ==
              doctest::Approx(curve.days[explore].expected_revenue));
    // And the level jumps upward relative to the exploration average.
    double explore_avg = 0.0;
    for (int day = 0; day < explore; ++day) explore_avg += curve.days[day].expected_revenue;
    explore_avg /= explore;
    CHECK(curve.days[explore].expected_revenue > explore_avg);

    SUBCASE("explore_days = 0 plays the prior-fit plan from day one") {
        const LearningCurve imm = ee_run(world, 4, 0, priors, 2222u, options);
        REQUIRE(imm.days.size() == 4);
        for (const LearningDay& day : imm.days)
            CHECK(day.expected_revenue == doctest::Approx(imm.days[0].expected_revenue));
    }
    SUBCASE("day-20 style fit recovers truth on well-observed arcs") {
        // After exploration, fitted mu should be in the right neighbourhood
        // for arcs with enough observations.
        const Instance& truth = world;
        const LearningCurve long_curve = ee_run(world, 20, 19, priors, 777u, options);
        int well_observed = 0;
        for (size_t i = 0; i < long_curve.final_posteriors.size(); ++i) {
            const PosteriorState& st = long_curve.final_posteriors[i];
            int64_t n = 0;
            for (const PriceObservation& o : st.observations) n += o.accepts + o.rejects;
            if (n < 30) continue;
            ++well_observed;
            const double true_mu = truth.distributions()[i].params.mu;
            CHECK(std::abs(st.current.mu_mu - true_mu) <=
                  std::max(3.0 * st.current.sigma_mu, 0.35 * true_mu));
        }
        CHECK(well_observed >= 2);
    }
}
