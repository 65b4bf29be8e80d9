#pragma once

#include <optional>
#include <vector>

#include "fairflow/circulation.hpp"
#include "fairflow/dispatch.hpp"
#include "fairflow/model.hpp"
#include "fairflow/random.hpp"

namespace fairflow::test {

/// Exhaustive minimum-cost circulation: enumerates every integral flow within
/// the bounds and keeps the cheapest conserving one. Exact on integer-scaled
/// costs. Only viable for tiny networks.
std::optional<int64_t> brute_force_circulation(const CirculationNetwork& network,
                                               int64_t money_scale);

/// The ironing linear program solved by exhaustive vertex enumeration:
/// minimize sum r_bar(i) subject to r_bar >= r and concavity of the sequence
/// extended with r_bar(0) = 0. Independent of the hull sweep.
std::vector<double> envelope_lp(const std::vector<double>& rewards);

/// Binomial-mixture form of the qualified-order pmf (the series from the
/// stochastic model, truncated when terms fall below the floor).
double binomial_mixture_pmf(int64_t i, double acceptance, double lambda,
                            int64_t truncation = 400);

/// Survival function of the chi-square distribution (regularized upper
/// incomplete gamma), for goodness-of-fit p-values.
double chi_square_pvalue(double statistic, int degrees_of_freedom);

/// Chi-square goodness-of-fit of sampled counts against Pois(lambda); bins
/// with expected count < 5 are pooled.
double poisson_gof_pvalue(const std::vector<int64_t>& counts, double lambda);

struct RandomInstanceOptions {
    int max_locations = 3;
    int max_times = 3;
    int max_states = 8;
    int64_t max_drivers = 4;
    int max_orders = 6;
    int max_valuation = 20;
    int max_cost = 5;
    bool force_regular = true;
};

/// Random small deterministic instance with integer money; order valuations
/// are resampled per arc until the marginal-reward sequence is non-increasing
/// when force_regular is set.
Instance random_instance(Rng& rng, const RandomInstanceOptions& options = {});

struct RandomNetworkOptions {
    int max_nodes = 6;
    int max_edges = 10;
    int64_t max_bound = 3;
    int max_abs_cost = 9;
};

CirculationNetwork random_network(Rng& rng, const RandomNetworkOptions& options = {});

/// Small stochastic world with heterogeneous arcs (used by the Phase-2 /
/// simulation tests).
Instance toy_stochastic_world();

/// 5 x 5 grid, 10 slots, drivers spread at t = 0; the online-learning world.
Instance learning_world();

}  // namespace fairflow::test
