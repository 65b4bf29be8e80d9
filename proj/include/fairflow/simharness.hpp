#pragma once

#include <optional>
#include <vector>

#include "fairflow/dispatch.hpp"
#include "fairflow/fairalloc.hpp"
#include "fairflow/model.hpp"
#include "fairflow/stochastic.hpp"

namespace fairflow {

/// Realized, qualified, and served order counts on one arc in one day.
struct ArcOutcome {
    Arc arc;
    double price = 0.0;
    int64_t realized = 0;
    int64_t qualified = 0;  // valuation >= posted price
    int64_t served = 0;     // min(f_with, qualified)
};

/// One (price, response) pair, the unit of learning data.
struct Observation {
    Arc arc;
    double price = 0.0;
    bool accepted = false;
};

enum class PaymentRegime {
    TwoPhase,   // drivers paid y(s,s') per arc driven, regardless of realization
    PriceOnly,  // drivers keep the served fare minus cost (Phase-1 / fixed-price)
};

struct DayOutcome {
    std::vector<ArcOutcome> arcs;
    double income = 0.0;   // sum of served * price
    double cost = 0.0;     // all planned drivers drive their arcs
    double revenue = 0.0;  // income - cost
    std::vector<double> driver_incomes;  // aligned with the routes argument
    std::vector<Observation> observations;
    std::vector<std::pair<Arc, int64_t>> realized_counts;  // all demand arcs
};

/// Draws one day of latent orders: per arc, Pois(lambda) orders with
/// N(mu, sigma^2) valuations clipped at 0. Reproducible per seed.
OrderList sample_day(const Instance& instance, uint64_t seed);

/// Executes a plan against a realized order multiset. Served orders are the
/// highest-valuation qualified requests up to capacity; planned with-rider
/// drivers without a materialized order drive the arc empty. Every realized
/// request on a posted arc becomes an observation, capacity or not. Driver
/// incomes follow the regime; TwoPhase requires a payment scheme.
DayOutcome execute_plan(const DispatchPlan& plan, const std::vector<DriverRoute>& routes,
                        const OrderList& realized, const Instance& instance,
                        PaymentRegime regime, const PaymentScheme* scheme = nullptr);

struct UnfairnessMetrics {
    double absolute = 0.0;       // Xi
    double relative = 0.0;       // xi = Xi / mean income
    bool relative_defined = false;
};

/// Xi = sqrt(mean squared deviation of incomes from the per-start-state mean),
/// xi = Xi / overall mean income (undefined when the mean is <= 0).
UnfairnessMetrics unfairness(const std::vector<double>& incomes,
                             const std::vector<State>& start_states);

struct FixedPriceResult {
    DispatchPlan plan;
    NlwcNetwork network;
    double ratio = 0.0;
    double value = 0.0;  // expected revenue at the tuned ratio
};

/// Distance-based fixed-price baseline: price each arc at ratio * distance,
/// dispatch through the same network machinery, tune the ratio over the grid
/// (default: 25 log-spaced multiples of the demand-weighted mean mu/distance).
FixedPriceResult fixed_price_baseline(const Instance& instance,
                                      const std::vector<double>& ratio_grid = {},
                                      const NlwcBuildOptions& options = {},
                                      const SolveConfig& config = {});

/// Builds the dispatch network for externally fixed per-arc prices (expected
/// rewards p * Theta(n, lambda~(p)) - c n). Used by the FP baseline and the
/// exploration phase of online learning.
NlwcNetwork build_nlwc_fixed_price(const Instance& instance,
                                   const std::vector<double>& arc_prices,
                                   const NlwcBuildOptions& options = {});

/// Average daily shortfall from the known-parameter optimum.
double average_regret(const std::vector<double>& daily_revenues, double optimal_value);

}  // namespace fairflow
