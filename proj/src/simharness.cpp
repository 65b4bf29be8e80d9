#include "fairflow/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "fairflow/gaussian.hpp"
#include "fairflow/random.hpp"

namespace fairflow {

OrderList sample_day(const Instance& instance, uint64_t seed) {
    if (instance.deterministic())
        throw std::invalid_argument("sample_day needs distribution demand");
    Rng rng(seed);
    OrderList orders;
    for (const ArcDistribution& d : instance.distributions()) {
        const int64_t count = rng.poisson(d.params.lambda);
        for (int64_t i = 0; i < count; ++i) {
            const double v = std::max(0.0, rng.normal(d.params.mu, d.params.sigma));
            orders.push_back(LatentOrder{d.arc, v});
        }
    }
    return orders;
}

DayOutcome execute_plan(const DispatchPlan& plan, const std::vector<DriverRoute>& routes,
                        const OrderList& realized, const Instance& instance,
                        PaymentRegime regime, const PaymentScheme* scheme) {
    if (regime == PaymentRegime::TwoPhase && scheme == nullptr)
        throw std::invalid_argument("two-phase execution needs a payment scheme");

    DayOutcome outcome;
    auto realized_by_arc = group_orders(realized);  // valuations sorted descending

    std::map<Arc, const PlanArc*> plan_arcs;
    for (const PlanArc& pa : plan.arcs) plan_arcs[pa.arc] = &pa;

    // Realized counts are observable on every demand arc (riders place the
    // order before seeing a car), independent of posting.
    if (!instance.deterministic())
        for (const ArcDistribution& d : instance.distributions()) {
            auto it = realized_by_arc.find(d.arc);
            outcome.realized_counts.emplace_back(
                d.arc, it == realized_by_arc.end()
                           ? 0
                           : static_cast<int64_t>(it->second.size()));
        }

    std::map<Arc, int64_t> served_left;  // P1 fare assignment, in route order
    for (const PlanArc& pa : plan.arcs) {
        outcome.cost += pa.cost * static_cast<double>(pa.with_rider + pa.empty);
        if (!pa.posted) continue;
        ArcOutcome ao;
        ao.arc = pa.arc;
        ao.price = pa.price;
        auto it = realized_by_arc.find(pa.arc);
        if (it != realized_by_arc.end()) {
            const std::vector<double>& vals = it->second;
            ao.realized = static_cast<int64_t>(vals.size());
            for (double v : vals) {
                const bool accepted = v >= pa.price;
                if (accepted) ++ao.qualified;
                outcome.observations.push_back(Observation{pa.arc, pa.price, accepted});
            }
            ao.served = std::min(pa.with_rider, ao.qualified);
            outcome.income += static_cast<double>(ao.served) * pa.price;
        }
        served_left[pa.arc] = ao.served;
        outcome.arcs.push_back(ao);
    }
    outcome.revenue = outcome.income - outcome.cost;

    outcome.driver_incomes.reserve(routes.size());
    for (const DriverRoute& route : routes) {
        double u = 0.0;
        for (const RouteStep& step : route.steps) {
            u -= instance.cost(step.arc);
            if (regime == PaymentRegime::TwoPhase) {
                auto it = scheme->payments.find(step.arc);
                if (it == scheme->payments.end())
                    throw std::invalid_argument("route crosses an arc without a payment");
                u += it->second;
            } else if (step.with_rider) {
                auto it = served_left.find(step.arc);
                if (it != served_left.end() && it->second > 0) {
                    --it->second;
                    auto pa = plan_arcs.find(step.arc);
                    u += pa->second->price;
                }
            }
        }
        outcome.driver_incomes.push_back(u);
    }
    return outcome;
}

UnfairnessMetrics unfairness(const std::vector<double>& incomes,
                             const std::vector<State>& start_states) {
    if (incomes.empty() || incomes.size() != start_states.size())
        throw std::invalid_argument("need one start state per driver income");
    std::map<State, std::pair<double, int64_t>> per_state;  // sum, count
    double total = 0.0;
    for (size_t i = 0; i < incomes.size(); ++i) {
        auto& [sum, count] = per_state[start_states[i]];
        sum += incomes[i];
        ++count;
        total += incomes[i];
    }
    double ss = 0.0;
    for (size_t i = 0; i < incomes.size(); ++i) {
        const auto& [sum, count] = per_state[start_states[i]];
        const double mean = sum / static_cast<double>(count);
        ss += (incomes[i] - mean) * (incomes[i] - mean);
    }
    UnfairnessMetrics metrics;
    metrics.absolute = std::sqrt(ss / static_cast<double>(incomes.size()));
    const double mean_income = total / static_cast<double>(incomes.size());
    if (mean_income > 0.0) {
        metrics.relative = metrics.absolute / mean_income;
        metrics.relative_defined = true;
    }
    return metrics;
}

NlwcNetwork build_nlwc_fixed_price(const Instance& instance,
                                   const std::vector<double>& arc_prices,
                                   const NlwcBuildOptions& options) {
    if (instance.deterministic())
        throw std::invalid_argument("fixed-price build needs distribution demand");
    const DistributionList& dists = instance.distributions();
    if (arc_prices.size() != dists.size())
        throw std::invalid_argument("need one price per demand arc");

    NlwcNetwork net;
    net.num_states = instance.num_states();
    net.total_drivers = instance.total_drivers();
    {
        Instance skeleton = instance;
        skeleton.demand = OrderList{};
        NlwcNetwork base = build_nlwc(skeleton, options);
        net.edges = std::move(base.edges);
    }
    for (size_t i = 0; i < dists.size(); ++i) {
        const ArcDistribution& d = dists[i];
        const double p = arc_prices[i];
        const double c = instance.cost(d.arc);
        const int64_t n_max = std::max<int64_t>(
            1, std::min(default_n_max(d.params.lambda), instance.total_drivers()));
        const std::vector<double> th = theta_all(n_max, qualified_rate(p, d.params));
        std::vector<double> rewards(static_cast<size_t>(n_max));
        for (int64_t n = 1; n <= n_max; ++n)
            rewards[static_cast<size_t>(n - 1)] =
                p * th[static_cast<size_t>(n - 1)] - c * static_cast<double>(n);
        net.edges.push_back(NlwcEdge{NlwcEdgeKind::WithRider, instance.state_index(d.arc.from),
                                     instance.state_index(d.arc.to), 0, n_max, 0.0, d.arc, c,
                                     std::move(rewards),
                                     std::vector<double>(static_cast<size_t>(n_max), p)});
    }
    return net;
}

FixedPriceResult fixed_price_baseline(const Instance& instance,
                                      const std::vector<double>& ratio_grid,
                                      const NlwcBuildOptions& options,
                                      const SolveConfig& config) {
    if (instance.deterministic())
        throw std::invalid_argument("fixed-price baseline needs distribution demand");
    const DistributionList& dists = instance.distributions();
    std::vector<double> distances(dists.size());
    for (size_t i = 0; i < dists.size(); ++i)
        distances[i] =
            instance.cost.distance_km(dists[i].arc.from.location, dists[i].arc.to.location);

    std::vector<double> ratios = ratio_grid;
    if (ratios.empty()) {
        // 25 log-spaced multiples of the demand-weighted mean of mu/distance.
        double weighted = 0.0, weight = 0.0;
        for (size_t i = 0; i < dists.size(); ++i) {
            if (distances[i] <= 0.0) continue;
            const double w = dists[i].params.lambda * std::max(0.0, dists[i].params.mu);
            weighted += w * dists[i].params.mu / distances[i];
            weight += w;
        }
        if (weight <= 0.0)
            throw std::invalid_argument("no positive-distance demand to anchor the ratio grid");
        const double anchor = weighted / weight;
        for (int i = 0; i < 25; ++i) {
            const double t = static_cast<double>(i) / 24.0;
            ratios.push_back(anchor * 0.25 * std::pow(16.0, t));  // 0.25x .. 4x
        }
    }
    if (ratios.empty()) throw std::invalid_argument("empty ratio grid");

    FixedPriceResult best;
    best.value = -std::numeric_limits<double>::infinity();
    for (double ratio : ratios) {
        std::vector<double> prices(dists.size());
        for (size_t i = 0; i < dists.size(); ++i) prices[i] = ratio * distances[i];
        NlwcNetwork net = build_nlwc_fixed_price(instance, prices, options);
        const NlwcSolution solution = edge_decompose_solve(net, SolveMode::Ironed, config);
        if (solution.objective > best.value) {
            best.value = solution.objective;
            best.ratio = ratio;
            best.plan = extract_plan(net, solution, instance);
            best.plan.stochastic = true;
            best.network = std::move(net);
        }
    }
    return best;
}

double average_regret(const std::vector<double>& daily_revenues, double optimal_value) {
    if (daily_revenues.empty()) throw std::invalid_argument("need at least one day");
    double total = 0.0;
    for (double r : daily_revenues) total += optimal_value - r;
    return total / static_cast<double>(daily_revenues.size());
}

}  // namespace fairflow
