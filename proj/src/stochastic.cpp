#include "fairflow/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "fairflow/gaussian.hpp"
#include "fairflow/parallel.hpp"

namespace fairflow {

double qualified_rate(double price, const GaussianPoissonParams& params) {
    if (params.sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
    return (1.0 - normal_cdf((price - params.mu) / params.sigma)) * params.lambda;
}

namespace {

double poisson_pmf(int64_t i, double lambda) {
    if (lambda <= 0.0) return i == 0 ? 1.0 : 0.0;
    return std::exp(-lambda + static_cast<double>(i) * std::log(lambda) -
                    std::lgamma(static_cast<double>(i) + 1.0));
}

}  // namespace

double theta(int64_t n, double lambda) {
    if (n < 0 || lambda < 0.0) throw std::invalid_argument("theta needs n >= 0, lambda >= 0");
    if (n == 0) return 0.0;
    double missing = 0.0;  // sum_{i<n} (n - i) pmf(i)
    if (lambda < 700.0) {
        double pmf = std::exp(-lambda);
        for (int64_t i = 0; i < n; ++i) {
            missing += static_cast<double>(n - i) * pmf;
            pmf *= lambda / static_cast<double>(i + 1);
        }
    } else {
        for (int64_t i = 0; i < n; ++i)
            missing += static_cast<double>(n - i) * poisson_pmf(i, lambda);
    }
    return static_cast<double>(n) - missing;
}

std::vector<double> theta_all(int64_t n_max, double lambda) {
    if (n_max < 1 || lambda < 0.0) throw std::invalid_argument("bad theta_all arguments");
    std::vector<double> values(static_cast<size_t>(n_max));
    const bool log_space = lambda >= 700.0;
    double pmf = log_space ? poisson_pmf(0, lambda) : std::exp(-lambda);
    double cdf = pmf;
    double current = 1.0 - cdf;  // Theta(1) = P(X > 0)
    values[0] = current;
    for (int64_t n = 1; n < n_max; ++n) {
        pmf = log_space ? poisson_pmf(n, lambda) : pmf * lambda / static_cast<double>(n);
        cdf += pmf;
        current += std::max(0.0, 1.0 - cdf);  // + P(X > n)
        values[static_cast<size_t>(n)] = current;
    }
    return values;
}

double pmf_qualified(int64_t i, const GaussianPoissonParams& params, double price) {
    if (i < 0) throw std::invalid_argument("count must be >= 0");
    return poisson_pmf(i, qualified_rate(price, params));
}

double expected_revenue(int64_t n, double price, const GaussianPoissonParams& params,
                        double cost) {
    if (n < 0) throw std::invalid_argument("driver count must be >= 0");
    if (n == 0) return 0.0;
    return price * theta(n, qualified_rate(price, params)) - cost * static_cast<double>(n);
}

int64_t default_n_max(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    return static_cast<int64_t>(std::ceil(lambda + 6.0 * std::sqrt(lambda) + 1.0));
}

OptimalPrice optimal_price(int64_t n, const GaussianPoissonParams& params, double cost,
                           const PriceSearch& search) {
    if (n < 1) throw std::invalid_argument("optimal_price needs n >= 1");
    const double lo = std::max(0.0, params.mu - 5.0 * params.sigma);
    const double hi = std::max(lo, params.mu + 5.0 * params.sigma);
    auto revenue = [&](double p) { return expected_revenue(n, p, params, cost); };

    const int grid = std::max(4, search.grid_points);
    double best_p = lo, best_v = revenue(lo);
    int best_idx = 0;
    for (int i = 1; i < grid; ++i) {
        const double p = lo + (hi - lo) * static_cast<double>(i) / (grid - 1);
        const double v = revenue(p);
        if (v > best_v) {
            best_v = v;
            best_p = p;
            best_idx = i;
        }
    }
    // Golden-section refinement inside the bracketing neighbours.
    double a = lo + (hi - lo) * static_cast<double>(std::max(0, best_idx - 1)) / (grid - 1);
    double b = lo + (hi - lo) * static_cast<double>(std::min(grid - 1, best_idx + 1)) / (grid - 1);
    const double phi = 0.6180339887498949;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = revenue(x1), f2 = revenue(x2);
    const double tol = std::max(1e-14, search.tolerance_factor * params.sigma);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = revenue(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = revenue(x1);
        }
    }
    const double mid = 0.5 * (a + b);
    const double vm = revenue(mid);
    if (vm > best_v) {
        best_v = vm;
        best_p = mid;
    }
    return OptimalPrice{best_p, best_v};
}

RewardTable stochastic_reward_table(const GaussianPoissonParams& params, double cost,
                                    int64_t n_max, const PriceSearch& search) {
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    RewardTable table;
    table.rewards.resize(static_cast<size_t>(n_max));
    table.prices.resize(static_cast<size_t>(n_max));

    // Grid pass shares the Theta column per candidate price across all n.
    const double lo = std::max(0.0, params.mu - 5.0 * params.sigma);
    const double hi = std::max(lo, params.mu + 5.0 * params.sigma);
    const int grid = std::max(4, search.grid_points);
    std::vector<double> best_value(static_cast<size_t>(n_max),
                                   -std::numeric_limits<double>::infinity());
    std::vector<int> best_idx(static_cast<size_t>(n_max), 0);
    for (int i = 0; i < grid; ++i) {
        const double p = lo + (hi - lo) * static_cast<double>(i) / (grid - 1);
        const std::vector<double> th = theta_all(n_max, qualified_rate(p, params));
        for (int64_t n = 1; n <= n_max; ++n) {
            const double v = p * th[static_cast<size_t>(n - 1)] - cost * static_cast<double>(n);
            if (v > best_value[static_cast<size_t>(n - 1)]) {
                best_value[static_cast<size_t>(n - 1)] = v;
                best_idx[static_cast<size_t>(n - 1)] = i;
            }
        }
    }
    const double phi = 0.6180339887498949;
    const double tol = std::max(1e-14, search.tolerance_factor * params.sigma);
    for (int64_t n = 1; n <= n_max; ++n) {
        auto revenue = [&](double p) { return expected_revenue(n, p, params, cost); };
        const int idx = best_idx[static_cast<size_t>(n - 1)];
        double a = lo + (hi - lo) * static_cast<double>(std::max(0, idx - 1)) / (grid - 1);
        double b = lo + (hi - lo) * static_cast<double>(std::min(grid - 1, idx + 1)) / (grid - 1);
        double x1 = b - phi * (b - a);
        double x2 = a + phi * (b - a);
        double f1 = revenue(x1), f2 = revenue(x2);
        while (b - a > tol) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = revenue(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = revenue(x1);
            }
        }
        double best_p = 0.5 * (a + b);
        double best_v = revenue(best_p);
        if (best_value[static_cast<size_t>(n - 1)] > best_v) {
            best_v = best_value[static_cast<size_t>(n - 1)];
            best_p = lo + (hi - lo) * static_cast<double>(idx) / (grid - 1);
        }
        table.rewards[static_cast<size_t>(n - 1)] = best_v;
        table.prices[static_cast<size_t>(n - 1)] = best_p;
    }

    const double tol_concave =
        1e-9 * std::max(1.0, std::abs(table.rewards.empty() ? 0.0 : table.rewards[0]));
    double prev_diff = table.rewards[0];
    for (int64_t n = 2; n <= n_max; ++n) {
        const double diff =
            table.rewards[static_cast<size_t>(n - 1)] - table.rewards[static_cast<size_t>(n - 2)];
        if (diff > prev_diff + tol_concave) {
            table.concave = false;
            table.concavity_violations.push_back(static_cast<int>(n));
        }
        prev_diff = diff;
    }
    return table;
}

StochasticNetwork build_nlwc_stochastic(const Instance& instance,
                                        const NlwcBuildOptions& options,
                                        const PriceSearch& search) {
    instance.validate();
    if (instance.deterministic())
        throw std::invalid_argument("stochastic build needs distribution demand");

    StochasticNetwork result;
    const DistributionList& dists = instance.distributions();
    result.tables.resize(dists.size());
    parallel_for(dists.size(), [&](size_t i) {
        const ArcDistribution& d = dists[i];
        const int64_t n_cap = std::min(default_n_max(d.params.lambda), instance.total_drivers());
        result.tables[i] = stochastic_reward_table(d.params, instance.cost(d.arc),
                                                   std::max<int64_t>(1, n_cap), search);
        result.tables[i].arc = d.arc;
    });
    for (const RewardTable& t : result.tables)
        if (!t.concave) result.all_concave = false;

    NlwcNetwork& net = result.network;
    net.num_states = instance.num_states();
    net.total_drivers = instance.total_drivers();
    // Shared edge families are identical to the deterministic construction.
    {
        Instance skeleton = instance;
        skeleton.demand = OrderList{};
        NlwcNetwork base = build_nlwc(skeleton, options);
        net.edges = std::move(base.edges);
    }
    for (const RewardTable& t : result.tables) {
        net.edges.push_back(NlwcEdge{NlwcEdgeKind::WithRider, instance.state_index(t.arc.from),
                                     instance.state_index(t.arc.to), 0, t.n_max(), 0.0, t.arc,
                                     instance.cost(t.arc), t.rewards, t.prices});
    }
    return result;
}

StochasticSolveResult solve_stochastic_dispatch(const Instance& instance,
                                                const NlwcBuildOptions& options,
                                                const PriceSearch& search,
                                                const SolveConfig& config) {
    StochasticNetwork built = build_nlwc_stochastic(instance, options, search);
    StochasticSolveResult result;
    result.solution = edge_decompose_solve(built.network, SolveMode::Ironed, config);
    result.ironed_tables = result.solution.ironed;
    result.plan = extract_plan(built.network, result.solution, instance);
    result.plan.stochastic = true;
    result.network = std::move(built.network);
    return result;
}

double expected_plan_income(const DispatchPlan& plan, const Instance& truth) {
    if (truth.deterministic())
        throw std::invalid_argument("expected income needs distribution demand");
    std::unordered_map<Arc, GaussianPoissonParams, ArcHash> params;
    for (const ArcDistribution& d : truth.distributions()) params[d.arc] = d.params;
    double income = 0.0;
    for (const PlanArc& pa : plan.arcs) {
        if (pa.with_rider <= 0) continue;
        auto it = params.find(pa.arc);
        if (it == params.end()) continue;  // no demand materializes here
        income += pa.price * theta(pa.with_rider, qualified_rate(pa.price, it->second));
    }
    return income;
}

}  // namespace fairflow
