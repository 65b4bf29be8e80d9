#pragma once

#include <vector>

#include "fairflow/dispatch.hpp"
#include "fairflow/model.hpp"

namespace fairflow {

/// Poisson rate of qualified orders at price p: (1 - Phi((p - mu)/sigma)) * lambda.
double qualified_rate(double price, const GaussianPoissonParams& params);

/// Expected fulfilled orders with n drivers and Pois(lambda) qualified demand:
/// Theta(n, lambda) = n - sum_{i=0}^{n-1} (n - i) lambda^i e^-lambda / i!.
double theta(int64_t n, double lambda);

/// Theta(1..n_max) in one pass via the tail identity
/// Theta(n+1) - Theta(n) = P(X > n); cross-checked against theta() in tests.
std::vector<double> theta_all(int64_t n_max, double lambda);

/// Probability of exactly i qualified orders at price p. By the thinning
/// lemma this is the Poisson pmf at the thinned rate (equal to the
/// binomial-mixture series).
double pmf_qualified(int64_t i, const GaussianPoissonParams& params, double price);

/// Expected revenue of dispatching n drivers at price p:
/// p * Theta(n, lambda~(p)) - c * n.
double expected_revenue(int64_t n, double price, const GaussianPoissonParams& params,
                        double cost);

struct PriceSearch {
    int grid_points = 96;
    /// Golden-section interval target, as a fraction of sigma.
    double tolerance_factor = 1e-4;
};

struct OptimalPrice {
    double price = 0.0;
    double value = 0.0;  // r(n) = max_p R(n, p)
};

/// Maximizes R(n, p) over p in [max(0, mu - 5 sigma), mu + 5 sigma] by grid
/// scan plus golden-section refinement around the best bracket. Outside the
/// window the acceptance probability is within 3e-7 of 0 or 1, so the
/// revenue is monotone-dominated.
OptimalPrice optimal_price(int64_t n, const GaussianPoissonParams& params, double cost,
                           const PriceSearch& search = {});

/// Default table depth: ceil(lambda + 6 sqrt(lambda) + 1).
int64_t default_n_max(double lambda);

/// Optimal expected rewards r(1..n_max) with the maximizing price per count.
struct RewardTable {
    Arc arc;
    std::vector<double> rewards;
    std::vector<double> prices;
    bool concave = true;
    std::vector<int> concavity_violations;  // 1-based n where the marginal increases

    int64_t n_max() const { return static_cast<int64_t>(rewards.size()); }
};

RewardTable stochastic_reward_table(const GaussianPoissonParams& params, double cost,
                                    int64_t n_max, const PriceSearch& search = {});

/// NLWC network for a stochastic instance; with-rider reward sequences come
/// from per-arc reward tables (built concurrently across arcs).
struct StochasticNetwork {
    NlwcNetwork network;
    std::vector<RewardTable> tables;
    bool all_concave = true;
};

StochasticNetwork build_nlwc_stochastic(const Instance& instance,
                                        const NlwcBuildOptions& options = {},
                                        const PriceSearch& search = {});

struct StochasticSolveResult {
    DispatchPlan plan;          // prices are the tables' p*(f_with)
    NlwcSolution solution;
    NlwcNetwork network;
    bool ironed_tables = false; // some table was non-concave and got enveloped

    /// Optimal expected revenue (exact when no table was ironed).
    double value() const { return plan.revenue; }
};

/// Builds the reward-table network and solves it through the edge
/// decomposition. Non-concave tables (not expected for Gaussian-Poisson
/// parameters in the verified range) are ironed and flagged.
StochasticSolveResult solve_stochastic_dispatch(const Instance& instance,
                                                const NlwcBuildOptions& options = {},
                                                const PriceSearch& search = {},
                                                const SolveConfig& config = {});

/// Expected income of an arbitrary plan under the given true distributions:
/// sum over arcs of p * Theta(f_with, lambda~(p)).
double expected_plan_income(const DispatchPlan& plan, const Instance& truth);

}  // namespace fairflow
