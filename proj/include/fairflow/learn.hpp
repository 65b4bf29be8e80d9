#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fairflow/model.hpp"
#include "fairflow/simharness.hpp"

namespace fairflow {

/// Independent Gaussian priors over the valuation parameters of one arc:
/// mu ~ N(mu_mu, sigma_mu^2), sigma ~ N(mu_sigma, sigma_sigma^2).
struct GaussianPrior {
    double mu_mu = 0.0;
    double sigma_mu = 1.0;
    double mu_sigma = 1.0;
    double sigma_sigma = 1.0;
};

/// Responses grouped per posted price; order-free sufficient statistic of the
/// raw (price, accept/reject) log.
struct PriceObservation {
    double price = 0.0;
    int64_t accepts = 0;
    int64_t rejects = 0;
};

/// Per-arc learning state: the day-one prior, the current posterior, the
/// lambda estimate, and the full observation log the posterior is a pure
/// function of.
struct PosteriorState {
    Arc arc;
    GaussianPrior prior;      // initial, fixed
    GaussianPrior current;    // posterior after the latest update
    double lambda_hat = 0.0;
    std::vector<PriceObservation> observations;
    std::vector<int64_t> daily_counts;
    bool hessian_fallback = false;  // a curvature estimate was not negative definite
};

/// log L(mu, sigma): Gaussian prior densities at the standardized parameters
/// plus the accept/reject likelihood, all in log domain. sigma must be > 0.
double log_likelihood(double mu, double sigma, const GaussianPrior& prior,
                      const std::vector<PriceObservation>& observations);

/// Analytic gradient of log_likelihood in (mu, sigma).
std::array<double, 2> log_likelihood_gradient(double mu, double sigma,
                                              const GaussianPrior& prior,
                                              const std::vector<PriceObservation>& observations);

struct LaplaceOptions {
    double gradient_tolerance = 1e-8;
    int max_iterations = 300;
    double sigma_min = 1e-9;       // hard positivity floor for the mode search
    double hessian_step = 1e-4;    // relative symmetric-difference step
    /// Treat the prior as flat (observation likelihood only); used by the
    /// exploration-exploitation baseline's one-shot fit.
    bool flat_prior = false;
};

struct LaplaceResult {
    GaussianPrior posterior;
    double mode_mu = 0.0;
    double mode_sigma = 0.0;
    bool fallback_mu = false;     // H11 not negative, kept previous width
    bool fallback_sigma = false;  // H22 not negative
    int iterations = 0;
};

/// Laplace approximation: BFGS ascent to the mode of log L (sigma
/// reparameterized as log to stay positive), numerical Hessian by symmetric
/// difference quotients, posterior stds sqrt(-1/H_ii). With no observations
/// the posterior equals the prior exactly.
LaplaceResult laplace_posterior(const GaussianPrior& prior,
                                const std::vector<PriceObservation>& observations,
                                const LaplaceOptions& options = {});

/// Arithmetic mean of daily latent-order counts.
double mle_lambda(const std::vector<int64_t>& daily_counts);

struct LearnOptions {
    /// Posterior-update days (1-based); empty means every day.
    std::vector<int> update_days;
    /// sigma_min for sampled sigmas, as a fraction of the prior mu_sigma.
    double sigma_min_fraction = 1e-3;
    /// lambda used before any count data exists.
    double initial_lambda = 1.0;
    /// Optional per-arc override of initial_lambda (aligned with the demand
    /// arcs), for priors that encode a demand guess as well.
    std::vector<double> initial_lambdas;
    /// EE exploration prices: uniform in [lo, hi] x prior mu_mu.
    double explore_lo = 0.5;
    double explore_hi = 1.5;
    /// Observation cap per arc (sliding window over grouped price rows).
    size_t observation_window = 100'000;
    /// Keep a posterior snapshot for every update day in the curve.
    bool record_snapshots = false;
    NlwcBuildOptions build;
    PriceSearch search;
    SolveConfig solver;
};

struct LearningDay {
    int day = 0;                  // 1-based
    double revenue = 0.0;         // realized income - cost
    double expected_revenue = 0.0;  // plan value under the true parameters
    double income = 0.0;
    double cost = 0.0;
    std::vector<std::pair<double, double>> sampled;  // per arc (mu_hat, sigma_hat)
    bool updated = false;         // posterior refresh ran after this day
};

struct LearningCurve {
    std::vector<LearningDay> days;
    double optimal_value = 0.0;  // known-parameter optimum (OV)
    double regret = 0.0;         // average_regret over realized revenues
    std::vector<PosteriorState> final_posteriors;
    /// (day, per-arc posterior) for each update day, when recording is on.
    std::vector<std::pair<int, std::vector<PosteriorState>>> snapshots;
};

/// Thompson sampling over the horizon: sample (mu, sigma) from the current
/// posterior, estimate lambda by its daily average, solve the stochastic
/// dispatch on the sampled parameters, execute against a day drawn from the
/// true world, then refresh posteriors on scheduled days (each refresh is
/// recomputed from the initial prior plus the full log).
LearningCurve ts_run(const Instance& truth, int horizon,
                     const std::vector<GaussianPrior>& priors, uint64_t seed,
                     const LearnOptions& options = {});

/// Exploration-then-exploitation baseline: uniform random prices for the
/// first explore_days, a one-shot (flat-prior) fit, then a fixed plan.
LearningCurve ee_run(const Instance& truth, int horizon, int explore_days,
                     const std::vector<GaussianPrior>& priors, uint64_t seed,
                     const LearnOptions& options = {});

/// Linear fare model for day-one priors: mu_mu = per_km * distance + base,
/// widths as fixed fractions. Distances come from the instance geometry.
struct FareModel {
    double per_km = 1.0;
    double base = 0.0;
    double mu_uncertainty = 0.4;     // sigma_mu = fraction of mu_mu
    double sigma_fraction = 0.15;    // mu_sigma = fraction of mu_mu
    double sigma_uncertainty = 0.5;  // sigma_sigma = fraction of mu_sigma
};

std::vector<GaussianPrior> priors_from_fare_model(const Instance& instance,
                                                  const FareModel& fare);

}  // namespace fairflow
