#include "fairflow/learn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "fairflow/gaussian.hpp"
#include "fairflow/parallel.hpp"
#include "fairflow/random.hpp"

namespace fairflow {

double log_likelihood(double mu, double sigma, const GaussianPrior& prior,
                      const std::vector<PriceObservation>& observations) {
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
    const double zm = (mu - prior.mu_mu) / prior.sigma_mu;
    const double zs = (sigma - prior.mu_sigma) / prior.sigma_sigma;
    double ll = -0.5 * zm * zm - 0.5 * zs * zs - 2.0 * 0.9189385332046727418;
    for (const PriceObservation& obs : observations) {
        const double x = (obs.price - mu) / sigma;
        if (obs.rejects > 0) ll += static_cast<double>(obs.rejects) * log_normal_cdf(x);
        if (obs.accepts > 0) ll += static_cast<double>(obs.accepts) * log_normal_sf(x);
    }
    return ll;
}

std::array<double, 2> log_likelihood_gradient(double mu, double sigma,
                                              const GaussianPrior& prior,
                                              const std::vector<PriceObservation>& observations) {
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
    double dmu = -(mu - prior.mu_mu) / (prior.sigma_mu * prior.sigma_mu);
    double dsigma = -(sigma - prior.mu_sigma) / (prior.sigma_sigma * prior.sigma_sigma);
    for (const PriceObservation& obs : observations) {
        const double x = (obs.price - mu) / sigma;
        // d x / d mu = -1/sigma, d x / d sigma = -x / sigma.
        if (obs.rejects > 0) {
            // d/dx log Phi(x) = phi(x) / Phi(x), computed in log domain.
            const double ratio = std::exp(std::log(normal_pdf(x)) - log_normal_cdf(x));
            dmu += static_cast<double>(obs.rejects) * ratio * (-1.0 / sigma);
            dsigma += static_cast<double>(obs.rejects) * ratio * (-x / sigma);
        }
        if (obs.accepts > 0) {
            const double ratio = std::exp(std::log(normal_pdf(x)) - log_normal_sf(x));
            dmu += static_cast<double>(obs.accepts) * ratio * (1.0 / sigma);
            dsigma += static_cast<double>(obs.accepts) * ratio * (x / sigma);
        }
    }
    return {dmu, dsigma};
}

namespace {

// Diffuse stand-in used when options.flat_prior is set: wide enough that the
// data dominates, tight enough to keep one-sided (all-accept / all-reject)
// arcs bounded.
GaussianPrior flatten(const GaussianPrior& prior) {
    GaussianPrior flat = prior;
    flat.sigma_mu *= 1e3;
    flat.sigma_sigma *= 1e3;
    return flat;
}

}  // namespace

LaplaceResult laplace_posterior(const GaussianPrior& prior,
                                const std::vector<PriceObservation>& observations,
                                const LaplaceOptions& options) {
    LaplaceResult result;
    if (observations.empty() && !options.flat_prior) {
        // Conjugate identity: the Hessian of the log prior is
        // diag(-1/sigma_mu^2, -1/sigma_sigma^2).
        result.posterior = prior;
        result.mode_mu = prior.mu_mu;
        result.mode_sigma = prior.mu_sigma;
        return result;
    }
    const GaussianPrior effective = options.flat_prior ? flatten(prior) : prior;
    const double sigma_min = std::max(options.sigma_min, 1e-12);

    // Ascent in (mu, s) with sigma = sigma_min + exp(s).
    auto value = [&](double m, double s) {
        return log_likelihood(m, sigma_min + std::exp(s), effective, observations);
    };
    auto grad = [&](double m, double s) -> std::array<double, 2> {
        const double sig = sigma_min + std::exp(s);
        const auto g = log_likelihood_gradient(m, sig, effective, observations);
        return {g[0], g[1] * std::exp(s)};
    };

    double m = prior.mu_mu;
    double s = std::log(std::max(prior.mu_sigma - sigma_min, 1e-8));
    double f = value(m, s);
    std::array<double, 2> g = grad(m, s);
    // Inverse-Hessian approximation for the 2-variable BFGS ascent.
    double h00 = 1.0, h01 = 0.0, h11 = 1.0;
    const double scale = std::max({1.0, std::abs(prior.mu_mu), prior.mu_sigma});
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (std::max(std::abs(g[0]), std::abs(g[1])) <= options.gradient_tolerance * scale) break;
        double dm = h00 * g[0] + h01 * g[1];
        double ds = h01 * g[0] + h11 * g[1];
        // Ascent direction must correlate with the gradient; reset if not.
        if (dm * g[0] + ds * g[1] <= 0.0) {
            dm = g[0];
            ds = g[1];
            h00 = h11 = 1.0;
            h01 = 0.0;
        }
        double step = 1.0;
        double fm = f;
        double nm = m, ns = s;
        for (int ls = 0; ls < 60; ++ls) {
            nm = m + step * dm;
            ns = s + step * ds;
            const double fn = value(nm, ns);
            if (fn > f + 1e-4 * step * (dm * g[0] + ds * g[1])) {
                fm = fn;
                break;
            }
            step *= 0.5;
        }
        if (fm <= f && std::abs(fm - f) < 1e-15 * std::max(1.0, std::abs(f))) break;
        const auto gn = grad(nm, ns);
        // BFGS update of the inverse Hessian (for maximization, on -g).
        const double sx = nm - m, sy = ns - s;
        const double yx = g[0] - gn[0], yy = g[1] - gn[1];  // y = -(gn - g)
        const double sy_dot = sx * yx + sy * yy;
        if (sy_dot > 1e-12) {
            const double hyx = h00 * yx + h01 * yy;
            const double hyy = h01 * yx + h11 * yy;
            const double yhy = yx * hyx + yy * hyy;
            const double c1 = (sy_dot + yhy) / (sy_dot * sy_dot);
            h00 += c1 * sx * sx - (hyx * sx + sx * hyx) / sy_dot;
            h01 += c1 * sx * sy - (hyx * sy + sx * hyy) / sy_dot;
            h11 += c1 * sy * sy - (hyy * sy + sy * hyy) / sy_dot;
        }
        m = nm;
        s = ns;
        f = fm;
        g = gn;
    }
    result.iterations = iter;
    result.mode_mu = m;
    result.mode_sigma = sigma_min + std::exp(s);

    // Numerical Hessian at the mode, in the original coordinates.
    auto ll = [&](double mm, double ss) { return log_likelihood(mm, ss, effective, observations); };
    const double f0 = ll(result.mode_mu, result.mode_sigma);
    const double hm = options.hessian_step * std::max(1.0, std::abs(result.mode_mu));
    double hs = options.hessian_step * std::max(1.0, result.mode_sigma);
    if (result.mode_sigma - hs <= 0.0) hs = 0.5 * result.mode_sigma;
    const double h11n =
        (ll(result.mode_mu + hm, result.mode_sigma) - 2.0 * f0 +
         ll(result.mode_mu - hm, result.mode_sigma)) /
        (hm * hm);
    const double h22n =
        (ll(result.mode_mu, result.mode_sigma + hs) - 2.0 * f0 +
         ll(result.mode_mu, result.mode_sigma - hs)) /
        (hs * hs);

    result.posterior = prior;
    result.posterior.mu_mu = result.mode_mu;
    result.posterior.mu_sigma = result.mode_sigma;
    if (h11n < 0.0)
        result.posterior.sigma_mu = std::sqrt(-1.0 / h11n);
    else
        result.fallback_mu = true;  // keep the previous width
    if (h22n < 0.0)
        result.posterior.sigma_sigma = std::sqrt(-1.0 / h22n);
    else
        result.fallback_sigma = true;
    return result;
}

double mle_lambda(const std::vector<int64_t>& daily_counts) {
    if (daily_counts.empty()) throw std::invalid_argument("need at least one day of counts");
    double total = 0.0;
    for (int64_t c : daily_counts) total += static_cast<double>(c);
    return total / static_cast<double>(daily_counts.size());
}

namespace {

void append_observation(std::vector<PriceObservation>& log, double price, bool accepted,
                        size_t window) {
    if (!log.empty() && log.back().price == price) {
        (accepted ? log.back().accepts : log.back().rejects)++;
    } else {
        PriceObservation row;
        row.price = price;
        (accepted ? row.accepts : row.rejects) = 1;
        log.push_back(row);
    }
    if (log.size() > window) log.erase(log.begin(), log.begin() + (log.size() - window));
}

struct World {
    // Index demand arcs once; everything downstream keys on the index.
    std::unordered_map<Arc, size_t, ArcHash> arc_index;
    explicit World(const Instance& truth) {
        const DistributionList& dists = truth.distributions();
        for (size_t i = 0; i < dists.size(); ++i) arc_index[dists[i].arc] = i;
    }
};

Instance instance_with_params(const Instance& truth,
                              const std::vector<GaussianPoissonParams>& params) {
    Instance estimate = truth;
    DistributionList dists = truth.distributions();
    for (size_t i = 0; i < dists.size(); ++i) dists[i].params = params[i];
    estimate.demand = std::move(dists);
    return estimate;
}

double initial_lambda_for(const LearnOptions& options, size_t arc_index) {
    if (!options.initial_lambdas.empty()) return options.initial_lambdas.at(arc_index);
    return options.initial_lambda;
}

void record_day(const Instance& truth, const World& world, const DayOutcome& outcome,
                std::vector<PosteriorState>& states, const LearnOptions& options) {
    for (const auto& [arc, count] : outcome.realized_counts)
        states[world.arc_index.at(arc)].daily_counts.push_back(count);
    for (const Observation& obs : outcome.observations)
        append_observation(states[world.arc_index.at(obs.arc)].observations, obs.price,
                           obs.accepted, options.observation_window);
    (void)truth;
}

double known_parameter_optimum(const Instance& truth, const LearnOptions& options) {
    return solve_stochastic_dispatch(truth, options.build, options.search, options.solver)
        .plan.revenue;
}

}  // namespace

LearningCurve ts_run(const Instance& truth, int horizon,
                     const std::vector<GaussianPrior>& priors, uint64_t seed,
                     const LearnOptions& options) {
    if (truth.deterministic()) throw std::invalid_argument("ts_run needs distribution demand");
    const DistributionList& dists = truth.distributions();
    if (priors.size() != dists.size())
        throw std::invalid_argument("need one prior per demand arc");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");

    World world(truth);
    std::vector<PosteriorState> states(dists.size());
    for (size_t i = 0; i < dists.size(); ++i) {
        states[i].arc = dists[i].arc;
        states[i].prior = priors[i];
        states[i].current = priors[i];
    }

    LearningCurve curve;
    curve.optimal_value = known_parameter_optimum(truth, options);

    std::vector<double> revenues;
    for (int day = 1; day <= horizon; ++day) {
        Rng day_rng(Rng::derive(seed, static_cast<uint64_t>(day), 0x7501));
        LearningDay entry;
        entry.day = day;
        std::vector<GaussianPoissonParams> sampled(dists.size());
        for (size_t i = 0; i < dists.size(); ++i) {
            const GaussianPrior& cur = states[i].current;
            const double sigma_min =
                std::max(1e-9, options.sigma_min_fraction * states[i].prior.mu_sigma);
            GaussianPoissonParams p;
            p.mu = day_rng.normal(cur.mu_mu, cur.sigma_mu);
            p.sigma = std::max(sigma_min, day_rng.normal(cur.mu_sigma, cur.sigma_sigma));
            p.lambda = states[i].daily_counts.empty() ? initial_lambda_for(options, i)
                                                      : mle_lambda(states[i].daily_counts);
            states[i].lambda_hat = p.lambda;
            sampled[i] = p;
            entry.sampled.emplace_back(p.mu, p.sigma);
        }

        const Instance estimate = instance_with_params(truth, sampled);
        StochasticSolveResult solve =
            solve_stochastic_dispatch(estimate, options.build, options.search, options.solver);
        const auto routes = decompose_routes(solve.plan, truth);

        const OrderList orders =
            sample_day(truth, Rng::derive(seed, static_cast<uint64_t>(day), 0x5ad1));
        const DayOutcome outcome =
            execute_plan(solve.plan, routes, orders, truth, PaymentRegime::PriceOnly);
        record_day(truth, world, outcome, states, options);

        entry.income = outcome.income;
        entry.cost = outcome.cost;
        entry.revenue = outcome.revenue;
        entry.expected_revenue = expected_plan_income(solve.plan, truth) - solve.plan.cost;

        const bool scheduled =
            options.update_days.empty() ||
            std::find(options.update_days.begin(), options.update_days.end(), day) !=
                options.update_days.end();
        if (scheduled) {
            entry.updated = true;
            parallel_for(states.size(), [&](size_t i) {
                LaplaceOptions lap;
                lap.sigma_min = std::max(1e-9, options.sigma_min_fraction * states[i].prior.mu_sigma);
                const LaplaceResult res =
                    laplace_posterior(states[i].prior, states[i].observations, lap);
                states[i].current = res.posterior;
                states[i].hessian_fallback |= res.fallback_mu || res.fallback_sigma;
            });
            if (options.record_snapshots) curve.snapshots.emplace_back(day, states);
        }
        revenues.push_back(entry.revenue);
        curve.days.push_back(std::move(entry));
    }
    curve.regret = average_regret(revenues, curve.optimal_value);
    curve.final_posteriors = std::move(states);
    return curve;
}

LearningCurve ee_run(const Instance& truth, int horizon, int explore_days,
                     const std::vector<GaussianPrior>& priors, uint64_t seed,
                     const LearnOptions& options) {
    if (truth.deterministic()) throw std::invalid_argument("ee_run needs distribution demand");
    const DistributionList& dists = truth.distributions();
    if (priors.size() != dists.size())
        throw std::invalid_argument("need one prior per demand arc");
    if (horizon < 1 || explore_days < 0 || explore_days >= horizon)
        throw std::invalid_argument("explore days must be in [0, horizon)");

    World world(truth);
    std::vector<PosteriorState> states(dists.size());
    for (size_t i = 0; i < dists.size(); ++i) {
        states[i].arc = dists[i].arc;
        states[i].prior = priors[i];
        states[i].current = priors[i];
    }

    LearningCurve curve;
    curve.optimal_value = known_parameter_optimum(truth, options);

    // Plan fixed after the exploration phase.
    bool fitted = explore_days == 0;
    std::vector<GaussianPoissonParams> fit_params(dists.size());
    for (size_t i = 0; i < dists.size(); ++i) {
        fit_params[i].mu = priors[i].mu_mu;
        fit_params[i].sigma = std::max(1e-9, priors[i].mu_sigma);
        fit_params[i].lambda = initial_lambda_for(options, i);
    }
    StochasticSolveResult fixed_solve;
    std::vector<DriverRoute> fixed_routes;
    bool have_fixed_plan = false;

    std::vector<double> revenues;
    for (int day = 1; day <= horizon; ++day) {
        Rng day_rng(Rng::derive(seed, static_cast<uint64_t>(day), 0xee01));
        LearningDay entry;
        entry.day = day;

        if (day <= explore_days) {
            // Random posted prices; dispatch treats them as fixed and uses the
            // prior means plus the running lambda estimate.
            std::vector<double> prices(dists.size());
            std::vector<GaussianPoissonParams> guess(dists.size());
            for (size_t i = 0; i < dists.size(); ++i) {
                prices[i] = priors[i].mu_mu *
                            day_rng.uniform(options.explore_lo, options.explore_hi);
                guess[i].mu = priors[i].mu_mu;
                guess[i].sigma = std::max(1e-9, priors[i].mu_sigma);
                guess[i].lambda = states[i].daily_counts.empty()
                                      ? initial_lambda_for(options, i)
                                      : mle_lambda(states[i].daily_counts);
                entry.sampled.emplace_back(guess[i].mu, guess[i].sigma);
            }
            const Instance estimate = instance_with_params(truth, guess);
            NlwcNetwork net = build_nlwc_fixed_price(estimate, prices, options.build);
            const NlwcSolution solution =
                edge_decompose_solve(net, SolveMode::Ironed, options.solver);
            DispatchPlan plan = extract_plan(net, solution, truth);
            plan.stochastic = true;
            const auto routes = decompose_routes(plan, truth);
            const OrderList orders =
                sample_day(truth, Rng::derive(seed, static_cast<uint64_t>(day), 0x5ad1));
            const DayOutcome outcome =
                execute_plan(plan, routes, orders, truth, PaymentRegime::PriceOnly);
            record_day(truth, world, outcome, states, options);
            entry.income = outcome.income;
            entry.cost = outcome.cost;
            entry.revenue = outcome.revenue;
            entry.expected_revenue = expected_plan_income(plan, truth) - plan.cost;
        } else {
            if (!fitted) {
                parallel_for(states.size(), [&](size_t i) {
                    LaplaceOptions lap;
                    lap.flat_prior = true;
                    lap.sigma_min =
                        std::max(1e-9, options.sigma_min_fraction * states[i].prior.mu_sigma);
                    const LaplaceResult res =
                        laplace_posterior(states[i].prior, states[i].observations, lap);
                    // A one-sided exploration log cannot identify mu beyond the
                    // explored price range; clamp the flat-prior fit to it.
                    double price_cap = 0.0;
                    int64_t n_obs = 0;
                    for (const PriceObservation& o : states[i].observations) {
                        price_cap = std::max(price_cap, o.price);
                        n_obs += o.accepts + o.rejects;
                    }
                    if (n_obs == 0) {
                        fit_params[i].mu = states[i].prior.mu_mu;
                        fit_params[i].sigma = std::max(lap.sigma_min, states[i].prior.mu_sigma);
                    } else {
                        fit_params[i].mu = std::clamp(res.mode_mu, 0.0, 2.0 * price_cap);
                        fit_params[i].sigma = std::clamp(res.mode_sigma, lap.sigma_min,
                                                         10.0 * states[i].prior.mu_sigma);
                    }
                    fit_params[i].lambda = states[i].daily_counts.empty()
                                               ? initial_lambda_for(options, i)
                                               : mle_lambda(states[i].daily_counts);
                    states[i].current = res.posterior;
                    states[i].lambda_hat = fit_params[i].lambda;
                });
                fitted = true;
            }
            if (!have_fixed_plan) {
                const Instance estimate = instance_with_params(truth, fit_params);
                fixed_solve = solve_stochastic_dispatch(estimate, options.build, options.search,
                                                        options.solver);
                fixed_routes = decompose_routes(fixed_solve.plan, truth);
                have_fixed_plan = true;
            }
            for (size_t i = 0; i < dists.size(); ++i)
                entry.sampled.emplace_back(fit_params[i].mu, fit_params[i].sigma);
            const OrderList orders =
                sample_day(truth, Rng::derive(seed, static_cast<uint64_t>(day), 0x5ad1));
            const DayOutcome outcome = execute_plan(fixed_solve.plan, fixed_routes, orders, truth,
                                                    PaymentRegime::PriceOnly);
            record_day(truth, world, outcome, states, options);
            entry.income = outcome.income;
            entry.cost = outcome.cost;
            entry.revenue = outcome.revenue;
            entry.expected_revenue = expected_plan_income(fixed_solve.plan, truth) -
                                     fixed_solve.plan.cost;
        }
        revenues.push_back(entry.revenue);
        curve.days.push_back(std::move(entry));
    }
    curve.regret = average_regret(revenues, curve.optimal_value);
    curve.final_posteriors = std::move(states);
    return curve;
}

std::vector<GaussianPrior> priors_from_fare_model(const Instance& instance,
                                                  const FareModel& fare) {
    if (instance.deterministic())
        throw std::invalid_argument("fare-model priors need distribution demand");
    std::vector<GaussianPrior> priors;
    priors.reserve(instance.distributions().size());
    for (const ArcDistribution& d : instance.distributions()) {
        const double dist =
            instance.cost.distance_km(d.arc.from.location, d.arc.to.location);
        GaussianPrior prior;
        prior.mu_mu = std::max(1e-6, fare.per_km * dist + fare.base);
        prior.sigma_mu = std::max(1e-6, fare.mu_uncertainty * prior.mu_mu);
        prior.mu_sigma = std::max(1e-6, fare.sigma_fraction * prior.mu_mu);
        prior.sigma_sigma = std::max(1e-6, fare.sigma_uncertainty * prior.mu_sigma);
        priors.push_back(prior);
    }
    return priors;
}

}  // namespace fairflow
