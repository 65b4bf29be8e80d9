#include "fairflow/fairalloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fairflow {

namespace {

struct UsedArc {
    Arc arc;
    int64_t flow = 0;       // F(s,s')
    int64_t with_rider = 0;
    double cost = 0.0;
    double price = 0.0;     // 0 when no rider is carried
};

std::vector<UsedArc> used_arcs(const DispatchPlan& plan) {
    std::vector<UsedArc> used;
    for (const PlanArc& pa : plan.arcs) {
        const int64_t f = pa.with_rider + pa.empty;
        if (f <= 0) continue;
        used.push_back(UsedArc{pa.arc, f, pa.with_rider, pa.cost,
                               pa.with_rider > 0 ? pa.price : 0.0});
    }
    return used;
}

std::vector<char> terminal_mask(const DispatchPlan& plan, const Instance& instance) {
    std::vector<char> terminal(instance.num_states(), 0);
    for (const PlanState& ps : plan.states)
        if (ps.leave > 0) terminal[instance.state_index(ps.state)] = 1;
    return terminal;
}

double plan_total_cost(const DispatchPlan& plan) {
    double total = 0.0;
    for (const PlanArc& pa : plan.arcs)
        total += pa.cost * static_cast<double>(pa.with_rider + pa.empty);
    return total;
}

std::vector<double> degree_balance(const DispatchPlan& plan, const Instance& instance) {
    std::vector<double> h(instance.num_states(), 0.0);
    for (const PlanState& ps : plan.states)
        h[instance.state_index(ps.state)] += static_cast<double>(ps.enter - ps.leave);
    return h;
}

}  // namespace

double PaymentScheme::offered_bound(const Instance& instance, const Arc& arc) const {
    const double diff = potential[instance.state_index(arc.from)] -
                        potential[instance.state_index(arc.to)];
    return std::max(0.0, diff + instance.cost(arc));
}

std::map<Arc, double> payments_from_potential(const std::vector<double>& potential,
                                              const DispatchPlan& plan,
                                              const Instance& instance) {
    if (potential.size() != static_cast<size_t>(instance.num_states()))
        throw std::invalid_argument("potential must be defined on all states");
    std::map<Arc, double> payments;
    for (const UsedArc& ua : used_arcs(plan)) {
        const double diff = potential[instance.state_index(ua.arc.from)] -
                            potential[instance.state_index(ua.arc.to)];
        payments[ua.arc] = diff + ua.cost;
    }
    return payments;
}

FairnessReport check_fairness(const DispatchPlan& plan, const PaymentScheme& scheme,
                              double income, const Instance& instance, double tolerance) {
    FairnessReport report;
    report.tolerance = tolerance;
    const std::vector<double>& P = scheme.potential;

    for (const PlanState& ps : plan.states) {
        const double p = P[instance.state_index(ps.state)];
        if (ps.leave > 0 && std::abs(p) > tolerance)
            report.terminal_violations.emplace_back(ps.state, p);
    }
    for (int idx = 0; idx < instance.num_states(); ++idx)
        if (P[idx] < -tolerance)
            report.nonnegativity_violations.emplace_back(instance.state_at(idx), P[idx]);

    // Condition 2 on every admissible arc: a driver deviating onto (s, s') at
    // the offered bound must not gain, which reduces to P(s') - P(s) <= c.
    for (const Arc& arc : all_admissible_arcs(instance)) {
        const double slack = P[instance.state_index(arc.to)] -
                             P[instance.state_index(arc.from)] - instance.cost(arc);
        if (slack > tolerance) report.subgame_violations.push_back({arc, slack});
    }

    double total_cost = 0.0;
    for (const UsedArc& ua : used_arcs(plan)) {
        total_cost += ua.cost * static_cast<double>(ua.flow);
        auto it = scheme.payments.find(ua.arc);
        if (it == scheme.payments.end()) {
            report.equality_violations.push_back({ua.arc, std::numeric_limits<double>::infinity()});
            continue;
        }
        const double y = it->second;
        const double target = P[instance.state_index(ua.arc.from)] -
                              P[instance.state_index(ua.arc.to)] + ua.cost;
        if (std::abs(y - target) > tolerance)
            report.equality_violations.push_back({ua.arc, y - target});
        if (y < ua.cost - tolerance) report.ir_violations.push_back({ua.arc, y - ua.cost});
    }

    const std::vector<double> h = degree_balance(plan, instance);
    double lhs = 0.0;
    for (int idx = 0; idx < instance.num_states(); ++idx) lhs += P[idx] * h[idx];
    report.budget_residual = lhs - (income - total_cost);

    // Envy: realized utility spread among drivers sharing a start state.
    report.envy_max_deviation = 0.0;
    const auto routes = decompose_routes(plan, instance);
    std::map<State, std::pair<double, double>> spread;  // min, max utility
    for (const DriverRoute& route : routes) {
        double u = 0.0;
        for (const RouteStep& step : route.steps) {
            auto it = scheme.payments.find(step.arc);
            const double y = it != scheme.payments.end() ? it->second
                                                         : scheme.offered_bound(instance, step.arc);
            u += y - instance.cost(step.arc);
        }
        auto [it, fresh] = spread.try_emplace(route.start, u, u);
        if (!fresh) {
            it->second.first = std::min(it->second.first, u);
            it->second.second = std::max(it->second.second, u);
        }
    }
    for (const auto& [state, mm] : spread)
        report.envy_max_deviation = std::max(report.envy_max_deviation, mm.second - mm.first);

    const double budget_tol = tolerance * std::max(1.0, std::abs(income));
    report.pass = report.terminal_violations.empty() && report.nonnegativity_violations.empty() &&
                  report.subgame_violations.empty() && report.equality_violations.empty() &&
                  report.ir_violations.empty() && std::abs(report.budget_residual) <= budget_tol &&
                  report.envy_max_deviation <= tolerance;
    return report;
}

PaymentScheme constructive_allocation(const DispatchPlan& plan, const Instance& instance,
                                      double income) {
    const double total_cost = plan_total_cost(plan);
    const double surplus = income - total_cost;
    if (surplus < -1e-9 * std::max(1.0, std::abs(income)))
        throw std::domain_error("income below total cost; no fair allocation is guaranteed");

    const std::vector<char> terminal = terminal_mask(plan, instance);
    const std::vector<UsedArc> used = used_arcs(plan);

    // Longest distance over the time-ordered DAG: used order arcs count 1,
    // any admissible arc counts 0, terminal states are pinned to 0.
    std::map<Arc, char> has_order;
    for (const UsedArc& ua : used)
        if (ua.with_rider > 0) has_order[ua.arc] = 1;

    std::vector<double> base(instance.num_states(), 0.0);
    std::vector<int> by_time(instance.num_states());
    std::iota(by_time.begin(), by_time.end(), 0);
    std::sort(by_time.begin(), by_time.end(), [&](int a, int b) {
        return instance.state_at(a).time > instance.state_at(b).time;  // latest first
    });
    for (int idx : by_time) {
        if (terminal[idx]) continue;  // pinned to 0
        const State from = instance.state_at(idx);
        double best = 0.0;
        for (int l2 = 0; l2 < instance.num_locations; ++l2)
            for (int t2 = from.time + 1; t2 < instance.num_times; ++t2) {
                const State to{l2, t2};
                if (!admissible(from, to, instance)) continue;
                const double len = has_order.count(Arc{from, to}) ? 1.0 : 0.0;
                best = std::max(best, len + base[instance.state_index(to)]);
            }
        base[idx] = best;
    }

    double denominator = 0.0;
    for (const UsedArc& ua : used)
        denominator += static_cast<double>(ua.flow) *
                       (base[instance.state_index(ua.arc.from)] -
                        base[instance.state_index(ua.arc.to)]);

    PaymentScheme scheme;
    scheme.potential.assign(instance.num_states(), 0.0);
    if (surplus > 1e-12 * std::max(1.0, std::abs(income))) {
        if (denominator <= 0.0)
            throw std::domain_error(
                "positive surplus but no used arc leaves a non-terminal state");
        const double scale = surplus / denominator;
        for (int idx = 0; idx < instance.num_states(); ++idx)
            scheme.potential[idx] = base[idx] * scale;
    }
    scheme.payments = payments_from_potential(scheme.potential, plan, instance);

    const FairnessReport report = check_fairness(plan, scheme, income, instance, 1e-9);
    if (!report.pass)
        throw std::domain_error(
            "no fair allocation exists for this plan (a driver leaves a state whose "
            "continuations still earn)");
    return scheme;
}

double distortion_objective(const DispatchPlan& plan, const Instance& instance,
                            const std::vector<double>& potential) {
    double objective = 0.0;
    for (const UsedArc& ua : used_arcs(plan)) {
        const double y = potential[instance.state_index(ua.arc.from)] -
                         potential[instance.state_index(ua.arc.to)] + ua.cost;
        const double d = ua.price - y;
        objective += static_cast<double>(ua.flow) * d * d;
    }
    return objective;
}

namespace {

// Constraint polyhedron for the QP, with equality rows for terminals folded
// in as variable pins.
struct Constraints {
    std::vector<char> pinned;               // terminal states, P = 0
    struct HalfSpace {                      // a . P <= b with a sparse in two coords
        int plus = -1;                      // coefficient +1
        int minus = -1;                     // coefficient -1
        double bound = 0.0;
    };
    std::vector<HalfSpace> halfspaces;
    std::vector<double> budget_coeff;  // h . P = budget_rhs
    double budget_rhs = 0.0;
    double budget_norm2 = 0.0;

    void pin(std::vector<double>& P) const {
        for (size_t i = 0; i < P.size(); ++i)
            if (pinned[i]) P[i] = 0.0;
    }

    double max_violation(const std::vector<double>& P) const {
        double v = 0.0;
        for (size_t i = 0; i < P.size(); ++i) {
            if (pinned[i]) v = std::max(v, std::abs(P[i]));
            v = std::max(v, -P[i]);
        }
        for (const HalfSpace& hs : halfspaces) {
            double lhs = 0.0;
            if (hs.plus >= 0) lhs += P[hs.plus];
            if (hs.minus >= 0) lhs -= P[hs.minus];
            v = std::max(v, lhs - hs.bound);
        }
        if (budget_norm2 > 0.0) {
            double lhs = 0.0;
            for (size_t i = 0; i < P.size(); ++i) lhs += budget_coeff[i] * P[i];
            v = std::max(v, std::abs(lhs - budget_rhs) / std::sqrt(budget_norm2));
        }
        return v;
    }
};

// Dykstra's alternating projections onto the intersection; exact in the limit,
// run a fixed number of sweeps with an early exit on stagnation.
void project(const Constraints& cons, std::vector<double>& P, int sweeps) {
    const size_t n = P.size();
    const size_t num_sets = 1 /*orthant+pins*/ + cons.halfspaces.size() +
                            (cons.budget_norm2 > 0.0 ? 1 : 0);
    std::vector<std::vector<double>> correction(num_sets, std::vector<double>(n, 0.0));
    std::vector<double> before(n);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double moved = 0.0;
        size_t set_id = 0;
        // Orthant with pinned coordinates.
        {
            std::vector<double>& corr = correction[set_id++];
            for (size_t i = 0; i < n; ++i) {
                const double z = P[i] + corr[i];
                const double projected = cons.pinned[i] ? 0.0 : std::max(0.0, z);
                corr[i] = z - projected;
                moved += std::abs(projected - P[i]);
                P[i] = projected;
            }
        }
        for (const Constraints::HalfSpace& hs : cons.halfspaces) {
            std::vector<double>& corr = correction[set_id++];
            double zp = hs.plus >= 0 ? P[hs.plus] + corr[hs.plus] : 0.0;
            double zm = hs.minus >= 0 ? P[hs.minus] + corr[hs.minus] : 0.0;
            double lhs = zp - zm;
            double shift = 0.0;
            const double norm2 = (hs.plus >= 0 ? 1.0 : 0.0) + (hs.minus >= 0 ? 1.0 : 0.0);
            if (lhs > hs.bound && norm2 > 0.0) shift = (lhs - hs.bound) / norm2;
            if (hs.plus >= 0) {
                const double projected = zp - shift;
                corr[hs.plus] = zp - projected;
                moved += std::abs(projected - P[hs.plus]);
                P[hs.plus] = projected;
            }
            if (hs.minus >= 0) {
                const double projected = zm + shift;
                corr[hs.minus] = zm - projected;
                moved += std::abs(projected - P[hs.minus]);
                P[hs.minus] = projected;
            }
        }
        if (cons.budget_norm2 > 0.0) {
            std::vector<double>& corr = correction[set_id++];
            before = P;
            for (size_t i = 0; i < n; ++i) before[i] += corr[i];
            double lhs = 0.0;
            for (size_t i = 0; i < n; ++i) lhs += cons.budget_coeff[i] * before[i];
            const double shift = (lhs - cons.budget_rhs) / cons.budget_norm2;
            for (size_t i = 0; i < n; ++i) {
                const double projected = before[i] - shift * cons.budget_coeff[i];
                corr[i] = before[i] - projected;
                moved += std::abs(projected - P[i]);
                P[i] = projected;
            }
        }
        if (sweep > 2 && moved < 1e-14) break;
    }
}

}  // namespace

QpResult qp_allocation(const DispatchPlan& plan, const Instance& instance, double income,
                       const QpOptions& options) {
    // Feasible interior start; also surfaces infeasibility as an exception.
    PaymentScheme start = constructive_allocation(plan, instance, income);
    const std::vector<UsedArc> used = used_arcs(plan);
    const std::vector<char> terminal = terminal_mask(plan, instance);
    const int n = instance.num_states();

    Constraints cons;
    cons.pinned.assign(terminal.begin(), terminal.end());
    for (const Arc& arc : all_admissible_arcs(instance)) {
        // P(s') - P(s) <= c, so a deviation paid at the offered bound cannot gain.
        cons.halfspaces.push_back(Constraints::HalfSpace{
            instance.state_index(arc.to), instance.state_index(arc.from), instance.cost(arc)});
    }
    for (const UsedArc& ua : used) {
        // P(s) - P(s') >= 0: equality payment stays individually rational.
        cons.halfspaces.push_back(Constraints::HalfSpace{instance.state_index(ua.arc.to),
                                                         instance.state_index(ua.arc.from), 0.0});
    }
    cons.budget_coeff = degree_balance(plan, instance);
    cons.budget_rhs = income - plan_total_cost(plan);
    cons.budget_norm2 = 0.0;
    for (double h : cons.budget_coeff) cons.budget_norm2 += h * h;

    // Gradient of sum_a F_a (d_a - (P(s_a) - P(t_a)))^2 and its Lipschitz bound.
    struct Term {
        int from, to;
        double weight;  // F
        double target;  // p - c
    };
    std::vector<Term> terms;
    for (const UsedArc& ua : used)
        terms.push_back(Term{instance.state_index(ua.arc.from), instance.state_index(ua.arc.to),
                             static_cast<double>(ua.flow), ua.price - ua.cost});
    auto gradient = [&](const std::vector<double>& P, std::vector<double>& g) {
        std::fill(g.begin(), g.end(), 0.0);
        for (const Term& t : terms) {
            const double gap = (P[t.from] - P[t.to]) - t.target;
            g[t.from] += 2.0 * t.weight * gap;
            g[t.to] -= 2.0 * t.weight * gap;
        }
    };
    double lipschitz = 0.0;
    {
        std::vector<double> row(n, 0.0);
        for (const Term& t : terms) {
            row[t.from] += 2.0 * t.weight;
            row[t.to] += 2.0 * t.weight;
        }
        for (double r : row) lipschitz = std::max(lipschitz, 2.0 * r);
    }
    if (lipschitz <= 0.0) lipschitz = 1.0;
    const double step = 1.0 / lipschitz;

    std::vector<double> P = start.potential;
    std::vector<double> grad(n), trial(n);
    std::vector<double> best = P;
    double best_objective = distortion_objective(plan, instance, P);
    double kkt = std::numeric_limits<double>::infinity();
    double p_scale = 1.0;
    for (int i = 0; i < n; ++i) p_scale = std::max(p_scale, std::abs(P[i]));
    int iter = 0;
    int stalled = 0;
    for (; iter < options.max_iterations; ++iter) {
        gradient(P, grad);
        trial = P;
        for (int i = 0; i < n; ++i) trial[i] -= step * grad[i];
        project(cons, trial, options.dykstra_sweeps);
        double move = 0.0;
        for (int i = 0; i < n; ++i) move = std::max(move, std::abs(trial[i] - P[i]));
        kkt = move / step / std::max(1.0, lipschitz * p_scale);
        P.swap(trial);
        const double objective = distortion_objective(plan, instance, P);
        if (objective < best_objective - 1e-14 * std::max(1.0, best_objective)) {
            stalled = 0;
            if (cons.max_violation(P) <= 1e-9) {
                best_objective = objective;
                best = P;
            }
        } else {
            ++stalled;
        }
        if (kkt <= options.kkt_tolerance) break;
        if (stalled > 500) break;  // projection noise floor reached
    }

    QpResult result;
    result.scheme.potential = best;
    result.scheme.payments = payments_from_potential(best, plan, instance);
    result.objective = best_objective;
    result.kkt_residual = kkt;
    result.iterations = iter;
    return result;
}

std::vector<double> driver_utilities(const std::vector<DriverRoute>& routes,
                                     const PaymentScheme& scheme, const Instance& instance) {
    std::vector<double> utilities;
    utilities.reserve(routes.size());
    for (const DriverRoute& route : routes) {
        double u = 0.0;
        for (const RouteStep& step : route.steps) {
            auto it = scheme.payments.find(step.arc);
            if (it == scheme.payments.end())
                throw std::invalid_argument("route crosses an arc without a defined payment");
            u += it->second - instance.cost(step.arc);
        }
        utilities.push_back(u);
    }
    return utilities;
}

}  // namespace fairflow
