#include "fairflow/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace fairflow {

std::vector<double> marginal_rewards(const std::vector<double>& sorted_valuations) {
    for (size_t i = 1; i < sorted_valuations.size(); ++i)
        if (sorted_valuations[i] > sorted_valuations[i - 1])
            throw std::invalid_argument("valuations must be sorted descending");
    std::vector<double> marginals(sorted_valuations.size());
    for (size_t k = 0; k < sorted_valuations.size(); ++k) {
        const double kk = static_cast<double>(k + 1);
        marginals[k] = k == 0 ? sorted_valuations[0]
                              : kk * sorted_valuations[k] - (kk - 1.0) * sorted_valuations[k - 1];
    }
    return marginals;
}

RegularityReport check_regularity(const Instance& instance) {
    if (!instance.deterministic())
        throw std::invalid_argument("regularity check needs deterministic demand");
    RegularityReport report;
    const auto grouped = group_orders(instance.orders());
    std::vector<Arc> arcs;
    arcs.reserve(grouped.size());
    for (const auto& [arc, vals] : grouped) arcs.push_back(arc);
    std::sort(arcs.begin(), arcs.end());
    for (const Arc& arc : arcs) {
        const auto marginals = marginal_rewards(grouped.at(arc));
        for (size_t k = 1; k < marginals.size(); ++k) {
            if (marginals[k] > marginals[k - 1]) {
                report.regular = false;
                report.violations.push_back(RegularityViolation{
                    arc, static_cast<int>(k + 1), marginals[k], marginals[k - 1]});
            }
        }
    }
    return report;
}

namespace {

void add_common_edges(NlwcNetwork& net, const Instance& instance,
                      const NlwcBuildOptions& options) {
    const int64_t cap = net.total_drivers;
    net.edges.push_back(NlwcEdge{NlwcEdgeKind::SinkSource, net.sink_node(), net.source_node(), 0,
                                 cap, 0.0, Arc{}, 0.0, {}, {}});
    for (int idx = 0; idx < net.num_states; ++idx) {
        const State s = instance.state_at(idx);
        const int64_t n = instance.drivers_at(s);
        if (n > 0)
            net.edges.push_back(NlwcEdge{NlwcEdgeKind::InitDrivers, net.source_node(), idx, n, n,
                                         0.0, Arc{}, 0.0, {}, {}});
        net.edges.push_back(
            NlwcEdge{NlwcEdgeKind::Leave, idx, net.sink_node(), 0, cap, 0.0, Arc{}, 0.0, {}, {}});
    }
    for (int l = 0; l < instance.num_locations; ++l) {
        for (int t = 0; t < instance.num_times; ++t) {
            const State from{l, t};
            for (int l2 = 0; l2 < instance.num_locations; ++l2) {
                const int arrival = t + instance.travel_time(l, l2, t);
                const int last = options.empty_arcs == EmptyArcMode::Minimal
                                     ? arrival
                                     : instance.num_times - 1;
                for (int t2 = std::max(arrival, t + 1); t2 <= last && t2 < instance.num_times;
                     ++t2) {
                    const State to{l2, t2};
                    const Arc arc{from, to};
                    const double c = instance.cost(arc);
                    net.edges.push_back(NlwcEdge{NlwcEdgeKind::EmptyDrive,
                                                 instance.state_index(from),
                                                 instance.state_index(to), 0, cap, -c, arc, c,
                                                 {}, {}});
                }
            }
        }
    }
}

}  // namespace

NlwcNetwork build_nlwc(const Instance& instance, const NlwcBuildOptions& options) {
    instance.validate();
    if (!instance.deterministic())
        throw std::invalid_argument("build_nlwc needs deterministic demand");
    NlwcNetwork net;
    net.num_states = instance.num_states();
    net.total_drivers = instance.total_drivers();
    add_common_edges(net, instance, options);

    const auto grouped = group_orders(instance.orders());
    std::vector<Arc> arcs;
    arcs.reserve(grouped.size());
    for (const auto& [arc, vals] : grouped) arcs.push_back(arc);
    std::sort(arcs.begin(), arcs.end());
    for (const Arc& arc : arcs) {
        const std::vector<double>& vals = grouped.at(arc);
        const double c = instance.cost(arc);
        std::vector<double> rewards(vals.size());
        for (size_t k = 0; k < vals.size(); ++k)
            rewards[k] = (vals[k] - c) * static_cast<double>(k + 1);
        net.edges.push_back(NlwcEdge{NlwcEdgeKind::WithRider, instance.state_index(arc.from),
                                     instance.state_index(arc.to), 0,
                                     static_cast<int64_t>(vals.size()), 0.0, arc, c,
                                     std::move(rewards), vals});
    }
    return net;
}

std::vector<double> concave_envelope(const std::vector<double>& reward_seq) {
    const size_t n = reward_seq.size();
    if (n <= 1) return reward_seq;
    // Upper convex hull over (0, 0), (1, r1), ..., (n, rn) by monotone sweep;
    // a point is dropped while the turn through it is not strictly right.
    std::vector<std::pair<double, double>> hull;  // (x, y)
    hull.emplace_back(0.0, 0.0);
    for (size_t k = 1; k <= n; ++k) {
        const std::pair<double, double> p{static_cast<double>(k), reward_seq[k - 1]};
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            const double cross = (b.first - a.first) * (p.second - a.second) -
                                 (b.second - a.second) * (p.first - a.first);
            if (cross >= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(p);
    }
    std::vector<double> envelope(n);
    size_t seg = 0;
    for (size_t k = 1; k <= n; ++k) {
        while (seg + 1 < hull.size() && hull[seg + 1].first < static_cast<double>(k)) ++seg;
        const auto& a = hull[seg];
        const auto& b = hull[seg + 1];
        const double t = (static_cast<double>(k) - a.first) / (b.first - a.first);
        envelope[k - 1] = a.second + t * (b.second - a.second);
        // Exact at hull vertices; interpolation only between them.
        if (b.first == static_cast<double>(k)) envelope[k - 1] = b.second;
    }
    for (size_t k = 0; k < n; ++k) envelope[k] = std::max(envelope[k], reward_seq[k]);
    return envelope;
}

NlwcSolution edge_decompose_solve(const NlwcNetwork& network, SolveMode mode,
                                  const SolveConfig& config) {
    CirculationNetwork circ;
    circ.num_nodes = network.num_nodes();
    std::vector<std::pair<int, int>> unit_range(network.edges.size());  // [first, last) circ edge

    NlwcSolution solution;
    for (size_t i = 0; i < network.edges.size(); ++i) {
        const NlwcEdge& e = network.edges[i];
        const int first = static_cast<int>(circ.edges.size());
        if (e.kind == NlwcEdgeKind::WithRider) {
            std::vector<double> seq = concave_envelope(e.reward_seq);
            double gap = 0.0;
            for (size_t k = 0; k < seq.size(); ++k)
                gap = std::max(gap, std::abs(seq[k] - e.reward_seq[k]));
            const double tol =
                1e-9 * std::max(1.0, std::abs(e.reward_seq.empty() ? 0.0 : e.reward_seq[0]));
            if (gap > tol) {
                if (mode == SolveMode::ExactRegular)
                    throw std::domain_error(
                        "instance violates regularity; use Ironed mode or check_regularity");
                solution.ironed = true;
            } else {
                seq = e.reward_seq;  // keep raw values bit-exact when already concave
            }
            double prev = 0.0;
            for (size_t k = 0; k < seq.size(); ++k) {
                circ.edges.push_back(CirculationEdge{e.from, e.to, 0, 1, -(seq[k] - prev)});
                prev = seq[k];
            }
        } else {
            circ.edges.push_back(CirculationEdge{e.from, e.to, e.lower, e.upper, -e.unit_reward});
        }
        unit_range[i] = {first, static_cast<int>(circ.edges.size())};
    }

    const CirculationResult result = solve_min_cost_circulation(circ, config);
    if (result.status != CirculationStatus::Optimal)
        throw std::logic_error("NLWC circulation infeasible; network construction is broken");

    solution.flow.resize(network.edges.size(), 0);
    for (size_t i = 0; i < network.edges.size(); ++i) {
        int64_t total = 0;
        for (int j = unit_range[i].first; j < unit_range[i].second; ++j) total += result.flow[j];
        solution.flow[i] = total;
    }
    solution.scaled_objective = -result.scaled_cost;
    solution.objective = -result.cost;
    double realized = 0.0;
    for (size_t i = 0; i < network.edges.size(); ++i) {
        const NlwcEdge& e = network.edges[i];
        if (e.kind == NlwcEdgeKind::WithRider) {
            if (solution.flow[i] > 0) realized += e.reward_seq[solution.flow[i] - 1];
        } else {
            realized += e.unit_reward * static_cast<double>(solution.flow[i]);
        }
    }
    solution.realized_revenue = realized;
    return solution;
}

int64_t DispatchPlan::total_drivers() const {
    int64_t n = 0;
    for (const PlanState& s : states) n += s.enter;
    return n;
}

DispatchPlan extract_plan(const NlwcNetwork& network, const NlwcSolution& solution,
                          const Instance& instance) {
    if (solution.flow.size() != network.edges.size())
        throw std::invalid_argument("solution does not match network");
    DispatchPlan plan;
    plan.ironed = solution.ironed;
    std::map<Arc, PlanArc> arcs;
    std::map<State, PlanState> states;
    for (int idx = 0; idx < network.num_states; ++idx) {
        const State s = instance.state_at(idx);
        const int64_t n = instance.drivers_at(s);
        if (n > 0) states[s].enter = 0;  // ensure entry exists for driver states
    }
    double income = 0.0, cost = 0.0;
    for (size_t i = 0; i < network.edges.size(); ++i) {
        const NlwcEdge& e = network.edges[i];
        const int64_t f = solution.flow[i];
        switch (e.kind) {
            case NlwcEdgeKind::InitDrivers: {
                PlanState& ps = states[instance.state_at(e.to)];
                ps.state = instance.state_at(e.to);
                ps.enter += f;
                break;
            }
            case NlwcEdgeKind::Leave: {
                if (f > 0) {
                    PlanState& ps = states[instance.state_at(e.from)];
                    ps.state = instance.state_at(e.from);
                    ps.leave += f;
                }
                break;
            }
            case NlwcEdgeKind::EmptyDrive: {
                if (f > 0) {
                    PlanArc& pa = arcs[e.arc];
                    pa.arc = e.arc;
                    pa.empty += f;
                    pa.cost = e.cost;
                    cost += e.cost * static_cast<double>(f);
                }
                break;
            }
            case NlwcEdgeKind::WithRider: {
                PlanArc& pa = arcs[e.arc];
                pa.arc = e.arc;
                pa.with_rider = f;
                pa.cost = e.cost;
                // Posted price: the k-th price when serving k, the
                // single-order price when the arc goes unserved.
                const int64_t k = std::max<int64_t>(f, 1);
                if (!e.prices.empty()) {
                    pa.price = e.prices[static_cast<size_t>(
                        std::min<int64_t>(k, static_cast<int64_t>(e.prices.size())) - 1)];
                    pa.posted = true;
                }
                if (f > 0) {
                    income += e.reward_seq[f - 1] + e.cost * static_cast<double>(f);
                    cost += e.cost * static_cast<double>(f);
                }
                break;
            }
            case NlwcEdgeKind::SinkSource:
                break;
        }
    }
    for (auto& [state, ps] : states) {
        ps.state = state;
        plan.states.push_back(ps);
    }
    for (auto& [arc, pa] : arcs) plan.arcs.push_back(pa);
    plan.income = income;
    plan.cost = cost;
    plan.revenue = income - cost;
    plan.objective_bound = solution.ironed ? solution.objective : plan.revenue;
    return plan;
}

std::vector<DriverRoute> decompose_routes(const DispatchPlan& plan, const Instance& instance) {
    // Residual traversal counts, keyed by origin state.
    struct Out {
        Arc arc;
        bool with_rider;
        int64_t remaining;
    };
    std::map<State, std::vector<Out>> outgoing;
    std::map<State, int64_t> leave_left, balance;
    for (const PlanArc& pa : plan.arcs) {
        if ((pa.with_rider > 0 || pa.empty > 0) &&
            !admissible(pa.arc.from, pa.arc.to, instance))
            throw std::invalid_argument("plan drives an inadmissible arc");
        if (pa.with_rider > 0)
            outgoing[pa.arc.from].push_back(Out{pa.arc, true, pa.with_rider});
        if (pa.empty > 0) outgoing[pa.arc.from].push_back(Out{pa.arc, false, pa.empty});
        balance[pa.arc.from] -= pa.with_rider + pa.empty;
        balance[pa.arc.to] += pa.with_rider + pa.empty;
    }
    for (const PlanState& ps : plan.states) {
        leave_left[ps.state] = ps.leave;
        balance[ps.state] += ps.enter - ps.leave;
    }
    for (const auto& [state, b] : balance)
        if (b != 0) throw std::invalid_argument("plan is not flow-conserving");
    for (auto& [state, outs] : outgoing) {
        std::sort(outs.begin(), outs.end(), [](const Out& a, const Out& b) {
            if (a.arc.to.time != b.arc.to.time) return a.arc.to.time < b.arc.to.time;
            if (a.with_rider != b.with_rider) return a.with_rider;
            return a.arc.to.location < b.arc.to.location;
        });
    }

    std::vector<DriverRoute> routes;
    std::vector<PlanState> starts = plan.states;
    std::sort(starts.begin(), starts.end(),
              [](const PlanState& a, const PlanState& b) { return a.state < b.state; });
    for (const PlanState& ps : starts) {
        for (int64_t q = 0; q < ps.enter; ++q) {
            DriverRoute route;
            route.start = ps.state;
            State current = ps.state;
            for (;;) {
                auto it = outgoing.find(current);
                Out* next = nullptr;
                if (it != outgoing.end())
                    for (Out& out : it->second)
                        if (out.remaining > 0) {
                            next = &out;
                            break;
                        }
                if (next == nullptr) {
                    if (leave_left[current] <= 0)
                        throw std::invalid_argument("plan strands a driver; not conserving");
                    --leave_left[current];
                    break;
                }
                --next->remaining;
                route.steps.push_back(RouteStep{next->arc, next->with_rider});
                current = next->arc.to;
            }
            routes.push_back(std::move(route));
        }
    }
    return routes;
}

namespace {

struct ArcBook {
    Arc arc;
    double cost = 0.0;
    std::vector<double> best_income;  // best_income[f] = max_{k <= min(f, o)} k * v_k
};

// All DAG routes (arc-index sequences) starting from each state, empty route
// included.
void enumerate_routes(const State& start, const std::vector<Arc>& arcs,
                      const std::vector<std::vector<int>>& out_arcs, const Instance& instance,
                      std::vector<int>& current, std::vector<std::vector<int>>& result) {
    result.push_back(current);
    for (int arc_id : out_arcs[instance.state_index(start)]) {
        current.push_back(arc_id);
        enumerate_routes(arcs[arc_id].to, arcs, out_arcs, instance, current, result);
        current.pop_back();
    }
}

}  // namespace

double brute_force_optimal(const Instance& instance, const BruteForceGuard& guard) {
    instance.validate();
    if (!instance.deterministic())
        throw std::invalid_argument("brute force needs deterministic demand");
    if (instance.num_states() > guard.max_states)
        throw std::invalid_argument("brute force guard: too many states");
    if (instance.total_drivers() > guard.max_drivers)
        throw std::invalid_argument("brute force guard: too many drivers");
    if (static_cast<int>(instance.orders().size()) > guard.max_orders)
        throw std::invalid_argument("brute force guard: too many orders");

    const std::vector<Arc> arcs = all_admissible_arcs(instance);
    std::vector<std::vector<int>> out_arcs(instance.num_states());
    for (size_t i = 0; i < arcs.size(); ++i)
        out_arcs[instance.state_index(arcs[i].from)].push_back(static_cast<int>(i));

    const auto grouped = group_orders(instance.orders());
    const int64_t drivers = instance.total_drivers();
    std::vector<ArcBook> books(arcs.size());
    for (size_t i = 0; i < arcs.size(); ++i) {
        books[i].arc = arcs[i];
        books[i].cost = instance.cost(arcs[i]);
        books[i].best_income.assign(static_cast<size_t>(drivers) + 1, 0.0);
        auto it = grouped.find(arcs[i]);
        if (it == grouped.end()) continue;
        const std::vector<double>& vals = it->second;
        for (int64_t f = 1; f <= drivers; ++f) {
            double best = 0.0;
            const int64_t kmax = std::min<int64_t>(f, static_cast<int64_t>(vals.size()));
            for (int64_t k = 1; k <= kmax; ++k)
                best = std::max(best, static_cast<double>(k) * vals[k - 1]);
            books[i].best_income[static_cast<size_t>(f)] = best;
        }
    }

    // Driver groups by start state; routes within a group are chosen as a
    // multiset, since same-state drivers are interchangeable.
    struct Group {
        State start;
        int64_t count;
        std::vector<std::vector<int>> routes;
    };
    std::vector<Group> groups;
    int64_t combination_estimate = 1;
    for (int idx = 0; idx < instance.num_states(); ++idx) {
        const State s = instance.state_at(idx);
        const int64_t n = instance.drivers_at(s);
        if (n == 0) continue;
        Group g;
        g.start = s;
        g.count = n;
        std::vector<int> scratch;
        enumerate_routes(s, arcs, out_arcs, instance, scratch, g.routes);
        // Multiset count: C(routes + n - 1, n).
        double combos = 1.0;
        for (int64_t j = 0; j < n; ++j)
            combos = combos * static_cast<double>(g.routes.size() + n - 1 - j) /
                     static_cast<double>(j + 1);
        combination_estimate = static_cast<int64_t>(
            std::min<double>(4e18, static_cast<double>(combination_estimate) * combos));
        groups.push_back(std::move(g));
    }
    if (combination_estimate > guard.max_combinations)
        throw std::invalid_argument("brute force guard: too many route combinations");

    std::vector<int64_t> usage(arcs.size(), 0);
    double running = 0.0;  // sum over arcs of best_income[usage] - usage * cost
    double best_revenue = 0.0;

    auto apply_route = [&](const std::vector<int>& route, int direction) {
        for (int arc_id : route) {
            ArcBook& book = books[arc_id];
            if (direction > 0) {
                const int64_t f = ++usage[arc_id];
                running += book.best_income[f] - book.best_income[f - 1] - book.cost;
            } else {
                const int64_t f = usage[arc_id]--;
                running -= book.best_income[f] - book.best_income[f - 1] - book.cost;
            }
        }
    };

    // Nested multiset enumeration over groups.
    auto recurse = [&](auto&& self, size_t group_idx, int64_t driver_idx, size_t min_route) -> void {
        if (group_idx == groups.size()) {
            best_revenue = std::max(best_revenue, running);
            return;
        }
        const Group& g = groups[group_idx];
        if (driver_idx == g.count) {
            self(self, group_idx + 1, 0, 0);
            return;
        }
        for (size_t r = min_route; r < g.routes.size(); ++r) {
            apply_route(g.routes[r], +1);
            self(self, group_idx, driver_idx + 1, r);
            apply_route(g.routes[r], -1);
        }
    };
    recurse(recurse, 0, 0, 0);
    return best_revenue;
}

}  // namespace fairflow
