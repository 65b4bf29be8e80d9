#pragma once

#include <cstdint>
#include <vector>

#include "fairflow/circulation.hpp"
#include "fairflow/model.hpp"

namespace fairflow {

enum class NlwcEdgeKind {
    InitDrivers,  // I -> s, lower = upper = n_s
    Leave,        // s -> O
    EmptyDrive,   // s -> s' along an admissible arc, linear reward -c
    WithRider,    // s -> s' with the non-linear reward sequence
    SinkSource,   // O -> I
};

/// One edge of the non-linearly weighted circulation graph (V0, E0).
/// Conceptually unbounded capacities are capped at the total driver count
/// when the network is built; no edge can carry more by conservation.
struct NlwcEdge {
    NlwcEdgeKind kind = NlwcEdgeKind::SinkSource;
    int from = 0;
    int to = 0;
    int64_t lower = 0;
    int64_t upper = 0;
    double unit_reward = 0.0;        // linear kinds only
    Arc arc;                         // EmptyDrive / WithRider
    double cost = 0.0;               // c(arc) for EmptyDrive / WithRider
    std::vector<double> reward_seq;  // WithRider: r(1..upper), r(0) = 0 implied
    std::vector<double> prices;      // WithRider: price charged when k orders served
};

/// NLWC graph over nodes {states} + {I, O}. State s has node id
/// instance.state_index(s); I = num_states, O = num_states + 1.
struct NlwcNetwork {
    int num_states = 0;
    int64_t total_drivers = 0;
    std::vector<NlwcEdge> edges;

    int source_node() const { return num_states; }      // I
    int sink_node() const { return num_states + 1; }    // O
    int num_nodes() const { return num_states + 2; }
};

enum class EmptyArcMode {
    Full,     // one empty-drive edge per admissible arc (paper construction)
    Minimal,  // only arcs arriving at the earliest admissible slot; longer
              // repositioning composes from these plus waiting
};

struct NlwcBuildOptions {
    EmptyArcMode empty_arcs = EmptyArcMode::Full;
};

/// Marginal rewards of Definition-3 form: v'_1 = v_1, v'_k = k v_k - (k-1) v_{k-1}.
/// Input must be sorted descending.
std::vector<double> marginal_rewards(const std::vector<double>& sorted_valuations);

struct RegularityViolation {
    Arc arc;
    int k = 0;             // 1-based index where v'_k > v'_{k-1}
    double marginal = 0.0;
    double previous = 0.0;
};

struct RegularityReport {
    bool regular = true;
    std::vector<RegularityViolation> violations;
};

/// Checks the marginal-reward sequence of every arc of a deterministic instance.
RegularityReport check_regularity(const Instance& instance);

/// Builds the (V0, E0) NLWC network for a deterministic instance: initialize /
/// leave / empty-drive / with-rider / sink-source edge families, with-rider
/// reward sequences r(k) = (v_k - c) * k from descending valuations.
NlwcNetwork build_nlwc(const Instance& instance, const NlwcBuildOptions& options = {});

/// Least concave majorant of the sequence (r(1), ..., r(n)) anchored at
/// r(0) = 0: upper convex hull of the points (k, r(k)), k = 0..n, evaluated
/// at the integer abscissas. Result dominates the input pointwise and has
/// non-increasing increments.
std::vector<double> concave_envelope(const std::vector<double>& reward_seq);

enum class SolveMode { ExactRegular, Ironed };

struct NlwcSolution {
    std::vector<int64_t> flow;   // per NlwcEdge, aggregated over unit edges
    double objective = 0.0;      // optimum of the (possibly ironed) circulation
    int64_t scaled_objective = 0;
    double realized_revenue = 0.0;  // raw reward sequences evaluated at the flow
    bool ironed = false;            // any reward sequence was actually changed
};

/// Algorithm-1 edge decomposition: with-rider edges split into unit edges
/// weighted by first differences of the (ironed) reward sequence, solved as a
/// minimum-cost circulation, unit flows aggregated back. ExactRegular mode
/// requires every reward sequence to be concave and returns the exact NLWC
/// optimum; Ironed mode solves the enveloped relaxation (objective is an
/// upper bound, realized_revenue re-prices the flow on the raw rewards).
NlwcSolution edge_decompose_solve(const NlwcNetwork& network, SolveMode mode,
                                  const SolveConfig& config = {});

struct PlanArc {
    Arc arc;
    int64_t with_rider = 0;
    int64_t empty = 0;
    /// Price charged to riders on this arc. For an arc with with_rider = k > 0
    /// this is the plan price (k-th largest valuation, or the table's optimal
    /// price for k). Demand arcs left unserved carry the single-driver price
    /// so a posted price always exists; pure cruise arcs carry 0.
    double price = 0.0;
    bool posted = false;  // the arc has demand and a published price
    double cost = 0.0;    // c(arc)
};

struct PlanState {
    State state;
    int64_t enter = 0;  // deg_i
    int64_t leave = 0;  // deg_o
};

struct DispatchPlan {
    std::vector<PlanArc> arcs;     // arcs with flow or posted demand
    std::vector<PlanState> states;
    double income = 0.0;     // deterministic: sum k * v_k; stochastic: expected
    double cost = 0.0;       // total driving cost of the plan
    double revenue = 0.0;    // income - cost
    double objective_bound = 0.0;  // ironed-network optimum, >= revenue
    bool stochastic = false;
    bool ironed = false;

    int64_t total_drivers() const;
};

/// Reads flows, prices, and entry/exit degrees off a solved network.
DispatchPlan extract_plan(const NlwcNetwork& network, const NlwcSolution& solution,
                          const Instance& instance);

struct RouteStep {
    Arc arc;
    bool with_rider = false;
};

struct DriverRoute {
    State start;
    std::vector<RouteStep> steps;
    State end() const { return steps.empty() ? start : steps.back().arc.to; }
};

/// Splits a flow-conserving plan into one route per driver. Deterministic:
/// states in time order, earliest-arrival arcs first, with-rider before empty.
/// Per-arc traversal counts by role equal the plan flows exactly.
std::vector<DriverRoute> decompose_routes(const DispatchPlan& plan, const Instance& instance);

struct BruteForceGuard {
    int max_states = 8;
    int64_t max_drivers = 4;
    int max_orders = 8;
    int64_t max_combinations = 4'000'000;
};

/// Exhaustive maximum revenue over all joint driver routes and per-arc
/// accepted-order counts under the k-th-price income rule. Test oracle;
/// independent of the circulation path. Throws when the guard is exceeded.
double brute_force_optimal(const Instance& instance, const BruteForceGuard& guard = {});

}  // namespace fairflow
