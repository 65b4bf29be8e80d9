#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace fairflow {

/// Directed edge with integral flow bounds and a linear per-unit cost in
/// money units. `upper` must be finite at solve time; callers cap their
/// conceptually-unbounded edges (the dispatch networks cap at the total
/// driver count, which no edge can exceed by conservation).
struct CirculationEdge {
    int from = 0;
    int to = 0;
    int64_t lower = 0;
    int64_t upper = 0;
    double unit_cost = 0.0;
};

struct CirculationNetwork {
    int num_nodes = 0;
    std::vector<CirculationEdge> edges;
};

struct SolveConfig {
    /// Money is scaled by this factor and rounded to integers internally, so
    /// optimality comparisons are exact.
    int64_t money_scale = 1'000'000;
};

enum class CirculationStatus { Optimal, Infeasible };

struct CirculationResult {
    CirculationStatus status = CirculationStatus::Infeasible;
    std::vector<int64_t> flow;  // per input edge, empty when infeasible
    double cost = 0.0;          // unscaled money
    int64_t scaled_cost = 0;    // exact, in money_scale units
};

/// Exact integral minimum-cost circulation: lower bounds are removed by the
/// imbalance transformation, negative-cost edges are pre-saturated, and the
/// residual problem is solved by successive shortest augmenting paths with
/// node potentials (Bellman-Ford on the first pass, Dijkstra after).
/// Infeasible lower bounds yield an explicit Infeasible result.
CirculationResult solve_min_cost_circulation(const CirculationNetwork& network,
                                             const SolveConfig& config = {});

struct FlowReport {
    bool feasible = false;
    double cost = 0.0;
    int64_t scaled_cost = 0;
    std::vector<int64_t> node_imbalance;          // inflow - outflow per node
    std::vector<int> lower_bound_violations;      // edge indices
    std::vector<int> upper_bound_violations;      // edge indices
};

/// Checks a candidate flow against the network's bounds and conservation and
/// reports every violation plus the total cost.
FlowReport verify_flow(const CirculationNetwork& network, const std::vector<int64_t>& flow,
                       const SolveConfig& config = {});

/// DIMACS-style text dump for external cross-checking.
std::string to_dimacs(const CirculationNetwork& network);

}  // namespace fairflow
