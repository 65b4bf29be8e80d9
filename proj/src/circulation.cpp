#include "fairflow/circulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace fairflow {

namespace {

constexpr int64_t kInf = std::numeric_limits<int64_t>::max() / 4;

// Residual graph over 2 arcs per input edge plus super source/sink arcs.
struct Residual {
    int num_nodes = 0;
    std::vector<int> head;                 // arc -> target node
    std::vector<int64_t> cap;              // arc -> remaining capacity
    std::vector<int64_t> cost;             // arc -> scaled cost
    std::vector<std::vector<int>> adj;     // node -> arcs in insertion order

    int add_arc(int from, int to, int64_t capacity, int64_t arc_cost) {
        const int id = static_cast<int>(head.size());
        head.push_back(to);
        cap.push_back(capacity);
        cost.push_back(arc_cost);
        adj[from].push_back(id);
        return id;
    }
};

int64_t scale_cost(double unit_cost, int64_t money_scale) {
    const double scaled = unit_cost * static_cast<double>(money_scale);
    // Path sums over ~1e4 nodes must stay clear of int64 range.
    if (!std::isfinite(scaled) || std::abs(scaled) > 1e13)
        throw std::invalid_argument("edge cost overflows the money scale");
    return static_cast<int64_t>(std::llround(scaled));
}

}  // namespace

CirculationResult solve_min_cost_circulation(const CirculationNetwork& network,
                                             const SolveConfig& config) {
    const int n = network.num_nodes;
    const int m = static_cast<int>(network.edges.size());
    for (const CirculationEdge& e : network.edges) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
            throw std::invalid_argument("edge endpoint out of range");
        if (e.lower < 0 || e.lower > e.upper)
            throw std::invalid_argument("edge bounds must satisfy 0 <= lower <= upper");
        if (e.upper >= kInf)
            throw std::invalid_argument("infinite capacity must be capped before solving");
    }

    // Node layout: 0..n-1 original, n = super source, n+1 = super sink.
    const int source = n, sink = n + 1;
    Residual g;
    g.num_nodes = n + 2;
    g.adj.resize(g.num_nodes);

    // Lower bounds are pushed as mandatory flow (imbalance transform) and
    // negative-cost residual capacity is pre-saturated, so every residual arc
    // starts with non-negative cost.
    std::vector<int64_t> excess(g.num_nodes, 0);
    std::vector<int64_t> base_flow(m, 0);  // flow already committed per edge
    for (int i = 0; i < m; ++i) {
        const CirculationEdge& e = network.edges[i];
        const int64_t c = scale_cost(e.unit_cost, config.money_scale);
        int64_t committed = e.lower;
        const int64_t free_cap = e.upper - e.lower;
        if (c < 0) committed = e.upper;
        base_flow[i] = committed;
        excess[e.to] += committed;
        excess[e.from] -= committed;
        if (c < 0) {
            g.add_arc(e.from, e.to, 0, c);         // arc 2i: saturated forward
            g.add_arc(e.to, e.from, free_cap, -c); // arc 2i+1: undo at positive cost
        } else {
            g.add_arc(e.from, e.to, free_cap, c);
            g.add_arc(e.to, e.from, 0, -c);
        }
    }

    int64_t total_supply = 0;
    for (int v = 0; v < n; ++v) {
        if (excess[v] > 0) {
            g.add_arc(source, v, excess[v], 0);
            g.add_arc(v, source, 0, 0);
            total_supply += excess[v];
        } else if (excess[v] < 0) {
            g.add_arc(v, sink, -excess[v], 0);
            g.add_arc(sink, v, 0, 0);
        }
    }

    std::vector<int64_t> potential(g.num_nodes, 0);
    std::vector<int64_t> dist(g.num_nodes);
    std::vector<int> pred_arc(g.num_nodes);

    // First pass tolerates negative arc costs (none are expected after
    // pre-saturation, but the invariant is cheap to keep honest).
    auto bellman_ford = [&]() {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(pred_arc.begin(), pred_arc.end(), -1);
        dist[source] = 0;
        std::deque<int> queue{source};
        std::vector<char> in_queue(g.num_nodes, 0);
        in_queue[source] = 1;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            in_queue[u] = 0;
            for (int arc : g.adj[u]) {
                if (g.cap[arc] <= 0) continue;
                const int v = g.head[arc];
                const int64_t nd = dist[u] + g.cost[arc];
                if (nd < dist[v]) {
                    dist[v] = nd;
                    pred_arc[v] = arc;
                    if (!in_queue[v]) {
                        in_queue[v] = 1;
                        queue.push_back(v);
                    }
                }
            }
        }
    };

    std::vector<int> arc_tail(g.head.size());
    for (int u = 0; u < g.num_nodes; ++u)
        for (int arc : g.adj[u]) arc_tail[arc] = u;

    auto dijkstra = [&]() {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(pred_arc.begin(), pred_arc.end(), -1);
        using Entry = std::pair<int64_t, int>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
        dist[source] = 0;
        heap.emplace(0, source);
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            if (d != dist[u]) continue;
            for (int arc : g.adj[u]) {
                if (g.cap[arc] <= 0) continue;
                const int v = g.head[arc];
                const int64_t reduced = g.cost[arc] + potential[u] - potential[v];
                const int64_t nd = d + reduced;
                if (nd < dist[v]) {
                    dist[v] = nd;
                    pred_arc[v] = arc;
                    heap.emplace(nd, v);
                }
            }
        }
    };

    int64_t routed = 0;
    bool first_pass = true;
    while (routed < total_supply) {
        if (first_pass) {
            bellman_ford();
            first_pass = false;
        } else {
            dijkstra();
        }
        if (dist[sink] >= kInf) break;  // remaining supply cannot reach demand
        const int64_t dist_sink = dist[sink];
        for (int v = 0; v < g.num_nodes; ++v)
            potential[v] += std::min(dist[v], dist_sink);

        int64_t bottleneck = kInf;
        for (int v = sink; v != source; v = arc_tail[pred_arc[v]])
            bottleneck = std::min(bottleneck, g.cap[pred_arc[v]]);
        for (int v = sink; v != source; v = arc_tail[pred_arc[v]]) {
            const int arc = pred_arc[v];
            g.cap[arc] -= bottleneck;
            g.cap[arc ^ 1] += bottleneck;
        }
        routed += bottleneck;
    }

    CirculationResult result;
    if (routed < total_supply) {
        result.status = CirculationStatus::Infeasible;
        return result;
    }
    result.status = CirculationStatus::Optimal;
    result.flow.resize(m);
    result.scaled_cost = 0;
    for (int i = 0; i < m; ++i) {
        const CirculationEdge& e = network.edges[i];
        const int64_t c = scale_cost(e.unit_cost, config.money_scale);
        int64_t flow;
        if (c < 0) {
            // Arc 2i+1 carried the undone portion of the pre-saturated flow.
            const int64_t undone = e.upper - e.lower - g.cap[2 * i + 1];
            flow = base_flow[i] - undone;
        } else {
            const int64_t pushed = g.cap[2 * i + 1];
            flow = base_flow[i] + pushed;
        }
        result.flow[i] = flow;
        result.scaled_cost += flow * c;
    }
    result.cost = static_cast<double>(result.scaled_cost) / static_cast<double>(config.money_scale);
    return result;
}

FlowReport verify_flow(const CirculationNetwork& network, const std::vector<int64_t>& flow,
                       const SolveConfig& config) {
    if (flow.size() != network.edges.size())
        throw std::invalid_argument("flow size does not match edge count");
    FlowReport report;
    report.node_imbalance.assign(network.num_nodes, 0);
    for (size_t i = 0; i < network.edges.size(); ++i) {
        const CirculationEdge& e = network.edges[i];
        if (flow[i] < e.lower) report.lower_bound_violations.push_back(static_cast<int>(i));
        if (flow[i] > e.upper) report.upper_bound_violations.push_back(static_cast<int>(i));
        report.node_imbalance[e.to] += flow[i];
        report.node_imbalance[e.from] -= flow[i];
        report.scaled_cost += flow[i] * scale_cost(e.unit_cost, config.money_scale);
    }
    report.cost = static_cast<double>(report.scaled_cost) / static_cast<double>(config.money_scale);
    report.feasible = report.lower_bound_violations.empty() &&
                      report.upper_bound_violations.empty() &&
                      std::all_of(report.node_imbalance.begin(), report.node_imbalance.end(),
                                  [](int64_t b) { return b == 0; });
    return report;
}

std::string to_dimacs(const CirculationNetwork& network) {
    std::ostringstream out;
    out << "c min-cost circulation (lower/upper bounds, real costs)\n";
    out << "p min " << network.num_nodes << ' ' << network.edges.size() << '\n';
    for (const CirculationEdge& e : network.edges)
        out << "a " << e.from + 1 << ' ' << e.to + 1 << ' ' << e.lower << ' ' << e.upper << ' '
            << e.unit_cost << '\n';
    return out.str();
}

}  // namespace fairflow
