#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace fairflow {

/// A spatiotemporal state: discrete location index crossed with a time slot.
struct State {
    int location = 0;
    int time = 0;

    friend bool operator==(const State& a, const State& b) {
        return a.location == b.location && a.time == b.time;
    }
    friend bool operator!=(const State& a, const State& b) { return !(a == b); }
    friend bool operator<(const State& a, const State& b) {
        return a.time != b.time ? a.time < b.time : a.location < b.location;
    }
};

/// A directed pair of states. Only admissible arcs (reachable within the
/// travel-time function, strictly advancing time) are meaningful.
struct Arc {
    State from;
    State to;

    friend bool operator==(const Arc& a, const Arc& b) {
        return a.from == b.from && a.to == b.to;
    }
    friend bool operator<(const Arc& a, const Arc& b) {
        if (a.from != b.from) return a.from < b.from;
        return a.to < b.to;
    }
};

struct ArcHash {
    size_t operator()(const Arc& a) const {
        uint64_t h = 1469598103934665603ull;
        for (int v : {a.from.location, a.from.time, a.to.location, a.to.time}) {
            h ^= static_cast<uint64_t>(v + 0x9e3779b9);
            h *= 1099511628211ull;
        }
        return static_cast<size_t>(h);
    }
};

/// A rider request: origin-destination arc plus the rider's (hidden) valuation.
struct LatentOrder {
    Arc arc;
    double valuation = 0.0;  // >= 0
};

/// Per-arc demand model: Poisson daily order count with i.i.d. Gaussian valuations.
struct GaussianPoissonParams {
    double mu = 0.0;
    double sigma = 1.0;   // > 0
    double lambda = 0.0;  // expected daily order count, >= 0
};

/// One raw trip row as ingested from CSV.
struct TripRecord {
    double pickup_time = 0.0;   // seconds since epoch
    double pickup_lat = 0.0;
    double pickup_lon = 0.0;
    double dropoff_time = 0.0;
    double dropoff_lat = 0.0;
    double dropoff_lon = 0.0;
    double reward = 0.0;        // used verbatim as the rider valuation
};

/// Travel time delta(l, l', t) in whole time slots, always >= 1.
/// Either a dense |L|x|L|x|T| table or a grid formula (Manhattan cell
/// distance at a fixed number of slots per cell, minimum 1).
class TravelTime {
public:
    static TravelTime constant(int slots);
    /// Locations indexed row-major on a width x height grid; travel time is
    /// max(min_slots, ceil(manhattan_cells * slots_per_cell)).
    static TravelTime grid(int width, double slots_per_cell, int min_slots = 1);
    static TravelTime table(int num_locations, int num_times, std::vector<int> entries);

    int operator()(int from_loc, int to_loc, int t) const;

    enum class Kind { Constant, Grid, Table };
    Kind kind() const { return kind_; }
    int constant_slots() const { return constant_slots_; }
    int grid_width() const { return grid_width_; }
    double slots_per_cell() const { return slots_per_cell_; }
    int min_slots() const { return min_slots_; }
    const std::vector<int>& entries() const { return entries_; }
    int table_locations() const { return table_locations_; }
    int table_times() const { return table_times_; }

private:
    Kind kind_ = Kind::Constant;
    int constant_slots_ = 1;
    int grid_width_ = 0;
    double slots_per_cell_ = 1.0;
    int min_slots_ = 1;
    std::vector<int> entries_;  // dense, [from*L + to]*T + t
    int table_locations_ = 0;
    int table_times_ = 0;
};

/// Driving cost c(s, s') >= 0. Either a flat per-km rate over grid geometry,
/// a location-pair table, or a state-pair table.
class CostModel {
public:
    static CostModel per_km(double rate, int grid_width, double cell_km);
    static CostModel location_pairs(std::vector<std::tuple<int, int, double>> entries,
                                    double fallback = 0.0);
    static CostModel state_pairs(std::vector<std::pair<Arc, double>> entries,
                                 double fallback = 0.0);

    double operator()(const Arc& arc) const;
    /// Straight-line trip distance in km under the grid geometry (0 when the
    /// model carries no geometry).
    double distance_km(int from_loc, int to_loc) const;

    enum class Kind { PerKm, LocationPairs, StatePairs };
    Kind kind() const { return kind_; }
    double rate() const { return rate_; }
    int grid_width() const { return grid_width_; }
    double cell_km() const { return cell_km_; }
    double fallback() const { return fallback_; }
    const std::vector<std::tuple<int, int, double>>& location_entries() const {
        return location_entries_;
    }
    const std::vector<std::pair<Arc, double>>& state_entries() const { return state_entries_; }

private:
    Kind kind_ = Kind::PerKm;
    double rate_ = 0.0;
    int grid_width_ = 0;
    double cell_km_ = 1.0;
    double fallback_ = 0.0;
    std::vector<std::tuple<int, int, double>> location_entries_;
    std::unordered_map<int64_t, double> location_index_;
    std::vector<std::pair<Arc, double>> state_entries_;
    std::unordered_map<Arc, double, ArcHash> state_index_;
};

/// Demand on one arc when the instance is stochastic.
struct ArcDistribution {
    Arc arc;
    GaussianPoissonParams params;
};

using OrderList = std::vector<LatentOrder>;
using DistributionList = std::vector<ArcDistribution>;

/// The world: grid dimensions, travel times, costs, initial drivers, and
/// either a deterministic latent-order list or per-arc demand distributions.
/// Immutable after construction; safe to share across threads read-only.
struct Instance {
    int num_locations = 0;
    int num_times = 0;
    TravelTime travel_time = TravelTime::constant(1);
    CostModel cost = CostModel::per_km(0.0, 1, 1.0);
    std::vector<int64_t> initial_drivers;  // dense, indexed by state_index()
    std::variant<OrderList, DistributionList> demand;

    int num_states() const { return num_locations * num_times; }
    int state_index(const State& s) const { return s.location * num_times + s.time; }
    State state_at(int index) const { return State{index / num_times, index % num_times}; }
    bool in_range(const State& s) const {
        return s.location >= 0 && s.location < num_locations && s.time >= 0 &&
               s.time < num_times;
    }

    bool deterministic() const { return std::holds_alternative<OrderList>(demand); }
    const OrderList& orders() const { return std::get<OrderList>(demand); }
    const DistributionList& distributions() const { return std::get<DistributionList>(demand); }

    int64_t total_drivers() const;
    int64_t drivers_at(const State& s) const { return initial_drivers[state_index(s)]; }

    /// Checks invariants (bounds, admissible orders, non-negative costs);
    /// throws std::invalid_argument on the first violation.
    void validate() const;
};

/// True iff to.time >= from.time + delta(from.location, to.location, from.time).
/// Throws on out-of-range states.
bool admissible(const State& from, const State& to, const Instance& instance);

/// All admissible arcs of the instance (|S|^2 scan; desk scale only).
std::vector<Arc> all_admissible_arcs(const Instance& instance);

/// Spatiotemporal discretization grid for trip ingestion.
struct GridSpec {
    double lat0 = 0.0;        // south-west corner
    double lon0 = 0.0;
    double cell_km = 2.0;
    int width = 10;           // cells west-east
    int height = 10;          // cells south-north
    double t0 = 0.0;          // horizon start, seconds since epoch (within a day)
    double slot_seconds = 900.0;
    int num_slots = 20;

    int num_locations() const { return width * height; }
};

struct DiscretizeResult {
    /// Orders keyed by day index (floor((pickup - t0) / 86400)), re-based to 0.
    std::vector<OrderList> daily_orders;
    int64_t dropped_out_of_grid = 0;
    int64_t dropped_out_of_horizon = 0;
    int64_t dropped_same_state = 0;
    int64_t dropped_inadmissible = 0;
    int64_t kept = 0;
};

/// Maps trip records onto grid states. Records outside the grid or the daily
/// time window are dropped and counted; pickup/dropoff landing in the same
/// state are dropped (arcs must advance time). Valuations are the reward
/// column verbatim. Requires a non-empty record set and a non-degenerate grid.
DiscretizeResult discretize_trips(const std::vector<TripRecord>& records, const GridSpec& grid,
                                  const Instance& skeleton);

struct FitOptions {
    /// Relative sigma floor for arcs with < 2 valuations (fraction of mu).
    double sigma_floor_fraction = 0.01;
    double sigma_floor_abs = 1e-6;
};

struct FittedArc {
    Arc arc;
    GaussianPoissonParams params;
    int64_t total_orders = 0;
    bool degenerate = false;  // sigma fell back to the floor
};

/// Fits per-arc Gaussian-Poisson parameters from daily order multisets:
/// lambda = mean daily count over all days, (mu, sigma) = sample mean and
/// sample (n-1) standard deviation of all valuations seen on the arc.
std::vector<FittedArc> fit_gaussian_poisson(const std::vector<OrderList>& daily_orders,
                                            const FitOptions& options = {});

/// Per-arc order book: valuations sorted descending, as used by the
/// deterministic network construction (v_k = k-th largest valuation).
std::unordered_map<Arc, std::vector<double>, ArcHash> group_orders(const OrderList& orders);

}  // namespace fairflow
