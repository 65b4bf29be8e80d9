#include "fairflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace fairflow {

TravelTime TravelTime::constant(int slots) {
    if (slots < 1) throw std::invalid_argument("travel time must be >= 1 slot");
    TravelTime t;
    t.kind_ = Kind::Constant;
    t.constant_slots_ = slots;
    return t;
}

TravelTime TravelTime::grid(int width, double slots_per_cell, int min_slots) {
    if (width < 1 || slots_per_cell < 0.0 || min_slots < 1)
        throw std::invalid_argument("bad grid travel-time spec");
    TravelTime t;
    t.kind_ = Kind::Grid;
    t.grid_width_ = width;
    t.slots_per_cell_ = slots_per_cell;
    t.min_slots_ = min_slots;
    return t;
}

TravelTime TravelTime::table(int num_locations, int num_times, std::vector<int> entries) {
    if (entries.size() != static_cast<size_t>(num_locations) * num_locations * num_times)
        throw std::invalid_argument("travel-time table has wrong size");
    for (int v : entries)
        if (v < 1) throw std::invalid_argument("travel-time entries must be >= 1");
    TravelTime t;
    t.kind_ = Kind::Table;
    t.table_locations_ = num_locations;
    t.table_times_ = num_times;
    t.entries_ = std::move(entries);
    return t;
}

int TravelTime::operator()(int from_loc, int to_loc, int t) const {
    switch (kind_) {
        case Kind::Constant:
            return constant_slots_;
        case Kind::Grid: {
            const int dx = std::abs(from_loc % grid_width_ - to_loc % grid_width_);
            const int dy = std::abs(from_loc / grid_width_ - to_loc / grid_width_);
            const int cells = dx + dy;
            return std::max(min_slots_,
                            static_cast<int>(std::ceil(cells * slots_per_cell_ - 1e-12)));
        }
        case Kind::Table:
            return entries_[(static_cast<size_t>(from_loc) * table_locations_ + to_loc) *
                                table_times_ +
                            t];
    }
    return 1;
}

CostModel CostModel::per_km(double rate, int grid_width, double cell_km) {
    if (rate < 0.0 || grid_width < 1 || cell_km <= 0.0)
        throw std::invalid_argument("bad per-km cost spec");
    CostModel c;
    c.kind_ = Kind::PerKm;
    c.rate_ = rate;
    c.grid_width_ = grid_width;
    c.cell_km_ = cell_km;
    return c;
}

CostModel CostModel::location_pairs(std::vector<std::tuple<int, int, double>> entries,
                                    double fallback) {
    CostModel c;
    c.kind_ = Kind::LocationPairs;
    c.fallback_ = fallback;
    c.location_entries_ = std::move(entries);
    for (const auto& [from, to, cost] : c.location_entries_) {
        if (cost < 0.0) throw std::invalid_argument("costs must be >= 0");
        c.location_index_[(static_cast<int64_t>(from) << 32) | static_cast<uint32_t>(to)] = cost;
    }
    return c;
}

CostModel CostModel::state_pairs(std::vector<std::pair<Arc, double>> entries, double fallback) {
    CostModel c;
    c.kind_ = Kind::StatePairs;
    c.fallback_ = fallback;
    c.state_entries_ = std::move(entries);
    for (const auto& [arc, cost] : c.state_entries_) {
        if (cost < 0.0) throw std::invalid_argument("costs must be >= 0");
        c.state_index_[arc] = cost;
    }
    return c;
}

double CostModel::distance_km(int from_loc, int to_loc) const {
    if (grid_width_ < 1) return 0.0;
    const double dx = from_loc % grid_width_ - to_loc % grid_width_;
    const double dy = from_loc / grid_width_ - to_loc / grid_width_;
    return cell_km_ * std::sqrt(dx * dx + dy * dy);
}

double CostModel::operator()(const Arc& arc) const {
    switch (kind_) {
        case Kind::PerKm:
            return rate_ * distance_km(arc.from.location, arc.to.location);
        case Kind::LocationPairs: {
            const int64_t key = (static_cast<int64_t>(arc.from.location) << 32) |
                                static_cast<uint32_t>(arc.to.location);
            auto it = location_index_.find(key);
            return it != location_index_.end() ? it->second : fallback_;
        }
        case Kind::StatePairs: {
            auto it = state_index_.find(arc);
            return it != state_index_.end() ? it->second : fallback_;
        }
    }
    return 0.0;
}

int64_t Instance::total_drivers() const {
    return std::accumulate(initial_drivers.begin(), initial_drivers.end(), int64_t{0});
}

void Instance::validate() const {
    if (num_locations < 1 || num_times < 1)
        throw std::invalid_argument("instance grid must be non-empty");
    if (initial_drivers.size() != static_cast<size_t>(num_states()))
        throw std::invalid_argument("initial_drivers size must equal |S|");
    for (int64_t n : initial_drivers)
        if (n < 0) throw std::invalid_argument("driver counts must be >= 0");
    if (deterministic()) {
        for (const LatentOrder& o : orders()) {
            if (o.valuation < 0.0) throw std::invalid_argument("order valuation must be >= 0");
            if (!admissible(o.arc.from, o.arc.to, *this))
                throw std::invalid_argument("order arc is not admissible");
        }
    } else {
        for (const ArcDistribution& d : distributions()) {
            if (d.params.sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
            if (d.params.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
            if (!admissible(d.arc.from, d.arc.to, *this))
                throw std::invalid_argument("distribution arc is not admissible");
        }
    }
}

bool admissible(const State& from, const State& to, const Instance& instance) {
    if (!instance.in_range(from) || !instance.in_range(to))
        throw std::out_of_range("state outside the instance grid");
    if (to.time <= from.time) return false;
    return to.time >= from.time + instance.travel_time(from.location, to.location, from.time);
}

std::vector<Arc> all_admissible_arcs(const Instance& instance) {
    std::vector<Arc> arcs;
    for (int l = 0; l < instance.num_locations; ++l)
        for (int t = 0; t < instance.num_times; ++t)
            for (int l2 = 0; l2 < instance.num_locations; ++l2)
                for (int t2 = t + 1; t2 < instance.num_times; ++t2) {
                    const State a{l, t}, b{l2, t2};
                    if (admissible(a, b, instance)) arcs.push_back(Arc{a, b});
                }
    return arcs;
}

DiscretizeResult discretize_trips(const std::vector<TripRecord>& records, const GridSpec& grid,
                                  const Instance& skeleton) {
    if (records.empty()) throw std::invalid_argument("no trip records to discretize");
    if (grid.width < 1 || grid.height < 1 || grid.cell_km <= 0.0 || grid.num_slots < 2 ||
        grid.slot_seconds <= 0.0)
        throw std::invalid_argument("degenerate discretization grid");

    // Equirectangular projection anchored at the grid corner.
    const double km_per_deg_lat = 110.574;
    const double km_per_deg_lon = 111.320 * std::cos(grid.lat0 * M_PI / 180.0);

    auto cell_of = [&](double lat, double lon) -> std::optional<int> {
        const double x = (lon - grid.lon0) * km_per_deg_lon / grid.cell_km;
        const double y = (lat - grid.lat0) * km_per_deg_lat / grid.cell_km;
        const int cx = static_cast<int>(std::floor(x));
        const int cy = static_cast<int>(std::floor(y));
        if (cx < 0 || cx >= grid.width || cy < 0 || cy >= grid.height) return std::nullopt;
        return cy * grid.width + cx;
    };

    DiscretizeResult result;
    std::map<int64_t, OrderList> by_day;
    const double day_seconds = 86400.0;
    for (const TripRecord& r : records) {
        if (r.dropoff_time <= r.pickup_time)
            throw std::invalid_argument("trip record with non-positive duration");
        const int64_t day = static_cast<int64_t>(std::floor((r.pickup_time - grid.t0) / day_seconds));
        const double day_start = grid.t0 + day * day_seconds;
        const double pickup_offset = r.pickup_time - day_start;
        const double dropoff_offset = r.dropoff_time - day_start;
        const int slot_p = static_cast<int>(std::floor(pickup_offset / grid.slot_seconds));
        const int slot_d = static_cast<int>(std::floor(dropoff_offset / grid.slot_seconds));
        if (slot_p < 0 || slot_p >= grid.num_slots || slot_d < 0 || slot_d >= grid.num_slots) {
            ++result.dropped_out_of_horizon;
            continue;
        }
        const auto from_cell = cell_of(r.pickup_lat, r.pickup_lon);
        const auto to_cell = cell_of(r.dropoff_lat, r.dropoff_lon);
        if (!from_cell || !to_cell) {
            ++result.dropped_out_of_grid;
            continue;
        }
        const State from{*from_cell, slot_p};
        const State to{*to_cell, slot_d};
        if (from == to || slot_d <= slot_p) {
            ++result.dropped_same_state;
            continue;
        }
        if (!admissible(from, to, skeleton)) {
            ++result.dropped_inadmissible;
            continue;
        }
        by_day[day].push_back(LatentOrder{Arc{from, to}, r.reward});
        ++result.kept;
    }
    if (by_day.empty()) return result;
    const int64_t first_day = by_day.begin()->first;
    const int64_t last_day = by_day.rbegin()->first;
    result.daily_orders.resize(static_cast<size_t>(last_day - first_day + 1));
    for (auto& [day, orders] : by_day)
        result.daily_orders[static_cast<size_t>(day - first_day)] = std::move(orders);
    return result;
}

std::vector<FittedArc> fit_gaussian_poisson(const std::vector<OrderList>& daily_orders,
                                            const FitOptions& options) {
    const int64_t num_days = static_cast<int64_t>(daily_orders.size());
    if (num_days == 0) throw std::invalid_argument("need at least one day of data");

    std::map<Arc, std::vector<double>> valuations;
    std::map<Arc, int64_t> counts;
    for (const OrderList& day : daily_orders) {
        for (const LatentOrder& o : day) {
            valuations[o.arc].push_back(o.valuation);
            ++counts[o.arc];
        }
    }

    std::vector<FittedArc> fitted;
    fitted.reserve(valuations.size());
    for (auto& [arc, vals] : valuations) {
        FittedArc f;
        f.arc = arc;
        f.total_orders = counts[arc];
        f.params.lambda = static_cast<double>(f.total_orders) / static_cast<double>(num_days);
        const double n = static_cast<double>(vals.size());
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
        f.params.mu = mean;
        if (vals.size() >= 2) {
            double ss = 0.0;
            for (double v : vals) ss += (v - mean) * (v - mean);
            f.params.sigma = std::sqrt(ss / (n - 1.0));
        }
        const double floor_value =
            std::max(options.sigma_floor_abs, options.sigma_floor_fraction * std::abs(mean));
        if (vals.size() < 2 || f.params.sigma < floor_value) {
            f.params.sigma = floor_value;
            f.degenerate = true;
        }
        fitted.push_back(std::move(f));
    }
    return fitted;
}

std::unordered_map<Arc, std::vector<double>, ArcHash> group_orders(const OrderList& orders) {
    std::unordered_map<Arc, std::vector<double>, ArcHash> grouped;
    for (const LatentOrder& o : orders) grouped[o.arc].push_back(o.valuation);
    for (auto& [arc, vals] : grouped)
        std::sort(vals.begin(), vals.end(), std::greater<double>());
    return grouped;
}

}  // namespace fairflow
