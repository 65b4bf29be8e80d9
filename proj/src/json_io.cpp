#include "fairflow/json_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fairflow/version.hpp"

namespace fairflow {

namespace {

json state_to_json(const State& s) { return json::array({s.location, s.time}); }

State state_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("state must be [l, t]");
    return State{j[0].get<int>(), j[1].get<int>()};
}

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

}  // namespace

json instance_to_json(const Instance& instance) {
    json j;
    j["schema"] = "fairflow.instance.v1";
    j["L"] = instance.num_locations;
    j["T"] = instance.num_times;

    const TravelTime& tt = instance.travel_time;
    switch (tt.kind()) {
        case TravelTime::Kind::Constant:
            j["delta"] = {{"type", "constant"}, {"slots", tt.constant_slots()}};
            break;
        case TravelTime::Kind::Grid:
            j["delta"] = {{"type", "grid"},
                          {"width", tt.grid_width()},
                          {"slots_per_cell", tt.slots_per_cell()},
                          {"min_slots", tt.min_slots()}};
            break;
        case TravelTime::Kind::Table:
            j["delta"] = {{"type", "table"}, {"entries", tt.entries()}};
            break;
    }

    const CostModel& cm = instance.cost;
    switch (cm.kind()) {
        case CostModel::Kind::PerKm:
            j["cost"] = {{"type", "per_km"},
                         {"rate", cm.rate()},
                         {"width", cm.grid_width()},
                         {"cell_km", cm.cell_km()}};
            break;
        case CostModel::Kind::LocationPairs: {
            json entries = json::array();
            for (const auto& [from, to, cost] : cm.location_entries())
                entries.push_back(json::array({from, to, cost}));
            j["cost"] = {{"type", "location_pairs"},
                         {"entries", entries},
                         {"default", cm.fallback()}};
            break;
        }
        case CostModel::Kind::StatePairs: {
            json entries = json::array();
            for (const auto& [arc, cost] : cm.state_entries())
                entries.push_back({{"from", state_to_json(arc.from)},
                                   {"to", state_to_json(arc.to)},
                                   {"cost", cost}});
            j["cost"] = {{"type", "state_pairs"}, {"entries", entries},
                         {"default", cm.fallback()}};
            break;
        }
    }

    json drivers = json::array();
    for (int idx = 0; idx < instance.num_states(); ++idx) {
        if (instance.initial_drivers[idx] > 0)
            drivers.push_back({{"state", state_to_json(instance.state_at(idx))},
                               {"count", instance.initial_drivers[idx]}});
    }
    j["drivers"] = drivers;

    if (instance.deterministic()) {
        json orders = json::array();
        for (const LatentOrder& o : instance.orders())
            orders.push_back({{"from", state_to_json(o.arc.from)},
                              {"to", state_to_json(o.arc.to)},
                              {"value", o.valuation}});
        j["orders"] = orders;
    } else {
        json dists = json::array();
        for (const ArcDistribution& d : instance.distributions())
            dists.push_back({{"from", state_to_json(d.arc.from)},
                             {"to", state_to_json(d.arc.to)},
                             {"mu", d.params.mu},
                             {"sigma", d.params.sigma},
                             {"lambda", d.params.lambda}});
        j["distributions"] = dists;
    }
    return j;
}

Instance instance_from_json(const json& j) {
    require(j.is_object(), "instance JSON must be an object");
    require(j.value("schema", "") == "fairflow.instance.v1", "unknown instance schema");
    Instance instance;
    instance.num_locations = j.at("L").get<int>();
    instance.num_times = j.at("T").get<int>();
    require(instance.num_locations >= 1 && instance.num_times >= 1, "empty grid");

    const json& delta = j.at("delta");
    const std::string delta_type = delta.at("type").get<std::string>();
    if (delta_type == "constant") {
        instance.travel_time = TravelTime::constant(delta.at("slots").get<int>());
    } else if (delta_type == "grid") {
        instance.travel_time =
            TravelTime::grid(delta.at("width").get<int>(), delta.at("slots_per_cell").get<double>(),
                             delta.value("min_slots", 1));
    } else if (delta_type == "table") {
        instance.travel_time =
            TravelTime::table(instance.num_locations, instance.num_times,
                              delta.at("entries").get<std::vector<int>>());
    } else {
        throw std::invalid_argument("unknown delta type");
    }

    const json& cost = j.at("cost");
    const std::string cost_type = cost.at("type").get<std::string>();
    if (cost_type == "per_km") {
        instance.cost = CostModel::per_km(cost.at("rate").get<double>(),
                                          cost.at("width").get<int>(),
                                          cost.at("cell_km").get<double>());
    } else if (cost_type == "location_pairs") {
        std::vector<std::tuple<int, int, double>> entries;
        for (const json& e : cost.at("entries"))
            entries.emplace_back(e[0].get<int>(), e[1].get<int>(), e[2].get<double>());
        instance.cost = CostModel::location_pairs(std::move(entries), cost.value("default", 0.0));
    } else if (cost_type == "state_pairs") {
        std::vector<std::pair<Arc, double>> entries;
        for (const json& e : cost.at("entries"))
            entries.emplace_back(Arc{state_from_json(e.at("from")), state_from_json(e.at("to"))},
                                 e.at("cost").get<double>());
        instance.cost = CostModel::state_pairs(std::move(entries), cost.value("default", 0.0));
    } else {
        throw std::invalid_argument("unknown cost type");
    }

    instance.initial_drivers.assign(instance.num_states(), 0);
    for (const json& d : j.at("drivers")) {
        const State s = state_from_json(d.at("state"));
        require(instance.in_range(s), "driver state out of range");
        instance.initial_drivers[instance.state_index(s)] = d.at("count").get<int64_t>();
    }

    if (j.contains("orders")) {
        OrderList orders;
        for (const json& o : j.at("orders"))
            orders.push_back(LatentOrder{
                Arc{state_from_json(o.at("from")), state_from_json(o.at("to"))},
                o.at("value").get<double>()});
        instance.demand = std::move(orders);
    } else if (j.contains("distributions")) {
        DistributionList dists;
        for (const json& d : j.at("distributions"))
            dists.push_back(ArcDistribution{
                Arc{state_from_json(d.at("from")), state_from_json(d.at("to"))},
                GaussianPoissonParams{d.at("mu").get<double>(), d.at("sigma").get<double>(),
                                      d.at("lambda").get<double>()}});
        instance.demand = std::move(dists);
    } else {
        throw std::invalid_argument("instance needs either orders or distributions");
    }
    instance.validate();
    return instance;
}

json plan_to_json(const DispatchPlan& plan, const std::string& hash) {
    json j;
    j["schema"] = "fairflow.plan.v1";
    j["version"] = kVersion;
    j["config_hash"] = hash;
    j["stochastic"] = plan.stochastic;
    j["ironed"] = plan.ironed;
    json arcs = json::array();
    for (const PlanArc& pa : plan.arcs) {
        if (pa.with_rider == 0 && pa.empty == 0 && !pa.posted) continue;
        arcs.push_back({{"from", state_to_json(pa.arc.from)},
                        {"to", state_to_json(pa.arc.to)},
                        {"with_rider", pa.with_rider},
                        {"empty", pa.empty},
                        {"price", pa.price},
                        {"posted", pa.posted},
                        {"cost", pa.cost}});
    }
    j["arcs"] = arcs;
    json states = json::array();
    for (const PlanState& ps : plan.states)
        states.push_back({{"state", state_to_json(ps.state)},
                          {"enter", ps.enter},
                          {"leave", ps.leave}});
    j["states"] = states;
    j["income"] = plan.income;
    j["cost"] = plan.cost;
    j["revenue"] = plan.revenue;
    j["objective_bound"] = plan.objective_bound;
    return j;
}

DispatchPlan plan_from_json(const json& j) {
    require(j.value("schema", "") == "fairflow.plan.v1", "unknown plan schema");
    DispatchPlan plan;
    plan.stochastic = j.value("stochastic", false);
    plan.ironed = j.value("ironed", false);
    for (const json& a : j.at("arcs")) {
        PlanArc pa;
        pa.arc = Arc{state_from_json(a.at("from")), state_from_json(a.at("to"))};
        pa.with_rider = a.at("with_rider").get<int64_t>();
        pa.empty = a.at("empty").get<int64_t>();
        pa.price = a.at("price").get<double>();
        pa.posted = a.value("posted", pa.with_rider > 0);
        pa.cost = a.at("cost").get<double>();
        plan.arcs.push_back(pa);
    }
    for (const json& s : j.at("states")) {
        PlanState ps;
        ps.state = state_from_json(s.at("state"));
        ps.enter = s.at("enter").get<int64_t>();
        ps.leave = s.at("leave").get<int64_t>();
        plan.states.push_back(ps);
    }
    plan.income = j.at("income").get<double>();
    plan.cost = j.at("cost").get<double>();
    plan.revenue = j.at("revenue").get<double>();
    plan.objective_bound = j.value("objective_bound", plan.revenue);
    return plan;
}

json scheme_to_json(const PaymentScheme& scheme, const FairnessReport& report,
                    const Instance& instance, const std::string& hash) {
    json j;
    j["schema"] = "fairflow.scheme.v1";
    j["version"] = kVersion;
    j["config_hash"] = hash;
    json potential = json::array();
    for (int idx = 0; idx < instance.num_states(); ++idx) {
        if (scheme.potential[idx] != 0.0)
            potential.push_back(
                {{"state", state_to_json(instance.state_at(idx))}, {"P", scheme.potential[idx]}});
    }
    j["potential"] = potential;
    json payments = json::array();
    for (const auto& [arc, y] : scheme.payments)
        payments.push_back({{"from", state_to_json(arc.from)},
                            {"to", state_to_json(arc.to)},
                            {"y", y}});
    j["payments"] = payments;
    j["report"] = {{"pass", report.pass},
                   {"tolerance", report.tolerance},
                   {"budget_residual", report.budget_residual},
                   {"envy_max_deviation", report.envy_max_deviation},
                   {"terminal_violations", report.terminal_violations.size()},
                   {"nonnegativity_violations", report.nonnegativity_violations.size()},
                   {"subgame_violations", report.subgame_violations.size()},
                   {"equality_violations", report.equality_violations.size()},
                   {"ir_violations", report.ir_violations.size()}};
    return j;
}

PaymentScheme scheme_from_json(const json& j, const Instance& instance) {
    require(j.value("schema", "") == "fairflow.scheme.v1", "unknown scheme schema");
    PaymentScheme scheme;
    scheme.potential.assign(instance.num_states(), 0.0);
    for (const json& p : j.at("potential")) {
        const State s = state_from_json(p.at("state"));
        require(instance.in_range(s), "potential state out of range");
        scheme.potential[instance.state_index(s)] = p.at("P").get<double>();
    }
    for (const json& p : j.at("payments"))
        scheme.payments[Arc{state_from_json(p.at("from")), state_from_json(p.at("to"))}] =
            p.at("y").get<double>();
    return scheme;
}

json reward_table_to_json(const RewardTable& table) {
    json rows = json::array();
    for (int64_t n = 1; n <= table.n_max(); ++n)
        rows.push_back({{"n", n},
                        {"r", table.rewards[static_cast<size_t>(n - 1)]},
                        {"price", table.prices[static_cast<size_t>(n - 1)]}});
    return json{{"from", state_to_json(table.arc.from)},
                {"to", state_to_json(table.arc.to)},
                {"concave", table.concave},
                {"rows", rows}};
}

json posterior_to_json(const PosteriorState& state) {
    json obs = json::array();
    for (const PriceObservation& o : state.observations)
        obs.push_back({{"price", o.price}, {"accepts", o.accepts}, {"rejects", o.rejects}});
    auto prior_json = [](const GaussianPrior& p) {
        return json{{"mu_mu", p.mu_mu},
                    {"sigma_mu", p.sigma_mu},
                    {"mu_sigma", p.mu_sigma},
                    {"sigma_sigma", p.sigma_sigma}};
    };
    return json{{"from", state_to_json(state.arc.from)},
                {"to", state_to_json(state.arc.to)},
                {"prior", prior_json(state.prior)},
                {"posterior", prior_json(state.current)},
                {"lambda_hat", state.lambda_hat},
                {"observations", obs}};
}

std::string config_hash(const std::string& canonical) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buffer);
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace fairflow
