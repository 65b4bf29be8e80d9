// Command-line front end: ingest / solve / reallocate / simulate / learn /
// check-regularity / metrics. Exit codes: 0 ok, 2 infeasible or precondition,
// 3 I/O, 4 internal invariant breach.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fairflow/json_io.hpp"
#include "fairflow/learn.hpp"
#include "fairflow/random.hpp"
#include "fairflow/simharness.hpp"
#include "fairflow/version.hpp"

namespace fs = std::filesystem;
using namespace fairflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPrecondition = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

struct CliError : std::runtime_error {
    int code;
    CliError(int exit_code, const std::string& message)
        : std::runtime_error(message), code(exit_code) {}
};

SolveConfig solve_config_from_env() {
    SolveConfig config;
    if (const char* scale = std::getenv("FAIRFLOW_MONEY_SCALE")) {
        char* end = nullptr;
        const long long value = std::strtoll(scale, &end, 10);
        if (end == scale || value <= 0)
            throw CliError(kExitPrecondition, "FAIRFLOW_MONEY_SCALE must be a positive integer");
        config.money_scale = value;
    }
    return config;
}

Instance load_instance(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const std::runtime_error& e) {
        throw CliError(kExitIo, e.what());
    } catch (const json::exception& e) {
        throw CliError(kExitPrecondition, std::string("instance JSON malformed: ") + e.what());
    }
    try {
        return instance_from_json(j);
    } catch (const std::exception& e) {
        throw CliError(kExitPrecondition, std::string("instance invalid: ") + e.what());
    }
}

DispatchPlan load_plan(const std::string& path) {
    try {
        return plan_from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
        throw CliError(kExitPrecondition, std::string("plan JSON malformed: ") + e.what());
    } catch (const std::runtime_error& e) {
        throw CliError(kExitIo, e.what());
    }
}

void write_output(const std::string& path, const std::string& contents) {
    try {
        if (const fs::path parent = fs::path(path).parent_path(); !parent.empty())
            fs::create_directories(parent);
        write_text_file(path, contents);
    } catch (const std::exception& e) {
        throw CliError(kExitIo, e.what());
    }
}

// ISO-8601 timestamps (YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]) or raw epoch seconds.
double parse_timestamp(const std::string& text) {
    int year, month, day, hour = 0, minute = 0;
    double second = 0.0;
    char sep = 'T';
    if (std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%lf", &year, &month, &day, &sep, &hour,
                    &minute, &second) >= 3) {
        // Days-from-civil, valid for the proleptic Gregorian calendar.
        const int y = year - (month <= 2);
        const int era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        const long long days = static_cast<long long>(era) * 146097 +
                               static_cast<long long>(doe) - 719468;
        return static_cast<double>(days) * 86400.0 + hour * 3600.0 + minute * 60.0 + second;
    }
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str())
        throw CliError(kExitPrecondition, "unparseable timestamp: " + text);
    return value;
}

std::vector<TripRecord> read_trip_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError(kExitIo, "cannot open trip CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw CliError(kExitPrecondition, "empty trip CSV: " + path);
    const std::string expected =
        "pickup_time,pickup_lat,pickup_lon,dropoff_time,dropoff_lat,dropoff_lon,reward";
    if (line.find(expected) != 0)
        throw CliError(kExitPrecondition, "trip CSV header must be: " + expected);
    std::vector<TripRecord> records;
    size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw CliError(kExitPrecondition,
                           "trip CSV line " + std::to_string(line_number) + ": need 7 fields");
        TripRecord r;
        r.pickup_time = parse_timestamp(fields[0]);
        r.pickup_lat = std::stod(fields[1]);
        r.pickup_lon = std::stod(fields[2]);
        r.dropoff_time = parse_timestamp(fields[3]);
        r.dropoff_lat = std::stod(fields[4]);
        r.dropoff_lon = std::stod(fields[5]);
        r.reward = std::stod(fields[6]);
        records.push_back(r);
    }
    return records;
}

std::string hash_of(const std::vector<std::string>& parts) {
    std::string canonical = std::string("fairflow/") + kVersion;
    for (const std::string& p : parts) canonical += "|" + p;
    return config_hash(canonical);
}

// --- subcommand payloads -------------------------------------------------

struct IngestArgs {
    std::string csv, out, drivers_path;
    double lat0 = 0.0, lon0 = 0.0, cell_km = 2.0;
    int width = 10, height = 10, slots = 20;
    double slot_minutes = 15.0;
    std::string t0_text = "0";
    double cost_per_km = 1.0;
    double slots_per_cell = 1.0;
    bool fit = false;
};

int run_ingest(const IngestArgs& args) {
    const std::vector<TripRecord> records = read_trip_csv(args.csv);
    if (records.empty()) throw CliError(kExitPrecondition, "trip CSV has no data rows");
    GridSpec grid;
    grid.lat0 = args.lat0;
    grid.lon0 = args.lon0;
    grid.cell_km = args.cell_km;
    grid.width = args.width;
    grid.height = args.height;
    grid.t0 = parse_timestamp(args.t0_text);
    grid.slot_seconds = args.slot_minutes * 60.0;
    grid.num_slots = args.slots;

    Instance instance;
    instance.num_locations = grid.num_locations();
    instance.num_times = grid.num_slots;
    instance.travel_time = TravelTime::grid(grid.width, args.slots_per_cell);
    instance.cost = CostModel::per_km(args.cost_per_km, grid.width, grid.cell_km);
    instance.initial_drivers.assign(instance.num_states(), 0);
    if (!args.drivers_path.empty()) {
        const json dj = json::parse(read_text_file(args.drivers_path));
        for (const json& d : dj) {
            const State s{d.at("state")[0].get<int>(), d.at("state")[1].get<int>()};
            if (!instance.in_range(s))
                throw CliError(kExitPrecondition, "driver state outside the grid");
            instance.initial_drivers[instance.state_index(s)] += d.at("count").get<int64_t>();
        }
    }

    const DiscretizeResult result = discretize_trips(records, grid, instance);
    if (result.kept == 0) throw CliError(kExitPrecondition, "no record survived discretization");

    if (args.fit || result.daily_orders.size() > 1) {
        const auto fitted = fit_gaussian_poisson(result.daily_orders);
        DistributionList dists;
        for (const FittedArc& f : fitted) dists.push_back({f.arc, f.params});
        instance.demand = std::move(dists);
    } else {
        instance.demand = result.daily_orders.front();
    }
    instance.validate();

    json out = instance_to_json(instance);
    out["config_hash"] = hash_of({"ingest", args.csv, std::to_string(grid.width),
                                  std::to_string(grid.num_slots), std::to_string(grid.cell_km),
                                  std::to_string(args.cost_per_km)});
    out["version"] = kVersion;
    write_output(args.out, out.dump(2) + "\n");

    json summary{{"kept", result.kept},
                 {"dropped_out_of_grid", result.dropped_out_of_grid},
                 {"dropped_out_of_horizon", result.dropped_out_of_horizon},
                 {"dropped_same_state", result.dropped_same_state},
                 {"dropped_inadmissible", result.dropped_inadmissible},
                 {"days", result.daily_orders.size()},
                 {"states", instance.num_states()}};
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

struct SolveArgs {
    std::string instance, out, mode = "exact";
    std::string dump_network, dump_tables;
    bool minimal_empty_arcs = false;
};

int run_solve(const SolveArgs& args) {
    const Instance instance = load_instance(args.instance);
    const SolveConfig config = solve_config_from_env();
    NlwcBuildOptions build;
    build.empty_arcs =
        args.minimal_empty_arcs ? EmptyArcMode::Minimal : EmptyArcMode::Full;
    const std::string hash =
        hash_of({"solve", args.instance, args.mode, std::to_string(config.money_scale),
                 args.minimal_empty_arcs ? "minimal" : "full"});

    DispatchPlan plan;
    if (instance.deterministic()) {
        const SolveMode mode = args.mode == "ironed" ? SolveMode::Ironed : SolveMode::ExactRegular;
        const NlwcNetwork net = build_nlwc(instance, build);
        if (!args.dump_network.empty()) {
            CirculationNetwork circ;  // mirror of the decomposition, for external checks
            circ.num_nodes = net.num_nodes();
            for (const NlwcEdge& e : net.edges) {
                if (e.kind == NlwcEdgeKind::WithRider) {
                    double prev = 0.0;
                    for (double r : concave_envelope(e.reward_seq)) {
                        circ.edges.push_back(CirculationEdge{e.from, e.to, 0, 1, -(r - prev)});
                        prev = r;
                    }
                } else {
                    circ.edges.push_back(
                        CirculationEdge{e.from, e.to, e.lower, e.upper, -e.unit_reward});
                }
            }
            write_output(args.dump_network, to_dimacs(circ));
        }
        NlwcSolution solution;
        try {
            solution = edge_decompose_solve(net, mode, config);
        } catch (const std::domain_error& e) {
            throw CliError(kExitPrecondition, e.what());
        }
        plan = extract_plan(net, solution, instance);
    } else {
        StochasticSolveResult result;
        try {
            result = solve_stochastic_dispatch(instance, build, PriceSearch{}, config);
        } catch (const std::domain_error& e) {
            throw CliError(kExitPrecondition, e.what());
        }
        if (!args.dump_tables.empty()) {
            const StochasticNetwork rebuilt = build_nlwc_stochastic(instance, build);
            json tables = json::array();
            for (const RewardTable& t : rebuilt.tables) tables.push_back(reward_table_to_json(t));
            write_output(args.dump_tables, tables.dump(2) + "\n");
        }
        plan = result.plan;
    }
    write_output(args.out, plan_to_json(plan, hash).dump(2) + "\n");
    std::cout << "revenue " << plan.revenue << " income " << plan.income << " cost " << plan.cost
              << (plan.ironed ? " (ironed)" : "") << "\n";
    return kExitOk;
}

struct ReallocateArgs {
    std::string instance, plan, out, method = "qp";
};

int run_reallocate(const ReallocateArgs& args) {
    const Instance instance = load_instance(args.instance);
    const DispatchPlan plan = load_plan(args.plan);
    const std::string hash = hash_of({"reallocate", args.instance, args.plan, args.method});
    PaymentScheme scheme;
    try {
        if (args.method == "constructive") {
            scheme = constructive_allocation(plan, instance, plan.income);
        } else {
            scheme = qp_allocation(plan, instance, plan.income).scheme;
        }
    } catch (const std::domain_error& e) {
        throw CliError(kExitPrecondition, e.what());
    }
    const FairnessReport report = check_fairness(plan, scheme, plan.income, instance, 1e-8);
    if (!report.pass)
        throw CliError(kExitInternal, "produced scheme fails its own fairness check");
    write_output(args.out, scheme_to_json(scheme, report, instance, hash).dump(2) + "\n");
    std::cout << "fair scheme written; budget residual " << report.budget_residual << "\n";
    return kExitOk;
}

struct SimulateArgs {
    std::string instance, plan, scheme, out, regime = "2P";
    int days = 30;
    uint64_t seed = 0;
    bool seed_set = false;
};

int run_simulate(const SimulateArgs& args) {
    const Instance instance = load_instance(args.instance);
    if (instance.deterministic())
        throw CliError(kExitPrecondition, "simulate needs a stochastic instance");
    if (!args.seed_set) throw CliError(kExitPrecondition, "--seed is mandatory for simulate");

    DispatchPlan plan;
    PaymentScheme scheme;
    PaymentRegime regime = PaymentRegime::PriceOnly;
    if (args.regime == "FP") {
        plan = fixed_price_baseline(instance).plan;
    } else {
        plan = load_plan(args.plan);
        if (args.regime == "2P") {
            regime = PaymentRegime::TwoPhase;
            if (args.scheme.empty())
                throw CliError(kExitPrecondition, "regime 2P needs --scheme");
            scheme = scheme_from_json(json::parse(read_text_file(args.scheme)), instance);
        } else if (args.regime != "P1") {
            throw CliError(kExitPrecondition, "--regime must be 2P, P1 or FP");
        }
    }
    const auto routes = decompose_routes(plan, instance);
    std::vector<State> starts;
    for (const DriverRoute& r : routes) starts.push_back(r.start);

    std::ostringstream csv;
    csv << "day,revenue,income,cost,unfairness_abs,unfairness_rel\n";
    for (int day = 1; day <= args.days; ++day) {
        const OrderList orders =
            sample_day(instance, Rng::derive(args.seed, static_cast<uint64_t>(day), 0x51ull));
        const DayOutcome outcome =
            execute_plan(plan, routes, orders, instance, regime,
                         regime == PaymentRegime::TwoPhase ? &scheme : nullptr);
        UnfairnessMetrics metrics;
        if (!routes.empty()) metrics = unfairness(outcome.driver_incomes, starts);
        csv << day << ',' << outcome.revenue << ',' << outcome.income << ',' << outcome.cost
            << ',' << metrics.absolute << ','
            << (metrics.relative_defined ? std::to_string(metrics.relative) : "nan") << "\n";
    }
    const std::string hash = hash_of({"simulate", args.instance, args.plan, args.regime,
                                      std::to_string(args.days), std::to_string(args.seed)});
    csv << "# config_hash " << hash << " version " << kVersion << "\n";
    write_output(args.out, csv.str());
    return kExitOk;
}

struct LearnArgs {
    std::string instance, out, posterior_dir, algo = "ts";
    int horizon = 50;
    int explore_days = 19;
    uint64_t seed = 0;
    bool seed_set = false;
    double fare_per_km = 1.0, fare_base = 0.0;
    std::vector<int> update_days;
    bool minimal_empty_arcs = false;
};

int run_learn(const LearnArgs& args) {
    const Instance instance = load_instance(args.instance);
    if (instance.deterministic())
        throw CliError(kExitPrecondition, "learn needs a stochastic instance");
    if (!args.seed_set) throw CliError(kExitPrecondition, "--seed is mandatory for learn");

    FareModel fare;
    fare.per_km = args.fare_per_km;
    fare.base = args.fare_base;
    const auto priors = priors_from_fare_model(instance, fare);
    LearnOptions options;
    options.update_days = args.update_days;
    options.record_snapshots = !args.posterior_dir.empty();
    options.solver = solve_config_from_env();
    if (args.minimal_empty_arcs) options.build.empty_arcs = EmptyArcMode::Minimal;

    LearningCurve curve;
    if (args.algo == "ts") {
        curve = ts_run(instance, args.horizon, priors, args.seed, options);
    } else if (args.algo == "ee") {
        curve = ee_run(instance, args.horizon, args.explore_days, priors, args.seed, options);
    } else {
        throw CliError(kExitPrecondition, "--algo must be ts or ee");
    }

    std::ostringstream csv;
    csv << "day,revenue,ov,regret_to_date,expected_revenue\n";
    double shortfall = 0.0;
    for (const LearningDay& day : curve.days) {
        shortfall += curve.optimal_value - day.revenue;
        csv << day.day << ',' << day.revenue << ',' << curve.optimal_value << ','
            << shortfall / day.day << ',' << day.expected_revenue << "\n";
    }
    const std::string hash =
        hash_of({"learn", args.instance, args.algo, std::to_string(args.horizon),
                 std::to_string(args.seed), std::to_string(args.fare_per_km),
                 std::to_string(args.fare_base)});
    csv << "# config_hash " << hash << " version " << kVersion << " regret "
        << curve.regret << "\n";
    write_output(args.out, csv.str());

    if (!args.posterior_dir.empty()) {
        for (const auto& [day, states] : curve.snapshots) {
            json snapshot = json::array();
            for (const PosteriorState& st : states) snapshot.push_back(posterior_to_json(st));
            write_output(args.posterior_dir + "/posterior_day" + std::to_string(day) + ".json",
                         snapshot.dump(2) + "\n");
        }
        json final_snapshot = json::array();
        for (const PosteriorState& st : curve.final_posteriors)
            final_snapshot.push_back(posterior_to_json(st));
        write_output(args.posterior_dir + "/posterior_final.json", final_snapshot.dump(2) + "\n");
    }
    std::cout << "regret " << curve.regret << " ov " << curve.optimal_value << "\n";
    return kExitOk;
}

struct CheckRegularityArgs {
    std::string instance, out;
};

int run_check_regularity(const CheckRegularityArgs& args) {
    const Instance instance = load_instance(args.instance);
    json out;
    out["version"] = kVersion;
    out["config_hash"] = hash_of({"check-regularity", args.instance});
    if (instance.deterministic()) {
        const RegularityReport report = check_regularity(instance);
        out["regular"] = report.regular;
        json violations = json::array();
        for (const RegularityViolation& v : report.violations)
            violations.push_back({{"from", {v.arc.from.location, v.arc.from.time}},
                                  {"to", {v.arc.to.location, v.arc.to.time}},
                                  {"k", v.k},
                                  {"marginal", v.marginal},
                                  {"previous", v.previous}});
        out["violations"] = violations;
    } else {
        const StochasticNetwork net = build_nlwc_stochastic(instance);
        out["regular"] = net.all_concave;
        json violations = json::array();
        for (const RewardTable& t : net.tables)
            for (int n : t.concavity_violations)
                violations.push_back({{"from", {t.arc.from.location, t.arc.from.time}},
                                      {"to", {t.arc.to.location, t.arc.to.time}},
                                      {"n", n}});
        out["violations"] = violations;
    }
    write_output(args.out, out.dump(2) + "\n");
    std::cout << (out["regular"].get<bool>() ? "regular" : "NOT regular") << "\n";
    return kExitOk;
}

struct MetricsArgs {
    std::string incomes, curve, out;
    double ov = 0.0;
    bool ov_set = false;
};

int run_metrics(const MetricsArgs& args) {
    json out;
    out["version"] = kVersion;
    if (!args.incomes.empty()) {
        std::ifstream in(args.incomes);
        if (!in) throw CliError(kExitIo, "cannot open incomes CSV: " + args.incomes);
        std::string line;
        std::getline(in, line);  // header: driver,location,time,income
        std::vector<double> incomes;
        std::vector<State> starts;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream row(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(row, field, ',')) fields.push_back(field);
            if (fields.size() != 4)
                throw CliError(kExitPrecondition, "incomes CSV needs driver,location,time,income");
            starts.push_back(State{std::stoi(fields[1]), std::stoi(fields[2])});
            incomes.push_back(std::stod(fields[3]));
        }
        if (incomes.empty()) throw CliError(kExitPrecondition, "incomes CSV has no rows");
        const UnfairnessMetrics metrics = unfairness(incomes, starts);
        out["unfairness_abs"] = metrics.absolute;
        if (metrics.relative_defined) out["unfairness_rel"] = metrics.relative;
        out["drivers"] = incomes.size();
    }
    if (!args.curve.empty()) {
        if (!args.ov_set) throw CliError(kExitPrecondition, "--ov is required with --curve");
        std::ifstream in(args.curve);
        if (!in) throw CliError(kExitIo, "cannot open curve CSV: " + args.curve);
        std::string line;
        std::getline(in, line);  // header
        std::vector<double> revenues;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream row(line);
            std::string day, revenue;
            std::getline(row, day, ',');
            std::getline(row, revenue, ',');
            revenues.push_back(std::stod(revenue));
        }
        if (revenues.empty()) throw CliError(kExitPrecondition, "curve CSV has no rows");
        out["regret"] = average_regret(revenues, args.ov);
        out["days"] = revenues.size();
    }
    if (!out.contains("regret") && !out.contains("unfairness_abs"))
        throw CliError(kExitPrecondition, "metrics needs --incomes and/or --curve");
    write_output(args.out, out.dump(2) + "\n");
    std::cout << out.dump() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-phase ridesharing dispatch and pricing toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    IngestArgs ingest;
    CLI::App* cmd_ingest = app.add_subcommand("ingest", "discretize a trip CSV into an instance");
    cmd_ingest->add_option("--csv", ingest.csv)->required();
    cmd_ingest->add_option("--out", ingest.out)->required();
    cmd_ingest->add_option("--lat0", ingest.lat0)->required();
    cmd_ingest->add_option("--lon0", ingest.lon0)->required();
    cmd_ingest->add_option("--cell-km", ingest.cell_km);
    cmd_ingest->add_option("--width", ingest.width);
    cmd_ingest->add_option("--height", ingest.height);
    cmd_ingest->add_option("--slots", ingest.slots);
    cmd_ingest->add_option("--slot-minutes", ingest.slot_minutes);
    cmd_ingest->add_option("--t0", ingest.t0_text, "horizon start (ISO-8601 or epoch seconds)");
    cmd_ingest->add_option("--cost-per-km", ingest.cost_per_km)->required();
    cmd_ingest->add_option("--slots-per-cell", ingest.slots_per_cell);
    cmd_ingest->add_option("--drivers", ingest.drivers_path,
                           "JSON array of {state:[l,t], count:n}");
    cmd_ingest->add_flag("--fit", ingest.fit, "force a Gaussian-Poisson fit even for one day");

    SolveArgs solve;
    CLI::App* cmd_solve = app.add_subcommand("solve", "phase-1 dispatch plan");
    cmd_solve->add_option("--instance", solve.instance)->required();
    cmd_solve->add_option("--out", solve.out)->required();
    cmd_solve->add_option("--mode", solve.mode)->check(CLI::IsMember({"exact", "ironed"}));
    cmd_solve->add_option("--dump-network", solve.dump_network, "DIMACS dump (debug)");
    cmd_solve->add_option("--dump-tables", solve.dump_tables, "reward-table JSON dump (debug)");
    cmd_solve->add_flag("--minimal-empty-arcs", solve.minimal_empty_arcs,
                        "restrict repositioning edges to earliest arrivals");

    ReallocateArgs reallocate;
    CLI::App* cmd_reallocate = app.add_subcommand("reallocate", "phase-2 fair payments");
    cmd_reallocate->add_option("--instance", reallocate.instance)->required();
    cmd_reallocate->add_option("--plan", reallocate.plan)->required();
    cmd_reallocate->add_option("--out", reallocate.out)->required();
    cmd_reallocate->add_option("--method", reallocate.method)
        ->check(CLI::IsMember({"qp", "constructive"}));

    SimulateArgs simulate;
    CLI::App* cmd_simulate = app.add_subcommand("simulate", "execute a plan over sampled days");
    cmd_simulate->add_option("--instance", simulate.instance)->required();
    cmd_simulate->add_option("--plan", simulate.plan);
    cmd_simulate->add_option("--scheme", simulate.scheme);
    cmd_simulate->add_option("--out", simulate.out)->required();
    cmd_simulate->add_option("--days", simulate.days);
    cmd_simulate->add_option("--regime", simulate.regime)
        ->check(CLI::IsMember({"2P", "P1", "FP"}));
    cmd_simulate->add_option("--seed", simulate.seed)->each([&](const std::string&) {
        simulate.seed_set = true;
    });

    LearnArgs learn;
    CLI::App* cmd_learn = app.add_subcommand("learn", "online learning over a horizon");
    cmd_learn->add_option("--instance", learn.instance)->required();
    cmd_learn->add_option("--out", learn.out)->required();
    cmd_learn->add_option("--algo", learn.algo)->check(CLI::IsMember({"ts", "ee"}));
    cmd_learn->add_option("--horizon", learn.horizon);
    cmd_learn->add_option("--explore-days", learn.explore_days);
    cmd_learn->add_option("--fare-per-km", learn.fare_per_km);
    cmd_learn->add_option("--fare-base", learn.fare_base);
    cmd_learn->add_option("--update-days", learn.update_days, "restrict posterior updates");
    cmd_learn->add_option("--posterior-dir", learn.posterior_dir);
    cmd_learn->add_flag("--minimal-empty-arcs", learn.minimal_empty_arcs);
    cmd_learn->add_option("--seed", learn.seed)->each([&](const std::string&) {
        learn.seed_set = true;
    });

    CheckRegularityArgs check;
    CLI::App* cmd_check = app.add_subcommand("check-regularity", "Definition-3 / table concavity");
    cmd_check->add_option("--instance", check.instance)->required();
    cmd_check->add_option("--out", check.out)->required();

    MetricsArgs metrics;
    CLI::App* cmd_metrics = app.add_subcommand("metrics", "unfairness and regret");
    cmd_metrics->add_option("--incomes", metrics.incomes, "CSV driver,location,time,income");
    cmd_metrics->add_option("--curve", metrics.curve, "learning-curve CSV");
    cmd_metrics->add_option("--ov", metrics.ov)->each([&](const std::string&) {
        metrics.ov_set = true;
    });
    cmd_metrics->add_option("--out", metrics.out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_ingest->parsed()) return run_ingest(ingest);
        if (cmd_solve->parsed()) return run_solve(solve);
        if (cmd_reallocate->parsed()) return run_reallocate(reallocate);
        if (cmd_simulate->parsed()) return run_simulate(simulate);
        if (cmd_learn->parsed()) return run_learn(learn);
        if (cmd_check->parsed()) return run_check_regularity(check);
        if (cmd_metrics->parsed()) return run_metrics(metrics);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    }
    return kExitOk;
}
