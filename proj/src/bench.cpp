#include "svrp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

namespace svrp {

namespace fs = std::filesystem;

std::string config_summary(const GenerationConfig& c) {
    std::ostringstream os;
    os << "n_customers=" << c.n_customers << " n_vehicles=" << c.n_vehicles
       << " fill_rate=" << c.fill_rate << " demand_ratios=" << c.demand_ratios.fixed << ','
       << c.demand_ratios.interaction << ',' << c.demand_ratios.noise
       << " cost_ratios=" << c.cost_ratios.fixed << ',' << c.cost_ratios.interaction << ','
       << c.cost_ratios.noise << " time_windows=" << (c.time_windows ? 1 : 0)
       << " correlated=" << (c.external_correlated ? 1 : 0)
       << " delivery=" << to_string(c.delivery_mode)
       << " positions=" << to_string(c.positions_mode);
    return os.str();
}

std::uint64_t config_hash(const GenerationConfig& config, int n_items, std::uint64_t seed) {
    const std::string text =
        config_summary(config) + " n_items=" + std::to_string(n_items) +
        " seed=" + std::to_string(seed);
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

Dataset generate_dataset(const std::string& name, const GenerationConfig& config, int n_items,
                         std::uint64_t seed) {
    if (n_items < 1) throw std::invalid_argument("dataset needs at least one item");
    Dataset ds;
    ds.name = name;
    ds.config = config;
    ds.n_items = n_items;
    ds.seed = seed;

    const bool fixed = config.positions_mode == PositionsMode::fixed;
    if (fixed) ds.instances.push_back(generate_instance(config, derive_seed(seed, 0)));
    for (int item = 0; item < n_items; ++item) {
        if (fixed) {
            ds.item_instance.push_back(0);
        } else {
            ds.instances.push_back(generate_instance(config, derive_seed(seed, 0, item)));
            ds.item_instance.push_back(static_cast<int>(ds.instances.size()) - 1);
        }
        ds.realizations.push_back(
            realize(ds.instances[ds.item_instance[item]], derive_seed(seed, 1, item)));
    }
    return ds;
}

std::string save_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path base(dir);

    std::vector<std::string> instance_files;
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        std::ostringstream file;
        file << ds.name << "_inst_" << std::setw(4) << std::setfill('0') << i << ".txt";
        save_instance(ds.instances[i], (base / file.str()).string());
        instance_files.push_back(file.str());
    }
    std::vector<std::string> realization_files;
    for (int item = 0; item < ds.n_items; ++item) {
        std::ostringstream file;
        file << ds.name << "_real_" << std::setw(4) << std::setfill('0') << item << ".txt";
        save_realization(ds.realizations[item], (base / file.str()).string());
        realization_files.push_back(file.str());
    }

    const std::string manifest_path = (base / (ds.name + ".manifest")).string();
    std::ofstream out(manifest_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + manifest_path);
    out << "svrp-dataset v1\n[config]\n";
    out << "name " << ds.name << '\n';
    out << "n_customers " << ds.config.n_customers << '\n';
    out << "n_vehicles " << ds.config.n_vehicles << '\n';
    out << "fill_rate " << std::setprecision(17) << ds.config.fill_rate << '\n';
    out << "demand_ratios " << ds.config.demand_ratios.fixed << ' '
        << ds.config.demand_ratios.interaction << ' ' << ds.config.demand_ratios.noise << '\n';
    out << "cost_ratios " << ds.config.cost_ratios.fixed << ' '
        << ds.config.cost_ratios.interaction << ' ' << ds.config.cost_ratios.noise << '\n';
    out << "time_windows " << (ds.config.time_windows ? 1 : 0) << '\n';
    out << "correlated " << (ds.config.external_correlated ? 1 : 0) << '\n';
    out << "delivery_mode " << to_string(ds.config.delivery_mode) << '\n';
    out << "positions_mode " << to_string(ds.config.positions_mode) << '\n';
    out << "n_items " << ds.n_items << '\n';
    out << "seed " << ds.seed << '\n';
    out << "hash " << config_hash(ds.config, ds.n_items, ds.seed) << '\n';
    out << "[instances]\n" << "count " << ds.instances.size() << '\n';
    for (std::size_t i = 0; i < instance_files.size(); ++i)
        out << "instance " << i << ' ' << instance_files[i] << '\n';
    out << "[items]\n";
    for (int item = 0; item < ds.n_items; ++item)
        out << "item " << item << ' ' << ds.item_instance[item] << ' '
            << realization_files[item] << '\n';
    out << "[end]\n";
    return manifest_path;
}

Dataset load_dataset(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open for reading: " + manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    Dataset ds;
    std::string line;
    int line_no = 0;
    const auto next = [&](const char* what) {
        if (!std::getline(in, line))
            throw parse_error(manifest_path, line_no, std::string("missing ") + what);
        ++line_no;
        return std::istringstream(line);
    };

    {
        auto is = next("header");
        std::string tag, version;
        is >> tag >> version;
        if (tag != "svrp-dataset" || version != "v1")
            throw parse_error(manifest_path, line_no, "not a v1 dataset manifest");
    }
    next("[config]");
    const auto keyed = [&](const char* key) {
        auto is = next(key);
        std::string k;
        is >> k;
        if (k != key)
            throw parse_error(manifest_path, line_no,
                              "expected '" + std::string(key) + "', found '" + k + "'");
        return is;
    };
    { auto is = keyed("name"); is >> ds.name; }
    { auto is = keyed("n_customers"); is >> ds.config.n_customers; }
    { auto is = keyed("n_vehicles"); is >> ds.config.n_vehicles; }
    { auto is = keyed("fill_rate"); is >> ds.config.fill_rate; }
    {
        auto is = keyed("demand_ratios");
        is >> ds.config.demand_ratios.fixed >> ds.config.demand_ratios.interaction >>
            ds.config.demand_ratios.noise;
    }
    {
        auto is = keyed("cost_ratios");
        is >> ds.config.cost_ratios.fixed >> ds.config.cost_ratios.interaction >>
            ds.config.cost_ratios.noise;
    }
    { auto is = keyed("time_windows"); int v; is >> v; ds.config.time_windows = v != 0; }
    { auto is = keyed("correlated"); int v; is >> v; ds.config.external_correlated = v != 0; }
    {
        auto is = keyed("delivery_mode");
        std::string v;
        is >> v;
        ds.config.delivery_mode = delivery_mode_from_string(v);
    }
    {
        auto is = keyed("positions_mode");
        std::string v;
        is >> v;
        ds.config.positions_mode = positions_mode_from_string(v);
    }
    { auto is = keyed("n_items"); is >> ds.n_items; }
    { auto is = keyed("seed"); is >> ds.seed; }
    std::uint64_t stored_hash = 0;
    { auto is = keyed("hash"); is >> stored_hash; }
    if (stored_hash != config_hash(ds.config, ds.n_items, ds.seed))
        throw parse_error(manifest_path, line_no, "manifest hash does not match its config");

    next("[instances]");
    int count = 0;
    { auto is = keyed("count"); is >> count; }
    for (int i = 0; i < count; ++i) {
        auto is = keyed("instance");
        int idx;
        std::string file;
        is >> idx >> file;
        ds.instances.push_back(load_instance((base / file).string()));
    }
    next("[items]");
    for (int item = 0; item < ds.n_items; ++item) {
        auto is = keyed("item");
        int idx, inst;
        std::string file;
        is >> idx >> inst >> file;
        if (inst < 0 || inst >= count)
            throw parse_error(manifest_path, line_no, "item references a missing instance");
        ds.item_instance.push_back(inst);
        ds.realizations.push_back(load_realization((base / file).string()));
    }
    next("[end]");
    return ds;
}

const char* to_string(SolverKind s) {
    switch (s) {
        case SolverKind::cw: return "cw";
        case SolverKind::tabu: return "tabu";
        case SolverKind::aco: return "aco";
        case SolverKind::rl: return "rl";
    }
    return "?";
}

SolverKind solver_from_string(const std::string& s) {
    if (s == "cw") return SolverKind::cw;
    if (s == "tabu") return SolverKind::tabu;
    if (s == "aco") return SolverKind::aco;
    if (s == "rl") return SolverKind::rl;
    throw std::invalid_argument("unknown solver: " + s);
}

namespace {

Solution plan_baseline(const ProblemInstance& instance, SolverKind solver,
                       const SolverSetup& setup, int instance_idx) {
    switch (solver) {
        case SolverKind::cw: return clarke_wright(instance);
        case SolverKind::tabu: {
            TabuConfig c = setup.tabu;
            c.seed = derive_seed(setup.seed, 21, instance_idx);
            return tabu_search(instance, c);
        }
        case SolverKind::aco: {
            AcoConfig c = setup.aco;
            c.seed = derive_seed(setup.seed, 22, instance_idx);
            return aco(instance, c);
        }
        case SolverKind::rl: break;
    }
    throw std::logic_error("not a baseline solver");
}

// Runs fn(item) over all items with a deterministic output slot per item.
void parallel_items(int n_items, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1) {
        for (int item = 0; item < n_items; ++item) fn(item);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const int lo = static_cast<int>(std::int64_t(n_items) * w / workers);
                const int hi = static_cast<int>(std::int64_t(n_items) * (w + 1) / workers);
                for (int item = lo; item < hi; ++item) fn(item);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<double> solver_costs(const Dataset& ds, SolverKind solver,
                                 const SolverSetup& setup) {
    std::vector<double> costs(ds.n_items, 0.0);
    const int workers = resolve_workers(setup.workers);

    if (solver == SolverKind::rl) {
        if (setup.net == nullptr)
            throw std::invalid_argument("the rl solver needs a checkpointed policy");
        parallel_items(ds.n_items, workers, [&](int item) {
            DecodeConfig decode = setup.decode;
            decode.seed = derive_seed(setup.seed, 23, item);
            costs[item] = solve(*setup.net, ds.instance_of(item), ds.realizations[item],
                                setup.mode, decode)
                              .cost;
        });
        return costs;
    }

    std::vector<Solution> plans(ds.instances.size());
    for (std::size_t i = 0; i < ds.instances.size(); ++i)
        plans[i] = plan_baseline(ds.instances[i], solver, setup, static_cast<int>(i));
    parallel_items(ds.n_items, workers, [&](int item) {
        costs[item] = evaluate_apriori(ds.instance_of(item), ds.realizations[item],
                                       plans[ds.item_instance[item]]);
    });
    return costs;
}

std::vector<double> solver_times(const Dataset& ds, SolverKind solver,
                                 const SolverSetup& setup) {
    using clock = std::chrono::steady_clock;
    const auto solve_item = [&](int item) {
        if (solver == SolverKind::rl) {
            DecodeConfig decode = setup.decode;
            decode.seed = derive_seed(setup.seed, 23, item);
            (void)solve(*setup.net, ds.instance_of(item), ds.realizations[item], setup.mode,
                        decode);
        } else {
            const Solution plan =
                plan_baseline(ds.instance_of(item), solver, setup, ds.item_instance[item]);
            (void)evaluate_apriori(ds.instance_of(item), ds.realizations[item], plan);
        }
    };
    if (solver == SolverKind::rl && setup.net == nullptr)
        throw std::invalid_argument("the rl solver needs a checkpointed policy");

    solve_item(0);  // warmup
    std::vector<double> seconds(ds.n_items, 0.0);
    for (int item = 0; item < ds.n_items; ++item) {
        const auto start = clock::now();
        solve_item(item);
        seconds[item] = std::chrono::duration<double>(clock::now() - start).count();
    }
    return seconds;
}

BenchRow summarize(const std::string& solver, int size, const std::string& mode,
                   const std::string& decode, const std::string& setting,
                   const std::vector<double>& costs) {
    BenchRow row;
    row.solver = solver;
    row.size = size;
    row.mode = mode;
    row.decode = decode;
    row.setting = setting;
    row.n = static_cast<int>(costs.size());
    double mean = 0.0;
    for (double c : costs) mean += c;
    mean /= row.n;
    double var = 0.0;
    for (double c : costs) var += (c - mean) * (c - mean);
    var = row.n > 1 ? var / (row.n - 1) : 0.0;
    row.mean_cost = mean;
    row.std_err = row.n > 1 ? std::sqrt(var / row.n) : 0.0;
    return row;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of nothing");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "solver,size,mode,decode,setting,mean_cost,std_err,n\n";
    out << std::setprecision(6) << std::fixed;
    for (const BenchRow& r : rows)
        out << r.solver << ',' << r.size << ',' << r.mode << ',' << r.decode << ',' << r.setting
            << ',' << r.mean_cost << ',' << r.std_err << ',' << r.n << '\n';
}

void write_time_csv(std::ostream& out, const std::vector<TimeRow>& rows) {
    out << "solver,size,median_seconds,n\n";
    out << std::setprecision(6) << std::fixed;
    for (const TimeRow& r : rows)
        out << r.solver << ',' << r.size << ',' << r.median_seconds << ',' << r.n << '\n';
}

void write_percent_diff_csv(std::ostream& out, const std::vector<PercentDiffRow>& rows) {
    out << "solver,size,base_mean,other_mean,percent_diff\n";
    out << std::setprecision(6) << std::fixed;
    for (const PercentDiffRow& r : rows)
        out << r.solver << ',' << r.size << ',' << r.base_mean << ',' << r.other_mean << ','
            << r.percent_diff << '\n';
}

}  // namespace svrp
