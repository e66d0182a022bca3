#pragma once

#include <iosfwd>
#include <optional>

#include "svrp/metaheuristics.hpp"
#include "svrp/training.hpp"

namespace svrp {

// A benchmark set: items index (instance, realization) pairs. With fixed
// customer positions every item shares one instance; flexible positions
// draw a fresh instance per item.
struct Dataset {
    std::string name;
    GenerationConfig config;
    int n_items = 0;
    std::uint64_t seed = 0;
    std::vector<ProblemInstance> instances;
    std::vector<int> item_instance;      // [n_items] -> index into instances
    std::vector<Realization> realizations;  // [n_items]

    const ProblemInstance& instance_of(int item) const {
        return instances[item_instance[item]];
    }
};

std::string config_summary(const GenerationConfig& config);
std::uint64_t config_hash(const GenerationConfig& config, int n_items, std::uint64_t seed);

Dataset generate_dataset(const std::string& name, const GenerationConfig& config, int n_items,
                         std::uint64_t seed);
// Writes instance/realization files plus "<name>.manifest" under dir.
std::string save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& manifest_path);

enum class SolverKind { cw, tabu, aco, rl };
const char* to_string(SolverKind s);
SolverKind solver_from_string(const std::string& s);

struct SolverSetup {
    TabuConfig tabu;
    AcoConfig aco;
    const PolicyNet* net = nullptr;  // required for rl
    DecodeConfig decode;
    EnvMode mode = EnvMode::apriori;  // rl decode mode; baselines plan apriori
    std::uint64_t seed = 1;
    int workers = 0;
};

// Realized cost per item, in item order. Baselines plan once per unique
// instance on expected values and are priced by the apriori walker.
std::vector<double> solver_costs(const Dataset& dataset, SolverKind solver,
                                 const SolverSetup& setup);

// Wall-clock seconds per item solve. The first item is solved once as
// untimed warmup.
std::vector<double> solver_times(const Dataset& dataset, SolverKind solver,
                                 const SolverSetup& setup);

struct BenchRow {
    std::string solver;
    int size = 0;
    std::string mode;
    std::string decode;
    std::string setting;
    double mean_cost = 0.0;
    double std_err = 0.0;
    int n = 0;
};

BenchRow summarize(const std::string& solver, int size, const std::string& mode,
                   const std::string& decode, const std::string& setting,
                   const std::vector<double>& costs);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

struct TimeRow {
    std::string solver;
    int size = 0;
    double median_seconds = 0.0;
    int n = 0;
};

double median(std::vector<double> values);
void write_time_csv(std::ostream& out, const std::vector<TimeRow>& rows);

// Fig-3 style comparison: percentage cost difference between two settings
// per solver, (base - other) / base * 100.
struct PercentDiffRow {
    std::string solver;
    int size = 0;
    double base_mean = 0.0;
    double other_mean = 0.0;
    double percent_diff = 0.0;
};
void write_percent_diff_csv(std::ostream& out, const std::vector<PercentDiffRow>& rows);

// Command-line harness entry point (generate / train / solve / bench / time).
int cli_main(int argc, char** argv);

}  // namespace svrp
