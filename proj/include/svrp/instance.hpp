#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "svrp/common.hpp"

namespace svrp {

inline constexpr int kNumExternal = 3;
inline constexpr int kHoursPerDay = 12;
inline constexpr int kNumCustomerTypes = 2;

// Squared-magnitude shares of a stochastic variable: fixed term, external
// interaction term, and noise. Components must sum to one.
struct SignalRatios {
    double fixed = 1.0;
    double interaction = 0.0;
    double noise = 0.0;

    void validate() const;
};

// E[w_m * w_n] for iid uniform [0,1] externals: 1/3 on the diagonal, 1/4 off.
double external_pair_moment(int m, int n);

// Exact first and second raw moments of sum_{m,n} alpha[m][n] w_m w_n over
// iid uniform [0,1] externals. alpha is a 3x3 tensor, row-major.
double interaction_mean(const std::array<double, 9>& alpha);
double interaction_second_moment(const std::array<double, 9>& alpha);

// One stochastic variable family (demands, or cost rows): value =
// fixed_term + sum_mn alpha[m][n] w_m w_n + noise, clamped at zero.
struct StochasticField {
    std::vector<double> fixed_terms;             // per target, >= 0
    std::vector<std::array<double, 9>> alpha;    // per target, symmetric in (m,n)
    std::vector<double> noise_scale;             // per target, >= 0
    SignalRatios target_ratios;

    int n_targets() const { return static_cast<int>(fixed_terms.size()); }
    void validate() const;
};

struct TimeWindowModel {
    int hours_per_day = kHoursPerDay;
    int n_types = kNumCustomerTypes;
    std::vector<std::vector<double>> avail_prob;  // [type][hour], in [0,1]
    std::vector<double> service_time;             // [type], hours

    void validate() const;
};

enum class DeliveryMode { partial, full };
enum class PositionsMode { fixed, flexible };

const char* to_string(DeliveryMode m);
const char* to_string(PositionsMode m);
DeliveryMode delivery_mode_from_string(const std::string& s);
PositionsMode positions_mode_from_string(const std::string& s);

struct GenerationConfig {
    int n_customers = 10;
    int n_vehicles = 1;
    double fill_rate = 0.5;
    SignalRatios demand_ratios{0.6, 0.2, 0.2};
    SignalRatios cost_ratios{0.6, 0.2, 0.2};
    bool time_windows = true;
    bool external_correlated = false;
    DeliveryMode delivery_mode = DeliveryMode::partial;
    PositionsMode positions_mode = PositionsMode::fixed;
};

// Problem data. Node 0 is the depot; customers are nodes 1..n_customers.
// Demand-field targets are indexed by customer (node - 1); cost-field
// targets are ordered node pairs, row-major over n_nodes^2.
struct ProblemInstance {
    int n_customers = 0;
    std::vector<std::array<double, 2>> coords;  // [n_nodes]
    std::vector<int> customer_type;             // [n_customers]
    StochasticField demand_field;
    StochasticField cost_field;
    double speed = 1.0;
    int n_vehicles = 1;
    double capacity = 0.0;
    TimeWindowModel tw;
    int n_external = kNumExternal;
    bool external_correlated = false;
    DeliveryMode delivery_mode = DeliveryMode::partial;
    PositionsMode positions_mode = PositionsMode::fixed;
    std::uint64_t seed = 0;

    int n_nodes() const { return n_customers + 1; }
    int type_of(int node) const { return customer_type[node - 1]; }

    double fixed_demand(int node) const { return demand_field.fixed_terms[node - 1]; }
    double fixed_cost(int i, int j) const { return cost_field.fixed_terms[i * n_nodes() + j]; }

    // Analytic pre-clamp expectations; the solver-facing estimates.
    double expected_demand(int node) const;
    double expected_cost(int i, int j) const;
    double total_expected_demand() const;

    void validate() const;
};

// One sampled world for an instance. All vectors are node-indexed with the
// depot occupying slot 0 (zero demand, all-hours availability).
struct Realization {
    std::vector<std::array<double, 3>> w;  // size 1 when correlated, else n_nodes
    std::vector<double> demands;           // [n_nodes], [0] = 0
    std::vector<double> costs;             // [n_nodes^2], diagonal 0
    std::vector<std::array<std::uint8_t, kHoursPerDay>> availability;  // [n_nodes]

    bool correlated() const { return w.size() == 1; }
    int n_nodes() const { return static_cast<int>(demands.size()); }
    const std::array<double, 3>& w_for(int node) const {
        return correlated() ? w[0] : w[node];
    }
    double cost(int i, int j) const { return costs[i * n_nodes() + j]; }

    void validate(const ProblemInstance& instance) const;
};

// Scales the raw interaction tensor and the noise so the squared-component
// shares hit the target ratios for a variable with the given fixed term.
// With n_samples == 0 the interaction second moment is computed from exact
// uniform moments; with n_samples > 0 it is estimated by Monte Carlo.
std::pair<double, double> calibrate_signal_scales(double fixed_term,
                                                  const SignalRatios& targets,
                                                  const std::array<double, 9>& alpha_raw,
                                                  int n_samples = 0,
                                                  std::uint64_t seed = 0);

ProblemInstance generate_instance(const GenerationConfig& config, std::uint64_t seed);

Realization realize(const ProblemInstance& instance, std::uint64_t seed);

// Monte-Carlo estimate of the realized squared-component shares of a field,
// aggregated over its targets and normalized so the parts sum to one.
SignalRatios empirical_signal_ratios(const StochasticField& field, int n_samples,
                                     std::uint64_t seed);

// capacity / total expected demand.
double fill_rate(const ProblemInstance& instance);

// Draws just the demand vector of a fresh realization; used by Monte-Carlo
// recourse estimation. Returned vector is node-indexed with [0] = 0.
std::vector<double> sample_demands(const ProblemInstance& instance, RngStream& rng);

void save_instance(const ProblemInstance& instance, std::ostream& out);
void save_instance(const ProblemInstance& instance, const std::string& path);
ProblemInstance load_instance(std::istream& in, const std::string& where = "<stream>");
ProblemInstance load_instance(const std::string& path);

void save_realization(const Realization& r, std::ostream& out);
void save_realization(const Realization& r, const std::string& path);
Realization load_realization(std::istream& in, const std::string& where = "<stream>");
Realization load_realization(const std::string& path);

}  // namespace svrp
