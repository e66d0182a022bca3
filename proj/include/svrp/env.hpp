#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "svrp/instance.hpp"

namespace svrp {

// apriori: the agent's believed values stay at the fixed-term estimates for
// the whole episode. reopt: arriving at a customer reveals its realized
// demand and outgoing cost row.
enum class EnvMode { apriori, reopt };

const char* to_string(EnvMode m);
EnvMode env_mode_from_string(const std::string& s);

// Joint action: one target node per vehicle (0 = depot).
struct Action {
    std::vector<int> targets;
};

// Per-vehicle depot-rooted node sequences plus recourse tallies.
struct Solution {
    std::vector<std::vector<int>> routes;
    std::vector<int> recourse_count;  // [n_nodes]
    double total_cost = 0.0;
};

struct EnvState {
    std::vector<double> remaining_demand;  // [n_nodes], [0] = 0
    std::vector<double> believed_demand;   // [n_nodes]
    std::vector<double> believed_costs;    // [n_nodes^2]
    std::vector<double> vehicle_load;      // [n_vehicles]
    std::vector<int> vehicle_pos;          // [n_vehicles]
    double clock = 0.0;                    // hours, wrapped to [0, hours_per_day)
    double accrued_cost = 0.0;
    std::vector<int> recourse_count;       // [n_nodes]
    std::vector<std::uint8_t> revealed;    // [n_nodes]
    int step_count = 0;
    double delivered_total = 0.0;
};

struct VehicleMove {
    int from = 0;
    int to = 0;
    double travel = 0.0;
    double wait = 0.0;
    int recourse_trips = 0;
    double recourse_cost = 0.0;
    double cost = 0.0;  // travel + wait + recourse_cost
};

struct TraceStep {
    std::vector<VehicleMove> moves;
    double step_cost = 0.0;
    double clock_after = 0.0;
};

struct EnvOptions {
    // Optional variant: also mask customers whose estimated arrival hour is
    // closed. Falls back to the plain mask when it would leave a vehicle
    // with no customer at all.
    bool strict_time_window_mask = false;
    int step_cap_multiplier = 10;
};

// Step-based routing environment over one (instance, realization) pair.
// Copyable; beam search replicates environments freely.
class Env {
public:
    Env(const ProblemInstance& instance, const Realization& realization, EnvMode mode,
        EnvOptions options = {});

    void reset();

    const EnvState& state() const { return state_; }
    const ProblemInstance& instance() const { return *instance_; }
    const Realization& realization() const { return *realization_; }
    EnvMode mode() const { return mode_; }
    const EnvOptions& options() const { return options_; }

    double believed_demand(int node) const { return state_.believed_demand[node]; }
    double believed_cost(int i, int j) const {
        return state_.believed_costs[i * instance_->n_nodes() + j];
    }

    // mask[node * n_vehicles + k]; every vehicle column keeps at least one
    // feasible node (the depot is never masked).
    std::vector<std::uint8_t> feasible_mask() const;
    bool feasible(int node, int vehicle) const;

    // Applies a joint action and returns the step cost. Throws on actions
    // that violate the feasibility mask and on runaway episodes.
    double step(const Action& action);

    // Replay path for walking planned routes: no mask or cap enforcement.
    double step_unchecked(const Action& action);

    bool is_terminal() const;
    int step_cap() const { return options_.step_cap_multiplier * instance_->n_nodes(); }

    const std::vector<TraceStep>& trace() const { return trace_; }
    Solution traced_solution() const;

private:
    double apply(const Action& action, bool checked);
    double wait_until_open(int node, double arrival) const;
    bool customer_feasible(int node, int vehicle) const;
    bool strict_window_ok(int node, int vehicle) const;

    const ProblemInstance* instance_;
    const Realization* realization_;
    EnvMode mode_;
    EnvOptions options_;
    EnvState state_;
    std::vector<TraceStep> trace_;
};

// The agent-visible world: fixed-term demands and costs with the realized
// externals and availability. Decoding against it yields apriori plans.
Realization believed_world(const ProblemInstance& instance, const Realization& realization);

struct WalkResult {
    double total_cost = 0.0;
    std::vector<double> step_costs;      // per lockstep round; leftover recourse
                                         // folds into the final entry
    std::vector<int> recourse_count;     // [n_nodes]
    std::vector<int> leftover_customers; // unmet after the walk (charged)
};

// Walks planned routes against a realization in vehicle lockstep with the
// exact step() semantics, then charges one depot round trip per customer
// left with positive demand. Route r of a solution is driven by vehicle r.
WalkResult walk_routes(const ProblemInstance& instance, const Realization& realization,
                       const std::vector<std::vector<int>>& routes);

// Total realized cost of a planned solution under the walk semantics.
double evaluate_apriori(const ProblemInstance& instance, const Realization& realization,
                        const Solution& solution);

enum class VisitRule { exactly_once, at_least_once };

struct Violation {
    std::string constraint;  // "A2".."A7"
    std::string detail;
};

// Structural checks from the classical formulation: depot-rooted tours (A2),
// customer visit degree (A3), a route-count lower bound from expected demand
// (A4) and edge-use bounds (A5, A6). Integrality (A7) holds by construction
// for route-based solutions. at_least_once relaxes A3 to coverage and skips
// the single-visit bounds; use it for step-traced solutions that may revisit
// customers.
std::vector<Violation> validate_solution(const Solution& solution,
                                         const ProblemInstance& instance,
                                         VisitRule rule = VisitRule::exactly_once);

// Monte-Carlo estimate of the expected recourse cost of one planned route:
// every crossing of a capacity multiple at customer j charges a depot round
// trip 2 * E[c_0j].
double expected_recourse_cost(const std::vector<int>& route, const ProblemInstance& instance,
                              int n_mc, std::uint64_t seed);

// Flat text table of an episode trace, one row per vehicle move.
void write_trace(std::ostream& out, const Env& env);

}  // namespace svrp
