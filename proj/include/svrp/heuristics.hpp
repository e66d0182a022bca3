#pragma once

#include <vector>

#include "svrp/env.hpp"
#include "svrp/instance.hpp"

namespace svrp {

// All classical solvers plan on the agent-visible estimates: fixed-term
// travel costs and analytic expected demands.

struct SavingsEntry {
    int i = 0;
    int j = 0;        // customer node indices, i < j
    double saving = 0.0;
};

// Planned cost of a set of depot-rooted trips (customer lists without the
// depot) under fixed-term costs.
double planned_trips_cost(const ProblemInstance& instance,
                          const std::vector<std::vector<int>>& trips);

// Expected waiting time at a node for an arrival at the given absolute
// time, over the availability model (hours open independently per type
// probabilities). Zero at the depot.
double expected_wait(const ProblemInstance& instance, int node, double arrival);

// Wait-aware planned cost: walks the trips on one expected timeline,
// charging fixed-term legs plus expected waits. Equals planned_trips_cost
// whenever every hour is open.
double planned_trips_cost_with_waits(const ProblemInstance& instance,
                                     const std::vector<std::vector<int>>& trips);

// Assigns trips to vehicles round-robin and concatenates them into
// depot-rooted per-vehicle sequences. total_cost carries the planned cost.
Solution trips_to_solution(const ProblemInstance& instance,
                           const std::vector<std::vector<int>>& trips);

// Pairwise merge savings c_0i + c_j0 - c_ij over fixed-term costs, sorted by
// saving descending with (i, j) lexicographic tie-breaks.
std::vector<SavingsEntry> savings_list(const ProblemInstance& instance);

// Clarke-Wright greedy endpoint merging; merges only while the combined
// expected demand fits the capacity and the saving is positive.
Solution clarke_wright(const ProblemInstance& instance);

}  // namespace svrp
