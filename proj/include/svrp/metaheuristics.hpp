#pragma once

#include <cstdint>

#include "svrp/heuristics.hpp"

namespace svrp {

struct TabuConfig {
    int max_iterations = 0;  // 0 = size-scaled default
    int tenure = 10;
    std::uint64_t seed = 1;
};

struct AcoConfig {
    double pheromone_importance = 3.0;
    double heuristic_importance = 10.0;
    int n_ants = 12;
    double evaporation = 0.1;
    int iterations = 0;  // 0 = size-scaled default
    std::uint64_t seed = 1;
};

int default_tabu_iterations(int n_customers);
int default_aco_iterations(int n_customers);

// Tabu search over relocate, swap and intra-route 2-opt moves from a random
// feasible start. Tabu attribute is the moved-customer identity; tabu moves
// that beat the incumbent are admitted.
Solution tabu_search(const ProblemInstance& instance, const TabuConfig& config);

// Ant-colony optimization with roulette construction biased by
// pheromone^a * (1/cost)^b, global evaporation and an iteration-best
// deposit proportional to 1/cost.
Solution aco(const ProblemInstance& instance, const AcoConfig& config);

}  // namespace svrp
