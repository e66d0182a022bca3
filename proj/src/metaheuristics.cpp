#include "svrp/metaheuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace svrp {

namespace {

constexpr double kEps = 1e-12;
constexpr double kTauFloor = 1e-12;

struct Trips {
    std::vector<std::vector<int>> trips;
    std::vector<double> load;
};

Trips random_feasible_start(const ProblemInstance& inst, RngStream& rng) {
    std::vector<int> order(inst.n_customers);
    std::iota(order.begin(), order.end(), 1);
    for (int i = inst.n_customers - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(i + 1)]);

    Trips state;
    std::vector<int> current;
    double current_load = 0.0;
    for (int c : order) {
        const double demand = inst.expected_demand(c);
        if (!current.empty() && current_load + demand > inst.capacity) {
            state.trips.push_back(current);
            state.load.push_back(current_load);
            current.clear();
            current_load = 0.0;
        }
        current.push_back(c);
        current_load += demand;
    }
    if (!current.empty()) {
        state.trips.push_back(current);
        state.load.push_back(current_load);
    }
    return state;
}

void drop_empty(Trips& state) {
    for (std::size_t t = state.trips.size(); t-- > 0;) {
        if (state.trips[t].empty()) {
            state.trips.erase(state.trips.begin() + t);
            state.load.erase(state.load.begin() + t);
        }
    }
}

}  // namespace

int default_tabu_iterations(int n_customers) { return 120 + 12 * n_customers; }
int default_aco_iterations(int n_customers) { return 100 * n_customers; }

Solution tabu_search(const ProblemInstance& instance, const TabuConfig& config) {
    if (config.tenure < 1) throw std::invalid_argument("tabu tenure must be at least 1");
    const int max_iters = config.max_iterations > 0
                              ? config.max_iterations
                              : default_tabu_iterations(instance.n_customers);

    RngStream rng(config.seed);
    Trips state = random_feasible_start(instance, rng);
    const auto cost_of = [&](const std::vector<std::vector<int>>& trips) {
        return planned_trips_cost_with_waits(instance, trips);
    };

    double current_cost = cost_of(state.trips);
    double best_cost = current_cost;
    auto best_trips = state.trips;

    std::vector<int> tabu_until(instance.n_nodes(), 0);

    // Candidate moves are applied to a scratch copy and priced in full; the
    // wait-aware objective makes each edit shift all later arrival times,
    // so cheap edge deltas do not apply.
    enum class MoveType { relocate, exchange, reverse };
    struct Move {
        MoveType type{};
        int a = 0, p = 0, b = 0, q = 0;
        double cost = 0.0;
        int c1 = 0, c2 = 0;
        bool found = false;
    };

    std::vector<std::vector<int>> scratch;
    for (int iter = 1; iter <= max_iters; ++iter) {
        Move best_move;
        const auto admissible = [&](int c1, int c2, double cost) {
            const bool tabu = tabu_until[c1] >= iter || (c2 != 0 && tabu_until[c2] >= iter);
            return !tabu || cost < best_cost - kEps;
        };
        const auto consider = [&](MoveType type, int a, int p, int b, int q, int c1, int c2) {
            const double cost = cost_of(scratch);
            if (!admissible(c1, c2, cost)) return;
            if (!best_move.found || cost < best_move.cost - kEps)
                best_move = {type, a, p, b, q, cost, c1, c2, true};
        };

        const int n_trips = static_cast<int>(state.trips.size());

        // Relocate one customer anywhere, including a fresh singleton trip.
        for (int a = 0; a < n_trips; ++a) {
            for (int p = 0; p < static_cast<int>(state.trips[a].size()); ++p) {
                const int c = state.trips[a][p];
                const double dem = instance.expected_demand(c);
                for (int b = 0; b <= n_trips; ++b) {
                    if (b == n_trips) {
                        if (state.trips[a].size() == 1) continue;
                        scratch = state.trips;
                        scratch[a].erase(scratch[a].begin() + p);
                        scratch.push_back({c});
                        consider(MoveType::relocate, a, p, b, 0, c, 0);
                        continue;
                    }
                    if (b != a && state.load[b] + dem > instance.capacity) continue;
                    const int positions =
                        static_cast<int>(state.trips[b].size()) - (b == a ? 1 : 0);
                    for (int q = 0; q <= positions; ++q) {
                        if (b == a && q == p) continue;
                        scratch = state.trips;
                        scratch[a].erase(scratch[a].begin() + p);
                        scratch[b].insert(scratch[b].begin() + q, c);
                        consider(MoveType::relocate, a, p, b, q, c, 0);
                    }
                }
            }
        }

        // Swap two customers.
        for (int a = 0; a < n_trips; ++a) {
            for (int p = 0; p < static_cast<int>(state.trips[a].size()); ++p) {
                for (int b = a; b < n_trips; ++b) {
                    for (int q = b == a ? p + 1 : 0;
                         q < static_cast<int>(state.trips[b].size()); ++q) {
                        const int c1 = state.trips[a][p];
                        const int c2 = state.trips[b][q];
                        if (a != b) {
                            const double e1 = instance.expected_demand(c1);
                            const double e2 = instance.expected_demand(c2);
                            if (state.load[a] - e1 + e2 > instance.capacity) continue;
                            if (state.load[b] - e2 + e1 > instance.capacity) continue;
                        }
                        scratch = state.trips;
                        std::swap(scratch[a][p], scratch[b][q]);
                        consider(MoveType::exchange, a, p, b, q, c1, c2);
                    }
                }
            }
        }

        // Intra-route 2-opt: reverse a segment.
        for (int a = 0; a < n_trips; ++a) {
            const int len = static_cast<int>(state.trips[a].size());
            for (int p = 0; p < len - 1; ++p)
                for (int q = p + 1; q < len; ++q) {
                    scratch = state.trips;
                    std::reverse(scratch[a].begin() + p, scratch[a].begin() + q + 1);
                    consider(MoveType::reverse, a, p, a, q, state.trips[a][p],
                             state.trips[a][q]);
                }
        }

        if (!best_move.found) continue;

        switch (best_move.type) {
            case MoveType::relocate: {
                const int c = state.trips[best_move.a][best_move.p];
                const double dem = instance.expected_demand(c);
                state.trips[best_move.a].erase(state.trips[best_move.a].begin() + best_move.p);
                state.load[best_move.a] -= dem;
                if (best_move.b == n_trips) {
                    state.trips.push_back({c});
                    state.load.push_back(dem);
                } else {
                    state.trips[best_move.b].insert(
                        state.trips[best_move.b].begin() + best_move.q, c);
                    state.load[best_move.b] += dem;
                }
                break;
            }
            case MoveType::exchange: {
                std::swap(state.trips[best_move.a][best_move.p],
                          state.trips[best_move.b][best_move.q]);
                if (best_move.a != best_move.b) {
                    const double e1 = instance.expected_demand(best_move.c1);
                    const double e2 = instance.expected_demand(best_move.c2);
                    state.load[best_move.a] += e2 - e1;
                    state.load[best_move.b] += e1 - e2;
                }
                break;
            }
            case MoveType::reverse:
                std::reverse(state.trips[best_move.a].begin() + best_move.p,
                             state.trips[best_move.a].begin() + best_move.q + 1);
                break;
        }
        drop_empty(state);

        current_cost = best_move.cost;
        tabu_until[best_move.c1] = iter + config.tenure;
        if (best_move.c2 != 0) tabu_until[best_move.c2] = iter + config.tenure;

        if (current_cost < best_cost - kEps) {
            best_cost = current_cost;
            best_trips = state.trips;
        }
    }

    Solution solution = trips_to_solution(instance, best_trips);
    solution.total_cost = best_cost;
    return solution;
}

Solution aco(const ProblemInstance& instance, const AcoConfig& config) {
    if (config.n_ants < 1) throw std::invalid_argument("need at least one ant");
    if (config.evaporation <= 0.0 || config.evaporation >= 1.0)
        throw std::invalid_argument("evaporation must lie in (0, 1)");
    const int iterations =
        config.iterations > 0 ? config.iterations : default_aco_iterations(instance.n_customers);

    const int n = instance.n_nodes();
    std::vector<double> tau(static_cast<std::size_t>(n) * n, 1.0);
    // Attractiveness is time-dependent: the expected cost of moving to a
    // customer right now is the leg plus the expected wait on arrival.
    const auto move_cost = [&](int from, int to, double now) {
        const double leg = instance.fixed_cost(from, to);
        return leg + expected_wait(instance, to, now + leg);
    };

    std::vector<double> tau_pow(tau.size(), 1.0);
    std::vector<std::vector<int>> best_trips;
    double best_cost = std::numeric_limits<double>::infinity();

    std::vector<int> candidates;
    std::vector<double> weights;

    for (int iter = 0; iter < iterations; ++iter) {
        for (std::size_t e = 0; e < tau.size(); ++e)
            tau_pow[e] = std::pow(tau[e], config.pheromone_importance);

        std::vector<std::vector<int>> iter_best_trips;
        double iter_best_cost = std::numeric_limits<double>::infinity();

        for (int ant = 0; ant < config.n_ants; ++ant) {
            RngStream rng(derive_seed(config.seed, iter, ant));
            std::vector<bool> visited(n, false);
            int remaining = instance.n_customers;
            std::vector<std::vector<int>> trips;
            std::vector<int> trip;
            int pos = 0;
            double load = instance.capacity;
            double now = 0.0;

            // Spread construction starts: ant 0 follows the plain choice
            // rule, later ants are pinned to distinct first customers.
            if (ant > 0) {
                const int first = 1 + (ant - 1) % instance.n_customers;
                if (instance.expected_demand(first) <= load + kEps) {
                    visited[first] = true;
                    trip.push_back(first);
                    load = std::max(0.0, load - instance.expected_demand(first));
                    now += move_cost(0, first, 0.0) +
                           instance.tw.service_time[instance.type_of(first)];
                    pos = first;
                    --remaining;
                }
            }

            while (remaining > 0) {
                candidates.clear();
                for (int c = 1; c < n; ++c)
                    if (!visited[c] && instance.expected_demand(c) <= load + kEps)
                        candidates.push_back(c);

                if (candidates.empty()) {
                    if (pos == 0) {
                        // No unvisited customer fits a full truck; take the
                        // lowest-index one anyway so construction advances.
                        int forced = -1;
                        for (int c = 1; c < n && forced < 0; ++c)
                            if (!visited[c]) forced = c;
                        candidates.push_back(forced);
                    } else {
                        trips.push_back(trip);
                        trip.clear();
                        now += instance.fixed_cost(pos, 0);
                        pos = 0;
                        load = instance.capacity;
                        continue;
                    }
                }

                weights.resize(candidates.size());
                double max_w = 0.0;
                for (std::size_t k = 0; k < candidates.size(); ++k) {
                    const std::size_t e = static_cast<std::size_t>(pos) * n + candidates[k];
                    const double cost = std::max(move_cost(pos, candidates[k], now), 1e-9);
                    weights[k] = tau_pow[e] * std::pow(1.0 / cost, config.heuristic_importance);
                    max_w = std::max(max_w, weights[k]);
                }
                int chosen = candidates[0];
                if (max_w > 0.0) {
                    double sum = 0.0;
                    for (double& w : weights) sum += (w /= max_w);
                    double r = rng.uniform01() * sum;
                    for (std::size_t k = 0; k < candidates.size(); ++k) {
                        r -= weights[k];
                        if (r <= 0.0 || k + 1 == candidates.size()) {
                            chosen = candidates[k];
                            break;
                        }
                    }
                }

                visited[chosen] = true;
                trip.push_back(chosen);
                load = std::max(0.0, load - instance.expected_demand(chosen));
                now += move_cost(pos, chosen, now) +
                       instance.tw.service_time[instance.type_of(chosen)];
                pos = chosen;
                --remaining;
            }
            if (!trip.empty()) trips.push_back(trip);

            const double cost = planned_trips_cost_with_waits(instance, trips);
            if (cost < iter_best_cost - kEps) {
                iter_best_cost = cost;
                iter_best_trips = trips;
            }
        }

        for (double& t : tau) t = std::max(t * (1.0 - config.evaporation), kTauFloor);
        if (!iter_best_trips.empty() && iter_best_cost > 0.0) {
            const double deposit = 1.0 / iter_best_cost;
            for (const auto& trip : iter_best_trips) {
                int prev = 0;
                for (int c : trip) {
                    tau[prev * n + c] += deposit;
                    tau[c * n + prev] += deposit;
                    prev = c;
                }
                tau[prev * n + 0] += deposit;
                tau[0 * n + prev] += deposit;
            }
        }

        if (iter_best_cost < best_cost - kEps) {
            best_cost = iter_best_cost;
            best_trips = iter_best_trips;
        }
    }

    Solution solution = trips_to_solution(instance, best_trips);
    solution.total_cost = best_cost;
    return solution;
}

}  // namespace svrp
