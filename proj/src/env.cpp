#include "svrp/env.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace svrp {

const char* to_string(EnvMode m) { return m == EnvMode::apriori ? "apriori" : "reopt"; }

EnvMode env_mode_from_string(const std::string& s) {
    if (s == "apriori") return EnvMode::apriori;
    if (s == "reopt") return EnvMode::reopt;
    throw std::invalid_argument("unknown environment mode: " + s);
}

Env::Env(const ProblemInstance& instance, const Realization& realization, EnvMode mode,
         EnvOptions options)
    : instance_(&instance), realization_(&realization), mode_(mode), options_(options) {
    realization.validate(instance);
    reset();
}

void Env::reset() {
    const int n = instance_->n_nodes();
    state_.remaining_demand = realization_->demands;
    state_.believed_demand.assign(n, 0.0);
    for (int c = 1; c < n; ++c) state_.believed_demand[c] = instance_->fixed_demand(c);
    state_.believed_costs = instance_->cost_field.fixed_terms;
    state_.vehicle_load.assign(instance_->n_vehicles, instance_->capacity);
    state_.vehicle_pos.assign(instance_->n_vehicles, 0);
    state_.clock = 0.0;
    state_.accrued_cost = 0.0;
    state_.recourse_count.assign(n, 0);
    state_.revealed.assign(n, 0);
    state_.step_count = 0;
    state_.delivered_total = 0.0;
    trace_.clear();
}

bool Env::strict_window_ok(int node, int vehicle) const {
    const double arrival =
        state_.clock + believed_cost(state_.vehicle_pos[vehicle], node);
    const double day = std::fmod(arrival, double(instance_->tw.hours_per_day));
    const int hour = std::min(instance_->tw.hours_per_day - 1, int(day));
    return realization_->availability[node][hour] == 1;
}

bool Env::customer_feasible(int node, int vehicle) const {
    if (state_.remaining_demand[node] <= 0.0) return false;
    if (instance_->delivery_mode == DeliveryMode::partial &&
        state_.vehicle_load[vehicle] <= 0.0)
        return false;
    return true;
}

bool Env::feasible(int node, int vehicle) const {
    if (node == 0) return true;
    if (!customer_feasible(node, vehicle)) return false;
    if (options_.strict_time_window_mask) {
        // Apply the window filter only if it leaves this vehicle some customer.
        bool any_open = false;
        for (int c = 1; c < instance_->n_nodes() && !any_open; ++c)
            any_open = customer_feasible(c, vehicle) && strict_window_ok(c, vehicle);
        if (any_open && !strict_window_ok(node, vehicle)) return false;
    }
    return true;
}

std::vector<std::uint8_t> Env::feasible_mask() const {
    const int n = instance_->n_nodes();
    const int k = instance_->n_vehicles;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n) * k, 0);
    for (int node = 0; node < n; ++node)
        for (int v = 0; v < k; ++v) mask[node * k + v] = feasible(node, v) ? 1 : 0;
    return mask;
}

double Env::wait_until_open(int node, double arrival) const {
    const int h_max = instance_->tw.hours_per_day;
    const double day = std::fmod(arrival, double(h_max));
    const int hour = std::min(h_max - 1, int(day));
    if (realization_->availability[node][hour] == 1) return 0.0;
    for (int delta = 1; delta <= h_max; ++delta) {
        if (realization_->availability[node][(hour + delta) % h_max] == 1)
            return double(hour + delta) - day;
    }
    throw std::logic_error("availability row with no open hour");
}

double Env::step(const Action& action) {
    if (state_.step_count >= step_cap())
        throw std::runtime_error("episode exceeded the step cap of " +
                                 std::to_string(step_cap()) + " steps without terminating");
    return apply(action, true);
}

double Env::step_unchecked(const Action& action) { return apply(action, false); }

double Env::apply(const Action& action, bool checked) {
    const int n = instance_->n_nodes();
    const int k = instance_->n_vehicles;
    if (static_cast<int>(action.targets.size()) != k)
        throw std::invalid_argument("action must name one target per vehicle");
    for (int target : action.targets)
        if (target < 0 || target >= n)
            throw std::invalid_argument("action target out of range");
    if (checked) {
        for (int v = 0; v < k; ++v)
            if (!feasible(action.targets[v], v))
                throw std::runtime_error("action targets an infeasible node (vehicle " +
                                         std::to_string(v) + " -> node " +
                                         std::to_string(action.targets[v]) + ")");
    }

    const double capacity = instance_->capacity;
    TraceStep record;
    record.moves.resize(k);
    double step_cost = 0.0;
    double max_duration = 0.0;

    for (int v = 0; v < k; ++v) {
        const int from = state_.vehicle_pos[v];
        const int to = action.targets[v];
        VehicleMove& move = record.moves[v];
        move.from = from;
        move.to = to;
        move.travel = realization_->cost(from, to);

        double duration = move.travel;
        if (to != 0) {
            move.wait = wait_until_open(to, state_.clock + move.travel);
            duration += move.wait;
            duration += instance_->tw.service_time[instance_->type_of(to)];

            double& demand = state_.remaining_demand[to];
            double& load = state_.vehicle_load[v];
            if (instance_->delivery_mode == DeliveryMode::partial) {
                const double served = std::min(load, demand);
                demand -= served;
                load -= served;
                state_.delivered_total += served;
            } else {
                // Full delivery: the whole remaining demand is served this
                // step; every shortfall forces a depot round trip. A demand
                // beyond a full truck is dropped off before each refill.
                while (load < demand) {
                    move.recourse_trips += 1;
                    move.recourse_cost += 2.0 * realization_->cost(0, to);
                    state_.recourse_count[to] += 1;
                    if (demand > capacity) {
                        demand -= load;
                        state_.delivered_total += load;
                    }
                    load = capacity;
                }
                load -= demand;
                state_.delivered_total += demand;
                demand = 0.0;
            }
            duration += move.recourse_cost;
            if (mode_ == EnvMode::reopt && !state_.revealed[to]) {
                state_.revealed[to] = 1;
                for (int j = 0; j < n; ++j)
                    state_.believed_costs[to * n + j] = realization_->cost(to, j);
            }
            if (mode_ == EnvMode::reopt) state_.believed_demand[to] = demand;
        } else {
            state_.vehicle_load[v] = capacity;
        }

        move.cost = move.travel + move.wait + move.recourse_cost;
        step_cost += move.cost;
        max_duration = std::max(max_duration, duration);
        state_.vehicle_pos[v] = to;
    }

    state_.clock = std::fmod(state_.clock + max_duration, double(instance_->tw.hours_per_day));
    state_.accrued_cost += step_cost;
    state_.step_count += 1;

    record.step_cost = step_cost;
    record.clock_after = state_.clock;
    trace_.push_back(std::move(record));
    return step_cost;
}

bool Env::is_terminal() const {
    for (int c = 1; c < instance_->n_nodes(); ++c)
        if (state_.remaining_demand[c] > 0.0) return false;
    for (int pos : state_.vehicle_pos)
        if (pos != 0) return false;
    return true;
}

Solution Env::traced_solution() const {
    Solution solution;
    solution.routes.assign(instance_->n_vehicles, {0});
    for (const TraceStep& step : trace_)
        for (int v = 0; v < instance_->n_vehicles; ++v)
            solution.routes[v].push_back(step.moves[v].to);
    for (auto& route : solution.routes)
        if (route.back() != 0) route.push_back(0);
    solution.recourse_count = state_.recourse_count;
    solution.total_cost = state_.accrued_cost;
    return solution;
}

Realization believed_world(const ProblemInstance& instance, const Realization& realization) {
    Realization believed;
    believed.w = realization.w;
    believed.availability = realization.availability;
    believed.demands.assign(instance.n_nodes(), 0.0);
    for (int c = 1; c < instance.n_nodes(); ++c)
        believed.demands[c] = instance.fixed_demand(c);
    believed.costs = instance.cost_field.fixed_terms;
    return believed;
}

WalkResult walk_routes(const ProblemInstance& instance, const Realization& realization,
                       const std::vector<std::vector<int>>& routes) {
    if (static_cast<int>(routes.size()) != instance.n_vehicles)
        throw std::invalid_argument("route count must equal the fleet size");
    std::size_t max_len = 1;
    for (const auto& route : routes) {
        if (route.empty()) continue;
        if (route.front() != 0)
            throw std::invalid_argument("routes must start at the depot");
        for (int node : route)
            if (node < 0 || node >= instance.n_nodes())
                throw std::invalid_argument("route node out of range");
        max_len = std::max(max_len, route.size());
    }

    Env env(instance, realization, EnvMode::apriori);
    WalkResult result;
    for (std::size_t hop = 1; hop < max_len; ++hop) {
        Action action;
        action.targets.resize(instance.n_vehicles, 0);
        for (int v = 0; v < instance.n_vehicles; ++v)
            action.targets[v] = hop < routes[v].size() ? routes[v][hop] : 0;
        result.step_costs.push_back(env.step_unchecked(action));
    }
    bool any_away = false;
    for (int pos : env.state().vehicle_pos) any_away = any_away || pos != 0;
    if (any_away) {
        Action home;
        home.targets.assign(instance.n_vehicles, 0);
        result.step_costs.push_back(env.step_unchecked(home));
    }

    result.recourse_count = env.state().recourse_count;
    double leftover_cost = 0.0;
    for (int c = 1; c < instance.n_nodes(); ++c) {
        if (env.state().remaining_demand[c] > 0.0) {
            result.leftover_customers.push_back(c);
            result.recourse_count[c] += 1;
            leftover_cost += 2.0 * realization.cost(0, c);
        }
    }
    if (leftover_cost > 0.0) {
        if (result.step_costs.empty()) result.step_costs.push_back(0.0);
        result.step_costs.back() += leftover_cost;
    }
    result.total_cost = env.state().accrued_cost + leftover_cost;
    return result;
}

double evaluate_apriori(const ProblemInstance& instance, const Realization& realization,
                        const Solution& solution) {
    return walk_routes(instance, realization, solution.routes).total_cost;
}

std::vector<Violation> validate_solution(const Solution& solution,
                                         const ProblemInstance& instance, VisitRule rule) {
    const int n = instance.n_nodes();
    std::vector<Violation> violations;

    int n_trips = 0;
    std::vector<std::vector<int>> edge(n, std::vector<int>(n, 0));
    for (std::size_t v = 0; v < solution.routes.size(); ++v) {
        const auto& route = solution.routes[v];
        if (route.empty() || (route.size() == 1 && route[0] == 0)) continue;
        for (int node : route)
            if (node < 0 || node >= n)
                throw std::invalid_argument("route node out of range");
        if (route.front() != 0 || route.back() != 0) {
            violations.push_back({"A2", "vehicle " + std::to_string(v) +
                                            " route does not start and end at the depot"});
        }
        for (std::size_t h = 0; h + 1 < route.size(); ++h) {
            const int a = route[h];
            const int b = route[h + 1];
            if (a == 0 && b != 0) ++n_trips;
            if (a == b) continue;  // zero-cost hold, carries no edge
            edge[std::min(a, b)][std::max(a, b)] += 1;
        }
    }

    for (int c = 1; c < n; ++c) {
        int degree = 0;
        for (int j = 0; j < n; ++j) degree += edge[std::min(c, j)][std::max(c, j)];
        if (rule == VisitRule::exactly_once) {
            if (degree != 2)
                violations.push_back({"A3", "customer " + std::to_string(c) + " has degree " +
                                                std::to_string(degree) + ", expected 2"});
        } else if (degree < 2) {
            violations.push_back({"A3", "customer " + std::to_string(c) + " is not covered"});
        }
    }

    const int min_trips =
        static_cast<int>(std::ceil(instance.total_expected_demand() / instance.capacity));
    int cc_edges = 0;
    for (int i = 1; i < n; ++i)
        for (int j = i + 1; j < n; ++j) cc_edges += edge[i][j];
    if (cc_edges > instance.n_customers - min_trips)
        violations.push_back({"A4", "customer-customer edge count " + std::to_string(cc_edges) +
                                        " exceeds bound; needs at least " +
                                        std::to_string(min_trips) + " routes"});

    if (rule == VisitRule::exactly_once) {
        for (int i = 1; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (edge[i][j] > 1)
                    violations.push_back({"A5", "edge (" + std::to_string(i) + "," +
                                                    std::to_string(j) + ") used " +
                                                    std::to_string(edge[i][j]) + " times"});
        for (int j = 1; j < n; ++j)
            if (edge[0][j] > 2)
                violations.push_back({"A6", "depot edge to " + std::to_string(j) + " used " +
                                                std::to_string(edge[0][j]) + " times"});
    }
    return violations;
}

double expected_recourse_cost(const std::vector<int>& route, const ProblemInstance& instance,
                              int n_mc, std::uint64_t seed) {
    if (n_mc < 1000) throw std::invalid_argument("need at least 1000 Monte-Carlo draws");
    if (route.size() < 2 || route.front() != 0 || route.back() != 0)
        throw std::invalid_argument("route must start and end at the depot");
    for (std::size_t h = 1; h + 1 < route.size(); ++h)
        if (route[h] <= 0 || route[h] >= instance.n_nodes())
            throw std::invalid_argument("route interior must be customers");

    const double capacity = instance.capacity;
    RngStream rng(seed);
    double total = 0.0;
    for (int s = 0; s < n_mc; ++s) {
        const std::vector<double> demands = sample_demands(instance, rng);
        double cum = 0.0;
        for (std::size_t h = 1; h + 1 < route.size(); ++h) {
            const int j = route[h];
            const double before = cum;
            cum += demands[j];
            // Failures at customer j: integers l >= 1 with before <= l*Q < cum.
            const int l_lo = std::max(1, static_cast<int>(std::ceil(before / capacity)));
            const int l_hi = static_cast<int>(std::ceil(cum / capacity)) - 1;
            if (l_hi >= l_lo)
                total += (l_hi - l_lo + 1) * 2.0 * instance.expected_cost(0, j);
        }
    }
    return total / n_mc;
}

void write_trace(std::ostream& out, const Env& env) {
    out << "# step vehicle from to travel wait recourse_trips recourse_cost cost clock_after\n";
    out << std::setprecision(9);
    int step_idx = 0;
    for (const TraceStep& step : env.trace()) {
        for (std::size_t v = 0; v < step.moves.size(); ++v) {
            const VehicleMove& m = step.moves[v];
            out << step_idx << ' ' << v << ' ' << m.from << ' ' << m.to << ' ' << m.travel
                << ' ' << m.wait << ' ' << m.recourse_trips << ' ' << m.recourse_cost << ' '
                << m.cost << ' ' << step.clock_after << '\n';
        }
        ++step_idx;
    }
}

}  // namespace svrp
