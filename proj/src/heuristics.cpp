#include "svrp/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace svrp {

double planned_trips_cost(const ProblemInstance& instance,
                          const std::vector<std::vector<int>>& trips) {
    double cost = 0.0;
    for (const auto& trip : trips) {
        if (trip.empty()) continue;
        int prev = 0;
        for (int c : trip) {
            cost += instance.fixed_cost(prev, c);
            prev = c;
        }
        cost += instance.fixed_cost(prev, 0);
    }
    return cost;
}

double expected_wait(const ProblemInstance& instance, int node, double arrival) {
    if (node == 0) return 0.0;
    const auto& probs = instance.tw.avail_prob[instance.type_of(node)];
    const int h_max = instance.tw.hours_per_day;
    const double day = std::fmod(arrival, double(h_max));
    const int hour = std::min(h_max - 1, static_cast<int>(day));

    double wait = 0.0;
    double still_closed = 1.0 - probs[hour];
    for (int d = 1; d <= h_max; ++d) {
        const double p_open = probs[(hour + d) % h_max];
        wait += still_closed * p_open * (double(hour + d) - day);
        still_closed *= 1.0 - p_open;
    }
    // Vanishing tail: a fully-closed sampled row gets one forced open hour.
    wait += still_closed * (double(hour) - day + 0.5 * h_max);
    return wait;
}

double planned_trips_cost_with_waits(const ProblemInstance& instance,
                                     const std::vector<std::vector<int>>& trips) {
    double cost = 0.0;
    double now = 0.0;
    for (const auto& trip : trips) {
        if (trip.empty()) continue;
        int prev = 0;
        for (int c : trip) {
            const double leg = instance.fixed_cost(prev, c);
            now += leg;
            const double wait = expected_wait(instance, c, now);
            now += wait + instance.tw.service_time[instance.type_of(c)];
            cost += leg + wait;
            prev = c;
        }
        const double leg = instance.fixed_cost(prev, 0);
        now += leg;
        cost += leg;
    }
    return cost;
}

Solution trips_to_solution(const ProblemInstance& instance,
                           const std::vector<std::vector<int>>& trips) {
    Solution solution;
    solution.routes.assign(instance.n_vehicles, std::vector<int>{0});
    int v = 0;
    for (const auto& trip : trips) {
        if (trip.empty()) continue;
        auto& route = solution.routes[v];
        route.insert(route.end(), trip.begin(), trip.end());
        route.push_back(0);
        v = (v + 1) % instance.n_vehicles;
    }
    solution.recourse_count.assign(instance.n_nodes(), 0);
    solution.total_cost = planned_trips_cost(instance, trips);
    return solution;
}

std::vector<SavingsEntry> savings_list(const ProblemInstance& instance) {
    if (instance.n_customers < 2)
        throw std::invalid_argument("savings need at least two customers");
    std::vector<SavingsEntry> entries;
    entries.reserve(instance.n_customers * (instance.n_customers - 1) / 2);
    for (int i = 1; i <= instance.n_customers; ++i)
        for (int j = i + 1; j <= instance.n_customers; ++j)
            entries.push_back({i, j,
                               instance.fixed_cost(0, i) + instance.fixed_cost(j, 0) -
                                   instance.fixed_cost(i, j)});
    std::sort(entries.begin(), entries.end(), [](const SavingsEntry& a, const SavingsEntry& b) {
        if (a.saving != b.saving) return a.saving > b.saving;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    return entries;
}

Solution clarke_wright(const ProblemInstance& instance) {
    const int n_customers = instance.n_customers;
    // Start from singleton round trips; merge route endpoints greedily in
    // savings order.
    std::vector<std::vector<int>> routes(n_customers);
    std::vector<double> load(n_customers);
    std::vector<int> route_of(n_customers + 1, -1);
    for (int c = 1; c <= n_customers; ++c) {
        routes[c - 1] = {c};
        load[c - 1] = instance.expected_demand(c);
        route_of[c] = c - 1;
    }

    if (n_customers >= 2) {
        for (const SavingsEntry& entry : savings_list(instance)) {
            if (entry.saving <= 0.0) break;  // sorted; the rest cannot help
            const int ri = route_of[entry.i];
            const int rj = route_of[entry.j];
            if (ri == rj) continue;
            if (load[ri] + load[rj] > instance.capacity) continue;

            auto& a = routes[ri];
            auto& b = routes[rj];
            const bool i_head = a.front() == entry.i;
            const bool i_tail = a.back() == entry.i;
            const bool j_head = b.front() == entry.j;
            const bool j_tail = b.back() == entry.j;
            if (!(i_head || i_tail) || !(j_head || j_tail)) continue;  // interior nodes

            // Orient both routes so i ends route a and j starts route b.
            if (!i_tail) std::reverse(a.begin(), a.end());
            if (!j_head) std::reverse(b.begin(), b.end());
            a.insert(a.end(), b.begin(), b.end());
            load[ri] += load[rj];
            for (int c : b) route_of[c] = ri;
            b.clear();
            load[rj] = 0.0;
        }
    }

    std::vector<std::vector<int>> trips;
    for (auto& route : routes)
        if (!route.empty()) trips.push_back(std::move(route));
    return trips_to_solution(instance, trips);
}

}  // namespace svrp
