#pragma once

// Shared oracles for the test suites. Everything here is deliberately
// independent of the library's implementation paths: plain loops, brute
// force and Monte Carlo only.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "svrp/instance.hpp"

namespace svrp::testing {

// Monte-Carlo estimate of E[(sum_mn alpha_mn w_m w_n)^2] over iid uniform
// [0,1] externals.
inline double mc_interaction_second_moment(const std::array<double, 9>& alpha, int n_samples,
                                           std::uint64_t seed) {
    RngStream rng(seed);
    double acc = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        const double w[3] = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
        double x = 0.0;
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n) x += alpha[m * 3 + n] * w[m] * w[n];
        acc += x * x;
    }
    return acc / n_samples;
}

// Hand-built deterministic instance: explicit coordinates, fixed demands,
// optional fully-open availability. Cost fixed terms are Euclidean.
inline ProblemInstance manual_instance(const std::vector<std::array<double, 2>>& customer_coords,
                                       const std::vector<double>& fixed_demands, double capacity,
                                       int n_vehicles = 1,
                                       DeliveryMode delivery = DeliveryMode::partial) {
    const int n_customers = static_cast<int>(customer_coords.size());
    ProblemInstance inst;
    inst.n_customers = n_customers;
    inst.n_vehicles = n_vehicles;
    inst.capacity = capacity;
    inst.delivery_mode = delivery;
    inst.coords.resize(n_customers + 1);
    inst.coords[0] = {0.5, 0.5};
    for (int c = 0; c < n_customers; ++c) inst.coords[c + 1] = customer_coords[c];
    inst.customer_type.assign(n_customers, 0);

    inst.demand_field.target_ratios = {1.0, 0.0, 0.0};
    inst.demand_field.fixed_terms = fixed_demands;
    inst.demand_field.alpha.assign(n_customers, std::array<double, 9>{});
    inst.demand_field.noise_scale.assign(n_customers, 0.0);

    const int n = n_customers + 1;
    inst.cost_field.target_ratios = {1.0, 0.0, 0.0};
    inst.cost_field.fixed_terms.assign(n * n, 0.0);
    inst.cost_field.alpha.assign(n * n, std::array<double, 9>{});
    inst.cost_field.noise_scale.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = inst.coords[i][0] - inst.coords[j][0];
            const double dy = inst.coords[i][1] - inst.coords[j][1];
            inst.cost_field.fixed_terms[i * n + j] = std::sqrt(dx * dx + dy * dy);
        }

    inst.tw.avail_prob.assign(kNumCustomerTypes, std::vector<double>(kHoursPerDay, 1.0));
    inst.tw.service_time.assign(kNumCustomerTypes, 0.0);
    inst.validate();
    return inst;
}

// A deterministic realization equal to the instance's fixed terms with
// all-open availability.
inline Realization fixed_realization(const ProblemInstance& inst) {
    Realization r;
    const int n = inst.n_nodes();
    r.w.assign(inst.external_correlated ? 1 : n, {0.0, 0.0, 0.0});
    r.demands.assign(n, 0.0);
    for (int c = 1; c < n; ++c) r.demands[c] = inst.fixed_demand(c);
    r.costs = inst.cost_field.fixed_terms;
    r.availability.assign(n, {});
    for (int i = 0; i < n; ++i) r.availability[i].fill(1);
    return r;
}

// Independent single-vehicle route walker: straight-line replay of one
// route against a realization under partial delivery with all-open hours.
// Leftover customers charge one depot round trip each.
inline double straight_line_walk(const ProblemInstance& inst, const Realization& real,
                                 const std::vector<int>& route) {
    double cost = 0.0;
    double load = inst.capacity;
    std::vector<double> demand = real.demands;
    for (std::size_t h = 0; h + 1 < route.size(); ++h) {
        const int a = route[h];
        const int b = route[h + 1];
        cost += real.cost(a, b);
        if (b == 0) {
            load = inst.capacity;
        } else {
            const double served = std::min(load, demand[b]);
            demand[b] -= served;
            load -= served;
        }
    }
    for (int c = 1; c < inst.n_nodes(); ++c)
        if (demand[c] > 0.0) cost += 2.0 * real.cost(0, c);
    return cost;
}

// Brute force over every customer permutation and every split into trips:
// minimal planned (fixed-term) cost with per-trip expected load <= capacity.
inline double brute_force_plan_cost(const ProblemInstance& inst) {
    std::vector<int> perm(inst.n_customers);
    for (int c = 0; c < inst.n_customers; ++c) perm[c] = c + 1;
    std::sort(perm.begin(), perm.end());

    double best = std::numeric_limits<double>::infinity();
    do {
        const int cuts = inst.n_customers - 1;
        for (int mask = 0; mask < (1 << cuts); ++mask) {
            double cost = 0.0, load = 0.0, prev = 0.0;
            bool feasible = true;
            int prev_node = 0;
            (void)prev;
            for (int idx = 0; idx < inst.n_customers && feasible; ++idx) {
                const int node = perm[idx];
                load += inst.expected_demand(node);
                if (load > inst.capacity + 1e-9) feasible = false;
                cost += inst.fixed_cost(prev_node, node);
                prev_node = node;
                const bool cut = idx < cuts && (mask >> idx & 1);
                if (cut) {
                    cost += inst.fixed_cost(prev_node, 0);
                    prev_node = 0;
                    load = 0.0;
                }
            }
            if (!feasible) continue;
            cost += inst.fixed_cost(prev_node, 0);
            best = std::min(best, cost);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Central finite differences of f at x, one coordinate at a time.
inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_error(double got, double want) {
    const double scale = std::max({std::abs(got), std::abs(want), 1e-8});
    return std::abs(got - want) / scale;
}

}  // namespace svrp::testing
