#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "svrp/heuristics.hpp"
#include "test_util.hpp"

using namespace svrp;
using svrp::testing::manual_instance;

namespace {

// Independent endpoint-merge implementation used as the trace oracle:
// straightforward maps and list splicing, no shared code with the library.
double reference_clarke_wright_cost(const ProblemInstance& inst) {
    struct Route {
        std::vector<int> nodes;
        double load = 0.0;
    };
    std::map<int, int> route_of;
    std::vector<Route> routes;
    for (int c = 1; c <= inst.n_customers; ++c) {
        route_of[c] = static_cast<int>(routes.size());
        routes.push_back({{c}, inst.expected_demand(c)});
    }

    struct Pair {
        double saving;
        int i, j;
    };
    std::vector<Pair> pairs;
    for (int i = 1; i <= inst.n_customers; ++i)
        for (int j = i + 1; j <= inst.n_customers; ++j)
            pairs.push_back({inst.fixed_cost(0, i) + inst.fixed_cost(j, 0) -
                                 inst.fixed_cost(i, j),
                             i, j});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.saving != b.saving) return a.saving > b.saving;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    for (const Pair& p : pairs) {
        if (p.saving <= 0.0) break;
        const int ri = route_of[p.i];
        const int rj = route_of[p.j];
        if (ri == rj) continue;
        Route& a = routes[ri];
        Route& b = routes[rj];
        if (a.load + b.load > inst.capacity) continue;
        const bool i_end = a.nodes.front() == p.i || a.nodes.back() == p.i;
        const bool j_end = b.nodes.front() == p.j || b.nodes.back() == p.j;
        if (!i_end || !j_end) continue;
        if (a.nodes.back() != p.i) std::reverse(a.nodes.begin(), a.nodes.end());
        if (b.nodes.front() != p.j) std::reverse(b.nodes.begin(), b.nodes.end());
        for (int c : b.nodes) {
            a.nodes.push_back(c);
            route_of[c] = ri;
        }
        a.load += b.load;
        b.nodes.clear();
        b.load = 0.0;
    }

    double cost = 0.0;
    for (const Route& r : routes) {
        if (r.nodes.empty()) continue;
        int prev = 0;
        for (int c : r.nodes) {
            cost += inst.fixed_cost(prev, c);
            prev = c;
        }
        cost += inst.fixed_cost(prev, 0);
    }
    return cost;
}

}  // namespace

TEST_CASE("savings: collinear customers degenerate the triangle") {
    const auto inst = manual_instance({{0.6, 0.5}, {0.8, 0.5}}, {1.0, 1.0}, 10.0);
    const auto list = savings_list(inst);
    REQUIRE(list.size() == 1);
    CHECK(list[0].saving == doctest::Approx(2.0 * inst.fixed_cost(0, 1)));
}

TEST_CASE("savings: customers mirrored about the depot save nothing") {
    const auto inst = manual_instance({{0.3, 0.5}, {0.7, 0.5}}, {1.0, 1.0}, 10.0);
    const auto list = savings_list(inst);
    REQUIRE(list.size() == 1);
    CHECK(list[0].saving == doctest::Approx(0.0));
}

TEST_CASE("savings list matches brute-force pair enumeration") {
    GenerationConfig cfg;
    cfg.n_customers = 4;
    const ProblemInstance inst = generate_instance(cfg, 77);
    const auto list = savings_list(inst);
    REQUIRE(list.size() == 6);

    // Exhaustive enumeration, resorted with the same tie rule.
    std::vector<SavingsEntry> expect;
    for (int i = 1; i <= 4; ++i)
        for (int j = i + 1; j <= 4; ++j)
            expect.push_back({i, j,
                              inst.fixed_cost(0, i) + inst.fixed_cost(j, 0) -
                                  inst.fixed_cost(i, j)});
    std::sort(expect.begin(), expect.end(), [](const SavingsEntry& a, const SavingsEntry& b) {
        if (a.saving != b.saving) return a.saving > b.saving;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    for (std::size_t k = 0; k < expect.size(); ++k) {
        CHECK(list[k].i == expect[k].i);
        CHECK(list[k].j == expect[k].j);
        CHECK(list[k].saving == doctest::Approx(expect[k].saving));
    }

    // Descending order is part of the contract.
    for (std::size_t k = 0; k + 1 < list.size(); ++k)
        CHECK(list[k].saving >= list[k + 1].saving);
}

TEST_CASE("savings need two customers") {
    const auto inst = manual_instance({{0.6, 0.5}}, {1.0}, 10.0);
    CHECK_THROWS_AS(savings_list(inst), std::invalid_argument);
}

TEST_CASE("clarke-wright on one customer is the single round trip") {
    const auto inst = manual_instance({{0.8, 0.5}}, {3.0}, 10.0);
    const Solution s = clarke_wright(inst);
    REQUIRE(s.routes.size() == 1);
    CHECK(s.routes[0] == std::vector<int>{0, 1, 0});
    CHECK(s.total_cost == doctest::Approx(2.0 * inst.fixed_cost(0, 1)));
}

TEST_CASE("clarke-wright merges to one tour when capacity allows") {
    GenerationConfig cfg;
    cfg.n_customers = 4;
    cfg.fill_rate = 1.5;  // capacity > total expected demand
    const ProblemInstance inst = generate_instance(cfg, 3);
    const Solution s = clarke_wright(inst);
    CHECK(validate_solution(s, inst).empty());
    CHECK(s.total_cost == doctest::Approx(reference_clarke_wright_cost(inst)));
    // One trip: exactly two depot hops in the single vehicle's sequence.
    int depot_hops = 0;
    for (int node : s.routes[0]) depot_hops += node == 0 ? 1 : 0;
    CHECK(depot_hops == 2);
}

TEST_CASE("clarke-wright degenerates to singletons when nothing fits") {
    const auto inst = manual_instance({{0.2, 0.5}, {0.8, 0.5}, {0.5, 0.8}},
                                      {4.0, 4.0, 4.0}, 5.0);
    const Solution s = clarke_wright(inst);
    // Every pair exceeds capacity: three singleton trips on the one vehicle.
    REQUIRE(s.routes.size() == 1);
    CHECK(s.routes[0] == std::vector<int>{0, 1, 0, 2, 0, 3, 0});
    CHECK(validate_solution(s, inst).empty());
}

TEST_CASE("clarke-wright never beats the singleton baseline upward") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        GenerationConfig cfg;
        cfg.n_customers = 8;
        const ProblemInstance inst = generate_instance(cfg, seed);
        const Solution s = clarke_wright(inst);
        double singleton_cost = 0.0;
        for (int c = 1; c <= inst.n_customers; ++c)
            singleton_cost += 2.0 * inst.fixed_cost(0, c);
        CHECK(s.total_cost <= singleton_cost + 1e-9);
        CHECK(s.total_cost == doctest::Approx(reference_clarke_wright_cost(inst)));
        CHECK(validate_solution(s, inst).empty());
    }
}

TEST_CASE("round-robin vehicle assignment interleaves trips") {
    const auto inst = manual_instance({{0.2, 0.5}, {0.8, 0.5}, {0.5, 0.8}},
                                      {4.0, 4.0, 4.0}, 5.0, 2);
    const Solution s = clarke_wright(inst);
    REQUIRE(s.routes.size() == 2);
    CHECK(s.routes[0] == std::vector<int>{0, 1, 0, 3, 0});
    CHECK(s.routes[1] == std::vector<int>{0, 2, 0});
    CHECK(validate_solution(s, inst).empty());
}

TEST_CASE("planned trip cost sums fixed-term legs") {
    const auto inst = manual_instance({{0.2, 0.5}, {0.8, 0.5}}, {1.0, 1.0}, 10.0);
    const double cost = planned_trips_cost(inst, {{1, 2}});
    CHECK(cost == doctest::Approx(inst.fixed_cost(0, 1) + inst.fixed_cost(1, 2) +
                                  inst.fixed_cost(2, 0)));
}
