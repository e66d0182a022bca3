#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "svrp/instance.hpp"
#include "test_util.hpp"

using namespace svrp;

namespace {

GenerationConfig default_config() {
    GenerationConfig c;
    c.n_customers = 10;
    c.fill_rate = 0.5;
    c.demand_ratios = {0.6, 0.2, 0.2};
    c.cost_ratios = {0.6, 0.2, 0.2};
    return c;
}

std::array<double, 9> seeded_raw_alpha(std::uint64_t seed) {
    RngStream rng(seed);
    std::array<double, 9> a{};
    for (int m = 0; m < 3; ++m)
        for (int n = m; n < 3; ++n) {
            const double z = rng.normal();
            a[m * 3 + n] = z;
            a[n * 3 + m] = z;
        }
    return a;
}

}  // namespace

TEST_CASE("default instance matches the default environment") {
    const ProblemInstance inst = generate_instance(default_config(), 42);
    CHECK(inst.n_customers == 10);
    CHECK(inst.coords[0][0] == 0.5);
    CHECK(inst.coords[0][1] == 0.5);
    CHECK(inst.n_vehicles == 1);
    CHECK(fill_rate(inst) == doctest::Approx(0.5).epsilon(1e-12));
    for (int c = 1; c <= 10; ++c) {
        CHECK(inst.fixed_demand(c) >= 1.0);
        CHECK(inst.fixed_demand(c) <= 9.0);
    }
    // Fixed cost terms: symmetric, zero diagonal.
    for (int i = 0; i < inst.n_nodes(); ++i)
        for (int j = 0; j < inst.n_nodes(); ++j)
            CHECK(inst.fixed_cost(i, j) == inst.fixed_cost(j, i));
}

TEST_CASE("single deterministic customer pins capacity to its demand") {
    GenerationConfig c = default_config();
    c.n_customers = 1;
    c.fill_rate = 1.0;
    c.demand_ratios = {1.0, 0.0, 0.0};
    c.cost_ratios = {1.0, 0.0, 0.0};
    const ProblemInstance inst = generate_instance(c, 7);
    CHECK(inst.capacity == doctest::Approx(inst.fixed_demand(1)).epsilon(1e-12));
    const Realization real = realize(inst, 11);
    CHECK(real.demands[1] == inst.fixed_demand(1));
}

TEST_CASE("generation is deterministic per (config, seed)") {
    const ProblemInstance a = generate_instance(default_config(), 5);
    const ProblemInstance b = generate_instance(default_config(), 5);
    std::ostringstream sa, sb;
    save_instance(a, sa);
    save_instance(b, sb);
    CHECK(sa.str() == sb.str());

    const ProblemInstance c = generate_instance(default_config(), 6);
    std::ostringstream sc;
    save_instance(c, sc);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("generation rejects bad parameters") {
    GenerationConfig c = default_config();
    c.fill_rate = 0.0;
    CHECK_THROWS_AS(generate_instance(c, 1), std::invalid_argument);
    c = default_config();
    c.n_customers = 0;
    CHECK_THROWS_AS(generate_instance(c, 1), std::invalid_argument);
}

TEST_CASE("calibration: degenerate ratios give zero scales") {
    const auto raw = seeded_raw_alpha(3);
    const auto [alpha_scale, noise_scale] = calibrate_signal_scales(1.0, {1.0, 0.0, 0.0}, raw);
    CHECK(alpha_scale == 0.0);
    CHECK(noise_scale == 0.0);
}

TEST_CASE("calibration: zero interaction share forces zero alpha") {
    const auto raw = seeded_raw_alpha(4);
    const auto [alpha_scale, noise_scale] = calibrate_signal_scales(2.0, {0.8, 0.0, 0.2}, raw);
    CHECK(alpha_scale == 0.0);
    CHECK(noise_scale == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("calibration hits the target interaction moment (Monte-Carlo oracle)") {
    const auto raw = seeded_raw_alpha(5);
    const SignalRatios targets{0.6, 0.2, 0.2};
    const auto [alpha_scale, noise_scale] = calibrate_signal_scales(1.0, targets, raw);
    CHECK(noise_scale == doctest::Approx(std::sqrt(0.2 / 0.6)).epsilon(1e-12));

    std::array<double, 9> scaled = raw;
    for (double& v : scaled) v *= alpha_scale;
    const double want = 0.2 * (1.0 / 0.6);  // B * T = 1/3
    const double got = testing::mc_interaction_second_moment(scaled, 100000, 99);
    CHECK(testing::rel_error(got, want) < 0.02);

    // The Monte-Carlo calibration route agrees with the closed form.
    const auto [mc_scale, mc_noise] = calibrate_signal_scales(1.0, targets, raw, 10000, 17);
    CHECK(testing::rel_error(mc_scale, alpha_scale) < 0.02);
    CHECK(mc_noise == noise_scale);
}

TEST_CASE("calibration rejects a zero fixed-term share") {
    const auto raw = seeded_raw_alpha(6);
    CHECK_THROWS_AS(calibrate_signal_scales(1.0, {0.0, 0.5, 0.5}, raw), std::invalid_argument);
}

TEST_CASE("empirical ratios: degenerate fields") {
    StochasticField f;
    f.target_ratios = {1.0, 0.0, 0.0};
    f.fixed_terms = {2.0};
    f.alpha = {std::array<double, 9>{}};
    f.noise_scale = {0.0};
    auto r = empirical_signal_ratios(f, 2000, 1);
    CHECK(r.fixed == doctest::Approx(1.0));
    CHECK(r.interaction == 0.0);
    CHECK(r.noise == 0.0);

    StochasticField g;
    g.target_ratios = {0.0, 0.0, 1.0};
    g.fixed_terms = {0.0};
    g.alpha = {std::array<double, 9>{}};
    g.noise_scale = {1.3};
    r = empirical_signal_ratios(g, 2000, 2);
    CHECK(r.fixed == 0.0);
    CHECK(r.interaction == 0.0);
    CHECK(r.noise == doctest::Approx(1.0));
}

TEST_CASE("empirical ratios sum to one and match calibrated targets") {
    const ProblemInstance inst = generate_instance(default_config(), 42);
    const auto r = empirical_signal_ratios(inst.demand_field, 10000, 3);
    CHECK(r.fixed + r.interaction + r.noise == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(r.fixed - 0.6) < 0.05);
    CHECK(std::abs(r.interaction - 0.2) < 0.05);
    CHECK(std::abs(r.noise - 0.2) < 0.05);
}

TEST_CASE("calibration soundness across fixed terms and ratio mixes") {
    for (const double base : {0.5, 2.7, 5.0}) {
        for (const SignalRatios targets :
             {SignalRatios{0.6, 0.2, 0.2}, SignalRatios{0.8, 0.2, 0.0},
              SignalRatios{0.4, 0.3, 0.3}, SignalRatios{0.2, 0.5, 0.3}}) {
            const auto raw = seeded_raw_alpha(static_cast<std::uint64_t>(base * 100) + 31);
            const auto [alpha_scale, noise_scale] =
                calibrate_signal_scales(base, targets, raw);
            StochasticField f;
            f.target_ratios = targets;
            f.fixed_terms = {base};
            std::array<double, 9> scaled = raw;
            for (double& v : scaled) v *= alpha_scale;
            f.alpha = {scaled};
            f.noise_scale = {noise_scale};
            const auto r = empirical_signal_ratios(f, 10000, 77);
            CHECK(std::abs(r.fixed - targets.fixed) < 0.05);
            CHECK(std::abs(r.interaction - targets.interaction) < 0.05);
            CHECK(std::abs(r.noise - targets.noise) < 0.05);
        }
    }
}

TEST_CASE("realization: deterministic fields reproduce fixed terms") {
    GenerationConfig c = default_config();
    c.demand_ratios = {1.0, 0.0, 0.0};
    c.cost_ratios = {1.0, 0.0, 0.0};
    const ProblemInstance inst = generate_instance(c, 9);
    const Realization real = realize(inst, 1);
    for (int node = 1; node < inst.n_nodes(); ++node)
        CHECK(real.demands[node] == inst.fixed_demand(node));
    for (int i = 0; i < inst.n_nodes(); ++i)
        for (int j = 0; j < inst.n_nodes(); ++j)
            CHECK(real.cost(i, j) == inst.fixed_cost(i, j));
}

TEST_CASE("realization invariants hold across seeds") {
    const ProblemInstance inst = generate_instance(default_config(), 21);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const Realization real = realize(inst, seed);
        for (int i = 0; i < inst.n_nodes(); ++i) {
            CHECK(real.cost(i, i) == 0.0);
            CHECK(real.demands[i] >= 0.0);
            bool any = false;
            for (int h = 0; h < kHoursPerDay; ++h) any = any || real.availability[i][h] == 1;
            CHECK(any);
            for (int j = 0; j < inst.n_nodes(); ++j) CHECK(real.cost(i, j) >= 0.0);
        }
    }
}

TEST_CASE("realization forces an open hour even under stingy availability") {
    ProblemInstance inst = generate_instance(default_config(), 30);
    inst.tw.avail_prob.assign(kNumCustomerTypes, std::vector<double>(kHoursPerDay, 0.02));
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Realization real = realize(inst, seed);
        for (int node = 1; node < inst.n_nodes(); ++node) {
            bool any = false;
            for (int h = 0; h < kHoursPerDay; ++h) any = any || real.availability[node][h] == 1;
            CHECK(any);
        }
    }
}

TEST_CASE("realization is deterministic per seed") {
    const ProblemInstance inst = generate_instance(default_config(), 13);
    const Realization a = realize(inst, 5);
    const Realization b = realize(inst, 5);
    CHECK(a.demands == b.demands);
    CHECK(a.costs == b.costs);
    const Realization c = realize(inst, 6);
    CHECK(a.demands != c.demands);
}

TEST_CASE("correlated externals share one draw across nodes") {
    GenerationConfig cfg = default_config();
    cfg.external_correlated = true;
    const ProblemInstance inst = generate_instance(cfg, 2);
    const Realization real = realize(inst, 3);
    CHECK(real.w.size() == 1);
    CHECK(real.w_for(1) == real.w_for(inst.n_customers));

    cfg.external_correlated = false;
    const ProblemInstance inst2 = generate_instance(cfg, 2);
    const Realization real2 = realize(inst2, 3);
    CHECK(real2.w.size() == static_cast<std::size_t>(inst2.n_nodes()));
}

TEST_CASE("clamping at zero stays a bounded minority under default ratios") {
    // Gaussian noise at (0.6, 0.2, 0.2) has sigma = 0.577 * fixed term, so
    // roughly Phi(-1.2) of draws land below zero and get clamped. The ratio
    // estimators sample the raw components and never see the clamp.
    const ProblemInstance inst = generate_instance(default_config(), 42);
    int clamped = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        const Realization real = realize(inst, seed);
        for (int cust = 1; cust < inst.n_nodes(); ++cust) {
            ++total;
            if (real.demands[cust] == 0.0) ++clamped;
        }
    }
    CHECK(clamped < total * 0.16);
    CHECK(clamped > 0);
}

TEST_CASE("fill rate: direct ratios") {
    const auto inst = testing::manual_instance({{0.1, 0.5}, {0.9, 0.5}}, {5.0, 5.0}, 5.0);
    CHECK(fill_rate(inst) == doctest::Approx(0.5));
    const auto full = testing::manual_instance({{0.1, 0.5}, {0.9, 0.5}}, {5.0, 5.0}, 10.0);
    CHECK(fill_rate(full) == doctest::Approx(1.0));
}

TEST_CASE("instance save/load round-trips exactly") {
    const ProblemInstance inst = generate_instance(default_config(), 101);
    std::ostringstream first;
    save_instance(inst, first);
    std::istringstream in(first.str());
    const ProblemInstance loaded = load_instance(in);
    std::ostringstream second;
    save_instance(loaded, second);
    CHECK(first.str() == second.str());
    CHECK(loaded.capacity == inst.capacity);
    CHECK(loaded.cost_field.fixed_terms == inst.cost_field.fixed_terms);
    CHECK(loaded.demand_field.alpha == inst.demand_field.alpha);
    CHECK(loaded.seed == inst.seed);
}

TEST_CASE("realization save/load round-trips exactly") {
    const ProblemInstance inst = generate_instance(default_config(), 12);
    const Realization real = realize(inst, 77);
    std::ostringstream first;
    save_realization(real, first);
    std::istringstream in(first.str());
    const Realization loaded = load_realization(in);
    CHECK(loaded.w == real.w);
    CHECK(loaded.demands == real.demands);
    CHECK(loaded.costs == real.costs);
    CHECK(loaded.availability == real.availability);
}

TEST_CASE("parse errors carry context") {
    const ProblemInstance inst = generate_instance(default_config(), 3);
    std::ostringstream os;
    save_instance(inst, os);
    const std::string text = os.str();

    // Truncation: drop everything from the cost section on.
    const auto cut = text.find("[cost_field]");
    std::istringstream truncated(text.substr(0, cut));
    CHECK_THROWS_WITH_AS(load_instance(truncated), doctest::Contains("cost_field"),
                         parse_error);

    // Unknown version tag fails before any data is consumed.
    std::string versioned = text;
    versioned.replace(versioned.find("v1"), 2, "v9");
    std::istringstream bad_version(versioned);
    CHECK_THROWS_WITH_AS(load_instance(bad_version), doctest::Contains("version"), parse_error);

    // A malformed numeric field names the offending line.
    std::string mangled = text;
    mangled.replace(mangled.find("n_vehicles 1"), 12, "n_vehicles x");
    std::istringstream bad_value(mangled);
    CHECK_THROWS_AS(load_instance(bad_value), parse_error);
}

TEST_CASE("interaction moment helpers agree with Monte Carlo") {
    const auto raw = seeded_raw_alpha(8);
    const double exact = interaction_second_moment(raw);
    const double mc = testing::mc_interaction_second_moment(raw, 200000, 123);
    CHECK(testing::rel_error(exact, mc) < 0.02);

    RngStream rng(55);
    double mean_mc = 0.0;
    for (int s = 0; s < 200000; ++s) {
        const double w[3] = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
        double x = 0.0;
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n) x += raw[m * 3 + n] * w[m] * w[n];
        mean_mc += x;
    }
    mean_mc /= 200000;
    CHECK(std::abs(interaction_mean(raw) - mean_mc) < 0.02);
}
