#include "svrp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace svrp {

namespace {

constexpr double kRatioTol = 1e-9;
constexpr double kDemandFixedLo = 1.0;
constexpr double kDemandFixedHi = 9.0;

double quad_form(const std::array<double, 9>& alpha, const std::array<double, 3>& w) {
    double s = 0.0;
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) s += alpha[m * 3 + n] * w[m] * w[n];
    return s;
}

// Draws a symmetric 3x3 tensor with standard-normal upper triangle.
std::array<double, 9> draw_raw_alpha(RngStream& rng) {
    std::array<double, 9> a{};
    for (int m = 0; m < 3; ++m)
        for (int n = m; n < 3; ++n) {
            const double z = rng.normal();
            a[m * 3 + n] = z;
            a[n * 3 + m] = z;
        }
    return a;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void SignalRatios::validate() const {
    require(fixed >= 0.0 && interaction >= 0.0 && noise >= 0.0,
            "signal ratios must be nonnegative");
    require(std::abs(fixed + interaction + noise - 1.0) <= kRatioTol,
            "signal ratios must sum to 1");
}

double external_pair_moment(int m, int n) { return m == n ? 1.0 / 3.0 : 0.25; }

double interaction_mean(const std::array<double, 9>& alpha) {
    double s = 0.0;
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) s += alpha[m * 3 + n] * external_pair_moment(m, n);
    return s;
}

double interaction_second_moment(const std::array<double, 9>& alpha) {
    // E[(sum alpha_mn w_m w_n)^2] = sum over index quadruples of
    // alpha_mn alpha_pq * prod_k E[w_k^{count_k}], with E[w^k] = 1/(k+1).
    double s = 0.0;
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n)
            for (int p = 0; p < 3; ++p)
                for (int q = 0; q < 3; ++q) {
                    int count[3] = {0, 0, 0};
                    ++count[m];
                    ++count[n];
                    ++count[p];
                    ++count[q];
                    double moment = 1.0;
                    for (int k = 0; k < 3; ++k) moment /= static_cast<double>(count[k] + 1);
                    s += alpha[m * 3 + n] * alpha[p * 3 + q] * moment;
                }
    return s;
}

void StochasticField::validate() const {
    target_ratios.validate();
    require(alpha.size() == fixed_terms.size() && noise_scale.size() == fixed_terms.size(),
            "stochastic field arrays must have equal length");
    for (int t = 0; t < n_targets(); ++t) {
        require(fixed_terms[t] >= 0.0, "fixed terms must be nonnegative");
        require(noise_scale[t] >= 0.0, "noise scales must be nonnegative");
        for (int m = 0; m < 3; ++m)
            for (int n = m + 1; n < 3; ++n)
                require(alpha[t][m * 3 + n] == alpha[t][n * 3 + m],
                        "interaction tensor must be symmetric");
    }
}

void TimeWindowModel::validate() const {
    require(hours_per_day >= 1, "hours_per_day must be positive");
    require(static_cast<int>(avail_prob.size()) == n_types, "one probability row per type");
    require(static_cast<int>(service_time.size()) == n_types, "one service time per type");
    for (const auto& row : avail_prob) {
        require(static_cast<int>(row.size()) == hours_per_day,
                "availability row length must equal hours_per_day");
        for (double p : row) require(p >= 0.0 && p <= 1.0, "availability probability in [0,1]");
    }
    for (double s : service_time) require(s >= 0.0, "service time must be nonnegative");
}

const char* to_string(DeliveryMode m) { return m == DeliveryMode::partial ? "partial" : "full"; }
const char* to_string(PositionsMode m) { return m == PositionsMode::fixed ? "fixed" : "flexible"; }

DeliveryMode delivery_mode_from_string(const std::string& s) {
    if (s == "partial") return DeliveryMode::partial;
    if (s == "full") return DeliveryMode::full;
    throw std::invalid_argument("unknown delivery mode: " + s);
}

PositionsMode positions_mode_from_string(const std::string& s) {
    if (s == "fixed") return PositionsMode::fixed;
    if (s == "flexible") return PositionsMode::flexible;
    throw std::invalid_argument("unknown positions mode: " + s);
}

double ProblemInstance::expected_demand(int node) const {
    return fixed_demand(node) + interaction_mean(demand_field.alpha[node - 1]);
}

double ProblemInstance::expected_cost(int i, int j) const {
    if (i == j) return 0.0;
    return fixed_cost(i, j) + interaction_mean(cost_field.alpha[i * n_nodes() + j]);
}

double ProblemInstance::total_expected_demand() const {
    double s = 0.0;
    for (int c = 1; c <= n_customers; ++c) s += expected_demand(c);
    return s;
}

void ProblemInstance::validate() const {
    require(n_customers >= 1, "instance needs at least one customer");
    require(static_cast<int>(coords.size()) == n_nodes(), "one coordinate per node");
    require(coords[0][0] == 0.5 && coords[0][1] == 0.5, "depot must sit at the map center");
    for (const auto& c : coords)
        require(c[0] >= 0.0 && c[0] <= 1.0 && c[1] >= 0.0 && c[1] <= 1.0,
                "coordinates must lie in the unit square");
    require(static_cast<int>(customer_type.size()) == n_customers, "one type per customer");
    for (int t : customer_type)
        require(t >= 0 && t < tw.n_types, "customer type out of range");
    require(capacity > 0.0, "capacity must be positive");
    require(n_vehicles >= 1, "need at least one vehicle");
    require(speed > 0.0, "speed must be positive");
    require(demand_field.n_targets() == n_customers, "demand field covers customers");
    require(cost_field.n_targets() == n_nodes() * n_nodes(), "cost field covers node pairs");
    demand_field.validate();
    cost_field.validate();
    tw.validate();
    for (int i = 0; i < n_nodes(); ++i) {
        require(fixed_cost(i, i) == 0.0, "cost fixed terms must vanish on the diagonal");
        for (int j = i + 1; j < n_nodes(); ++j)
            require(fixed_cost(i, j) == fixed_cost(j, i), "cost fixed terms must be symmetric");
    }
}

void Realization::validate(const ProblemInstance& instance) const {
    const int n = instance.n_nodes();
    require(n_nodes() == n, "realization size must match the instance");
    require(static_cast<int>(costs.size()) == n * n, "cost matrix size mismatch");
    require(static_cast<int>(availability.size()) == n, "availability rows mismatch");
    require(static_cast<int>(w.size()) == (instance.external_correlated ? 1 : n),
            "external draw count mismatch");
    require(demands[0] == 0.0, "depot demand must be zero");
    for (int i = 0; i < n; ++i) {
        require(demands[i] >= 0.0, "demands must be nonnegative");
        require(cost(i, i) == 0.0, "realized cost diagonal must be zero");
        bool any = false;
        for (int h = 0; h < kHoursPerDay; ++h) {
            require(availability[i][h] == 0 || availability[i][h] == 1,
                    "availability entries must be binary");
            any = any || availability[i][h] == 1;
        }
        require(any, "availability row needs at least one open hour");
        for (int j = 0; j < n; ++j) require(cost(i, j) >= 0.0, "costs must be nonnegative");
    }
}

std::pair<double, double> calibrate_signal_scales(double fixed_term, const SignalRatios& targets,
                                                  const std::array<double, 9>& alpha_raw,
                                                  int n_samples, std::uint64_t seed) {
    targets.validate();
    require(fixed_term >= 0.0, "fixed term must be nonnegative");
    if (targets.fixed <= 0.0)
        throw std::invalid_argument("calibration requires a positive fixed-term ratio");

    const double total = fixed_term * fixed_term / targets.fixed;
    const double noise_scale = std::sqrt(targets.noise * total);

    double alpha_scale = 0.0;
    if (targets.interaction > 0.0) {
        double second_moment;
        if (n_samples > 0) {
            RngStream rng(seed);
            double acc = 0.0;
            for (int s = 0; s < n_samples; ++s) {
                const std::array<double, 3> w = {rng.uniform01(), rng.uniform01(),
                                                 rng.uniform01()};
                const double x = quad_form(alpha_raw, w);
                acc += x * x;
            }
            second_moment = acc / n_samples;
        } else {
            second_moment = interaction_second_moment(alpha_raw);
        }
        if (second_moment <= 0.0)
            throw std::invalid_argument("raw interaction tensor carries no signal to scale");
        alpha_scale = std::sqrt(targets.interaction * total / second_moment);
    }
    return {alpha_scale, noise_scale};
}

ProblemInstance generate_instance(const GenerationConfig& config, std::uint64_t seed) {
    require(config.n_customers >= 1, "need at least one customer");
    require(config.n_vehicles >= 1, "need at least one vehicle");
    require(config.fill_rate > 0.0, "fill rate must be positive");
    config.demand_ratios.validate();
    config.cost_ratios.validate();

    ProblemInstance inst;
    inst.n_customers = config.n_customers;
    inst.n_vehicles = config.n_vehicles;
    inst.external_correlated = config.external_correlated;
    inst.delivery_mode = config.delivery_mode;
    inst.positions_mode = config.positions_mode;
    inst.seed = seed;

    const int n = inst.n_nodes();

    RngStream coord_rng(derive_seed(seed, 1));
    inst.coords.resize(n);
    inst.coords[0] = {0.5, 0.5};
    for (int i = 1; i < n; ++i) inst.coords[i] = {coord_rng.uniform01(), coord_rng.uniform01()};

    RngStream type_rng(derive_seed(seed, 2));
    inst.customer_type.resize(inst.n_customers);
    for (int c = 0; c < inst.n_customers; ++c)
        inst.customer_type[c] = type_rng.uniform_int(kNumCustomerTypes);

    // Availability by type: complementary half-day blocks. With time windows
    // disabled every hour is open and waiting never occurs.
    inst.tw.avail_prob.assign(kNumCustomerTypes, std::vector<double>(kHoursPerDay, 1.0));
    inst.tw.service_time.assign(kNumCustomerTypes, 0.0);
    if (config.time_windows) {
        for (int h = 0; h < kHoursPerDay; ++h) {
            inst.tw.avail_prob[0][h] = h < kHoursPerDay / 2 ? 0.8 : 0.2;
            inst.tw.avail_prob[1][h] = h < kHoursPerDay / 2 ? 0.2 : 0.8;
        }
    }

    RngStream demand_rng(derive_seed(seed, 3));
    inst.demand_field.target_ratios = config.demand_ratios;
    inst.demand_field.fixed_terms.resize(inst.n_customers);
    inst.demand_field.alpha.resize(inst.n_customers);
    inst.demand_field.noise_scale.resize(inst.n_customers);
    for (int c = 0; c < inst.n_customers; ++c) {
        const double base = demand_rng.uniform(kDemandFixedLo, kDemandFixedHi);
        auto raw = draw_raw_alpha(demand_rng);
        const auto [alpha_scale, noise_scale] =
            calibrate_signal_scales(base, config.demand_ratios, raw);
        for (double& a : raw) a *= alpha_scale;
        inst.demand_field.fixed_terms[c] = base;
        inst.demand_field.alpha[c] = raw;
        inst.demand_field.noise_scale[c] = noise_scale;
    }

    RngStream cost_rng(derive_seed(seed, 4));
    inst.cost_field.target_ratios = config.cost_ratios;
    inst.cost_field.fixed_terms.assign(n * n, 0.0);
    inst.cost_field.alpha.assign(n * n, std::array<double, 9>{});
    inst.cost_field.noise_scale.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = inst.coords[i][0] - inst.coords[j][0];
            const double dy = inst.coords[i][1] - inst.coords[j][1];
            inst.cost_field.fixed_terms[i * n + j] = std::sqrt(dx * dx + dy * dy) / inst.speed;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double base = inst.cost_field.fixed_terms[i * n + j];
            auto raw = draw_raw_alpha(cost_rng);
            if (base > 0.0) {
                const auto [alpha_scale, noise_scale] =
                    calibrate_signal_scales(base, config.cost_ratios, raw);
                for (double& a : raw) a *= alpha_scale;
                inst.cost_field.alpha[i * n + j] = raw;
                inst.cost_field.noise_scale[i * n + j] = noise_scale;
            }
        }

    const double total_expected = inst.total_expected_demand();
    require(total_expected > 0.0, "total expected demand must be positive");
    inst.capacity = config.fill_rate * total_expected;

    inst.validate();
    return inst;
}

Realization realize(const ProblemInstance& instance, std::uint64_t seed) {
    instance.validate();
    const int n = instance.n_nodes();

    Realization r;
    RngStream w_rng(derive_seed(seed, 1));
    const int n_draws = instance.external_correlated ? 1 : n;
    r.w.resize(n_draws);
    for (int i = 0; i < n_draws; ++i)
        r.w[i] = {w_rng.uniform01(), w_rng.uniform01(), w_rng.uniform01()};

    RngStream demand_rng(derive_seed(seed, 2));
    r.demands.assign(n, 0.0);
    for (int node = 1; node < n; ++node) {
        const int t = node - 1;
        const double value = instance.demand_field.fixed_terms[t] +
                             quad_form(instance.demand_field.alpha[t], r.w_for(node)) +
                             instance.demand_field.noise_scale[t] * demand_rng.normal();
        r.demands[node] = std::max(0.0, value);
    }

    RngStream cost_rng(derive_seed(seed, 3));
    r.costs.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const int t = i * n + j;
            const double value = instance.cost_field.fixed_terms[t] +
                                 quad_form(instance.cost_field.alpha[t], r.w_for(i)) +
                                 instance.cost_field.noise_scale[t] * cost_rng.normal();
            r.costs[t] = std::max(0.0, value);
        }

    RngStream avail_rng(derive_seed(seed, 4));
    r.availability.assign(n, {});
    r.availability[0].fill(1);
    for (int node = 1; node < n; ++node) {
        const auto& probs = instance.tw.avail_prob[instance.type_of(node)];
        bool any = false;
        for (int h = 0; h < kHoursPerDay; ++h) {
            r.availability[node][h] = avail_rng.bernoulli(probs[h]) ? 1 : 0;
            any = any || r.availability[node][h] == 1;
        }
        if (!any) r.availability[node][avail_rng.uniform_int(kHoursPerDay)] = 1;
    }

    r.validate(instance);
    return r;
}

SignalRatios empirical_signal_ratios(const StochasticField& field, int n_samples,
                                     std::uint64_t seed) {
    field.validate();
    require(n_samples >= 1000, "need at least 1000 samples");

    RngStream rng(seed);
    double fixed_sq = 0.0;
    for (double f : field.fixed_terms) fixed_sq += f * f;

    double interaction_sq = 0.0;
    double noise_sq = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        for (int t = 0; t < field.n_targets(); ++t) {
            const std::array<double, 3> w = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
            const double x = quad_form(field.alpha[t], w);
            const double e = field.noise_scale[t] * rng.normal();
            interaction_sq += x * x;
            noise_sq += e * e;
        }
    }
    interaction_sq /= n_samples;
    noise_sq /= n_samples;

    const double total = fixed_sq + interaction_sq + noise_sq;
    require(total > 0.0, "field carries no signal");
    return {fixed_sq / total, interaction_sq / total, noise_sq / total};
}

double fill_rate(const ProblemInstance& instance) {
    const double total = instance.total_expected_demand();
    if (total <= 0.0) throw std::invalid_argument("total expected demand must be positive");
    return instance.capacity / total;
}

std::vector<double> sample_demands(const ProblemInstance& instance, RngStream& rng) {
    const int n = instance.n_nodes();
    std::vector<double> demands(n, 0.0);
    std::array<double, 3> shared{};
    if (instance.external_correlated)
        shared = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
    for (int node = 1; node < n; ++node) {
        const std::array<double, 3> w =
            instance.external_correlated
                ? shared
                : std::array<double, 3>{rng.uniform01(), rng.uniform01(), rng.uniform01()};
        const int t = node - 1;
        const double value = instance.demand_field.fixed_terms[t] +
                             quad_form(instance.demand_field.alpha[t], w) +
                             instance.demand_field.noise_scale[t] * rng.normal();
        demands[node] = std::max(0.0, value);
    }
    return demands;
}

}  // namespace svrp
