#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "svrp/instance.hpp"

// Text serialization for instances and realizations. Both formats are
// versioned, section-based ("[section]" headers, one field per line) and
// round-trip exactly: doubles are written with max_digits10 precision.

namespace svrp {

namespace {

constexpr const char* kInstanceTag = "svrp-instance";
constexpr const char* kRealizationTag = "svrp-realization";
constexpr const char* kFormatVersion = "v1";

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

// Line-oriented reader tracking position for error messages.
class Reader {
public:
    Reader(std::istream& in, std::string where) : in_(in), where_(std::move(where)) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw parse_error(where_, line_, msg); }

    void expect_section(const std::string& name) {
        std::string line;
        if (!next(line)) fail("missing section [" + name + "]");
        if (line != "[" + name + "]")
            fail("expected section [" + name + "], found '" + line + "'");
    }

    std::istringstream fields(const std::string& line) const { return std::istringstream(line); }

    // Reads "key value..." and checks the key.
    std::istringstream keyed(const std::string& key) {
        std::string line;
        if (!next(line)) fail("missing field '" + key + "'");
        std::istringstream is(line);
        std::string k;
        is >> k;
        if (k != key) fail("expected field '" + key + "', found '" + k + "'");
        return is;
    }

    template <typename T>
    T value(std::istringstream& is, const std::string& what) {
        T v;
        if (!(is >> v)) fail("malformed value for " + what);
        return v;
    }

    template <typename T>
    T value(std::istringstream&& is, const std::string& what) {
        return value<T>(is, what);
    }

private:
    std::istream& in_;
    std::string where_;
    int line_ = 0;
};

void check_header(Reader& r, const char* tag) {
    std::string line;
    if (!r.next(line)) r.fail(std::string("empty input, expected '") + tag + "' header");
    std::istringstream is(line);
    std::string name, version;
    is >> name >> version;
    if (name != tag) r.fail("not a " + std::string(tag) + " file");
    if (version != kFormatVersion)
        r.fail("unsupported format version '" + version + "' (expected " + kFormatVersion + ")");
}

void write_field(std::ostream& out, const StochasticField& f, const std::string& name) {
    out << "[" << name << "]\n";
    out << "ratios " << fmt(f.target_ratios.fixed) << ' ' << fmt(f.target_ratios.interaction)
        << ' ' << fmt(f.target_ratios.noise) << '\n';
    out << "n_targets " << f.n_targets() << '\n';
    for (int t = 0; t < f.n_targets(); ++t) {
        out << "target " << t << ' ' << fmt(f.fixed_terms[t]) << ' ' << fmt(f.noise_scale[t]);
        for (double a : f.alpha[t]) out << ' ' << fmt(a);
        out << '\n';
    }
}

StochasticField read_field(Reader& r, const std::string& name, bool with_fixed_terms) {
    r.expect_section(name);
    StochasticField f;
    {
        auto is = r.keyed("ratios");
        f.target_ratios.fixed = r.value<double>(is, "ratio A");
        f.target_ratios.interaction = r.value<double>(is, "ratio B");
        f.target_ratios.noise = r.value<double>(is, "ratio Gamma");
    }
    auto is = r.keyed("n_targets");
    const int n = r.value<int>(is, "target count");
    if (n < 0) r.fail("negative target count");
    f.fixed_terms.resize(n);
    f.alpha.resize(n);
    f.noise_scale.resize(n);
    for (int t = 0; t < n; ++t) {
        auto row = r.keyed("target");
        const int idx = r.value<int>(row, "target index");
        if (idx != t) r.fail("targets must be listed in order");
        f.fixed_terms[t] = r.value<double>(row, "fixed term");
        f.noise_scale[t] = r.value<double>(row, "noise scale");
        for (int k = 0; k < 9; ++k) f.alpha[t][k] = r.value<double>(row, "alpha entry");
    }
    (void)with_fixed_terms;
    return f;
}

}  // namespace

void save_instance(const ProblemInstance& inst, std::ostream& out) {
    const int n = inst.n_nodes();
    out << kInstanceTag << ' ' << kFormatVersion << '\n';
    out << "[meta]\n";
    out << "n_customers " << inst.n_customers << '\n';
    out << "n_vehicles " << inst.n_vehicles << '\n';
    out << "capacity " << fmt(inst.capacity) << '\n';
    out << "speed " << fmt(inst.speed) << '\n';
    out << "n_external " << inst.n_external << '\n';
    out << "external_correlated " << (inst.external_correlated ? 1 : 0) << '\n';
    out << "delivery_mode " << to_string(inst.delivery_mode) << '\n';
    out << "positions_mode " << to_string(inst.positions_mode) << '\n';
    out << "seed " << inst.seed << '\n';
    out << "[coords]\n";
    for (int i = 0; i < n; ++i)
        out << "node " << i << ' ' << fmt(inst.coords[i][0]) << ' ' << fmt(inst.coords[i][1])
            << '\n';
    out << "[customer_types]\n";
    for (int c = 0; c < inst.n_customers; ++c)
        out << "customer " << c + 1 << ' ' << inst.customer_type[c] << '\n';
    out << "[time_windows]\n";
    out << "hours_per_day " << inst.tw.hours_per_day << '\n';
    out << "n_types " << inst.tw.n_types << '\n';
    for (int t = 0; t < inst.tw.n_types; ++t) {
        out << "avail_prob " << t;
        for (double p : inst.tw.avail_prob[t]) out << ' ' << fmt(p);
        out << '\n';
    }
    out << "service_time";
    for (double s : inst.tw.service_time) out << ' ' << fmt(s);
    out << '\n';
    write_field(out, inst.demand_field, "demand_field");
    // Cost fixed terms are rebuilt from coordinates on load; only the
    // stochastic parts are stored.
    write_field(out, inst.cost_field, "cost_field");
    out << "[end]\n";
}

void save_instance(const ProblemInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_instance(inst, out);
}

ProblemInstance load_instance(std::istream& in, const std::string& where) {
    Reader r(in, where);
    check_header(r, kInstanceTag);

    ProblemInstance inst;
    r.expect_section("meta");
    inst.n_customers = r.value<int>(r.keyed("n_customers"), "n_customers");
    if (inst.n_customers < 1) r.fail("n_customers must be at least 1");
    inst.n_vehicles = r.value<int>(r.keyed("n_vehicles"), "n_vehicles");
    inst.capacity = r.value<double>(r.keyed("capacity"), "capacity");
    inst.speed = r.value<double>(r.keyed("speed"), "speed");
    inst.n_external = r.value<int>(r.keyed("n_external"), "n_external");
    inst.external_correlated = r.value<int>(r.keyed("external_correlated"), "flag") != 0;
    inst.delivery_mode =
        delivery_mode_from_string(r.value<std::string>(r.keyed("delivery_mode"), "mode"));
    inst.positions_mode =
        positions_mode_from_string(r.value<std::string>(r.keyed("positions_mode"), "mode"));
    inst.seed = r.value<std::uint64_t>(r.keyed("seed"), "seed");

    const int n = inst.n_nodes();
    r.expect_section("coords");
    inst.coords.resize(n);
    for (int i = 0; i < n; ++i) {
        auto is = r.keyed("node");
        const int idx = r.value<int>(is, "node index");
        if (idx != i) r.fail("nodes must be listed in order");
        inst.coords[i][0] = r.value<double>(is, "x");
        inst.coords[i][1] = r.value<double>(is, "y");
    }

    r.expect_section("customer_types");
    inst.customer_type.resize(inst.n_customers);
    for (int c = 0; c < inst.n_customers; ++c) {
        auto is = r.keyed("customer");
        const int idx = r.value<int>(is, "customer index");
        if (idx != c + 1) r.fail("customers must be listed in order");
        inst.customer_type[c] = r.value<int>(is, "type");
    }

    r.expect_section("time_windows");
    inst.tw.hours_per_day = r.value<int>(r.keyed("hours_per_day"), "hours_per_day");
    inst.tw.n_types = r.value<int>(r.keyed("n_types"), "n_types");
    inst.tw.avail_prob.assign(inst.tw.n_types, {});
    for (int t = 0; t < inst.tw.n_types; ++t) {
        auto is = r.keyed("avail_prob");
        const int idx = r.value<int>(is, "type index");
        if (idx != t) r.fail("types must be listed in order");
        inst.tw.avail_prob[t].resize(inst.tw.hours_per_day);
        for (int h = 0; h < inst.tw.hours_per_day; ++h)
            inst.tw.avail_prob[t][h] = r.value<double>(is, "availability probability");
    }
    {
        auto is = r.keyed("service_time");
        inst.tw.service_time.resize(inst.tw.n_types);
        for (int t = 0; t < inst.tw.n_types; ++t)
            inst.tw.service_time[t] = r.value<double>(is, "service time");
    }

    inst.demand_field = read_field(r, "demand_field", true);
    inst.cost_field = read_field(r, "cost_field", false);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = inst.coords[i][0] - inst.coords[j][0];
            const double dy = inst.coords[i][1] - inst.coords[j][1];
            inst.cost_field.fixed_terms[i * n + j] = std::sqrt(dx * dx + dy * dy) / inst.speed;
        }

    r.expect_section("end");
    try {
        inst.validate();
    } catch (const std::invalid_argument& e) {
        r.fail(std::string("invalid instance data: ") + e.what());
    }
    return inst;
}

ProblemInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return load_instance(in, path);
}

void save_realization(const Realization& r, std::ostream& out) {
    const int n = r.n_nodes();
    out << kRealizationTag << ' ' << kFormatVersion << '\n';
    out << "[meta]\n";
    out << "n_nodes " << n << '\n';
    out << "correlated " << (r.correlated() ? 1 : 0) << '\n';
    out << "[externals]\n";
    for (std::size_t i = 0; i < r.w.size(); ++i)
        out << "w " << i << ' ' << fmt(r.w[i][0]) << ' ' << fmt(r.w[i][1]) << ' '
            << fmt(r.w[i][2]) << '\n';
    out << "[demands]\n";
    for (int i = 0; i < n; ++i) out << "node " << i << ' ' << fmt(r.demands[i]) << '\n';
    out << "[costs]\n";
    for (int i = 0; i < n; ++i) {
        out << "row " << i;
        for (int j = 0; j < n; ++j) out << ' ' << fmt(r.cost(i, j));
        out << '\n';
    }
    out << "[availability]\n";
    for (int i = 0; i < n; ++i) {
        out << "node " << i;
        for (int h = 0; h < kHoursPerDay; ++h) out << ' ' << int(r.availability[i][h]);
        out << '\n';
    }
    out << "[end]\n";
}

void save_realization(const Realization& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_realization(r, out);
}

Realization load_realization(std::istream& in, const std::string& where) {
    Reader rd(in, where);
    check_header(rd, kRealizationTag);

    Realization r;
    rd.expect_section("meta");
    const int n = rd.value<int>(rd.keyed("n_nodes"), "n_nodes");
    if (n < 2) rd.fail("realization needs a depot and at least one customer");
    const bool correlated = rd.value<int>(rd.keyed("correlated"), "correlated") != 0;

    rd.expect_section("externals");
    r.w.resize(correlated ? 1 : n);
    for (std::size_t i = 0; i < r.w.size(); ++i) {
        auto is = rd.keyed("w");
        const int idx = rd.value<int>(is, "draw index");
        if (idx != static_cast<int>(i)) rd.fail("external draws must be listed in order");
        for (int k = 0; k < 3; ++k) r.w[i][k] = rd.value<double>(is, "external value");
    }

    rd.expect_section("demands");
    r.demands.resize(n);
    for (int i = 0; i < n; ++i) {
        auto is = rd.keyed("node");
        const int idx = rd.value<int>(is, "node index");
        if (idx != i) rd.fail("nodes must be listed in order");
        r.demands[i] = rd.value<double>(is, "demand");
    }

    rd.expect_section("costs");
    r.costs.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        auto is = rd.keyed("row");
        const int idx = rd.value<int>(is, "row index");
        if (idx != i) rd.fail("rows must be listed in order");
        for (int j = 0; j < n; ++j) r.costs[i * n + j] = rd.value<double>(is, "cost");
    }

    rd.expect_section("availability");
    r.availability.resize(n);
    for (int i = 0; i < n; ++i) {
        auto is = rd.keyed("node");
        const int idx = rd.value<int>(is, "node index");
        if (idx != i) rd.fail("nodes must be listed in order");
        for (int h = 0; h < kHoursPerDay; ++h) {
            const int v = rd.value<int>(is, "availability bit");
            if (v != 0 && v != 1) rd.fail("availability entries must be 0 or 1");
            r.availability[i][h] = static_cast<std::uint8_t>(v);
        }
    }
    rd.expect_section("end");
    return r;
}

Realization load_realization(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return load_realization(in, path);
}

}  // namespace svrp
