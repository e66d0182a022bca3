#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "svrp/bench.hpp"

// Subcommands: generate, train, solve, bench, time. Every command accepts
// --config <file> with one "key value" option per line (CLI11 config
// format); flags given on the command line override the file.

namespace svrp {

namespace {

SignalRatios parse_ratios(const std::string& text) {
    SignalRatios r{};
    char c1, c2;
    std::istringstream is(text);
    if (!(is >> r.fixed >> c1 >> r.interaction >> c2 >> r.noise) || c1 != ',' || c2 != ',')
        throw CLI::ValidationError("ratios must look like A,B,G (e.g. 0.6,0.2,0.2)");
    r.validate();
    return r;
}

struct GenerationFlags {
    int size = 10;
    int vehicles = 1;
    double fill_rate = 0.5;
    std::string demand_ratios = "0.6,0.2,0.2";
    std::string cost_ratios = "0.6,0.2,0.2";
    bool no_time_windows = false;
    bool correlated = false;
    std::string delivery = "partial";
    std::string positions = "fixed";

    void attach(CLI::App* cmd) {
        cmd->add_option("--size", size, "customer count")->check(CLI::PositiveNumber);
        cmd->add_option("--vehicles", vehicles, "fleet size")->check(CLI::PositiveNumber);
        cmd->add_option("--fill-rate", fill_rate, "capacity / total expected demand");
        cmd->add_option("--demand-ratios", demand_ratios, "demand signal ratios A,B,G");
        cmd->add_option("--cost-ratios", cost_ratios, "cost signal ratios A,B,G");
        cmd->add_flag("--no-time-windows", no_time_windows, "all hours available");
        cmd->add_flag("--correlated", correlated, "share external draws across customers");
        cmd->add_option("--delivery", delivery, "partial|full");
        cmd->add_option("--positions", positions, "fixed|flexible");
    }

    GenerationConfig to_config() const {
        GenerationConfig c;
        c.n_customers = size;
        c.n_vehicles = vehicles;
        c.fill_rate = fill_rate;
        c.demand_ratios = parse_ratios(demand_ratios);
        c.cost_ratios = parse_ratios(cost_ratios);
        c.time_windows = !no_time_windows;
        c.external_correlated = correlated;
        c.delivery_mode = delivery_mode_from_string(delivery);
        c.positions_mode = positions_mode_from_string(positions);
        return c;
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Stochastic vehicle routing research harness"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a config file");

    // ---- generate ----
    auto* gen = app.add_subcommand("generate", "write a benchmark dataset");
    GenerationFlags gen_flags;
    gen_flags.attach(gen);
    std::string gen_out = "data";
    std::string gen_name = "testset";
    int gen_n = 100;
    std::uint64_t gen_seed = 1;
    bool gen_paper_scale = false;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--name", gen_name, "dataset name");
    gen->add_option("--n", gen_n, "instances in the set")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "dataset seed");
    gen->add_flag("--paper-scale", gen_paper_scale, "full-scale set (1000 items)");

    // ---- train ----
    auto* tr = app.add_subcommand("train", "train the routing policy");
    GenerationFlags tr_flags;
    tr_flags.attach(tr);
    std::string tr_out = "checkpoint.txt";
    std::string tr_curve = "curve.txt";
    std::uint64_t tr_family_seed = 1;
    std::uint64_t tr_seed = 0;
    int tr_iterations = 2000;
    int tr_batch = 128;
    double tr_lr = 1e-4;
    std::string tr_mode = "apriori";
    std::string tr_advantage = "per-step";
    int tr_workers = 0;
    bool tr_resume = false;
    bool tr_paper_scale = false;
    tr->add_option("--out", tr_out, "checkpoint path");
    tr->add_option("--curve", tr_curve, "curve log path");
    tr->add_option("--family-seed", tr_family_seed, "instance family seed");
    tr->add_option("--seed", tr_seed, "training seed");
    tr->add_option("--iterations", tr_iterations, "training iterations");
    tr->add_option("--batch", tr_batch, "episodes per iteration");
    tr->add_option("--lr", tr_lr, "Adam learning rate");
    tr->add_option("--mode", tr_mode, "apriori|reopt");
    tr->add_option("--advantage", tr_advantage, "per-step|cost-to-go");
    tr->add_option("--workers", tr_workers, "rollout worker threads (0 = auto)");
    tr->add_flag("--resume", tr_resume, "continue from the checkpoint at --out");
    tr->add_flag("--paper-scale", tr_paper_scale, "full-scale run (10000 iterations)");

    // ---- solve ----
    auto* so = app.add_subcommand("solve", "solve one instance/realization pair");
    std::string so_checkpoint, so_instance, so_realization, so_trace;
    std::string so_decode = "beam";
    std::string so_mode = "apriori";
    int so_ns = 16, so_nb = 3;
    std::uint64_t so_seed = 0;
    so->add_option("--checkpoint", so_checkpoint, "policy checkpoint")->required();
    so->add_option("--instance", so_instance, "instance file")->required();
    so->add_option("--realization", so_realization, "realization file")->required();
    so->add_option("--decode", so_decode, "greedy|sampling|beam");
    so->add_option("--mode", so_mode, "apriori|reopt");
    so->add_option("--ns", so_ns, "sample width");
    so->add_option("--nb", so_nb, "beam width");
    so->add_option("--seed", so_seed, "decode seed");
    so->add_option("--trace", so_trace, "write the replayed episode trace here");

    // ---- bench ----
    auto* be = app.add_subcommand("bench", "benchmark solvers over datasets");
    std::vector<std::string> be_manifests;
    std::string be_solvers = "cw,tabu,aco";
    std::string be_checkpoint;
    std::string be_decode = "beam";
    std::string be_mode = "apriori";
    std::string be_out = "bench.csv";
    std::uint64_t be_seed = 1;
    int be_workers = 0;
    int be_ns = 16, be_nb = 3;
    int be_tabu_iters = 0, be_aco_iters = 0;
    be->add_option("--manifest", be_manifests, "dataset manifest (repeatable)")->required();
    be->add_option("--solvers", be_solvers, "comma list of cw,tabu,aco,rl");
    be->add_option("--checkpoint", be_checkpoint, "policy checkpoint for rl");
    be->add_option("--decode", be_decode, "rl decode strategy");
    be->add_option("--mode", be_mode, "rl evaluation mode: apriori|reopt");
    be->add_option("--out", be_out, "CSV output path");
    be->add_option("--seed", be_seed, "solver seed");
    be->add_option("--workers", be_workers, "worker threads (0 = auto)");
    be->add_option("--ns", be_ns, "sample width");
    be->add_option("--nb", be_nb, "beam width");
    be->add_option("--tabu-iterations", be_tabu_iters, "tabu budget (0 = size default)");
    be->add_option("--aco-iterations", be_aco_iters, "aco budget (0 = size default)");

    // ---- time ----
    auto* ti = app.add_subcommand("time", "per-instance solve timing");
    std::vector<std::string> ti_manifests;
    std::string ti_solvers = "cw,tabu,aco";
    std::string ti_checkpoint;
    std::string ti_decode = "greedy";
    std::string ti_out = "timing.csv";
    std::uint64_t ti_seed = 1;
    int ti_ns = 16, ti_nb = 3;
    ti->add_option("--manifest", ti_manifests, "dataset manifest (repeatable)")->required();
    ti->add_option("--solvers", ti_solvers, "comma list of cw,tabu,aco,rl");
    ti->add_option("--checkpoint", ti_checkpoint, "policy checkpoint for rl");
    ti->add_option("--decode", ti_decode, "rl decode strategy");
    ti->add_option("--out", ti_out, "CSV output path");
    ti->add_option("--seed", ti_seed, "solver seed");
    ti->add_option("--ns", ti_ns, "sample width");
    ti->add_option("--nb", ti_nb, "beam width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            const int n = gen_paper_scale ? 1000 : gen_n;
            Dataset ds = generate_dataset(gen_name, gen_flags.to_config(), n, gen_seed);
            const std::string manifest = save_dataset(ds, gen_out);
            std::cout << manifest << '\n';
            return 0;
        }

        if (tr->parsed()) {
            InstanceFamily family{tr_flags.to_config(), tr_family_seed};
            TrainConfig config;
            config.iterations = tr_paper_scale ? 10000 : tr_iterations;
            config.batch_size = tr_batch;
            config.lr = tr_lr;
            config.seed = tr_seed;
            config.env_mode = env_mode_from_string(tr_mode);
            config.advantage = advantage_mode_from_string(tr_advantage);
            config.n_workers = tr_workers;

            PolicyConfig pc;
            pc.n_customers = family.config.n_customers;
            pc.init_seed = derive_seed(tr_seed, 99);
            PolicyNet net = [&] {
                if (tr_resume) {
                    std::map<std::string, std::string> meta;
                    PolicyNet loaded = PolicyNet::load(tr_out, &meta);
                    if (auto it = meta.find("iterations_done"); it != meta.end())
                        config.start_iteration = std::stoi(it->second);
                    return loaded;
                }
                return PolicyNet(pc);
            }();

            const TrainResult res = train(net, family, config, tr_out, tr_curve);
            std::cout << "iterations " << res.iterations_done << " first_cost "
                      << res.first_mean_cost << " last_cost " << res.last_mean_cost << '\n';
            return 0;
        }

        if (so->parsed()) {
            PolicyNet net = PolicyNet::load(so_checkpoint);
            const ProblemInstance instance = load_instance(so_instance);
            const Realization realization = load_realization(so_realization);
            DecodeConfig decode;
            decode.strategy = decode_strategy_from_string(so_decode);
            decode.sample_width = so_ns;
            decode.beam_width = so_nb;
            decode.seed = so_seed;
            const SolveResult res =
                solve(net, instance, realization, env_mode_from_string(so_mode), decode);
            std::cout << std::setprecision(9) << "cost " << res.cost << '\n';
            for (std::size_t v = 0; v < res.solution.routes.size(); ++v) {
                std::cout << "route " << v;
                for (int node : res.solution.routes[v]) std::cout << ' ' << node;
                std::cout << '\n';
            }
            if (!so_trace.empty()) {
                Env env(instance, realization, EnvMode::apriori);
                for (std::size_t hop = 1;; ++hop) {
                    Action action;
                    action.targets.assign(instance.n_vehicles, 0);
                    bool any = false;
                    for (int v = 0; v < instance.n_vehicles; ++v)
                        if (hop < res.solution.routes[v].size()) {
                            action.targets[v] = res.solution.routes[v][hop];
                            any = true;
                        }
                    if (!any) break;
                    env.step_unchecked(action);
                }
                auto out = open_out(so_trace);
                write_trace(out, env);
            }
            return 0;
        }

        const auto split_solvers = [](const std::string& text) {
            std::vector<SolverKind> kinds;
            std::stringstream ss(text);
            std::string token;
            while (std::getline(ss, token, ','))
                if (!token.empty()) kinds.push_back(solver_from_string(token));
            return kinds;
        };

        if (be->parsed()) {
            std::optional<PolicyNet> net;
            if (!be_checkpoint.empty()) net = PolicyNet::load(be_checkpoint);
            std::vector<BenchRow> rows;
            for (const std::string& manifest : be_manifests) {
                const Dataset ds = load_dataset(manifest);
                for (SolverKind solver : split_solvers(be_solvers)) {
                    SolverSetup setup;
                    setup.seed = be_seed;
                    setup.workers = be_workers;
                    setup.tabu.max_iterations = be_tabu_iters;
                    setup.aco.iterations = be_aco_iters;
                    setup.decode.strategy = decode_strategy_from_string(be_decode);
                    setup.decode.sample_width = be_ns;
                    setup.decode.beam_width = be_nb;
                    setup.mode = env_mode_from_string(be_mode);
                    std::string decode_label = "-";
                    if (solver == SolverKind::rl) {
                        if (!net)
                            throw std::runtime_error("rl solver requested without --checkpoint");
                        setup.net = &*net;
                        decode_label = be_decode;
                    }
                    const auto costs = solver_costs(ds, solver, setup);
                    rows.push_back(summarize(to_string(solver), ds.config.n_customers,
                                             solver == SolverKind::rl ? be_mode : "apriori",
                                             decode_label, ds.name, costs));
                }
            }
            auto out = open_out(be_out);
            write_bench_csv(out, rows);
            std::cout << be_out << '\n';
            return 0;
        }

        if (ti->parsed()) {
            std::optional<PolicyNet> net;
            if (!ti_checkpoint.empty()) net = PolicyNet::load(ti_checkpoint);
            std::vector<TimeRow> rows;
            for (const std::string& manifest : ti_manifests) {
                const Dataset ds = load_dataset(manifest);
                for (SolverKind solver : split_solvers(ti_solvers)) {
                    SolverSetup setup;
                    setup.seed = ti_seed;
                    setup.decode.strategy = decode_strategy_from_string(ti_decode);
                    setup.decode.sample_width = ti_ns;
                    setup.decode.beam_width = ti_nb;
                    if (solver == SolverKind::rl) {
                        if (!net)
                            throw std::runtime_error("rl solver requested without --checkpoint");
                        setup.net = &*net;
                    }
                    const auto seconds = solver_times(ds, solver, setup);
                    rows.push_back({solver == SolverKind::rl
                                        ? std::string("rl-") + ti_decode
                                        : to_string(solver),
                                    ds.config.n_customers, median(seconds),
                                    static_cast<int>(seconds.size())});
                }
            }
            auto out = open_out(ti_out);
            write_time_csv(out, rows);
            std::cout << ti_out << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace svrp
