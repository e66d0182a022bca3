#include "svrp/training.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <thread>

namespace svrp {

const char* to_string(AdvantageMode m) {
    return m == AdvantageMode::per_step ? "per-step" : "cost-to-go";
}

AdvantageMode advantage_mode_from_string(const std::string& s) {
    if (s == "per-step") return AdvantageMode::per_step;
    if (s == "cost-to-go") return AdvantageMode::cost_to_go;
    throw std::invalid_argument("unknown advantage mode: " + s);
}

EpisodeRecord rollout_episode(const PolicyNet& net, const ProblemInstance& instance,
                              const Realization& realization, EnvMode env_mode,
                              std::uint64_t seed, bool train_mode, Tape& tape) {
    RngStream action_rng(derive_seed(seed, 1));
    RngStream dropout_rng(derive_seed(seed, 2));
    tape.clear();

    const bool apriori = env_mode == EnvMode::apriori;
    const Realization believed = apriori ? believed_world(instance, realization) : Realization{};
    Env env(instance, apriori ? believed : realization,
            apriori ? EnvMode::apriori : EnvMode::reopt);

    EpisodeRecord record;
    const int k = instance.n_vehicles;
    Tape::LstmState lstm = net.initial_lstm(tape, k);

    std::vector<double> live_costs;
    while (!env.is_terminal()) {
        const auto enc = net.encode_step(tape, env, lstm, train_mode, &dropout_rng);
        lstm = enc.next_lstm;

        const NodeId critic = net.critic_value(tape, enc);
        record.critic_nodes.push_back(critic);
        record.trajectory.baselines.push_back(tape.scalar(critic));

        Action action;
        action.targets.resize(k);
        std::vector<double> claimed(instance.n_nodes(), 0.0);
        NodeId step_logp = -1;
        for (int v = 0; v < k; ++v) {
            const auto mask = additive_mask_for(env, v, claimed);
            const NodeId dist = net.vehicle_distribution(tape, enc, v, mask);
            const Array& probs = tape.value(dist);
            double r = action_rng.uniform01();
            int node = -1;
            for (int cand = 0; cand < probs.cols(); ++cand) {
                if (mask[cand] != 0.0) continue;
                node = cand;
                r -= probs.at(0, cand);
                if (r <= 0.0) break;
            }
            action.targets[v] = node;
            const NodeId lp = tape.log_op(tape.pick(dist, 0, node));
            step_logp = step_logp < 0 ? lp : tape.add(step_logp, lp);
            claim_demand(env, v, node, claimed);
        }
        record.log_prob_nodes.push_back(step_logp);
        record.trajectory.log_probs.push_back(tape.scalar(step_logp));
        record.trajectory.actions.push_back(action);
        live_costs.push_back(env.step(action));
    }

    if (apriori) {
        const WalkResult walk =
            walk_routes(instance, realization, env.traced_solution().routes);
        if (walk.step_costs.size() != record.trajectory.actions.size())
            throw std::logic_error("replay step count does not match the decoded plan");
        record.trajectory.step_costs = walk.step_costs;
    } else {
        record.trajectory.step_costs = std::move(live_costs);
    }
    record.trajectory.total_cost = 0.0;
    for (double c : record.trajectory.step_costs) record.trajectory.total_cost += c;
    return record;
}

std::vector<double> critic_targets(const Trajectory& trajectory, AdvantageMode mode) {
    std::vector<double> targets(trajectory.step_costs);
    if (mode == AdvantageMode::cost_to_go) {
        double acc = 0.0;
        for (std::size_t t = targets.size(); t-- > 0;) {
            acc += trajectory.step_costs[t];
            targets[t] = acc;
        }
    }
    return targets;
}

std::vector<double> advantages(const Trajectory& trajectory, AdvantageMode mode) {
    std::vector<double> adv = critic_targets(trajectory, mode);
    for (std::size_t t = 0; t < adv.size(); ++t) adv[t] -= trajectory.baselines[t];
    return adv;
}

namespace {

NodeId actor_loss_node(const EpisodeRecord& record, AdvantageMode mode, Tape& tape,
                       double scale) {
    const auto adv = advantages(record.trajectory, mode);
    NodeId loss = -1;
    for (std::size_t t = 0; t < record.log_prob_nodes.size(); ++t) {
        const NodeId term = tape.affine(record.log_prob_nodes[t], scale * adv[t], 0.0);
        loss = loss < 0 ? term : tape.add(loss, term);
    }
    return loss;
}

NodeId critic_loss_node(const EpisodeRecord& record, AdvantageMode mode, Tape& tape,
                        double scale) {
    const auto targets = critic_targets(record.trajectory, mode);
    NodeId loss = -1;
    for (std::size_t t = 0; t < record.critic_nodes.size(); ++t) {
        const NodeId diff = tape.affine(record.critic_nodes[t], 1.0, -targets[t]);
        const NodeId sq = tape.affine(tape.mul(diff, diff), scale, 0.0);
        loss = loss < 0 ? sq : tape.add(loss, sq);
    }
    return loss;
}

}  // namespace

void reinforce_grads(const PolicyNet& net, const EpisodeRecord& record, AdvantageMode mode,
                     Tape& tape, GradBuffer& grads, double scale) {
    (void)net;
    if (record.log_prob_nodes.empty()) return;
    tape.backward(actor_loss_node(record, mode, tape, scale), grads);
}

double critic_update(const PolicyNet& net, const EpisodeRecord& record, AdvantageMode mode,
                     Tape& tape, GradBuffer& grads, double scale) {
    (void)net;
    if (record.critic_nodes.empty()) return 0.0;
    const NodeId loss = critic_loss_node(record, mode, tape, scale);
    const double value = tape.scalar(loss) / scale;
    tape.backward(loss, grads);
    return value;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SVRP_WORKERS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

TrainResult train(PolicyNet& net, const InstanceFamily& family, const TrainConfig& config,
                  const std::string& checkpoint_path, const std::string& curve_path) {
    if (config.batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
    if (config.iterations < 0) throw std::invalid_argument("iterations must be nonnegative");

    std::ofstream curve(curve_path, config.start_iteration > 0 ? std::ios::app : std::ios::out);
    if (!curve) throw std::runtime_error("cannot open curve log: " + curve_path);
    if (config.start_iteration == 0) curve << "# iteration train_cost critic_loss\n";
    curve << std::setprecision(10);

    AdamConfig adam_config;
    adam_config.lr = config.lr;
    AdamState adam(net.params(), adam_config);

    const bool fixed_positions = family.config.positions_mode == PositionsMode::fixed;
    const ProblemInstance family_instance =
        fixed_positions ? generate_instance(family.config, family.family_seed)
                        : ProblemInstance{};

    const int workers = resolve_workers(config.n_workers);
    const int batch = config.batch_size;

    TrainResult result;
    GradBuffer total_grads = make_grad_buffer(net.params());

    const auto save_net = [&](int done) {
        std::map<std::string, std::string> meta;
        meta["iterations_done"] = std::to_string(config.start_iteration + done);
        meta["train_seed"] = std::to_string(config.seed);
        meta["advantage_mode"] = to_string(config.advantage);
        meta["env_mode"] = to_string(config.env_mode);
        net.save(checkpoint_path, meta);
    };

    for (int iter = 0; iter < config.iterations; ++iter) {
        const int global_iter = config.start_iteration + iter;
        std::vector<GradBuffer> worker_grads;
        worker_grads.reserve(workers);
        for (int w = 0; w < workers; ++w) worker_grads.push_back(make_grad_buffer(net.params()));
        std::vector<double> episode_cost(batch, 0.0);
        std::vector<double> episode_critic_loss(batch, 0.0);
        std::vector<std::exception_ptr> worker_error(workers);

        const auto run_worker = [&](int w) {
            try {
                Tape tape(&net.params());
                const int lo = static_cast<int>(std::int64_t(batch) * w / workers);
                const int hi = static_cast<int>(std::int64_t(batch) * (w + 1) / workers);
                for (int e = lo; e < hi; ++e) {
                    const std::uint64_t ep_seed = derive_seed(config.seed, global_iter, e);
                    const ProblemInstance local_instance =
                        fixed_positions
                            ? ProblemInstance{}
                            : generate_instance(family.config, derive_seed(family.family_seed,
                                                                           global_iter, e));
                    const ProblemInstance& instance =
                        fixed_positions ? family_instance : local_instance;
                    const Realization realization =
                        realize(instance, derive_seed(ep_seed, 3));

                    EpisodeRecord record = rollout_episode(net, instance, realization,
                                                           config.env_mode, ep_seed, true, tape);
                    episode_cost[e] = record.trajectory.total_cost;

                    const double scale = 1.0 / batch;
                    const NodeId actor = actor_loss_node(record, config.advantage, tape, scale);
                    const NodeId critic = critic_loss_node(record, config.advantage, tape, scale);
                    episode_critic_loss[e] = tape.scalar(critic) * batch;
                    NodeId loss = actor;
                    if (critic >= 0) loss = loss >= 0 ? tape.add(actor, critic) : critic;
                    if (loss >= 0) tape.backward(loss, worker_grads[w]);
                }
            } catch (...) {
                worker_error[w] = std::current_exception();
            }
        };

        if (workers == 1) {
            run_worker(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
            for (auto& t : pool) t.join();
        }
        for (int w = 0; w < workers; ++w)
            if (worker_error[w]) {
                try {
                    std::rethrow_exception(worker_error[w]);
                } catch (const std::exception& e) {
                    throw std::runtime_error("iteration " + std::to_string(global_iter) +
                                             ": " + e.what());
                }
            }

        zero_grads(total_grads);
        for (int w = 0; w < workers; ++w) accumulate_grads(total_grads, worker_grads[w]);
        try {
            adam.step(net.params(), total_grads);
        } catch (const std::exception& e) {
            throw std::runtime_error("iteration " + std::to_string(global_iter) + ": " +
                                     e.what());
        }

        double mean_cost = 0.0, mean_critic = 0.0;
        for (int e = 0; e < batch; ++e) {
            mean_cost += episode_cost[e];
            mean_critic += episode_critic_loss[e];
        }
        mean_cost /= batch;
        mean_critic /= batch;
        curve << global_iter << ' ' << mean_cost << ' ' << mean_critic << '\n';

        if (iter == 0) result.first_mean_cost = mean_cost;
        result.last_mean_cost = mean_cost;
        result.iterations_done = iter + 1;

        if (config.checkpoint_every > 0 && (iter + 1) % config.checkpoint_every == 0)
            save_net(iter + 1);
    }

    save_net(config.iterations);
    curve.flush();
    return result;
}

}  // namespace svrp
