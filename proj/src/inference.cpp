#include "svrp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svrp {

const char* to_string(DecodeStrategy s) {
    switch (s) {
        case DecodeStrategy::greedy: return "greedy";
        case DecodeStrategy::sampling: return "sampling";
        case DecodeStrategy::beam: return "beam";
    }
    return "?";
}

DecodeStrategy decode_strategy_from_string(const std::string& s) {
    if (s == "greedy") return DecodeStrategy::greedy;
    if (s == "sampling") return DecodeStrategy::sampling;
    if (s == "beam") return DecodeStrategy::beam;
    throw std::invalid_argument("unknown decode strategy: " + s);
}

std::vector<double> additive_mask_for(const Env& env, int vehicle,
                                      const std::vector<double>& claimed) {
    const int n = env.instance().n_nodes();
    std::vector<double> mask(n, 0.0);
    for (int node = 1; node < n; ++node) {
        if (!env.feasible(node, vehicle) ||
            env.state().remaining_demand[node] - claimed[node] <= 0.0)
            mask[node] = kMaskPenalty;
    }
    return mask;
}

void claim_demand(const Env& env, int vehicle, int target, std::vector<double>& claimed) {
    if (target == 0) return;
    const double outstanding = env.state().remaining_demand[target] - claimed[target];
    if (outstanding <= 0.0) return;
    if (env.instance().delivery_mode == DeliveryMode::full) {
        claimed[target] += outstanding;  // a full-mode visit always serves everything
    } else {
        claimed[target] += std::min(env.state().vehicle_load[vehicle], outstanding);
    }
}

namespace {

// Candidate node order for argmax ties: customers by index first, depot
// last, so exactly equal probabilities resolve to the lowest customer.
int argmax_node(const Array& probs, const std::vector<double>& mask) {
    const int n = probs.cols();
    int best = -1;
    double best_p = -1.0;
    for (int node = 1; node <= n; ++node) {
        const int candidate = node == n ? 0 : node;
        if (mask[candidate] != 0.0) continue;
        const double p = probs.at(0, candidate);
        if (p > best_p) {
            best_p = p;
            best = candidate;
        }
    }
    if (best < 0) throw std::logic_error("no feasible node survived masking");
    return best;
}

int sample_node(const Array& probs, const std::vector<double>& mask, RngStream& rng) {
    double r = rng.uniform01();
    int last_open = -1;
    const int n = probs.cols();
    for (int node = 0; node < n; ++node) {
        if (mask[node] != 0.0) continue;
        last_open = node;
        r -= probs.at(0, node);
        if (r <= 0.0) return node;
    }
    if (last_open < 0) throw std::logic_error("no feasible node survived masking");
    return last_open;
}

struct EpisodeRun {
    Solution solution;
    double cost = 0.0;
    double log_prob = 0.0;
};

// Runs one full episode with per-step fresh tapes; chooser picks a node
// given (vehicle, probability row, additive mask).
template <typename Chooser>
EpisodeRun run_episode(const PolicyNet& net, Env env, Chooser choose) {
    Tape tape(&net.params());
    const int k = env.instance().n_vehicles;
    Array h(net.config().embed_dim, k);
    Array c(net.config().embed_dim, k);
    double log_prob = 0.0;

    while (!env.is_terminal()) {
        tape.clear();
        Tape::LstmState prev{tape.input(h), tape.input(c)};
        const auto enc = net.encode_step(tape, env, prev, false, nullptr);

        Action action;
        action.targets.resize(k);
        std::vector<double> claimed(env.instance().n_nodes(), 0.0);
        for (int v = 0; v < k; ++v) {
            const auto mask = additive_mask_for(env, v, claimed);
            const NodeId dist = net.vehicle_distribution(tape, enc, v, mask);
            const Array& probs = tape.value(dist);
            const int node = choose(v, probs, mask);
            action.targets[v] = node;
            log_prob += std::log(probs.at(0, node));
            claim_demand(env, v, node, claimed);
        }
        env.step(action);
        h = tape.value(enc.next_lstm.h);
        c = tape.value(enc.next_lstm.c);
    }

    EpisodeRun run;
    run.solution = env.traced_solution();
    run.cost = env.state().accrued_cost;
    run.log_prob = log_prob;
    return run;
}

}  // namespace

DecodeResult greedy_decode(const PolicyNet& net, Env env) {
    env.reset();
    auto run = run_episode(net, std::move(env),
                           [](int, const Array& probs, const std::vector<double>& mask) {
                               return argmax_node(probs, mask);
                           });
    return {std::move(run.solution), run.cost, run.log_prob};
}

DecodeResult sample_decode(const PolicyNet& net, const Env& env, int n_s, std::uint64_t seed) {
    if (n_s < 1) throw std::invalid_argument("sample width must be at least 1");
    DecodeResult best;
    bool have = false;
    for (int episode = 0; episode < n_s; ++episode) {
        RngStream rng(derive_seed(seed, episode));
        Env fresh = env;
        fresh.reset();
        auto run = run_episode(net, std::move(fresh),
                               [&rng](int, const Array& probs, const std::vector<double>& mask) {
                                   return sample_node(probs, mask, rng);
                               });
        if (!have || run.cost < best.cost) {
            best = {std::move(run.solution), run.cost, run.log_prob};
            have = true;
        }
    }
    return best;
}

DecodeResult beam_decode(const PolicyNet& net, const Env& env, int n_b) {
    if (n_b < 1) throw std::invalid_argument("beam width must be at least 1");
    const int k = env.instance().n_vehicles;
    const int n = env.instance().n_nodes();
    const int d = net.config().embed_dim;

    struct Beam {
        Env env;
        Array h, c;
        double log_prob = 0.0;
    };
    struct Candidate {
        int beam = 0;
        Action action;
        double log_prob = 0.0;  // cumulative
        Array h, c;             // post-encode recurrent state of the parent
    };
    struct Completed {
        Env env;
        double log_prob = 0.0;
    };

    std::vector<Beam> frontier;
    {
        Env fresh = env;
        fresh.reset();
        frontier.push_back({std::move(fresh), Array(d, k), Array(d, k), 0.0});
    }
    std::vector<Completed> completed;
    Tape tape(&net.params());
    const int max_steps = env.instance().n_nodes() * 10;

    for (int step = 0; step < max_steps && !frontier.empty(); ++step) {
        std::vector<Candidate> candidates;
        for (std::size_t bi = 0; bi < frontier.size(); ++bi) {
            Beam& beam = frontier[bi];
            tape.clear();
            Tape::LstmState prev{tape.input(beam.h), tape.input(beam.c)};
            const auto enc = net.encode_step(tape, beam.env, prev, false, nullptr);
            const Array next_h = tape.value(enc.next_lstm.h);
            const Array next_c = tape.value(enc.next_lstm.c);

            // Prefix expansion over vehicles, keeping the n_b best partial
            // joint actions at each stage.
            struct Prefix {
                Action action;
                double log_prob = 0.0;
                std::vector<double> claimed;
            };
            std::vector<Prefix> prefixes{{Action{}, 0.0, std::vector<double>(n, 0.0)}};
            for (int v = 0; v < k; ++v) {
                std::vector<Prefix> grown;
                for (const Prefix& prefix : prefixes) {
                    const auto mask = additive_mask_for(beam.env, v, prefix.claimed);
                    const NodeId dist = net.vehicle_distribution(tape, enc, v, mask);
                    const Array& probs = tape.value(dist);
                    for (int node = 0; node < n; ++node) {
                        if (mask[node] != 0.0) continue;
                        const double p = probs.at(0, node);
                        if (p <= 0.0) continue;
                        Prefix ext = prefix;
                        ext.action.targets.push_back(node);
                        ext.log_prob += std::log(p);
                        claim_demand(beam.env, v, node, ext.claimed);
                        grown.push_back(std::move(ext));
                    }
                }
                std::stable_sort(grown.begin(), grown.end(),
                                 [](const Prefix& a, const Prefix& b) {
                                     return a.log_prob > b.log_prob;
                                 });
                if (static_cast<int>(grown.size()) > n_b) grown.resize(n_b);
                prefixes = std::move(grown);
            }

            for (Prefix& prefix : prefixes) {
                // A pure hold (every vehicle parked at the depot staying
                // there) repeats the state at lower probability; drop it.
                bool noop = true;
                for (int v = 0; v < k && noop; ++v)
                    noop = beam.env.state().vehicle_pos[v] == 0 && prefix.action.targets[v] == 0;
                if (noop && !beam.env.is_terminal()) continue;
                candidates.push_back({static_cast<int>(bi), std::move(prefix.action),
                                      beam.log_prob + prefix.log_prob, next_h, next_c});
            }
        }

        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) {
                             return a.log_prob > b.log_prob;
                         });
        if (static_cast<int>(candidates.size()) > n_b) candidates.resize(n_b);

        std::vector<Beam> next;
        for (Candidate& cand : candidates) {
            Beam child{frontier[cand.beam].env, std::move(cand.h), std::move(cand.c),
                       cand.log_prob};
            child.env.step(cand.action);
            if (child.env.is_terminal()) {
                completed.push_back({std::move(child.env), child.log_prob});
            } else {
                next.push_back(std::move(child));
            }
        }
        frontier = std::move(next);
    }

    if (completed.empty())
        throw std::runtime_error("beam search completed no trajectory within the step cap");
    const Completed* best = &completed[0];
    for (const Completed& c : completed) {
        if (c.env.state().accrued_cost < best->env.state().accrued_cost ||
            (c.env.state().accrued_cost == best->env.state().accrued_cost &&
             c.log_prob > best->log_prob))
            best = &c;
    }
    return {best->env.traced_solution(), best->env.state().accrued_cost, best->log_prob};
}

SolveResult solve(const PolicyNet& net, const ProblemInstance& instance,
                  const Realization& realization, EnvMode mode, const DecodeConfig& decode) {
    const auto run = [&](const Env& env) {
        switch (decode.strategy) {
            case DecodeStrategy::greedy: return greedy_decode(net, env);
            case DecodeStrategy::sampling:
                return sample_decode(net, env, decode.sample_width, decode.seed);
            case DecodeStrategy::beam: return beam_decode(net, env, decode.beam_width);
        }
        throw std::logic_error("unhandled decode strategy");
    };

    if (mode == EnvMode::apriori) {
        const Realization believed = believed_world(instance, realization);
        Env planning_env(instance, believed, EnvMode::apriori);
        DecodeResult plan = run(planning_env);
        const WalkResult walk = walk_routes(instance, realization, plan.solution.routes);
        SolveResult result;
        result.solution = std::move(plan.solution);
        result.solution.recourse_count = walk.recourse_count;
        result.solution.total_cost = walk.total_cost;
        result.cost = walk.total_cost;
        return result;
    }

    Env live(instance, realization, EnvMode::reopt);
    DecodeResult decoded = run(live);
    return {std::move(decoded.solution), decoded.cost};
}

}  // namespace svrp
