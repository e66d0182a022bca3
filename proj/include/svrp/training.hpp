#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svrp/inference.hpp"
#include "svrp/policy.hpp"

namespace svrp {

// per_step: the advantage weights each action by its own step cost.
// cost_to_go: by the sum of the step costs from that step onward.
enum class AdvantageMode { per_step, cost_to_go };

const char* to_string(AdvantageMode m);
AdvantageMode advantage_mode_from_string(const std::string& s);

struct Trajectory {
    std::vector<Action> actions;
    std::vector<double> log_probs;   // joint log-probability per step
    std::vector<double> step_costs;  // realized cost per step
    std::vector<double> baselines;   // critic value per visited state
    double total_cost = 0.0;
};

// A rollout whose gradient path is still alive on the caller's tape.
struct EpisodeRecord {
    Trajectory trajectory;
    std::vector<NodeId> log_prob_nodes;  // per step
    std::vector<NodeId> critic_nodes;    // per step
};

// Samples one episode. In apriori mode the plan is decoded against the
// believed world and then re-priced on the realization for the per-step
// costs; in reopt mode costs are the live environment's. The tape must stay
// alive for any gradient computation over the record.
EpisodeRecord rollout_episode(const PolicyNet& net, const ProblemInstance& instance,
                              const Realization& realization, EnvMode env_mode,
                              std::uint64_t seed, bool train_mode, Tape& tape);

// Advantage weights (cost minus baseline) under the given mode.
std::vector<double> advantages(const Trajectory& trajectory, AdvantageMode mode);
// Critic regression targets under the same cost convention.
std::vector<double> critic_targets(const Trajectory& trajectory, AdvantageMode mode);

// Accumulates sum_t advantage_t * grad log pi(a_t) into `grads` (the
// baseline is a constant for the actor). `scale` divides for batch means.
void reinforce_grads(const PolicyNet& net, const EpisodeRecord& record, AdvantageMode mode,
                     Tape& tape, GradBuffer& grads, double scale = 1.0);

// Accumulates the gradient of sum_t (b_t - target_t)^2 and returns the loss.
double critic_update(const PolicyNet& net, const EpisodeRecord& record, AdvantageMode mode,
                     Tape& tape, GradBuffer& grads, double scale = 1.0);

struct InstanceFamily {
    GenerationConfig config;
    std::uint64_t family_seed = 0;
};

struct TrainConfig {
    int batch_size = 128;
    int iterations = 2000;  // desk default; the full-scale setting is 10000
    double lr = 1e-4;
    AdvantageMode advantage = AdvantageMode::per_step;
    EnvMode env_mode = EnvMode::apriori;
    std::uint64_t seed = 0;
    int n_workers = 0;  // 0: SVRP_WORKERS env var, else hardware threads
    int checkpoint_every = 500;
    int start_iteration = 0;  // resume offset for curve numbering
};

struct TrainResult {
    int iterations_done = 0;
    double first_mean_cost = 0.0;
    double last_mean_cost = 0.0;
};

// Full training loop: fresh realizations of the family every batch (fresh
// instances too in flexible-positions mode), REINFORCE + critic updates via
// Adam, a plain-text curve log and periodic checkpoints. Deterministic for
// a fixed seed and worker count.
TrainResult train(PolicyNet& net, const InstanceFamily& family, const TrainConfig& config,
                  const std::string& checkpoint_path, const std::string& curve_path);

int resolve_workers(int requested);

}  // namespace svrp
