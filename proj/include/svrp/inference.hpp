#pragma once

#include <cstdint>
#include <string>

#include "svrp/policy.hpp"

namespace svrp {

enum class DecodeStrategy { greedy, sampling, beam };

const char* to_string(DecodeStrategy s);
DecodeStrategy decode_strategy_from_string(const std::string& s);

struct DecodeConfig {
    DecodeStrategy strategy = DecodeStrategy::beam;
    int sample_width = 16;  // n_s
    int beam_width = 3;     // n_b
    std::uint64_t seed = 0;
};

struct DecodeResult {
    Solution solution;
    double cost = 0.0;      // cost accrued in the decoded environment
    double log_prob = 0.0;  // joint log-probability of the returned trajectory
};

// Builds one joint action with within-step coordination: vehicles choose in
// index order and a customer whose outstanding demand is fully claimed by
// earlier vehicles is masked for the rest of the step, so joint visits only
// happen when one vehicle cannot carry the whole demand.
struct JointActionPick {
    Action action;
    double log_prob = 0.0;
};

// Additive mask for one vehicle given the environment mask and the demand
// already claimed this step.
std::vector<double> additive_mask_for(const Env& env, int vehicle,
                                      const std::vector<double>& claimed);
void claim_demand(const Env& env, int vehicle, int target, std::vector<double>& claimed);

// Argmax decode: each vehicle takes its highest-probability feasible node.
// Exact probability ties resolve to the lowest customer index; the depot
// wins only when strictly preferred or alone.
DecodeResult greedy_decode(const PolicyNet& net, Env env);

// Best of n_s independently sampled episodes (by decoded-environment cost).
DecodeResult sample_decode(const PolicyNet& net, const Env& env, int n_s, std::uint64_t seed);

// Joint-action beam search ranked by cumulative log-probability; among
// completed trajectories the lowest-cost one is returned. Pure depot no-op
// expansions are pruned (identical state at strictly lower probability).
DecodeResult beam_decode(const PolicyNet& net, const Env& env, int n_b);

struct SolveResult {
    Solution solution;
    double cost = 0.0;  // realized total cost
};

// apriori: decode against the believed world, then price the plan on the
// realization. reopt: decode live with realizations revealed en route.
SolveResult solve(const PolicyNet& net, const ProblemInstance& instance,
                  const Realization& realization, EnvMode mode, const DecodeConfig& decode);

}  // namespace svrp
