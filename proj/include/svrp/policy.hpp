#pragma once

#include <map>
#include <string>

#include "svrp/env.hpp"
#include "svrp/tensor.hpp"

namespace svrp {

inline constexpr int kEmbedDim = 128;
inline constexpr int kVehicleFeatureRows = 4;
inline constexpr double kMaskPenalty = -1e30;

// Feature rows per node: externals (3) + believed demand (1) + availability
// (12) + type one-hot (2) + believed cost row (n_customers + 1).
int customer_feature_rows(int n_customers);

struct PolicyConfig {
    int n_customers = 10;
    int embed_dim = kEmbedDim;
    double dropout_p = 0.1;
    std::uint64_t init_seed = 0;
};

// Actor-critic for one problem size: a shared per-node transform embeds the
// customer columns, a recurrent cell embeds each vehicle across decode
// steps, and scaled dot-product scores give per-vehicle node preferences.
// The critic maps the attention context through a two-layer head.
class PolicyNet {
public:
    explicit PolicyNet(PolicyConfig config);

    const PolicyConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Pure feature builders.
    static Array customer_features(const Env& env);
    static Array vehicle_features(const Env& env);

    Tape::LstmState initial_lstm(Tape& tape, int n_vehicles) const;

    struct StepEncoding {
        NodeId customer_emb = -1;  // D x (N+1)
        NodeId vehicle_emb = -1;   // D x K
        NodeId scores = -1;        // (N+1) x K
        Tape::LstmState next_lstm;
    };

    // One decode step: embeds the current state and produces scores. The
    // recurrent state is threaded by the caller (node ids when training on
    // a persistent tape, re-injected values at inference).
    StepEncoding encode_step(Tape& tape, const Env& env, Tape::LstmState prev, bool train,
                             RngStream* dropout_rng) const;

    // Masked node distribution for one vehicle: softmax over the score
    // column plus an additive mask (kMaskPenalty entries end up at exactly
    // zero probability). Returns a 1 x (N+1) probability row node.
    NodeId vehicle_distribution(Tape& tape, const StepEncoding& enc, int vehicle,
                                const std::vector<double>& additive_mask) const;

    // Scalar state value: plain column-softmax attention context over the
    // customer embeddings, averaged across vehicles, detached from the
    // actor, then dense(D) -> ReLU -> dense(1).
    NodeId critic_value(Tape& tape, const StepEncoding& enc) const;

    void save(const std::string& path,
              const std::map<std::string, std::string>& extra_meta = {}) const;
    static PolicyNet load(const std::string& path,
                          std::map<std::string, std::string>* meta_out = nullptr);

    // Parameter ids (exposed for targeted tests).
    int embed_w = -1, embed_b = -1;
    int lstm_wx = -1, lstm_uh = -1, lstm_b = -1;
    int proj_customer = -1, proj_vehicle = -1;
    int critic_w1 = -1, critic_b1 = -1, critic_w2 = -1, critic_b2 = -1;

    bool is_critic_param(int id) const {
        return id == critic_w1 || id == critic_b1 || id == critic_w2 || id == critic_b2;
    }

private:
    PolicyConfig config_;
    ParamStore params_;
};

}  // namespace svrp
