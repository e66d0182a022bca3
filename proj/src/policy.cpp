#include "svrp/policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace svrp {

int customer_feature_rows(int n_customers) { return n_customers + 19; }

PolicyNet::PolicyNet(PolicyConfig config) : config_(config) {
    const int d = config_.embed_dim;
    const int rows = customer_feature_rows(config_.n_customers);
    const std::uint64_t s = config_.init_seed;

    embed_w = params_.add("actor/embed/w", xavier_init(d, rows, derive_seed(s, 10)));
    embed_b = params_.add("actor/embed/b", Array(d, 1));
    lstm_wx = params_.add("actor/lstm/wx",
                          xavier_init(4 * d, kVehicleFeatureRows, derive_seed(s, 11)));
    lstm_uh = params_.add("actor/lstm/uh", xavier_init(4 * d, d, derive_seed(s, 12)));
    lstm_b = params_.add("actor/lstm/b", Array(4 * d, 1));
    proj_customer = params_.add("actor/attention/customer_proj",
                                xavier_init(d, d, derive_seed(s, 13)));
    proj_vehicle = params_.add("actor/attention/vehicle_proj",
                               xavier_init(d, d, derive_seed(s, 14)));
    critic_w1 = params_.add("critic/dense1/w", xavier_init(d, d, derive_seed(s, 15)));
    critic_b1 = params_.add("critic/dense1/b", Array(d, 1));
    critic_w2 = params_.add("critic/dense2/w", xavier_init(1, d, derive_seed(s, 16)));
    critic_b2 = params_.add("critic/dense2/b", Array(1, 1));
}

Array PolicyNet::customer_features(const Env& env) {
    const ProblemInstance& inst = env.instance();
    const Realization& real = env.realization();
    const int n = inst.n_nodes();
    const double cost_norm = std::sqrt(2.0) / inst.speed;  // map diameter in hours
    const int rows = customer_feature_rows(inst.n_customers);

    Array f(rows, n);
    for (int node = 0; node < n; ++node) {
        int r = 0;
        const bool depot = node == 0;
        const auto& w = real.w_for(node);
        for (int k = 0; k < 3; ++k) f.at(r++, node) = depot ? 0.0 : w[k];
        f.at(r++, node) = depot ? 0.0 : env.believed_demand(node) / inst.capacity;
        for (int h = 0; h < kHoursPerDay; ++h)
            f.at(r++, node) = static_cast<double>(real.availability[node][h]);
        for (int t = 0; t < kNumCustomerTypes; ++t)
            f.at(r++, node) = (!depot && inst.type_of(node) == t) ? 1.0 : 0.0;
        for (int j = 0; j < n; ++j) f.at(r++, node) = env.believed_cost(node, j) / cost_norm;
    }
    return f;
}

Array PolicyNet::vehicle_features(const Env& env) {
    const ProblemInstance& inst = env.instance();
    const EnvState& s = env.state();
    Array f(kVehicleFeatureRows, inst.n_vehicles);
    for (int v = 0; v < inst.n_vehicles; ++v) {
        const auto& pos = inst.coords[s.vehicle_pos[v]];
        f.at(0, v) = s.vehicle_load[v] / inst.capacity;
        f.at(1, v) = pos[0];
        f.at(2, v) = pos[1];
        f.at(3, v) = s.clock / inst.tw.hours_per_day;
    }
    return f;
}

Tape::LstmState PolicyNet::initial_lstm(Tape& tape, int n_vehicles) const {
    return {tape.input(Array(config_.embed_dim, n_vehicles)),
            tape.input(Array(config_.embed_dim, n_vehicles))};
}

PolicyNet::StepEncoding PolicyNet::encode_step(Tape& tape, const Env& env, Tape::LstmState prev,
                                               bool train, RngStream* dropout_rng) const {
    if (env.instance().n_customers != config_.n_customers)
        throw std::invalid_argument("policy feature layout does not match the instance size");
    if (train && dropout_rng == nullptr)
        throw std::invalid_argument("training encode needs a dropout stream");

    StepEncoding enc;
    RngStream unused(0);
    RngStream& rng = dropout_rng ? *dropout_rng : unused;
    const NodeId features = tape.input(customer_features(env));
    NodeId emb = tape.conv1d_k1(tape.param(embed_w), features, tape.param(embed_b));
    emb = tape.dropout(emb, config_.dropout_p, rng, train);

    const NodeId vfeat = tape.input(vehicle_features(env));
    enc.next_lstm = tape.lstm_cell(tape.param(lstm_wx), tape.param(lstm_uh), tape.param(lstm_b),
                                   vfeat, prev);
    NodeId vemb = enc.next_lstm.h;
    vemb = tape.dropout(vemb, config_.dropout_p, rng, train);

    enc.customer_emb = emb;
    enc.vehicle_emb = vemb;
    enc.scores = tape.scaled_scores(tape.matmul(tape.param(proj_customer), emb),
                                    tape.matmul(tape.param(proj_vehicle), vemb));
    return enc;
}

NodeId PolicyNet::vehicle_distribution(Tape& tape, const StepEncoding& enc, int vehicle,
                                       const std::vector<double>& additive_mask) const {
    const Array& scores = tape.value(enc.scores);
    const int n = scores.rows();
    if (static_cast<int>(additive_mask.size()) != n)
        throw std::invalid_argument("mask length must match the node count");
    bool any_open = false;
    for (double m : additive_mask) any_open = any_open || m == 0.0;
    if (!any_open) throw std::invalid_argument("fully masked action column");

    Array mask_row(1, n);
    for (int i = 0; i < n; ++i) mask_row.at(0, i) = additive_mask[i];
    const NodeId column = tape.slice_rows(tape.transpose(enc.scores), vehicle, vehicle + 1);
    return tape.row_softmax(tape.add(column, tape.input(std::move(mask_row))));
}

NodeId PolicyNet::critic_value(Tape& tape, const StepEncoding& enc) const {
    const NodeId attention = tape.row_softmax(tape.transpose(enc.scores));  // K x (N+1)
    const NodeId context = tape.matmul(enc.customer_emb, tape.transpose(attention));  // D x K
    const int k = tape.value(context).cols();
    Array avg(k, 1);
    for (int i = 0; i < k; ++i) avg.at(i, 0) = 1.0 / k;
    const NodeId pooled = tape.detach(tape.matmul(context, tape.input(std::move(avg))));
    const NodeId hidden = tape.relu(
        tape.dense(tape.param(critic_w1), pooled, tape.param(critic_b1)));
    const NodeId out = tape.dense(tape.param(critic_w2), hidden, tape.param(critic_b2));
    return tape.pick(out, 0, 0);
}

void PolicyNet::save(const std::string& path,
                     const std::map<std::string, std::string>& extra_meta) const {
    std::map<std::string, std::string> meta = extra_meta;
    meta["n_customers"] = std::to_string(config_.n_customers);
    meta["embed_dim"] = std::to_string(config_.embed_dim);
    meta["dropout_p"] = std::to_string(config_.dropout_p);
    meta["feature_rows"] = std::to_string(customer_feature_rows(config_.n_customers));
    save_checkpoint(params_, meta, path);
}

PolicyNet PolicyNet::load(const std::string& path,
                          std::map<std::string, std::string>* meta_out) {
    // Peek the metadata with a scratch net of the right size: read once into
    // a throwaway store to learn the layout, then load for real.
    std::ifstream probe(path);
    if (!probe) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    int n_customers = -1;
    double dropout = 0.1;
    while (std::getline(probe, line)) {
        std::istringstream is(line);
        std::string key;
        is >> key;
        if (key == "n_customers") is >> n_customers;
        if (key == "dropout_p") is >> dropout;
        if (key == "[params]") break;
    }
    if (n_customers < 1)
        throw std::runtime_error(path + ": checkpoint lacks the n_customers descriptor");

    PolicyConfig config;
    config.n_customers = n_customers;
    config.dropout_p = dropout;
    PolicyNet net(config);
    auto meta = load_checkpoint(net.params_, path);
    if (meta_out) *meta_out = std::move(meta);
    return net;
}

}  // namespace svrp
