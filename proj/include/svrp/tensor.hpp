#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "svrp/common.hpp"

namespace svrp {

// Dense row-major 64-bit array.
struct Array {
    std::vector<int> shape;
    std::vector<double> data;

    Array() = default;
    Array(int rows, int cols) : shape{rows, cols}, data(std::size_t(rows) * cols, 0.0) {}

    static Array zeros(int rows, int cols) { return Array(rows, cols); }
    static Array scalar(double v) {
        Array a(1, 1);
        a.data[0] = v;
        return a;
    }

    int rows() const { return shape[0]; }
    int cols() const { return shape[1]; }
    std::size_t size() const { return data.size(); }
    double& at(int r, int c) { return data[std::size_t(r) * cols() + c]; }
    double at(int r, int c) const { return data[std::size_t(r) * cols() + c]; }
};

// Uniform Xavier/Glorot initialization on +-sqrt(6 / (rows + cols)).
Array xavier_init(int rows, int cols, std::uint64_t seed);

// Named trainable parameters. Gradients live in separate buffers so batched
// workers can accumulate independently and reduce deterministically.
class ParamStore {
public:
    int add(const std::string& name, Array value);
    int count() const { return static_cast<int>(values_.size()); }
    const std::string& name(int id) const { return names_[id]; }
    Array& value(int id) { return values_[id]; }
    const Array& value(int id) const { return values_[id]; }
    int find(const std::string& name) const;  // -1 when absent

private:
    std::vector<std::string> names_;
    std::vector<Array> values_;
};

// One gradient array per parameter, shape-aligned.
using GradBuffer = std::vector<Array>;

GradBuffer make_grad_buffer(const ParamStore& params);
void zero_grads(GradBuffer& grads);
void accumulate_grads(GradBuffer& into, const GradBuffer& from);

using NodeId = std::int32_t;

// Reverse-mode tape. Records each op's output; backward walks the nodes in
// reverse creation order (reverse topological by construction). Outputs are
// checked for non-finite values as they are produced. clear() keeps node
// capacity so a per-worker tape allocates only on warm-up.
class Tape {
public:
    explicit Tape(const ParamStore* params) : params_(params) {}

    void clear() { used_ = 0; }
    int size() const { return used_; }

    NodeId input(const Array& value);
    NodeId input(Array&& value);
    NodeId param(int param_id);

    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId add(NodeId a, NodeId b);
    NodeId add_bias(NodeId a, NodeId bias);  // bias (R,1) broadcast over columns
    NodeId mul(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId tanh_op(NodeId a);
    NodeId log_op(NodeId a);
    NodeId affine(NodeId a, double scale, double shift);
    NodeId row_softmax(NodeId a);
    NodeId slice_rows(NodeId a, int r0, int r1);
    NodeId pick(NodeId a, int r, int c);
    NodeId sum(NodeId a);
    NodeId detach(NodeId a);
    // Train-mode inverted dropout; a no-op (returns `a`) when train is false.
    NodeId dropout(NodeId a, double p, RngStream& rng, bool train);

    // W x + b with b broadcast over columns.
    NodeId dense(NodeId w, NodeId x, NodeId b) { return add_bias(matmul(w, x), b); }
    // Width-1 convolution over the node axis: the same affine transform
    // applied to every feature column.
    NodeId conv1d_k1(NodeId w, NodeId features, NodeId b) { return dense(w, features, b); }
    // Scaled dot-product scores: (A^T B) / sqrt(d) with A, B (D x *).
    NodeId scaled_scores(NodeId a, NodeId b);

    struct LstmState {
        NodeId h = -1;
        NodeId c = -1;
    };
    // Standard gated recurrent cell with stacked input/forget/output gates
    // and tanh candidate. wx: (4D x F), uh: (4D x D), bias: (4D x 1).
    LstmState lstm_cell(NodeId wx, NodeId uh, NodeId bias, NodeId x, LstmState prev);

    const Array& value(NodeId id) const;
    double scalar(NodeId id) const;

    // Gradient of a scalar loss w.r.t. every parameter, accumulated into
    // `grads`. May be called repeatedly on one tape (per-node adjoints are
    // reset each call).
    void backward(NodeId loss, GradBuffer& grads);

private:
    enum class Op : std::uint8_t {
        input,
        param,
        matmul,
        transpose,
        add,
        add_bias,
        mul,
        relu,
        sigmoid,
        tanh_fn,
        log_fn,
        affine,
        row_softmax,
        slice_rows,
        pick,
        sum,
        detach,
        dropout
    };

    struct Node {
        Op op{};
        NodeId a = -1;
        NodeId b = -1;
        int param_id = -1;
        int i0 = 0;
        int i1 = 0;
        double s0 = 0.0;
        double s1 = 0.0;
        Array value;
        Array aux;   // dropout mask
        Array grad;
    };

    Node& fresh(Op op);
    NodeId finish(Node& node);
    const Array& in(NodeId id) const { return value(id); }
    void check_finite(const Array& a, const char* what) const;

    const ParamStore* params_;
    std::vector<Node> nodes_;
    int used_ = 0;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam moments per parameter.
class AdamState {
public:
    AdamState(const ParamStore& params, AdamConfig config = {});
    void step(ParamStore& params, const GradBuffer& grads);
    const AdamConfig& config() const { return config_; }
    int steps_taken() const { return t_; }

private:
    AdamConfig config_;
    int t_ = 0;
    std::vector<Array> m_;
    std::vector<Array> v_;
};

// Versioned text checkpoints: metadata key/value pairs plus every parameter
// by name. Values round-trip exactly.
void save_checkpoint(const ParamStore& params, const std::map<std::string, std::string>& meta,
                     const std::string& path);
std::map<std::string, std::string> load_checkpoint(ParamStore& params, const std::string& path);

}  // namespace svrp
