#include "svrp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace svrp {

Array xavier_init(int rows, int cols, std::uint64_t seed) {
    Array a(rows, cols);
    const double bound = std::sqrt(6.0 / (rows + cols));
    RngStream rng(seed);
    for (double& v : a.data) v = rng.uniform(-bound, bound);
    return a;
}

int ParamStore::add(const std::string& name, Array value) {
    if (find(name) >= 0) throw std::invalid_argument("duplicate parameter name: " + name);
    names_.push_back(name);
    values_.push_back(std::move(value));
    return static_cast<int>(values_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

GradBuffer make_grad_buffer(const ParamStore& params) {
    GradBuffer grads(params.count());
    for (int i = 0; i < params.count(); ++i)
        grads[i] = Array(params.value(i).rows(), params.value(i).cols());
    return grads;
}

void zero_grads(GradBuffer& grads) {
    for (Array& g : grads) std::fill(g.data.begin(), g.data.end(), 0.0);
}

void accumulate_grads(GradBuffer& into, const GradBuffer& from) {
    if (into.size() != from.size()) throw std::invalid_argument("gradient buffer mismatch");
    for (std::size_t i = 0; i < into.size(); ++i)
        for (std::size_t k = 0; k < into[i].data.size(); ++k)
            into[i].data[k] += from[i].data[k];
}

Tape::Node& Tape::fresh(Op op) {
    if (used_ == static_cast<int>(nodes_.size())) nodes_.emplace_back();
    Node& node = nodes_[used_];
    node.op = op;
    node.a = node.b = -1;
    node.param_id = -1;
    node.i0 = node.i1 = 0;
    node.s0 = node.s1 = 0.0;
    return node;
}

NodeId Tape::finish(Node& node) {
    if (node.op != Op::param) check_finite(node.value, "tape op output");
    return used_++;
}

void Tape::check_finite(const Array& a, const char* what) const {
    for (double v : a.data)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string(what) + " produced a non-finite value");
}

const Array& Tape::value(NodeId id) const {
    const Node& node = nodes_[id];
    if (node.op == Op::param) return params_->value(node.param_id);
    return node.value;
}

double Tape::scalar(NodeId id) const {
    const Array& v = value(id);
    if (v.size() != 1) throw std::invalid_argument("node is not a scalar");
    return v.data[0];
}

NodeId Tape::input(const Array& value) {
    Node& node = fresh(Op::input);
    node.value = value;
    return finish(node);
}

NodeId Tape::input(Array&& value) {
    Node& node = fresh(Op::input);
    node.value = std::move(value);
    return finish(node);
}

NodeId Tape::param(int param_id) {
    Node& node = fresh(Op::param);
    node.param_id = param_id;
    return finish(node);
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Array& A = in(a);
    const Array& B = in(b);
    if (A.cols() != B.rows()) throw std::invalid_argument("matmul shape mismatch");
    Node& node = fresh(Op::matmul);
    node.a = a;
    node.b = b;
    const int R = A.rows(), K = A.cols(), C = B.cols();
    node.value.shape = {R, C};
    node.value.data.assign(std::size_t(R) * C, 0.0);
    const double* pa = A.data.data();
    const double* pb = B.data.data();
    double* pc = node.value.data.data();
    for (int i = 0; i < R; ++i) {
        double* crow = pc + std::size_t(i) * C;
        for (int k = 0; k < K; ++k) {
            const double aik = pa[std::size_t(i) * K + k];
            const double* brow = pb + std::size_t(k) * C;
            for (int j = 0; j < C; ++j) crow[j] += aik * brow[j];
        }
    }
    return finish(node);
}

NodeId Tape::transpose(NodeId a) {
    const Array& A = in(a);
    Node& node = fresh(Op::transpose);
    node.a = a;
    node.value.shape = {A.cols(), A.rows()};
    node.value.data.resize(A.size());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            node.value.data[std::size_t(j) * A.rows() + i] = A.data[std::size_t(i) * A.cols() + j];
    return finish(node);
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Array& A = in(a);
    const Array& B = in(b);
    if (A.shape != B.shape) throw std::invalid_argument("add shape mismatch");
    Node& node = fresh(Op::add);
    node.a = a;
    node.b = b;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) node.value.data[i] = A.data[i] + B.data[i];
    return finish(node);
}

NodeId Tape::add_bias(NodeId a, NodeId bias) {
    const Array& A = in(a);
    const Array& B = in(bias);
    if (B.cols() != 1 || B.rows() != A.rows())
        throw std::invalid_argument("bias must be a column matching the input rows");
    Node& node = fresh(Op::add_bias);
    node.a = a;
    node.b = bias;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (int i = 0; i < A.rows(); ++i) {
        const double bi = B.data[i];
        for (int j = 0; j < A.cols(); ++j)
            node.value.data[std::size_t(i) * A.cols() + j] =
                A.data[std::size_t(i) * A.cols() + j] + bi;
    }
    return finish(node);
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Array& A = in(a);
    const Array& B = in(b);
    if (A.shape != B.shape) throw std::invalid_argument("mul shape mismatch");
    Node& node = fresh(Op::mul);
    node.a = a;
    node.b = b;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) node.value.data[i] = A.data[i] * B.data[i];
    return finish(node);
}

NodeId Tape::relu(NodeId a) {
    const Array& A = in(a);
    Node& node = fresh(Op::relu);
    node.a = a;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) node.value.data[i] = std::max(0.0, A.data[i]);
    return finish(node);
}

NodeId Tape::sigmoid(NodeId a) {
    const Array& A = in(a);
    Node& node = fresh(Op::sigmoid);
    node.a = a;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) node.value.data[i] = 1.0 / (1.0 + std::exp(-A.data[i]));
    return finish(node);
}

NodeId Tape::tanh_op(NodeId a) {
    const Array& A = in(a);
    Node& node = fresh(Op::tanh_fn);
    node.a = a;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) node.value.data[i] = std::tanh(A.data[i]);
    return finish(node);
}

NodeId Tape::log_op(NodeId a) {
    const Array& A = in(a);
    Node& node = fresh(Op::log_fn);
    node.a = a;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) node.value.data[i] = std::log(A.data[i]);
    return finish(node);
}

NodeId Tape::affine(NodeId a, double scale, double shift) {
    const Array& A = in(a);
    Node& node = fresh(Op::affine);
    node.a = a;
    node.s0 = scale;
    node.s1 = shift;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) node.value.data[i] = scale * A.data[i] + shift;
    return finish(node);
}

NodeId Tape::row_softmax(NodeId a) {
    const Array& A = in(a);
    Node& node = fresh(Op::row_softmax);
    node.a = a;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    const int R = A.rows(), C = A.cols();
    for (int i = 0; i < R; ++i) {
        const double* row = A.data.data() + std::size_t(i) * C;
        double* out = node.value.data.data() + std::size_t(i) * C;
        double m = row[0];
        for (int j = 1; j < C; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (int j = 0; j < C; ++j) sum += (out[j] = std::exp(row[j] - m));
        for (int j = 0; j < C; ++j) out[j] /= sum;
    }
    return finish(node);
}

NodeId Tape::slice_rows(NodeId a, int r0, int r1) {
    const Array& A = in(a);
    if (r0 < 0 || r1 > A.rows() || r0 >= r1) throw std::invalid_argument("bad row slice");
    Node& node = fresh(Op::slice_rows);
    node.a = a;
    node.i0 = r0;
    node.i1 = r1;
    node.value.shape = {r1 - r0, A.cols()};
    node.value.data.assign(A.data.begin() + std::size_t(r0) * A.cols(),
                           A.data.begin() + std::size_t(r1) * A.cols());
    return finish(node);
}

NodeId Tape::pick(NodeId a, int r, int c) {
    const Array& A = in(a);
    if (r < 0 || r >= A.rows() || c < 0 || c >= A.cols())
        throw std::invalid_argument("pick index out of range");
    Node& node = fresh(Op::pick);
    node.a = a;
    node.i0 = r;
    node.i1 = c;
    node.value = Array::scalar(A.at(r, c));
    return finish(node);
}

NodeId Tape::sum(NodeId a) {
    const Array& A = in(a);
    Node& node = fresh(Op::sum);
    node.a = a;
    double s = 0.0;
    for (double v : A.data) s += v;
    node.value = Array::scalar(s);
    return finish(node);
}

NodeId Tape::detach(NodeId a) {
    Node& node = fresh(Op::detach);
    node.a = a;
    node.value = in(a);
    return finish(node);
}

NodeId Tape::dropout(NodeId a, double p, RngStream& rng, bool train) {
    if (!train || p <= 0.0) return a;
    if (p >= 1.0) throw std::invalid_argument("dropout probability must be below 1");
    const Array& A = in(a);
    Node& node = fresh(Op::dropout);
    node.a = a;
    node.aux.shape = A.shape;
    node.aux.data.resize(A.size());
    const double keep = 1.0 - p;
    for (std::size_t i = 0; i < A.size(); ++i)
        node.aux.data[i] = rng.uniform01() < keep ? 1.0 / keep : 0.0;
    node.value.shape = A.shape;
    node.value.data.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i)
        node.value.data[i] = A.data[i] * node.aux.data[i];
    return finish(node);
}

NodeId Tape::scaled_scores(NodeId a, NodeId b) {
    const int d = in(a).rows();
    return affine(matmul(transpose(a), b), 1.0 / std::sqrt(double(d)), 0.0);
}

Tape::LstmState Tape::lstm_cell(NodeId wx, NodeId uh, NodeId bias, NodeId x, LstmState prev) {
    const int dim = in(uh).cols();
    const NodeId z = add_bias(add(matmul(wx, x), matmul(uh, prev.h)), bias);
    const NodeId gate_in = sigmoid(slice_rows(z, 0, dim));
    const NodeId gate_forget = sigmoid(slice_rows(z, dim, 2 * dim));
    const NodeId gate_out = sigmoid(slice_rows(z, 2 * dim, 3 * dim));
    const NodeId candidate = tanh_op(slice_rows(z, 3 * dim, 4 * dim));
    const NodeId cell = add(mul(gate_forget, prev.c), mul(gate_in, candidate));
    const NodeId hidden = mul(gate_out, tanh_op(cell));
    return {hidden, cell};
}

void Tape::backward(NodeId loss, GradBuffer& grads) {
    if (loss < 0 || loss >= used_) throw std::invalid_argument("unknown loss node");
    if (value(loss).size() != 1)
        throw std::invalid_argument("backward requires a scalar loss");
    if (static_cast<int>(grads.size()) != params_->count())
        throw std::invalid_argument("gradient buffer does not match the parameter store");

    for (int i = 0; i <= loss; ++i) {
        Node& node = nodes_[i];
        const Array& v = value(i);
        node.grad.shape = v.shape;
        node.grad.data.assign(v.size(), 0.0);
    }
    nodes_[loss].grad.data[0] = 1.0;

    for (int i = loss; i >= 0; --i) {
        Node& node = nodes_[i];
        const Array& g = node.grad;
        switch (node.op) {
            case Op::input:
                break;
            case Op::param:
                for (std::size_t k = 0; k < g.data.size(); ++k)
                    grads[node.param_id].data[k] += g.data[k];
                break;
            case Op::matmul: {
                const Array& A = value(node.a);
                const Array& B = value(node.b);
                Array& dA = nodes_[node.a].grad;
                Array& dB = nodes_[node.b].grad;
                const int R = A.rows(), K = A.cols(), C = B.cols();
                for (int r = 0; r < R; ++r) {
                    const double* grow = g.data.data() + std::size_t(r) * C;
                    for (int k = 0; k < K; ++k) {
                        const double* brow = B.data.data() + std::size_t(k) * C;
                        double acc = 0.0;
                        for (int j = 0; j < C; ++j) acc += grow[j] * brow[j];
                        dA.data[std::size_t(r) * K + k] += acc;
                    }
                }
                for (int k = 0; k < K; ++k) {
                    double* dbrow = dB.data.data() + std::size_t(k) * C;
                    for (int r = 0; r < R; ++r) {
                        const double ark = A.data[std::size_t(r) * K + k];
                        const double* grow = g.data.data() + std::size_t(r) * C;
                        for (int j = 0; j < C; ++j) dbrow[j] += ark * grow[j];
                    }
                }
                break;
            }
            case Op::transpose: {
                Array& dA = nodes_[node.a].grad;
                const int R = node.value.rows(), C = node.value.cols();
                for (int r = 0; r < R; ++r)
                    for (int c = 0; c < C; ++c)
                        dA.data[std::size_t(c) * R + r] += g.data[std::size_t(r) * C + c];
                break;
            }
            case Op::add:
                for (std::size_t k = 0; k < g.data.size(); ++k) {
                    nodes_[node.a].grad.data[k] += g.data[k];
                    nodes_[node.b].grad.data[k] += g.data[k];
                }
                break;
            case Op::add_bias: {
                Array& dA = nodes_[node.a].grad;
                Array& dBias = nodes_[node.b].grad;
                const int R = node.value.rows(), C = node.value.cols();
                for (int r = 0; r < R; ++r) {
                    double acc = 0.0;
                    for (int c = 0; c < C; ++c) {
                        const double gv = g.data[std::size_t(r) * C + c];
                        dA.data[std::size_t(r) * C + c] += gv;
                        acc += gv;
                    }
                    dBias.data[r] += acc;
                }
                break;
            }
            case Op::mul: {
                const Array& A = value(node.a);
                const Array& B = value(node.b);
                for (std::size_t k = 0; k < g.data.size(); ++k) {
                    nodes_[node.a].grad.data[k] += g.data[k] * B.data[k];
                    nodes_[node.b].grad.data[k] += g.data[k] * A.data[k];
                }
                break;
            }
            case Op::relu: {
                const Array& A = value(node.a);
                for (std::size_t k = 0; k < g.data.size(); ++k)
                    if (A.data[k] > 0.0) nodes_[node.a].grad.data[k] += g.data[k];
                break;
            }
            case Op::sigmoid:
                for (std::size_t k = 0; k < g.data.size(); ++k) {
                    const double y = node.value.data[k];
                    nodes_[node.a].grad.data[k] += g.data[k] * y * (1.0 - y);
                }
                break;
            case Op::tanh_fn:
                for (std::size_t k = 0; k < g.data.size(); ++k) {
                    const double y = node.value.data[k];
                    nodes_[node.a].grad.data[k] += g.data[k] * (1.0 - y * y);
                }
                break;
            case Op::log_fn: {
                const Array& A = value(node.a);
                for (std::size_t k = 0; k < g.data.size(); ++k)
                    nodes_[node.a].grad.data[k] += g.data[k] / A.data[k];
                break;
            }
            case Op::affine:
                for (std::size_t k = 0; k < g.data.size(); ++k)
                    nodes_[node.a].grad.data[k] += node.s0 * g.data[k];
                break;
            case Op::row_softmax: {
                Array& dA = nodes_[node.a].grad;
                const int R = node.value.rows(), C = node.value.cols();
                for (int r = 0; r < R; ++r) {
                    const double* y = node.value.data.data() + std::size_t(r) * C;
                    const double* gr = g.data.data() + std::size_t(r) * C;
                    double dot = 0.0;
                    for (int c = 0; c < C; ++c) dot += gr[c] * y[c];
                    double* da = dA.data.data() + std::size_t(r) * C;
                    for (int c = 0; c < C; ++c) da[c] += y[c] * (gr[c] - dot);
                }
                break;
            }
            case Op::slice_rows: {
                Array& dA = nodes_[node.a].grad;
                const int C = node.value.cols();
                for (int r = 0; r < node.value.rows(); ++r)
                    for (int c = 0; c < C; ++c)
                        dA.data[std::size_t(node.i0 + r) * C + c] +=
                            g.data[std::size_t(r) * C + c];
                break;
            }
            case Op::pick:
                nodes_[node.a].grad.at(node.i0, node.i1) += g.data[0];
                break;
            case Op::sum:
                for (std::size_t k = 0; k < nodes_[node.a].grad.data.size(); ++k)
                    nodes_[node.a].grad.data[k] += g.data[0];
                break;
            case Op::detach:
                break;
            case Op::dropout:
                for (std::size_t k = 0; k < g.data.size(); ++k)
                    nodes_[node.a].grad.data[k] += g.data[k] * node.aux.data[k];
                break;
        }
    }
}

AdamState::AdamState(const ParamStore& params, AdamConfig config) : config_(config) {
    m_.reserve(params.count());
    v_.reserve(params.count());
    for (int i = 0; i < params.count(); ++i) {
        m_.emplace_back(params.value(i).rows(), params.value(i).cols());
        v_.emplace_back(params.value(i).rows(), params.value(i).cols());
    }
}

void AdamState::step(ParamStore& params, const GradBuffer& grads) {
    if (static_cast<int>(grads.size()) != params.count())
        throw std::invalid_argument("gradient buffer does not match the parameter store");
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, t_);
    const double bc2 = 1.0 - std::pow(config_.beta2, t_);
    for (int i = 0; i < params.count(); ++i) {
        Array& p = params.value(i);
        const Array& g = grads[i];
        if (g.shape != p.shape) throw std::invalid_argument("gradient shape mismatch");
        for (std::size_t k = 0; k < p.data.size(); ++k) {
            const double gk = g.data[k];
            if (!std::isfinite(gk)) throw std::runtime_error("non-finite gradient in Adam step");
            double& m = m_[i].data[k];
            double& v = v_[i].data[k];
            m = config_.beta1 * m + (1.0 - config_.beta1) * gk;
            v = config_.beta2 * v + (1.0 - config_.beta2) * gk * gk;
            p.data[k] -= config_.lr * (m / bc1) / (std::sqrt(v / bc2) + config_.eps);
        }
    }
}

namespace {
std::string fmt17(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}
}  // namespace

void save_checkpoint(const ParamStore& params, const std::map<std::string, std::string>& meta,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "svrp-checkpoint v1\n[meta]\n";
    out << "entries " << meta.size() << '\n';
    for (const auto& [key, value] : meta) out << key << ' ' << value << '\n';
    out << "[params]\n";
    out << "count " << params.count() << '\n';
    for (int i = 0; i < params.count(); ++i) {
        const Array& a = params.value(i);
        out << "param " << params.name(i) << ' ' << a.rows() << ' ' << a.cols();
        for (double v : a.data) out << ' ' << fmt17(v);
        out << '\n';
    }
    out << "[end]\n";
}

std::map<std::string, std::string> load_checkpoint(ParamStore& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    int line_no = 0;
    const auto next = [&](const char* what) {
        if (!std::getline(in, line)) throw parse_error(path, line_no, std::string("missing ") + what);
        ++line_no;
        return std::istringstream(line);
    };

    {
        auto is = next("header");
        std::string tag, version;
        is >> tag >> version;
        if (tag != "svrp-checkpoint") throw parse_error(path, line_no, "not a checkpoint file");
        if (version != "v1")
            throw parse_error(path, line_no, "unsupported checkpoint version " + version);
    }
    if (next("[meta]").str() != "[meta]") throw parse_error(path, line_no, "expected [meta]");

    std::map<std::string, std::string> meta;
    int entries = 0;
    {
        auto is = next("meta entry count");
        std::string key;
        is >> key >> entries;
        if (key != "entries") throw parse_error(path, line_no, "expected 'entries'");
    }
    for (int i = 0; i < entries; ++i) {
        auto is = next("meta entry");
        std::string key, value;
        is >> key;
        std::getline(is, value);
        if (!value.empty() && value.front() == ' ') value.erase(value.begin());
        meta[key] = value;
    }
    if (next("[params]").str() != "[params]") throw parse_error(path, line_no, "expected [params]");
    int count = 0;
    {
        auto is = next("param count");
        std::string key;
        is >> key >> count;
        if (key != "count") throw parse_error(path, line_no, "expected 'count'");
    }
    for (int i = 0; i < count; ++i) {
        auto is = next("parameter row");
        std::string key, name;
        int rows = 0, cols = 0;
        is >> key >> name >> rows >> cols;
        if (key != "param") throw parse_error(path, line_no, "expected 'param'");
        const int id = params.find(name);
        if (id < 0) throw parse_error(path, line_no, "unknown parameter '" + name + "'");
        Array& a = params.value(id);
        if (a.rows() != rows || a.cols() != cols)
            throw parse_error(path, line_no, "shape mismatch for parameter '" + name + "'");
        for (double& v : a.data)
            if (!(is >> v)) throw parse_error(path, line_no, "truncated values for '" + name + "'");
    }
    if (next("[end]").str() != "[end]") throw parse_error(path, line_no, "expected [end]");
    return meta;
}

}  // namespace svrp
