#include "dcf/tape.hpp"

#include <cmath>
#include <string>

#include "dcf/special.hpp"

namespace dcf {

namespace {

constexpr double kSmoothAbsEps = 1e-12;

bool bcast_ok(Eigen::Index a, Eigen::Index b) { return a == b || a == 1 || b == 1; }

// Materialize x at the full broadcast shape.
Tensor bcast_full(const Tensor& x, Eigen::Index rows, Eigen::Index cols) {
    if (x.rows() == rows && x.cols() == cols) return x;
    return x.replicate(rows / x.rows(), cols / x.cols());
}

// Sum g down to the given operand shape (inverse of broadcasting).
Tensor reduce_to(const Tensor& g, Eigen::Index rows, Eigen::Index cols) {
    if (g.rows() == rows && g.cols() == cols) return g;
    Tensor out;
    if (rows == 1 && cols == 1) {
        out = Tensor::Constant(1, 1, g.sum());
    } else if (rows == 1) {
        out = g.colwise().sum();
    } else {
        out = g.rowwise().sum();
    }
    return out;
}

double softplus_scalar(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Eigen::VectorXd ParamStore::flatten() const {
    Eigen::VectorXd out(total_size());
    Eigen::Index at = 0;
    for (const Tensor& t : values_) {
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j) out[at++] = t(i, j);
    }
    return out;
}

void ParamStore::unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() != total_size()) throw Error("ParamStore::unflatten: size mismatch");
    Eigen::Index at = 0;
    for (Tensor& t : values_) {
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = flat[at++];
    }
}

Eigen::Index ParamStore::total_size() const {
    Eigen::Index n = 0;
    for (const Tensor& t : values_) n += t.size();
    return n;
}

Tensor glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) t(i, j) = rng.uniform(-limit, limit);
    return t;
}

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::at(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) throw Error("tape: bad node id");
    return nodes_[id];
}

void Tape::fail(int node, const std::string& what) const {
    throw Error("tape: " + what + " at node " + std::to_string(node));
}

int Tape::input(Eigen::Index rows, Eigen::Index cols) {
    Node n;
    n.op = Op::Input;
    n.rows = rows;
    n.cols = cols;
    int id = push(std::move(n));
    input_nodes_.push_back(id);
    return id;
}

int Tape::param(int store_index, Eigen::Index rows, Eigen::Index cols) {
    Node n;
    n.op = Op::Param;
    n.pindex = store_index;
    n.rows = rows;
    n.cols = cols;
    return push(std::move(n));
}

int Tape::constant(Tensor value) {
    Node n;
    n.op = Op::Const;
    n.rows = value.rows();
    n.cols = value.cols();
    n.val = std::move(value);
    return push(std::move(n));
}

int Tape::matmul(int a, int b) {
    const Node& A = at(a);
    const Node& B = at(b);
    if (A.cols != B.rows) fail(static_cast<int>(nodes_.size()), "matmul inner dims disagree");
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.rows = A.rows;
    n.cols = B.cols;
    return push(std::move(n));
}

int Tape::matmul_ta(int a, int b) {
    const Node& A = at(a);
    const Node& B = at(b);
    if (A.rows != B.rows) fail(static_cast<int>(nodes_.size()), "matmul_ta inner dims disagree");
    Node n;
    n.op = Op::MatMulTA;
    n.a = a;
    n.b = b;
    n.rows = A.cols;
    n.cols = B.cols;
    return push(std::move(n));
}

int Tape::binary(Op op, int a, int b) {
    const Node& A = at(a);
    const Node& B = at(b);
    if (!bcast_ok(A.rows, B.rows) || !bcast_ok(A.cols, B.cols))
        fail(static_cast<int>(nodes_.size()), "incompatible shapes for elementwise op");
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.rows = std::max(A.rows, B.rows);
    n.cols = std::max(A.cols, B.cols);
    return push(std::move(n));
}

int Tape::add(int a, int b) { return binary(Op::Add, a, b); }
int Tape::sub(int a, int b) { return binary(Op::Sub, a, b); }
int Tape::mul(int a, int b) { return binary(Op::Mul, a, b); }

int Tape::unary(Op op, int a) {
    const Node& A = at(a);
    Node n;
    n.op = op;
    n.a = a;
    n.rows = A.rows;
    n.cols = A.cols;
    return push(std::move(n));
}

int Tape::affine(int a, double scale, double shift) {
    int id = unary(Op::Affine, a);
    nodes_[id].s0 = scale;
    nodes_[id].s1 = shift;
    return id;
}

int Tape::tanh(int a) { return unary(Op::Tanh, a); }
int Tape::sigmoid(int a) { return unary(Op::Sigmoid, a); }
int Tape::exp(int a) { return unary(Op::Exp, a); }
int Tape::log(int a) { return unary(Op::Log, a); }
int Tape::softplus(int a) { return unary(Op::Softplus, a); }
int Tape::square(int a) { return unary(Op::Square, a); }
int Tape::smooth_abs(int a) { return unary(Op::SmoothAbs, a); }
int Tape::log_gamma(int a) { return unary(Op::LogGamma, a); }

int Tape::softmax_t(int a, double temperature) {
    if (!(temperature > 0.0)) fail(static_cast<int>(nodes_.size()), "softmax temperature <= 0");
    int id = unary(Op::SoftmaxT, a);
    nodes_[id].s0 = temperature;
    return id;
}

int Tape::concat_rows(const std::vector<int>& parts) {
    if (parts.empty()) fail(static_cast<int>(nodes_.size()), "empty concat");
    Eigen::Index rows = 0;
    Eigen::Index cols = at(parts[0]).cols;
    for (int p : parts) {
        if (at(p).cols != cols) fail(static_cast<int>(nodes_.size()), "concat column mismatch");
        rows += at(p).rows;
    }
    Node n;
    n.op = Op::Concat;
    n.parts = parts;
    n.rows = rows;
    n.cols = cols;
    return push(std::move(n));
}

int Tape::slice_rows(int a, Eigen::Index row0, Eigen::Index nrows) {
    const Node& A = at(a);
    if (row0 < 0 || nrows <= 0 || row0 + nrows > A.rows)
        fail(static_cast<int>(nodes_.size()), "slice out of range");
    Node n;
    n.op = Op::SliceRows;
    n.a = a;
    n.i0 = row0;
    n.rows = nrows;
    n.cols = A.cols;
    return push(std::move(n));
}

int Tape::col_sum(int a) {
    const Node& A = at(a);
    Node n;
    n.op = Op::ColSum;
    n.a = a;
    n.rows = 1;
    n.cols = A.cols;
    return push(std::move(n));
}

int Tape::sum_all(int a) {
    Node n;
    n.op = Op::SumAll;
    n.a = a;
    n.rows = 1;
    n.cols = 1;
    return push(std::move(n));
}

int Tape::mean_all(int a) {
    Node n;
    n.op = Op::MeanAll;
    n.a = a;
    n.rows = 1;
    n.cols = 1;
    return push(std::move(n));
}

int Tape::col_max_detached(int a) {
    const Node& A = at(a);
    Node n;
    n.op = Op::ColMaxDetached;
    n.a = a;
    n.rows = 1;
    n.cols = A.cols;
    return push(std::move(n));
}

int Tape::log_sum_exp_rows(int a) {
    int m = col_max_detached(a);
    int shifted = sub(a, m);
    int s = col_sum(exp(shifted));
    return add(log(s), m);
}

void Tape::set_output(int node) {
    at(node);
    outputs_.push_back(node);
}

void Tape::forward(const std::vector<Tensor>& inputs, const ParamStore& params) {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(inputs.size());
    for (const Tensor& t : inputs) ptrs.push_back(&t);
    forward(std::span<const Tensor* const>(ptrs.data(), ptrs.size()), params);
}

void Tape::forward(std::span<const Tensor* const> inputs, const ParamStore& params) {
    if (inputs.size() != input_nodes_.size())
        throw Error("tape: expected " + std::to_string(input_nodes_.size()) + " inputs, got " +
                    std::to_string(inputs.size()));

    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Node& n = nodes_[input_nodes_[k]];
        if (inputs[k]->rows() != n.rows || inputs[k]->cols() != n.cols)
            fail(input_nodes_[k], "input shape mismatch");
        n.val = *inputs[k];
    }

    for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
        Node& n = nodes_[id];
        switch (n.op) {
            case Op::Input:
            case Op::Const:
                break;
            case Op::Param: {
                const Tensor& p = params.value(n.pindex);
                if (p.rows() != n.rows || p.cols() != n.cols)
                    fail(id, "parameter shape mismatch");
                n.val = p;
                break;
            }
            case Op::MatMul:
                n.val.noalias() = nodes_[n.a].val * nodes_[n.b].val;
                break;
            case Op::MatMulTA:
                n.val.noalias() = nodes_[n.a].val.transpose() * nodes_[n.b].val;
                break;
            case Op::Add:
            case Op::Sub:
            case Op::Mul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                if (A.rows() == B.rows() && A.cols() == B.cols()) {
                    if (n.op == Op::Add)
                        n.val = A + B;
                    else if (n.op == Op::Sub)
                        n.val = A - B;
                    else
                        n.val = A.cwiseProduct(B);
                } else {
                    Tensor Af = bcast_full(A, n.rows, n.cols);
                    Tensor Bf = bcast_full(B, n.rows, n.cols);
                    if (n.op == Op::Add)
                        n.val = Af + Bf;
                    else if (n.op == Op::Sub)
                        n.val = Af - Bf;
                    else
                        n.val = Af.cwiseProduct(Bf);
                }
                break;
            }
            case Op::Affine:
                n.val = (n.s0 * nodes_[n.a].val.array() + n.s1).matrix();
                break;
            case Op::Tanh:
                n.val = nodes_[n.a].val.array().tanh().matrix();
                break;
            case Op::Sigmoid:
                n.val = nodes_[n.a].val.unaryExpr([](double x) { return sigmoid_scalar(x); });
                break;
            case Op::Exp:
                n.val = nodes_[n.a].val.array().exp().matrix();
                break;
            case Op::Log:
                n.val = nodes_[n.a].val.array().log().matrix();
                break;
            case Op::Softplus:
                n.val = nodes_[n.a].val.unaryExpr([](double x) { return softplus_scalar(x); });
                break;
            case Op::Square:
                n.val = nodes_[n.a].val.array().square().matrix();
                break;
            case Op::SmoothAbs:
                n.val = nodes_[n.a].val.unaryExpr(
                    [](double x) { return std::sqrt(x * x + kSmoothAbsEps); });
                break;
            case Op::LogGamma:
                n.val = nodes_[n.a].val.unaryExpr([](double x) { return lgamma_lanczos(x); });
                break;
            case Op::SoftmaxT: {
                const Tensor& A = nodes_[n.a].val;
                n.val.resize(A.rows(), A.cols());
                for (Eigen::Index j = 0; j < A.cols(); ++j) {
                    double m = A.col(j).maxCoeff();
                    Eigen::ArrayXd e = ((A.col(j).array() - m) / n.s0).exp();
                    n.val.col(j) = (e / e.sum()).matrix();
                }
                break;
            }
            case Op::Concat: {
                n.val.resize(n.rows, n.cols);
                Eigen::Index r = 0;
                for (int p : n.parts) {
                    n.val.middleRows(r, nodes_[p].rows) = nodes_[p].val;
                    r += nodes_[p].rows;
                }
                break;
            }
            case Op::SliceRows:
                n.val = nodes_[n.a].val.middleRows(n.i0, n.rows);
                break;
            case Op::ColSum:
                n.val = nodes_[n.a].val.colwise().sum();
                break;
            case Op::SumAll:
                n.val = Tensor::Constant(1, 1, nodes_[n.a].val.sum());
                break;
            case Op::MeanAll:
                n.val = Tensor::Constant(1, 1, nodes_[n.a].val.mean());
                break;
            case Op::ColMaxDetached:
                n.val = nodes_[n.a].val.colwise().maxCoeff();
                break;
        }
        if (check_finite_ && n.op != Op::Input && n.op != Op::Const && !n.val.allFinite())
            fail(id, "non-finite intermediate");
        n.grad_set = false;
    }
    forward_done_ = true;
}

void Tape::backward() {
    backward({Tensor::Constant(1, 1, 1.0)});
}

void Tape::backward(const std::vector<Tensor>& output_grads) {
    if (!forward_done_) throw Error("tape: backward before forward");
    if (output_grads.size() != outputs_.size())
        throw Error("tape: output gradient count mismatch");

    for (Node& n : nodes_) n.grad_set = false;

    auto accum = [&](int id, const Tensor& g) {
        Node& n = nodes_[id];
        if (!n.grad_set) {
            n.grad = g;
            n.grad_set = true;
        } else {
            n.grad += g;
        }
    };

    for (std::size_t k = 0; k < outputs_.size(); ++k) {
        const Node& n = nodes_[outputs_[k]];
        if (output_grads[k].rows() != n.rows || output_grads[k].cols() != n.cols)
            throw Error("tape: output gradient shape mismatch");
        accum(outputs_[k], output_grads[k]);
    }

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.grad_set) continue;
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::Input:
            case Op::Param:
            case Op::Const:
            case Op::ColMaxDetached:
                break;
            case Op::MatMul:
                accum(n.a, g * nodes_[n.b].val.transpose());
                accum(n.b, nodes_[n.a].val.transpose() * g);
                break;
            case Op::MatMulTA:
                accum(n.a, nodes_[n.b].val * g.transpose());
                accum(n.b, nodes_[n.a].val * g);
                break;
            case Op::Add:
                accum(n.a, reduce_to(g, nodes_[n.a].rows, nodes_[n.a].cols));
                accum(n.b, reduce_to(g, nodes_[n.b].rows, nodes_[n.b].cols));
                break;
            case Op::Sub:
                accum(n.a, reduce_to(g, nodes_[n.a].rows, nodes_[n.a].cols));
                accum(n.b, reduce_to(-g, nodes_[n.b].rows, nodes_[n.b].cols));
                break;
            case Op::Mul: {
                Tensor Af = bcast_full(nodes_[n.a].val, n.rows, n.cols);
                Tensor Bf = bcast_full(nodes_[n.b].val, n.rows, n.cols);
                accum(n.a, reduce_to(g.cwiseProduct(Bf), nodes_[n.a].rows, nodes_[n.a].cols));
                accum(n.b, reduce_to(g.cwiseProduct(Af), nodes_[n.b].rows, nodes_[n.b].cols));
                break;
            }
            case Op::Affine:
                accum(n.a, n.s0 * g);
                break;
            case Op::Tanh:
                accum(n.a, g.cwiseProduct((1.0 - n.val.array().square()).matrix()));
                break;
            case Op::Sigmoid:
                accum(n.a, g.cwiseProduct((n.val.array() * (1.0 - n.val.array())).matrix()));
                break;
            case Op::Exp:
                accum(n.a, g.cwiseProduct(n.val));
                break;
            case Op::Log:
                accum(n.a, g.cwiseQuotient(nodes_[n.a].val));
                break;
            case Op::Softplus:
                accum(n.a, g.cwiseProduct(nodes_[n.a].val.unaryExpr(
                               [](double x) { return sigmoid_scalar(x); })));
                break;
            case Op::Square:
                accum(n.a, 2.0 * g.cwiseProduct(nodes_[n.a].val));
                break;
            case Op::SmoothAbs:
                accum(n.a, g.cwiseProduct(nodes_[n.a].val.cwiseQuotient(n.val)));
                break;
            case Op::LogGamma:
                accum(n.a, g.cwiseProduct(nodes_[n.a].val.unaryExpr(
                               [](double x) { return digamma_lanczos(x); })));
                break;
            case Op::SoftmaxT: {
                Tensor dx(n.rows, n.cols);
                for (Eigen::Index j = 0; j < n.cols; ++j) {
                    double dot = g.col(j).dot(n.val.col(j));
                    dx.col(j) =
                        (n.val.col(j).array() * (g.col(j).array() - dot) / n.s0).matrix();
                }
                accum(n.a, dx);
                break;
            }
            case Op::Concat: {
                Eigen::Index r = 0;
                for (int p : n.parts) {
                    accum(p, g.middleRows(r, nodes_[p].rows));
                    r += nodes_[p].rows;
                }
                break;
            }
            case Op::SliceRows: {
                Tensor expanded = Tensor::Zero(nodes_[n.a].rows, nodes_[n.a].cols);
                expanded.middleRows(n.i0, n.rows) = g;
                accum(n.a, expanded);
                break;
            }
            case Op::ColSum:
                accum(n.a, g.replicate(nodes_[n.a].rows, 1));
                break;
            case Op::SumAll:
                accum(n.a, Tensor::Constant(nodes_[n.a].rows, nodes_[n.a].cols, g(0, 0)));
                break;
            case Op::MeanAll:
                accum(n.a, Tensor::Constant(nodes_[n.a].rows, nodes_[n.a].cols,
                                            g(0, 0) / static_cast<double>(
                                                          nodes_[n.a].rows * nodes_[n.a].cols)));
                break;
        }
    }
}

const Tensor& Tape::value(int node) const { return at(node).val; }

bool Tape::has_gradient(int node) const { return at(node).grad_set; }

const Tensor& Tape::gradient(int node) const {
    const Node& n = at(node);
    if (!n.grad_set) throw Error("tape: gradient not set for node " + std::to_string(node));
    return n.grad;
}

std::vector<Tensor> Tape::param_gradients(const ParamStore& params) const {
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        grads.push_back(Tensor::Zero(params.value(static_cast<int>(i)).rows(),
                                     params.value(static_cast<int>(i)).cols()));
    for (const Node& n : nodes_) {
        if (n.op == Op::Param && n.grad_set) grads[n.pindex] += n.grad;
    }
    return grads;
}

}  // namespace dcf
