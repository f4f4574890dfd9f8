#pragma once

#include <span>
#include <vector>

#include "dcf/tensor.hpp"

namespace dcf {

// Reverse-mode autodiff over a statically declared graph. Batches are carried
// in columns: a node value is rows x batch, parameters are plain matrices.
//
// The op set is closed: matmul (plus the A^T B variant), broadcasting
// add/sub/mul, scalar affine maps, tanh, sigmoid, exp, log, softplus,
// square, smooth |x|, log-gamma, softmax with temperature, row concat/slice,
// column/total reductions, and a gradient-detached column max used to build
// exactly-stable log-sum-exp (its true total derivative is identically zero).
enum class Op {
    Input,
    Param,
    Const,
    MatMul,
    MatMulTA,  // A^T * B
    Add,
    Sub,
    Mul,
    Affine,  // s0 * x + s1
    Tanh,
    Sigmoid,
    Exp,
    Log,
    Softplus,
    Square,
    SmoothAbs,  // sqrt(x^2 + 1e-12)
    LogGamma,
    SoftmaxT,  // column-wise softmax of x / s0
    Concat,    // stack rows
    SliceRows,
    ColSum,   // 1 x B
    SumAll,   // 1 x 1
    MeanAll,  // 1 x 1
    ColMaxDetached,
};

class Tape {
public:
    // --- graph construction (shapes validated eagerly) ---
    int input(Eigen::Index rows, Eigen::Index cols);
    int param(int store_index, Eigen::Index rows, Eigen::Index cols);
    int constant(Tensor value);

    int matmul(int a, int b);
    int matmul_ta(int a, int b);
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int affine(int a, double scale, double shift);
    int scale(int a, double s) { return affine(a, s, 0.0); }
    int tanh(int a);
    int sigmoid(int a);
    int exp(int a);
    int log(int a);
    int softplus(int a);
    int square(int a);
    int smooth_abs(int a);
    int log_gamma(int a);
    int softmax_t(int a, double temperature);
    int concat_rows(const std::vector<int>& parts);
    int slice_rows(int a, Eigen::Index row0, Eigen::Index nrows);
    int col_sum(int a);
    int sum_all(int a);
    int mean_all(int a);
    int col_max_detached(int a);

    // Numerically stable column-wise log(sum_rows(exp(x))), built from the
    // primitives above; returns a 1 x B node.
    int log_sum_exp_rows(int a);

    void set_output(int node);
    const std::vector<int>& outputs() const { return outputs_; }

    // --- execution ---
    // Inputs are bound in declaration order. Saved values stay on the tape.
    void forward(std::span<const Tensor* const> inputs, const ParamStore& params);
    void forward(const std::vector<Tensor>& inputs, const ParamStore& params);

    // Seeds each output with the matching gradient and walks the graph in
    // reverse. Gradients accumulate across shared parents.
    void backward(const std::vector<Tensor>& output_grads);
    // Convenience for a single scalar output: seed 1.
    void backward();

    const Tensor& value(int node) const;
    const Tensor& gradient(int node) const;
    bool has_gradient(int node) const;

    // Gradient per parameter tensor, aligned with the store's indices; param
    // nodes never referenced get a zero matrix of the right shape.
    std::vector<Tensor> param_gradients(const ParamStore& params) const;

    Eigen::Index rows(int node) const { return nodes_.at(node).rows; }
    Eigen::Index cols(int node) const { return nodes_.at(node).cols; }
    std::size_t node_count() const { return nodes_.size(); }
    int input_count() const { return static_cast<int>(input_nodes_.size()); }

    // Forward rejects non-finite intermediates unless disabled.
    void set_check_finite(bool on) { check_finite_ = on; }

private:
    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        std::vector<int> parts;  // Concat only
        double s0 = 0.0;
        double s1 = 0.0;
        Eigen::Index i0 = 0;  // SliceRows offset
        int pindex = -1;      // Param only
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        Tensor val;
        Tensor grad;
        bool grad_set = false;
    };

    int push(Node n);
    int unary(Op op, int a);
    int binary(Op op, int a, int b);
    const Node& at(int id) const;
    [[noreturn]] void fail(int node, const std::string& what) const;

    std::vector<Node> nodes_;
    std::vector<int> input_nodes_;
    std::vector<int> outputs_;
    bool forward_done_ = false;
    bool check_finite_ = true;
};

}  // namespace dcf
