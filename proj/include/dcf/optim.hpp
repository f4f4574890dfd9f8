#pragma once

#include <functional>
#include <vector>

#include "dcf/tensor.hpp"

namespace dcf {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long long step = 0;
    long long skipped = 0;

    void init(const std::vector<Tensor>& params);
    bool initialized() const { return !m.empty(); }
};

// Decoupled-weight-decay Adam. Returns false (and counts the skip) when any
// gradient entry is non-finite; parameters and moments are then untouched.
// lr_override < 0 means "use config.lr".
bool adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& config, double lr_override = -1.0);

// One-cycle learning rate: cosine ramp from peak/div_initial up to peak over
// warm_frac of the run, then cosine decay to peak/div_final.
struct OneCycle {
    double peak = 1e-3;
    double div_initial = 25.0;
    double div_final = 1e4;
    double warm_frac = 0.3;

    double at(long long step, long long total_steps) const;
};

// Scalar function with an analytic gradient, as seen by grad_check.
struct ScalarFn {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
};

// Max over coordinates of |analytic - central difference| relative error,
// with the spec's 1e-12 floor in the denominator.
double grad_check(const ScalarFn& fn, const Eigen::VectorXd& point, double h = 1e-5);

}  // namespace dcf
