#include "dcf/optim.hpp"

#include <cmath>

namespace dcf {

void AdamState::init(const std::vector<Tensor>& params) {
    m.clear();
    v.clear();
    for (const Tensor& p : params) {
        m.push_back(Tensor::Zero(p.rows(), p.cols()));
        v.push_back(Tensor::Zero(p.rows(), p.cols()));
    }
    step = 0;
    skipped = 0;
}

bool adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& config, double lr_override) {
    if (!state.initialized()) state.init(params);
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw Error("adam_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols())
            throw Error("adam_step: gradient shape mismatch at tensor " + std::to_string(i));
        if (!grads[i].allFinite()) {
            ++state.skipped;
            return false;
        }
    }

    const double lr = lr_override >= 0.0 ? lr_override : config.lr;
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
        state.v[i] =
            config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i].cwiseProduct(grads[i]);
        Tensor mhat = state.m[i] / bc1;
        Tensor vhat = state.v[i] / bc2;
        params[i].array() -=
            lr * mhat.array() / (vhat.array().sqrt() + config.eps);
        if (config.weight_decay != 0.0) params[i] *= (1.0 - lr * config.weight_decay);
    }
    return true;
}

double OneCycle::at(long long step, long long total_steps) const {
    if (total_steps <= 1) return peak;
    double pct = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    if (pct > 1.0) pct = 1.0;
    const double lo = peak / div_initial;
    const double end = peak / div_final;
    constexpr double kPi = 3.14159265358979323846;
    if (pct < warm_frac) {
        double t = pct / warm_frac;
        return lo + (peak - lo) * 0.5 * (1.0 - std::cos(kPi * t));
    }
    double t = (pct - warm_frac) / (1.0 - warm_frac);
    return end + (peak - end) * 0.5 * (1.0 + std::cos(kPi * t));
}

double grad_check(const ScalarFn& fn, const Eigen::VectorXd& point, double h) {
    Eigen::VectorXd analytic = fn.grad(point);
    if (analytic.size() != point.size()) throw Error("grad_check: gradient size mismatch");
    double worst = 0.0;
    Eigen::VectorXd x = point;
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        x[i] = point[i] + h;
        double fp = fn.value(x);
        x[i] = point[i] - h;
        double fm = fn.value(x);
        x[i] = point[i];
        double fd = (fp - fm) / (2.0 * h);
        double rel = std::fabs(analytic[i] - fd) / (std::fabs(fd) + 1e-12);
        if (rel > worst) worst = rel;
    }
    return worst;
}

}  // namespace dcf
