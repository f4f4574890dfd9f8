#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dcf/tape.hpp"

namespace dcf {

// Noising times T_1 < ... < T_K of the marginal-preserving OU process
// z_s = a_s z_0 + sigma_s eps with a_s = exp(-T_s), sigma_s^2 = 1 - a_s^2.
struct DiffusionSchedule {
    Eigen::VectorXd times;

    static DiffusionSchedule geometric(int levels, double t_min = 0.05, double t_max = 7.0);

    int levels() const { return static_cast<int>(times.size()); }
    double decay(int s) const;  // a_s, s in 1..K
    double sigma(int s) const;  // sigma_s, s in 1..K

    // T_1 > 0, strictly increasing, and a_K < 1e-3 (near-independence).
    void validate() const;
};

struct CdcTrainConfig {
    double alpha = 1.0;  // cross-entropy weight
    int batch = 256;
    int steps = 4000;
    double lr = 1e-3;
    double lr_final_frac = 0.1;  // cosine decay floor
    int log_every = 200;
};

struct LangevinConfig {
    int inner_steps = 30;
    double step_size = 0.06;
    // Exponent on sigma_s^2 / sigma_K^2 in the per-level step size; 0 keeps
    // the step uniform across levels, which the copula-scale targets need.
    double step_power = 0.0;
    int refine_steps = 40;
    double refine_shrink = 16.0;  // final refine step = step_size / shrink
    int max_restarts = 3;
};

// Anything Langevin can draw from: a per-level score on the Gaussian scale.
class ScoreModel {
public:
    virtual ~ScoreModel() = default;
    virtual int dim() const = 0;
    virtual const DiffusionSchedule& schedule() const = 0;
    // z and the result are d x n (chains in columns). level runs 0..K, where
    // 0 is the data level and K the independent level.
    virtual Tensor score(int level, const Tensor& z) const = 0;
};

// Time classifier over K+1 classes {0, T_1, ..., T_K} on the Gaussianized
// copula scale; two tanh hidden layers.
class CdcModel {
public:
    int d = 0;
    int hidden = 256;
    DiffusionSchedule schedule;
    LangevinConfig langevin;
    ParamStore params;

    static CdcModel init(int d, const DiffusionSchedule& schedule, int hidden, Rng& rng);
};

// u in [0,1]^d rows -> clamp to [1e-6, 1-1e-6] -> componentwise probit.
Eigen::MatrixXd gaussianize(const Eigen::MatrixXd& u_rows);
Eigen::VectorXd gaussianize(const Eigen::VectorXd& u);
constexpr double kCopulaClampEps = 1e-6;

// One OU step to level s (1..K); optionally reports the drawn noise.
Eigen::MatrixXd ou_perturb(const Eigen::MatrixXd& z0_rows, int s, const DiffusionSchedule& sched,
                           Rng& rng, Eigen::MatrixXd* eps_out = nullptr);

// Log-probabilities over the K+1 classes, one row per input point.
// Differentiable w.r.t. the input through the tape.
Eigen::MatrixXd cdc_classify(const CdcModel& model, const Eigen::MatrixXd& z_rows);

// log c(u) = log P(t=0|z) - log P(t=T_K|z); priors cancel under the balanced
// class sampling used in training.
double copula_log_density(const CdcModel& model, const Eigen::VectorXd& u);
Eigen::VectorXd copula_log_density(const CdcModel& model, const Eigen::MatrixXd& u_rows);

// Handles to the classifier subgraph inside a tape.
struct CdcClassifierNodes {
    int w1, b1, w2, b2, w3, b3;  // param nodes
    int a1 = -1, a2 = -1, logits = -1;
};

// Appends the classifier forward pass for input node z (d x B).
CdcClassifierNodes append_cdc_classifier(Tape& tape, const CdcModel& model, int z);

// Appends score_level(z) = grad_z[logit_level - logit_K] - z as an explicit
// first-order graph (exact input gradient of the tanh MLP), so the same
// expression serves the sampler and differentiates w.r.t. parameters inside
// the training loss.
int append_cdc_score(Tape& tape, const CdcClassifierNodes& nodes, int z, int level, int levels);

// Score evaluation used by sampling; single implementation with the loss.
class CdcScore : public ScoreModel {
public:
    explicit CdcScore(const CdcModel& model) : model_(&model) {}
    int dim() const override { return model_->d; }
    const DiffusionSchedule& schedule() const override { return model_->schedule; }
    Tensor score(int level, const Tensor& z) const override;

private:
    const CdcModel* model_;
};

struct CdcLossValue {
    double total = 0.0;
    double cross_entropy = 0.0;
    double score_mse = 0.0;
};

// Balanced-class hybrid loss on a batch of Gaussianized points (rows).
// Classes, noise and perturbed states are drawn from rng; the returned tape
// (optional) allows gradient extraction against model.params.
CdcLossValue cdc_loss(const CdcModel& model, const Eigen::MatrixXd& z0_rows,
                      const CdcTrainConfig& config, Rng& rng,
                      std::vector<Tensor>* param_grads = nullptr);

struct CdcStepLog {
    int step = 0;
    double cross_entropy = 0.0;
    double score_mse = 0.0;
    double lr = 0.0;
};

struct CdcTrainResult {
    CdcModel model;
    std::vector<CdcStepLog> log;
};

CdcTrainResult train_cdc(const Eigen::MatrixXd& u_panel, const DiffusionSchedule& schedule,
                         const CdcTrainConfig& config, int hidden, std::uint64_t seed,
                         const std::string& stream_name = "cdc");

// Annealed Langevin from pure noise down the schedule, then a decaying-step
// refinement at the data level; returns n points in (0,1)^d rows.
Eigen::MatrixXd langevin_sample(const ScoreModel& model, int n, Rng& rng,
                                const LangevinConfig& config);
Eigen::MatrixXd langevin_sample(const CdcModel& model, int n, Rng& rng);

}  // namespace dcf
