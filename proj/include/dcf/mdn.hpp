#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dcf/ingest.hpp"
#include "dcf/mixture.hpp"
#include "dcf/tape.hpp"

namespace dcf {

struct MdnConfig {
    // Mixture head.
    double temperature = 0.5;   // applied to the weight logits
    double entropy_coef = 0.01;
    bool entropy_encourage = true;  // minimize NLL - coef * H(pi)
    double sigma_floor = 1e-6;
    double nu_cap = 100.0;

    // Encoder: unrolled LSTM over the lag window plus a feature MLP branch.
    int lstm_layers = 2;
    int hidden = 64;
    int feature_hidden = 32;

    // Optimization.
    double peak_lr = 3e-5;
    double lr_div_initial = 25.0;
    double lr_div_final = 1e4;
    double lr_warm_frac = 0.3;
    double weight_decay = 1e-5;
    int epochs = 30;
    int batch = 128;
    double validation_fraction = 0.10;
};

// Head layout: 9 weight logits, 9 locations, 9 raw scales, 3 raw dofs.
constexpr int kMdnHeadDim = 30;

class MdnModel {
public:
    MdnConfig config;
    int k = 14;  // window length
    ParamStore params;

    // Input/target standardization, fitted on the training split.
    double target_shift = 0.0;
    double target_scale = 1.0;
    Eigen::Vector4d feature_shift = Eigen::Vector4d::Zero();
    Eigen::Vector4d feature_scale = Eigen::Vector4d::Ones();

    static MdnModel init(const MdnConfig& config, int k, Rng& rng);
};

// Node handles into an MDN tape. Loss nodes are -1 on inference graphs.
struct MdnGraph {
    Tape tape;
    int in_lags = -1;     // k x B, normalized
    int in_features = -1; // 4 x B, normalized
    int in_targets = -1;  // 1 x B, normalized
    int pi = -1;          // 9 x B
    int log_pi = -1;      // 9 x B
    int mu = -1;          // 9 x B (normalized scale)
    int sigma = -1;       // 9 x B (normalized scale)
    int nu = -1;          // 3 x B
    int nll = -1;         // 1 x 1, mean over batch (normalized scale)
    int loss = -1;        // 1 x 1
};

// Builds the forward graph (and the NLL + entropy loss when with_loss).
// Parameter node indices follow MdnModel::init's store layout.
std::unique_ptr<MdnGraph> build_mdn_graph(const MdnConfig& config, int k, Eigen::Index batch,
                                          bool with_loss);

// Predictive mixture parameters, de-normalized to return units.
std::vector<MixtureParams> mdn_forward(const MdnModel& model, const Eigen::MatrixXd& lags,
                                       const Eigen::MatrixXd& features);
std::vector<MixtureParams> mdn_forward(const MdnModel& model, const WindowSet& windows);
MixtureParams mdn_forward(const MdnModel& model, const Eigen::VectorXd& lags);

// Mean over the batch of -log p(y|window) - coef * H(pi), in return units.
double mdn_loss(const MdnModel& model, const WindowSet& batch);

// Mean NLL (no entropy term) in return units; the calibration yardstick.
double mdn_nll(const MdnModel& model, const WindowSet& windows);

struct MdnEpochLog {
    int epoch = 0;
    double train_loss = 0.0;  // normalized scale
    double train_nll = 0.0;   // return units
    double val_nll = 0.0;     // return units
    double lr = 0.0;
    long long skipped_steps = 0;
};

struct MdnTrainResult {
    MdnModel model;
    std::vector<MdnEpochLog> log;
    int best_epoch = -1;
    double best_val_nll = 0.0;
};

// Adam + one-cycle on the NLL/entropy objective; returns the parameters with
// the best NLL on the trailing validation slice of the training windows.
MdnTrainResult train_mdn(const WindowSet& train_windows, const MdnConfig& config,
                         std::uint64_t seed, const std::string& stream_name);

// Component draws from the head's mixture (weights already tempered).
Eigen::VectorXd mdn_sample(const MixtureParams& params, int n, Rng& rng);

}  // namespace dcf
