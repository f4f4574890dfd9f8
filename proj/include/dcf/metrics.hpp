#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcf {

enum class TailSide { Lower, Upper, Both };

struct EvalConfig {
    double tail_threshold = 0.005;
    std::vector<double> quantiles{0.03, 0.05, 0.10};
    int samples_per_step = 100;
    TailSide side = TailSide::Both;
    double joint_tail_q = 0.05;
    // Copula draws are pooled once per evaluation and subsampled per step.
    int copula_pool = 20000;
    std::uint64_t seed = 0;
};

double rmse(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted);
double mae(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted);

// Energy-form sample estimator of the CRPS integral; O(m log m).
double crps_sample(const Eigen::VectorXd& samples, double y);

struct TailAccuracy {
    double value = 0.0;
    int events = 0;
    bool applicable = false;
};

// Recall of observed exceedances of tau among predicted exceedances.
TailAccuracy tail_accuracy(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted,
                           double tau);

// Empirical CDF of the PIT values on a grid.
Eigen::MatrixXd pit_cdf_curve(const Eigen::VectorXd& u, const Eigen::VectorXd& grid);

struct QqPoints {
    Eigen::VectorXd theoretical;
    Eigen::VectorXd empirical;
    int clamped = 0;  // inputs outside (0,1) clamped with a warning count
};

// Probit-scale ordered PIT values against standard normal quantiles.
QqPoints qq_points(const Eigen::VectorXd& u);

struct CorrelationEntry {
    double q = 0.0;
    bool sufficient = false;
    int n_timesteps = 0;
    double frobenius = 0.0;
    double mean_bias = 0.0;  // mean over off-diagonal entries of model - observed
};

// Correlation accuracy conditional on market-down days (cross-asset mean
// return below its empirical q-quantile).
CorrelationEntry corr_extremes(const Eigen::MatrixXd& observed,
                               const std::vector<Eigen::MatrixXd>& samples, double q);

struct SystemicEntry {
    int k = 0;
    int observed_count = 0;
    double mean_model_prob = 0.0;
};

struct SystemicResult {
    std::vector<SystemicEntry> curve;          // grouped by observed severity
    Eigen::MatrixXd per_timestep;              // T x (d+1), exact partition per row
    Eigen::VectorXi observed_k;                // T
};

// Probability the model assigns to "exactly k assets in their tails", grouped
// by the observed severity. Tail sets come from per-asset empirical
// q-quantiles of the observed panel, per side.
SystemicResult systemic_event_prob(const Eigen::MatrixXd& observed,
                                   const std::vector<Eigen::MatrixXd>& samples, double q,
                                   TailSide side = TailSide::Both);

struct BlackSwanPoint {
    long long timestamp = 0;
    double magnitude = 0.0;
    double surprise = 0.0;
    bool valid = false;
};

// Event magnitude (sum of |y|) against Mahalanobis surprise under the
// forecast sample mean/covariance (ridge 1e-10 before inversion).
std::vector<BlackSwanPoint> black_swan_map(const Eigen::MatrixXd& observed,
                                           const std::vector<Eigen::MatrixXd>& samples,
                                           const std::vector<long long>& timestamps);

struct JointTailCrps {
    double value = 0.0;
    int n_timesteps = 0;
    bool applicable = false;
};

// Pooled CRPS restricted to timesteps with more than two assets inside their
// two-sided q tails.
JointTailCrps joint_tail_crps(const Eigen::MatrixXd& observed,
                              const std::vector<Eigen::MatrixXd>& samples, double q = 0.05);

// --- shared small statistics ---

// Type-7 (linear interpolation) empirical quantile.
double empirical_quantile(Eigen::VectorXd values, double q);

// One-sample Kolmogorov-Smirnov distance against Uniform(0,1).
double ks_uniform(Eigen::VectorXd u);

Eigen::MatrixXd pearson_correlation(const Eigen::MatrixXd& data);

double spearman_rho(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace dcf
