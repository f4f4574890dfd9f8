#pragma once

#include <string>
#include <vector>

#include "dcf/cdc.hpp"
#include "dcf/ingest.hpp"
#include "dcf/mdn.hpp"

namespace dcf {

// One marginal model per asset plus the shared copula, in a fixed asset order.
struct ModelBundle {
    std::vector<std::string> assets;
    long long interval_seconds = 0;
    std::vector<MdnModel> marginals;
    CdcModel copula;

    int dim() const { return static_cast<int>(assets.size()); }
    int window_length() const { return marginals.empty() ? 0 : marginals.front().k; }

    // Marginal count matches assets and the copula dimension.
    void validate() const;
};

struct ForecastDistribution {
    long long timestamp = 0;
    Eigen::MatrixXd samples;  // m x d
    std::vector<MixtureParams> marginal_params;
};

// u[t][i] = F_i(y_t^i | window), one column per asset. Windows must be
// aligned: equal counts and identical target timestamps everywhere.
Eigen::MatrixXd pit_panel(const ModelBundle& bundle, const std::vector<WindowSet>& windows);

// Sklar assembly: sum of marginal log-densities plus the copula log-density
// at the PIT point.
double joint_log_density(const ModelBundle& bundle, const Eigen::VectorXd& y,
                         const std::vector<MixtureParams>& step_params);
double joint_log_density(const ModelBundle& bundle, const std::vector<WindowSet>& windows,
                         Eigen::Index row);

// Copula draw then componentwise inverse marginal CDF. Marginal law of each
// output column is the predictive mixture itself, whatever the copula does.
ForecastDistribution joint_sample(const ModelBundle& bundle,
                                  const std::vector<MixtureParams>& step_params,
                                  long long timestamp, int m, Rng& rng);
ForecastDistribution joint_sample(const ModelBundle& bundle,
                                  const std::vector<WindowSet>& windows, Eigen::Index row, int m,
                                  Rng& rng);

// Maps copula-scale rows through the per-asset inverse CDFs.
Eigen::MatrixXd inverse_pit(const std::vector<MixtureParams>& step_params,
                            const Eigen::MatrixXd& u_rows);

}  // namespace dcf
