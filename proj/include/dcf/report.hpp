#pragma once

#include <string>
#include <vector>

#include "dcf/joint.hpp"
#include "dcf/metrics.hpp"

namespace dcf {

struct AssetMetricsRow {
    std::string asset;
    double rmse = 0.0;
    double mae = 0.0;
    double crps = 0.0;
    TailAccuracy tail;
};

// Everything one evaluation pass produces; write_reports turns it into the
// per-figure CSV set.
struct EvaluationArtifacts {
    std::vector<std::string> assets;
    std::vector<long long> timestamps;
    Eigen::MatrixXd observed;                // T x d test targets
    std::vector<Eigen::MatrixXd> samples;    // T entries, m x d
    Eigen::MatrixXd pit;                     // T x d

    std::vector<AssetMetricsRow> metrics;    // per asset then pooled
    Eigen::MatrixXd pit_curve;               // grid x (1 + 1 + d): x, pooled, per asset
    QqPoints qq;                             // pooled, probit scale
    std::vector<CorrelationEntry> correlations;
    SystemicResult systemic;
    std::vector<BlackSwanPoint> black_swan;
    JointTailCrps joint_tail;
};

// Forecast samples for every test window: one shared copula pool, per-step
// subsampling, per-step inverse marginal transforms.
EvaluationArtifacts run_evaluation(const ModelBundle& bundle,
                                   const std::vector<WindowSet>& test_windows,
                                   const EvalConfig& config, std::uint64_t seed);

// Writes exactly metrics.csv, pit_curve.csv, qq.csv, corr_extremes.csv,
// systemic.csv, black_swan.csv, joint_tail_crps.csv into dir.
void write_reports(const EvaluationArtifacts& artifacts, const std::string& dir);

// Minimal SVG line/scatter renderings of the report CSVs found in dir.
// Returns the files written.
std::vector<std::string> render_report_svgs(const std::string& dir);

std::string format_csv_double(double v);

}  // namespace dcf
