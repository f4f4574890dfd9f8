#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace dcf {

struct PriceBar {
    long long timestamp = 0;  // unix seconds, UTC
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;
};

// Timestamp-aligned panel. Row 0 is the base row: it carries the first close
// and a zero return (no predecessor); modeling only ever touches rows >= 1,
// and windowing never reaches back into row 0.
struct AlignedPanel {
    std::vector<std::string> assets;
    std::vector<long long> timestamps;
    Eigen::MatrixXd returns;  // N x d, row 0 zero
    Eigen::MatrixXd closes;   // N x d

    Eigen::Index rows() const { return returns.rows(); }
    int dim() const { return static_cast<int>(assets.size()); }

    // Strictly increasing timestamps, matching shapes, recomputable returns.
    // Uniform spacing is enforced only when require_uniform is set; aligned
    // real data may have gaps after intersection.
    void validate(bool require_uniform = true) const;
};

struct FeatureVector {
    double volatility = 0.0;   // population std of the lagged returns
    double drawdown = 0.0;     // max peak-to-trough of the implied price path
    double trend = 0.0;        // signed displacement over path length
    double path_length = 0.0;  // sum of |r|

    Eigen::Vector4d as_vector() const { return {volatility, drawdown, trend, path_length}; }
    static constexpr int kCount = 4;
};

// One asset's conditioning windows in columnar form. Row i holds the k lagged
// returns, the derived features, and the next-step target they condition.
struct WindowSet {
    Eigen::MatrixXd lags;      // n x k, oldest lag first
    Eigen::MatrixXd features;  // n x 4
    Eigen::VectorXd targets;   // n
    std::vector<long long> target_timestamps;
    std::vector<int> target_rows;  // row index into the source panel

    Eigen::Index size() const { return targets.size(); }
    int k() const { return static_cast<int>(lags.cols()); }
};

// CSV with header timestamp,open,high,low,close,volume (case-insensitive,
// any column order). Timestamps are unix seconds or ISO-8601, auto-detected.
// Bars come back sorted; duplicate timestamps keep the last occurrence.
std::vector<PriceBar> parse_ohlcv(const std::string& csv_text, const std::string& asset_id);

// Bucket aggregation: first open, last close, extreme high/low, summed
// volume; bucket timestamps snap to the bucket start. Empty buckets drop.
std::vector<PriceBar> resample(const std::vector<PriceBar>& bars, long long interval_seconds);

// r[t] = (P[t+1] - P[t]) / P[t]; length N-1.
Eigen::VectorXd compute_returns(const Eigen::VectorXd& closes);

AlignedPanel align_panel(const std::vector<std::string>& asset_ids,
                         const std::vector<std::vector<PriceBar>>& series);

FeatureVector build_features(const Eigen::VectorXd& lagged_returns);

// Chronological split into train/test window sets, one per asset. The cut is
// a single index; train targets all precede test targets.
std::pair<std::vector<WindowSet>, std::vector<WindowSet>> make_windows(const AlignedPanel& panel,
                                                                       int k,
                                                                       double split_fraction);

// All usable windows (no split).
std::vector<WindowSet> make_all_windows(const AlignedPanel& panel, int k);

// Panel cache: timestamp plus one return column per asset, loss-free doubles.
std::string panel_to_csv(const AlignedPanel& panel);
AlignedPanel panel_from_csv(const std::string& csv_text);

}  // namespace dcf
