#include "dcf/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <sstream>

#include "dcf/error.hpp"

namespace dcf {

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(strip(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(strip(cur));
    return out;
}

long long parse_timestamp(const std::string& raw, std::size_t line_no) {
    if (raw.find('-') != std::string::npos || raw.find(':') != std::string::npos) {
        // ISO-8601: YYYY-MM-DD[ T]HH:MM[:SS][Z]; interpreted as UTC.
        std::tm tm{};
        int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
        int got = std::sscanf(raw.c_str(), "%d-%d-%d%*[T ]%d:%d:%d", &y, &mo, &d, &h, &mi, &se);
        if (got < 3)
            throw DataError("line " + std::to_string(line_no) + ": bad ISO-8601 timestamp '" +
                            raw + "'");
        tm.tm_year = y - 1900;
        tm.tm_mon = mo - 1;
        tm.tm_mday = d;
        tm.tm_hour = h;
        tm.tm_min = mi;
        tm.tm_sec = se;
        return static_cast<long long>(timegm(&tm));
    }
    long long v = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || p != raw.data() + raw.size())
        throw DataError("line " + std::to_string(line_no) + ": bad timestamp '" + raw + "'");
    return v;
}

double parse_double(const std::string& raw, std::size_t line_no, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " value '" + raw +
                        "'");
    }
}

std::string format_double(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

void AlignedPanel::validate(bool require_uniform) const {
    const Eigen::Index n = rows();
    if (static_cast<Eigen::Index>(timestamps.size()) != n || closes.rows() != n)
        throw DataError("panel: row count mismatch");
    if (returns.cols() != dim() || closes.cols() != dim())
        throw DataError("panel: column count mismatch");
    long long spacing = n > 1 ? timestamps[1] - timestamps[0] : 0;
    for (Eigen::Index t = 1; t < n; ++t) {
        if (timestamps[t] <= timestamps[t - 1])
            throw DataError("panel: timestamps not strictly increasing at row " +
                            std::to_string(t));
        if (require_uniform && timestamps[t] - timestamps[t - 1] != spacing)
            throw DataError("panel: non-uniform spacing at row " + std::to_string(t));
        for (int i = 0; i < dim(); ++i) {
            double expect = (closes(t, i) - closes(t - 1, i)) / closes(t - 1, i);
            if (std::fabs(returns(t, i) - expect) > 1e-12)
                throw DataError("panel: stored return disagrees with closes at row " +
                                std::to_string(t));
        }
    }
}

std::vector<PriceBar> parse_ohlcv(const std::string& csv_text, const std::string& asset_id) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw DataError(asset_id + ": empty CSV");

    auto header = split_csv_line(line);
    int idx_ts = -1, idx_o = -1, idx_h = -1, idx_l = -1, idx_c = -1, idx_v = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = lower(header[i]);
        if (name == "timestamp")
            idx_ts = static_cast<int>(i);
        else if (name == "open")
            idx_o = static_cast<int>(i);
        else if (name == "high")
            idx_h = static_cast<int>(i);
        else if (name == "low")
            idx_l = static_cast<int>(i);
        else if (name == "close")
            idx_c = static_cast<int>(i);
        else if (name == "volume")
            idx_v = static_cast<int>(i);
    }
    if (idx_ts < 0 || idx_o < 0 || idx_h < 0 || idx_l < 0 || idx_c < 0 || idx_v < 0)
        throw DataError(asset_id + ": header must name timestamp,open,high,low,close,volume");
    const std::size_t need = static_cast<std::size_t>(
        std::max({idx_ts, idx_o, idx_h, idx_l, idx_c, idx_v}) + 1);

    // Last occurrence of a timestamp wins; map keeps the output sorted.
    std::map<long long, PriceBar> bars;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() < need)
            throw DataError("line " + std::to_string(line_no) + ": expected at least " +
                            std::to_string(need) + " columns");
        PriceBar bar;
        bar.timestamp = parse_timestamp(fields[idx_ts], line_no);
        bar.open = parse_double(fields[idx_o], line_no, "open");
        bar.high = parse_double(fields[idx_h], line_no, "high");
        bar.low = parse_double(fields[idx_l], line_no, "low");
        bar.close = parse_double(fields[idx_c], line_no, "close");
        bar.volume = parse_double(fields[idx_v], line_no, "volume");
        if (!(bar.open > 0.0 && bar.high > 0.0 && bar.low > 0.0 && bar.close > 0.0))
            throw DataError("line " + std::to_string(line_no) + ": non-positive price");
        if (bar.low > std::min(bar.open, bar.close) || bar.high < std::max(bar.open, bar.close))
            throw DataError("line " + std::to_string(line_no) + ": OHLC range violated");
        bars[bar.timestamp] = bar;
    }
    std::vector<PriceBar> out;
    out.reserve(bars.size());
    for (auto& [ts, bar] : bars) out.push_back(bar);
    return out;
}

std::vector<PriceBar> resample(const std::vector<PriceBar>& bars, long long interval_seconds) {
    if (interval_seconds <= 0) throw DataError("resample: interval must be positive");
    if (bars.size() < 2) return bars;

    long long spacing = 0;
    for (std::size_t i = 1; i < bars.size(); ++i) {
        long long d = bars[i].timestamp - bars[i - 1].timestamp;
        if (d > 0 && (spacing == 0 || d < spacing)) spacing = d;
    }
    if (spacing > 0) {
        if (interval_seconds < spacing)
            throw DataError("resample: interval smaller than source spacing");
        if (interval_seconds % spacing != 0)
            throw DataError("resample: interval must be a multiple of the source spacing");
    }

    std::vector<PriceBar> out;
    for (const PriceBar& bar : bars) {
        long long bucket =
            (bar.timestamp / interval_seconds) * interval_seconds -
            (bar.timestamp < 0 && bar.timestamp % interval_seconds != 0 ? interval_seconds : 0);
        if (out.empty() || out.back().timestamp != bucket) {
            PriceBar agg = bar;
            agg.timestamp = bucket;
            out.push_back(agg);
        } else {
            PriceBar& agg = out.back();
            agg.high = std::max(agg.high, bar.high);
            agg.low = std::min(agg.low, bar.low);
            agg.close = bar.close;
            agg.volume += bar.volume;
        }
    }
    return out;
}

Eigen::VectorXd compute_returns(const Eigen::VectorXd& closes) {
    if (closes.size() < 2) throw DataError("compute_returns: need at least 2 closes");
    Eigen::VectorXd r(closes.size() - 1);
    for (Eigen::Index t = 0; t + 1 < closes.size(); ++t) {
        if (!(closes[t] > 0.0) || !(closes[t + 1] > 0.0))
            throw DataError("compute_returns: non-positive close at index " + std::to_string(t));
        r[t] = (closes[t + 1] - closes[t]) / closes[t];
    }
    return r;
}

AlignedPanel align_panel(const std::vector<std::string>& asset_ids,
                         const std::vector<std::vector<PriceBar>>& series) {
    if (asset_ids.size() < 2) throw DataError("align_panel: need at least 2 assets");
    if (asset_ids.size() != series.size())
        throw DataError("align_panel: asset id / series count mismatch");

    // Intersection of timestamp sets.
    std::map<long long, int> counts;
    for (const auto& bars : series)
        for (const PriceBar& bar : bars) ++counts[bar.timestamp];
    std::vector<long long> common;
    for (auto& [ts, c] : counts)
        if (c == static_cast<int>(series.size())) common.push_back(ts);
    if (common.empty()) throw DataError("align_panel: no common timestamps");

    const int d = static_cast<int>(series.size());
    const Eigen::Index n = static_cast<Eigen::Index>(common.size());
    AlignedPanel panel;
    panel.assets = asset_ids;
    panel.timestamps = common;
    panel.closes.resize(n, d);
    panel.returns.setZero(n, d);
    for (int i = 0; i < d; ++i) {
        std::map<long long, double> closes;
        for (const PriceBar& bar : series[i]) closes[bar.timestamp] = bar.close;
        for (Eigen::Index t = 0; t < n; ++t) panel.closes(t, i) = closes[common[t]];
        for (Eigen::Index t = 1; t < n; ++t)
            panel.returns(t, i) =
                (panel.closes(t, i) - panel.closes(t - 1, i)) / panel.closes(t - 1, i);
    }
    return panel;
}

FeatureVector build_features(const Eigen::VectorXd& lagged_returns) {
    const Eigen::Index k = lagged_returns.size();
    if (!lagged_returns.allFinite()) throw DataError("build_features: non-finite input");

    FeatureVector f;
    double mean = lagged_returns.mean();
    f.volatility = std::sqrt((lagged_returns.array() - mean).square().mean());
    f.path_length = lagged_returns.array().abs().sum();
    f.trend = lagged_returns.sum() / (f.path_length + 1e-12);

    // Walk the implied price path (base 1) and track the worst decline.
    double level = 1.0;
    double peak = 1.0;
    double dd = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        level *= 1.0 + lagged_returns[j];
        peak = std::max(peak, level);
        dd = std::max(dd, (peak - level) / peak);
    }
    f.drawdown = dd;
    return f;
}

std::vector<WindowSet> make_all_windows(const AlignedPanel& panel, int k) {
    const Eigen::Index n = panel.rows();
    if (n <= k + 1) throw DataError("make_windows: panel too short for window length");
    const Eigen::Index count = n - k - 1;
    std::vector<WindowSet> out;
    for (int i = 0; i < panel.dim(); ++i) {
        WindowSet w;
        w.lags.resize(count, k);
        w.features.resize(count, FeatureVector::kCount);
        w.targets.resize(count);
        w.target_timestamps.resize(count);
        w.target_rows.resize(count);
        for (Eigen::Index j = 0; j < count; ++j) {
            // Targets start at row k+1 so lag windows never touch the base row.
            Eigen::Index t = k + 1 + j;
            w.lags.row(j) = panel.returns.col(i).segment(t - k, k).transpose();
            w.features.row(j) = build_features(w.lags.row(j).transpose()).as_vector().transpose();
            w.targets[j] = panel.returns(t, i);
            w.target_timestamps[j] = panel.timestamps[t];
            w.target_rows[j] = static_cast<int>(t);
        }
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

WindowSet slice_window_set(const WindowSet& w, Eigen::Index begin, Eigen::Index len) {
    WindowSet out;
    out.lags = w.lags.middleRows(begin, len);
    out.features = w.features.middleRows(begin, len);
    out.targets = w.targets.segment(begin, len);
    out.target_timestamps.assign(w.target_timestamps.begin() + begin,
                                 w.target_timestamps.begin() + begin + len);
    out.target_rows.assign(w.target_rows.begin() + begin, w.target_rows.begin() + begin + len);
    return out;
}

}  // namespace

std::pair<std::vector<WindowSet>, std::vector<WindowSet>> make_windows(const AlignedPanel& panel,
                                                                       int k,
                                                                       double split_fraction) {
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw DataError("make_windows: split fraction must lie in (0,1)");
    auto all = make_all_windows(panel, k);
    const Eigen::Index count = all[0].size();
    Eigen::Index cut = static_cast<Eigen::Index>(split_fraction * static_cast<double>(count));
    if (cut < 1 || cut >= count) throw DataError("make_windows: split leaves an empty side");

    std::vector<WindowSet> train, test;
    for (const WindowSet& w : all) {
        train.push_back(slice_window_set(w, 0, cut));
        test.push_back(slice_window_set(w, cut, count - cut));
    }
    return {std::move(train), std::move(test)};
}

std::string panel_to_csv(const AlignedPanel& panel) {
    std::string out = "timestamp";
    for (const std::string& a : panel.assets) out += "," + a;
    out += "\n";
    for (Eigen::Index t = 0; t < panel.rows(); ++t) {
        out += std::to_string(panel.timestamps[t]);
        for (int i = 0; i < panel.dim(); ++i) out += "," + format_double(panel.returns(t, i));
        out += "\n";
    }
    return out;
}

AlignedPanel panel_from_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("panel CSV: empty file");
    auto header = split_csv_line(line);
    if (header.size() < 2 || lower(header[0]) != "timestamp")
        throw DataError("panel CSV: header must start with timestamp");

    AlignedPanel panel;
    panel.assets.assign(header.begin() + 1, header.end());
    const int d = panel.dim();
    std::vector<long long> ts;
    std::vector<double> vals;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("panel CSV line " + std::to_string(line_no) + ": column count");
        ts.push_back(parse_timestamp(fields[0], line_no));
        for (int i = 0; i < d; ++i)
            vals.push_back(parse_double(fields[1 + i], line_no, "return"));
    }
    const Eigen::Index n = static_cast<Eigen::Index>(ts.size());
    panel.timestamps = std::move(ts);
    panel.returns.resize(n, d);
    for (Eigen::Index t = 0; t < n; ++t)
        for (int i = 0; i < d; ++i) panel.returns(t, i) = vals[t * d + i];

    // Cached panels carry returns only; reconstruct normalized closes.
    panel.closes.resize(n, d);
    for (int i = 0; i < d; ++i) {
        double level = 100.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            level *= 1.0 + panel.returns(t, i);
            panel.closes(t, i) = level;
        }
    }
    return panel;
}

}  // namespace dcf
