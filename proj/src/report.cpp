#include "dcf/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "dcf/error.hpp"
#include "dcf/model_io.hpp"

namespace dcf {

std::string format_csv_double(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

EvaluationArtifacts run_evaluation(const ModelBundle& bundle,
                                   const std::vector<WindowSet>& test_windows,
                                   const EvalConfig& config, std::uint64_t seed) {
    bundle.validate();
    EvaluationArtifacts art;
    art.assets = bundle.assets;
    const int d = bundle.dim();
    if (static_cast<int>(test_windows.size()) != d)
        throw DataError("run_evaluation: window set count mismatch");
    const Eigen::Index T = test_windows[0].size();
    if (T == 0) throw DataError("run_evaluation: empty test windows");

    // Per-step predictive mixtures, PIT values, observed targets.
    std::vector<std::vector<MixtureParams>> params(d);
    art.observed.resize(T, d);
    art.pit.resize(T, d);
    for (int i = 0; i < d; ++i) {
        params[i] = mdn_forward(bundle.marginals[i], test_windows[i]);
        for (Eigen::Index t = 0; t < T; ++t) {
            art.observed(t, i) = test_windows[i].targets[t];
            art.pit(t, i) = mixture_cdf(params[i][t], test_windows[i].targets[t]);
        }
    }
    art.timestamps = test_windows[0].target_timestamps;

    // One copula pool, subsampled per step, inverse-transformed per asset.
    const int m = config.samples_per_step;
    if (m < 2) throw DataError("run_evaluation: need at least 2 samples per step");
    const int pool = std::max(config.copula_pool, m);
    Rng pool_rng(config.seed ^ seed, "eval/copula");
    Eigen::MatrixXd u_pool = langevin_sample(bundle.copula, pool, pool_rng);
    Rng draw_rng(config.seed ^ seed, "eval/draws");
    art.samples.assign(T, Eigen::MatrixXd(m, d));
    for (Eigen::Index t = 0; t < T; ++t) {
        for (int j = 0; j < m; ++j) {
            Eigen::Index row = static_cast<Eigen::Index>(draw_rng.index(pool));
            for (int i = 0; i < d; ++i)
                art.samples[t](j, i) = mixture_inverse_cdf(params[i][t], u_pool(row, i));
        }
    }

    // Point metrics: sample-mean prediction, CRPS, seeded-draw tail recall.
    Rng tail_rng(config.seed ^ seed, "eval/tail");
    std::vector<int> tail_draw(T);
    for (Eigen::Index t = 0; t < T; ++t)
        tail_draw[t] = static_cast<int>(tail_rng.index(m));

    Eigen::MatrixXd pred_mean(T, d), pred_draw(T, d);
    Eigen::MatrixXd crps_vals(T, d);
    for (Eigen::Index t = 0; t < T; ++t) {
        pred_mean.row(t) = art.samples[t].colwise().mean();
        pred_draw.row(t) = art.samples[t].row(tail_draw[t]);
        for (int i = 0; i < d; ++i)
            crps_vals(t, i) = crps_sample(art.samples[t].col(i), art.observed(t, i));
    }
    for (int i = 0; i < d; ++i) {
        AssetMetricsRow row;
        row.asset = bundle.assets[i];
        row.rmse = rmse(art.observed.col(i), pred_mean.col(i));
        row.mae = mae(art.observed.col(i), pred_mean.col(i));
        row.crps = crps_vals.col(i).mean();
        row.tail = tail_accuracy(art.observed.col(i), pred_draw.col(i), config.tail_threshold);
        art.metrics.push_back(row);
    }
    {
        AssetMetricsRow pooled;
        pooled.asset = "POOLED";
        Eigen::VectorXd obs_flat = art.observed.reshaped();
        pooled.rmse = rmse(obs_flat, pred_mean.reshaped());
        pooled.mae = mae(obs_flat, pred_mean.reshaped());
        pooled.crps = crps_vals.mean();
        pooled.tail = tail_accuracy(obs_flat, pred_draw.reshaped(), config.tail_threshold);
        art.metrics.push_back(pooled);
    }

    // Calibration diagnostics.
    Eigen::VectorXd grid(101);
    for (int i = 0; i <= 100; ++i) grid[i] = i / 100.0;
    art.pit_curve.resize(grid.size(), 2 + d);
    Eigen::VectorXd pooled_pit = art.pit.reshaped();
    Eigen::MatrixXd pooled_curve = pit_cdf_curve(pooled_pit, grid);
    art.pit_curve.col(0) = pooled_curve.col(0);
    art.pit_curve.col(1) = pooled_curve.col(1);
    for (int i = 0; i < d; ++i)
        art.pit_curve.col(2 + i) = pit_cdf_curve(art.pit.col(i), grid).col(1);
    art.qq = qq_points(pooled_pit);

    for (double q : config.quantiles)
        art.correlations.push_back(corr_extremes(art.observed, art.samples, q));
    art.systemic = systemic_event_prob(art.observed, art.samples, config.joint_tail_q,
                                       config.side);
    art.black_swan = black_swan_map(art.observed, art.samples, art.timestamps);
    art.joint_tail = joint_tail_crps(art.observed, art.samples, config.joint_tail_q);
    return art;
}

void write_reports(const EvaluationArtifacts& art, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::string csv = "asset,rmse,mae,crps,tail_accuracy,tail_events\n";
        for (const AssetMetricsRow& row : art.metrics) {
            csv += row.asset + "," + format_csv_double(row.rmse) + "," +
                   format_csv_double(row.mae) + "," + format_csv_double(row.crps) + ",";
            csv += row.tail.applicable ? format_csv_double(row.tail.value) : std::string("na");
            csv += "," + std::to_string(row.tail.events) + "\n";
        }
        write_file(dir + "/metrics.csv", csv);
    }
    {
        std::string csv = "x,pooled";
        for (const std::string& a : art.assets) csv += "," + a;
        csv += "\n";
        for (Eigen::Index r = 0; r < art.pit_curve.rows(); ++r) {
            csv += format_csv_double(art.pit_curve(r, 0));
            for (Eigen::Index c = 1; c < art.pit_curve.cols(); ++c)
                csv += "," + format_csv_double(art.pit_curve(r, c));
            csv += "\n";
        }
        write_file(dir + "/pit_curve.csv", csv);
    }
    {
        std::string csv = "theoretical,empirical\n";
        for (Eigen::Index i = 0; i < art.qq.theoretical.size(); ++i)
            csv += format_csv_double(art.qq.theoretical[i]) + "," +
                   format_csv_double(art.qq.empirical[i]) + "\n";
        write_file(dir + "/qq.csv", csv);
    }
    {
        std::string csv = "q,n_timesteps,frobenius,mean_bias,sufficient\n";
        for (const CorrelationEntry& e : art.correlations) {
            csv += format_csv_double(e.q) + "," + std::to_string(e.n_timesteps) + ",";
            if (e.sufficient)
                csv += format_csv_double(e.frobenius) + "," + format_csv_double(e.mean_bias) +
                       ",1\n";
            else
                csv += "na,na,0\n";
        }
        write_file(dir + "/corr_extremes.csv", csv);
    }
    {
        std::string csv = "k,observed_count,mean_model_prob\n";
        for (const SystemicEntry& e : art.systemic.curve)
            csv += std::to_string(e.k) + "," + std::to_string(e.observed_count) + "," +
                   format_csv_double(e.mean_model_prob) + "\n";
        write_file(dir + "/systemic.csv", csv);
    }
    {
        std::string csv = "timestamp,magnitude,surprise,valid\n";
        for (const BlackSwanPoint& p : art.black_swan) {
            csv += std::to_string(p.timestamp) + "," + format_csv_double(p.magnitude) + ",";
            csv += p.valid ? format_csv_double(p.surprise) : std::string("na");
            csv += p.valid ? ",1\n" : ",0\n";
        }
        write_file(dir + "/black_swan.csv", csv);
    }
    {
        std::string csv = "value,n_timesteps,applicable\n";
        if (art.joint_tail.applicable)
            csv += format_csv_double(art.joint_tail.value) + "," +
                   std::to_string(art.joint_tail.n_timesteps) + ",1\n";
        else
            csv += "na,0,0\n";
        write_file(dir + "/joint_tail_crps.csv", csv);
    }
}

namespace {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  // NaN where non-numeric
    std::size_t rows = 0;
};

CsvTable parse_csv_numeric(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        if (first) {
            t.header = fields;
            t.columns.resize(fields.size());
            first = false;
            continue;
        }
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (i < fields.size()) {
                try {
                    v = std::stod(fields[i]);
                } catch (const std::exception&) {
                }
            }
            t.columns[i].push_back(v);
        }
        ++t.rows;
    }
    return t;
}

class SvgCanvas {
public:
    SvgCanvas(double xmin, double xmax, double ymin, double ymax, std::string title)
        : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), title_(std::move(title)) {
        if (xmax_ <= xmin_) xmax_ = xmin_ + 1.0;
        if (ymax_ <= ymin_) ymax_ = ymin_ + 1.0;
    }

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color) {
        std::string pts;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
            pts += format_csv_double(px(xs[i])) + "," + format_csv_double(py(ys[i])) + " ";
        }
        body_ += "<polyline fill=\"none\" stroke=\"" + color +
                 "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }

    void dots(const std::vector<double>& xs, const std::vector<double>& ys,
              const std::string& color) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
            body_ += "<circle cx=\"" + format_csv_double(px(xs[i])) + "\" cy=\"" +
                     format_csv_double(py(ys[i])) + "\" r=\"1.6\" fill=\"" + color + "\"/>\n";
        }
    }

    std::string finish() const {
        std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                          std::to_string(kW) + "\" height=\"" + std::to_string(kH) + "\">\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out += "<text x=\"" + std::to_string(kW / 2) +
               "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">" + title_ + "</text>\n";
        out += "<rect x=\"" + std::to_string(kM) + "\" y=\"" + std::to_string(kM) + "\" width=\"" +
               std::to_string(kW - 2 * kM) + "\" height=\"" + std::to_string(kH - 2 * kM) +
               "\" fill=\"none\" stroke=\"black\"/>\n";
        out += "<text x=\"" + std::to_string(kM) + "\" y=\"" + std::to_string(kH - 4) +
               "\" font-size=\"10\">[" + format_csv_double(xmin_) + ", " +
               format_csv_double(xmax_) + "] x [" + format_csv_double(ymin_) + ", " +
               format_csv_double(ymax_) + "]</text>\n";
        return out + body_ + "</svg>\n";
    }

private:
    static constexpr int kW = 480, kH = 360, kM = 28;
    double px(double x) const { return kM + (x - xmin_) / (xmax_ - xmin_) * (kW - 2 * kM); }
    double py(double y) const { return kH - kM - (y - ymin_) / (ymax_ - ymin_) * (kH - 2 * kM); }

    double xmin_, xmax_, ymin_, ymax_;
    std::string title_;
    std::string body_;
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

void finite_range(const std::vector<double>& v, double& lo, double& hi) {
    for (double x : v)
        if (std::isfinite(x)) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
}

std::string render_xy_chart(const CsvTable& t, const std::string& title, bool scatter,
                            std::size_t xcol = 0) {
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    finite_range(t.columns[xcol], xlo, xhi);
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        if (c != xcol) finite_range(t.columns[c], ylo, yhi);
    if (xlo > xhi) { xlo = 0; xhi = 1; }
    if (ylo > yhi) { ylo = 0; yhi = 1; }
    SvgCanvas canvas(xlo, xhi, ylo, yhi, title);
    int color = 0;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c == xcol) continue;
        if (scatter)
            canvas.dots(t.columns[xcol], t.columns[c], kPalette[color % 10]);
        else
            canvas.polyline(t.columns[xcol], t.columns[c], kPalette[color % 10]);
        ++color;
    }
    return canvas.finish();
}

}  // namespace

std::vector<std::string> render_report_svgs(const std::string& dir) {
    namespace fs = std::filesystem;
    struct Spec {
        const char* file;
        const char* title;
        bool scatter;
    };
    const Spec specs[] = {
        {"pit_curve.csv", "PIT cumulative distribution", false},
        {"qq.csv", "QQ (probit scale)", true},
        {"corr_extremes.csv", "Correlation error at extremes", false},
        {"systemic.csv", "Systemic event probability", false},
        {"black_swan.csv", "Magnitude vs surprise", true},
    };
    std::vector<std::string> written;
    for (const Spec& s : specs) {
        fs::path src = fs::path(dir) / s.file;
        if (!fs::exists(src)) continue;
        CsvTable t = parse_csv_numeric(read_file(src.string()));
        if (t.rows == 0 || t.columns.size() < 2) continue;
        // black_swan plots magnitude (col 1) vs surprise (col 2).
        std::string svg;
        if (std::string(s.file) == "black_swan.csv") {
            CsvTable sub;
            sub.header = {"magnitude", "surprise"};
            sub.columns = {t.columns[1], t.columns[2]};
            sub.rows = t.rows;
            svg = render_xy_chart(sub, s.title, s.scatter);
        } else {
            svg = render_xy_chart(t, s.title, s.scatter);
        }
        fs::path dst = fs::path(dir) / (fs::path(s.file).stem().string() + ".svg");
        write_file(dst.string(), svg);
        written.push_back(dst.string());
    }
    return written;
}

}  // namespace dcf
