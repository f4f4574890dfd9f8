// dcf: diffusion-copula forecasting pipeline driver.
//
// Subcommands: ingest, synth, train-marginal, train-copula, train, sample,
// evaluate, report. Exit codes: 0 ok, 1 usage, 2 data error, 3 training
// failure.

#include <atomic>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcf/error.hpp"
#include "dcf/model_io.hpp"
#include "dcf/report.hpp"
#include "dcf/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    int k = 14;
    double split_fraction = 0.8;
    long long interval_seconds = 600;
    std::vector<std::string> assets;

    dcf::MdnConfig mdn;
    dcf::CdcTrainConfig cdc;
    int cdc_hidden = 256;
    int schedule_levels = 10;
    double schedule_t_min = 0.05;
    double schedule_t_max = 7.0;
    dcf::LangevinConfig langevin;
    dcf::EvalConfig eval;
};

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig load_config(const std::string& path) {
    RunConfig c;
    if (path.empty()) return c;
    json j = json::parse(dcf::read_file(path));
    maybe(j, "seed", c.seed);
    maybe(j, "out_dir", c.out_dir);
    maybe(j, "k", c.k);
    maybe(j, "split_fraction", c.split_fraction);
    maybe(j, "interval_seconds", c.interval_seconds);
    maybe(j, "assets", c.assets);
    if (j.contains("mdn")) {
        const json& m = j.at("mdn");
        maybe(m, "temperature", c.mdn.temperature);
        maybe(m, "entropy_coef", c.mdn.entropy_coef);
        maybe(m, "entropy_encourage", c.mdn.entropy_encourage);
        maybe(m, "sigma_floor", c.mdn.sigma_floor);
        maybe(m, "nu_cap", c.mdn.nu_cap);
        maybe(m, "lstm_layers", c.mdn.lstm_layers);
        maybe(m, "hidden", c.mdn.hidden);
        maybe(m, "feature_hidden", c.mdn.feature_hidden);
        maybe(m, "peak_lr", c.mdn.peak_lr);
        maybe(m, "weight_decay", c.mdn.weight_decay);
        maybe(m, "epochs", c.mdn.epochs);
        maybe(m, "batch", c.mdn.batch);
        maybe(m, "validation_fraction", c.mdn.validation_fraction);
    }
    if (j.contains("cdc")) {
        const json& m = j.at("cdc");
        maybe(m, "alpha", c.cdc.alpha);
        maybe(m, "batch", c.cdc.batch);
        maybe(m, "steps", c.cdc.steps);
        maybe(m, "lr", c.cdc.lr);
        maybe(m, "lr_final_frac", c.cdc.lr_final_frac);
        maybe(m, "log_every", c.cdc.log_every);
        maybe(m, "hidden", c.cdc_hidden);
    }
    if (j.contains("schedule")) {
        const json& m = j.at("schedule");
        maybe(m, "levels", c.schedule_levels);
        maybe(m, "t_min", c.schedule_t_min);
        maybe(m, "t_max", c.schedule_t_max);
    }
    if (j.contains("langevin")) {
        const json& m = j.at("langevin");
        maybe(m, "inner_steps", c.langevin.inner_steps);
        maybe(m, "step_size", c.langevin.step_size);
        maybe(m, "step_power", c.langevin.step_power);
        maybe(m, "refine_steps", c.langevin.refine_steps);
        maybe(m, "refine_shrink", c.langevin.refine_shrink);
        maybe(m, "max_restarts", c.langevin.max_restarts);
    }
    if (j.contains("eval")) {
        const json& m = j.at("eval");
        maybe(m, "tail_threshold", c.eval.tail_threshold);
        maybe(m, "quantiles", c.eval.quantiles);
        maybe(m, "samples_per_step", c.eval.samples_per_step);
        maybe(m, "joint_tail_q", c.eval.joint_tail_q);
        maybe(m, "copula_pool", c.eval.copula_pool);
        if (m.contains("side")) {
            std::string s = m.at("side").get<std::string>();
            c.eval.side = s == "lower"   ? dcf::TailSide::Lower
                          : s == "upper" ? dcf::TailSide::Upper
                                         : dcf::TailSide::Both;
        }
    }
    return c;
}

dcf::AlignedPanel load_panel(const std::string& path) {
    return dcf::panel_from_csv(dcf::read_file(path));
}

std::string mdn_log_csv(const dcf::MdnTrainResult& r) {
    std::string csv = "epoch,train_loss,train_nll,val_nll,lr,skipped_steps\n";
    for (const dcf::MdnEpochLog& e : r.log)
        csv += std::to_string(e.epoch) + "," + dcf::format_csv_double(e.train_loss) + "," +
               dcf::format_csv_double(e.train_nll) + "," + dcf::format_csv_double(e.val_nll) +
               "," + dcf::format_csv_double(e.lr) + "," + std::to_string(e.skipped_steps) + "\n";
    return csv;
}

std::string cdc_log_csv(const dcf::CdcTrainResult& r) {
    std::string csv = "step,cross_entropy,score_mse,lr\n";
    for (const dcf::CdcStepLog& e : r.log)
        csv += std::to_string(e.step) + "," + dcf::format_csv_double(e.cross_entropy) + "," +
               dcf::format_csv_double(e.score_mse) + "," + dcf::format_csv_double(e.lr) + "\n";
    return csv;
}

// Per-asset marginal training; assets are independent, so they may run on
// separate threads with their own named streams without perturbing results.
std::vector<dcf::MdnTrainResult> train_marginals(const std::vector<dcf::WindowSet>& train,
                                                 const std::vector<std::string>& assets,
                                                 const dcf::MdnConfig& config,
                                                 std::uint64_t seed) {
    std::vector<dcf::MdnTrainResult> results(assets.size());
    std::vector<std::exception_ptr> errors(assets.size());
    unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                       static_cast<unsigned>(assets.size())));
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= assets.size()) return;
                try {
                    results[i] =
                        dcf::train_mdn(train[i], config, seed, "marginal/" + assets[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

dcf::DiffusionSchedule make_schedule(const RunConfig& c) {
    return dcf::DiffusionSchedule::geometric(c.schedule_levels, c.schedule_t_min,
                                             c.schedule_t_max);
}

int run_ingest(const RunConfig& c, const std::vector<std::string>& csv_paths) {
    if (csv_paths.empty()) throw dcf::DataError("ingest: no input CSVs given");
    std::vector<std::string> names = c.assets;
    if (names.empty())
        for (const std::string& p : csv_paths) names.push_back(fs::path(p).stem().string());
    if (names.size() != csv_paths.size())
        throw dcf::DataError("ingest: asset name count does not match CSV count");

    std::vector<std::vector<dcf::PriceBar>> series;
    for (std::size_t i = 0; i < csv_paths.size(); ++i) {
        auto bars = dcf::parse_ohlcv(dcf::read_file(csv_paths[i]), names[i]);
        series.push_back(dcf::resample(bars, c.interval_seconds));
    }

    dcf::AlignedPanel panel;
    if (series.size() == 1) {
        // Single-asset panel, no alignment needed.
        const auto& bars = series[0];
        if (bars.size() < 2) throw dcf::DataError("ingest: not enough bars");
        panel.assets = names;
        panel.closes.resize(bars.size(), 1);
        panel.returns.setZero(bars.size(), 1);
        for (std::size_t t = 0; t < bars.size(); ++t) {
            panel.timestamps.push_back(bars[t].timestamp);
            panel.closes(static_cast<Eigen::Index>(t), 0) = bars[t].close;
            if (t > 0)
                panel.returns(static_cast<Eigen::Index>(t), 0) =
                    (bars[t].close - bars[t - 1].close) / bars[t - 1].close;
        }
    } else {
        panel = dcf::align_panel(names, series);
    }
    panel.validate(false);

    fs::create_directories(c.out_dir);
    dcf::write_file(c.out_dir + "/panel.csv", dcf::panel_to_csv(panel));
    json manifest;
    manifest["assets"] = panel.assets;
    manifest["interval_seconds"] = c.interval_seconds;
    manifest["rows"] = panel.rows();
    manifest["sources"] = csv_paths;
    dcf::write_file(c.out_dir + "/ingest_manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << c.out_dir << "/panel.csv (" << panel.rows() << " rows, "
              << panel.dim() << " assets)\n";
    return dcf::kExitOk;
}

int run_synth(const RunConfig& c, const std::string& kind, int d, int n, double rho,
              double theta, double marginal_sd, double marginal_nu) {
    fs::create_directories(c.out_dir);
    json truth;
    truth["kind"] = kind;
    truth["seed"] = c.seed;

    if (kind == "gaussian-copula") {
        std::vector<dcf::MixtureParams> marginals(d,
                                                  dcf::scaled_student_t_marginal(marginal_sd,
                                                                                 marginal_nu));
        auto result = dcf::gen_gaussian_copula(rho, marginals, n, c.seed);
        dcf::write_file(c.out_dir + "/panel.csv", dcf::panel_to_csv(result.panel));
        truth["rho"] = rho;
        truth["marginal"] = {{"family", "student-t"}, {"sd", marginal_sd}, {"nu", marginal_nu}};
        std::string u_csv;
        for (const std::string& a : result.panel.assets)
            u_csv += (u_csv.empty() ? "" : ",") + a;
        u_csv += "\n";
        for (Eigen::Index t = 0; t < result.true_u.rows(); ++t) {
            for (Eigen::Index i = 0; i < result.true_u.cols(); ++i)
                u_csv += (i ? "," : "") + dcf::format_csv_double(result.true_u(t, i));
            u_csv += "\n";
        }
        dcf::write_file(c.out_dir + "/true_u.csv", u_csv);
    } else if (kind == "clayton") {
        Eigen::MatrixXd u = dcf::gen_clayton(theta, d, n, c.seed);
        std::string csv;
        for (int i = 0; i < d; ++i) csv += (i ? "," : "") + ("u" + std::to_string(i + 1));
        csv += "\n";
        for (Eigen::Index t = 0; t < u.rows(); ++t) {
            for (Eigen::Index i = 0; i < u.cols(); ++i)
                csv += (i ? "," : "") + dcf::format_csv_double(u(t, i));
            csv += "\n";
        }
        dcf::write_file(c.out_dir + "/u_panel.csv", csv);
        truth["theta"] = theta;
        truth["lower_tail_dependence"] = std::pow(2.0, -1.0 / theta);
    } else if (kind == "ar-vol") {
        dcf::ArVolSpec spec;
        spec.rho = rho;
        auto result = dcf::gen_ar_vol_panel(d, n, c.seed, spec);
        dcf::write_file(c.out_dir + "/panel.csv", dcf::panel_to_csv(result.panel));
        truth["spec"] = {{"omega", spec.omega}, {"arch", spec.arch},   {"persist", spec.persist},
                         {"nu", spec.nu},       {"rho", spec.rho}};
        double nll = -result.cond_log_density.mean();
        truth["mean_conditional_nll"] = nll;
    } else {
        throw dcf::DataError("synth: unknown kind '" + kind + "'");
    }
    dcf::write_file(c.out_dir + "/truth.json", truth.dump(2) + "\n");
    std::cout << "wrote synthetic " << kind << " data to " << c.out_dir << "\n";
    return dcf::kExitOk;
}

std::pair<std::vector<dcf::WindowSet>, std::vector<dcf::WindowSet>> panel_windows(
    const RunConfig& c, const dcf::AlignedPanel& panel) {
    return dcf::make_windows(panel, c.k, c.split_fraction);
}

int run_train_marginal(const RunConfig& c, const std::string& panel_path) {
    dcf::AlignedPanel panel = load_panel(panel_path);
    auto [train, test] = panel_windows(c, panel);
    auto results = train_marginals(train, panel.assets, c.mdn, c.seed);
    fs::create_directories(c.out_dir);
    for (std::size_t i = 0; i < results.size(); ++i) {
        dcf::write_file(c.out_dir + "/marginal_" + panel.assets[i] + ".json",
                        dcf::mdn_to_json(results[i].model));
        dcf::write_file(c.out_dir + "/train_log_marginal_" + panel.assets[i] + ".csv",
                        mdn_log_csv(results[i]));
    }
    std::cout << "trained " << results.size() << " marginal models -> " << c.out_dir << "\n";
    return dcf::kExitOk;
}

int run_train_copula(const RunConfig& c, const std::string& panel_path,
                     const std::string& marginals_dir, bool panel_is_u) {
    fs::create_directories(c.out_dir);
    Eigen::MatrixXd u;
    std::vector<std::string> assets;
    long long interval = c.interval_seconds;

    if (panel_is_u) {
        // Columns of the CSV are copula-scale values already.
        dcf::AlignedPanel raw = load_panel(panel_path);
        assets = raw.assets;
        u = raw.returns.bottomRows(raw.rows() - 1);
        for (Eigen::Index t = 0; t < u.rows(); ++t)
            for (Eigen::Index i = 0; i < u.cols(); ++i)
                if (!(u(t, i) >= 0.0 && u(t, i) <= 1.0))
                    throw dcf::DataError("train-copula: u-panel value outside [0,1]");
    } else {
        dcf::AlignedPanel panel = load_panel(panel_path);
        assets = panel.assets;
        auto [train, test] = panel_windows(c, panel);
        dcf::ModelBundle partial;
        partial.assets = panel.assets;
        partial.interval_seconds = interval;
        for (const std::string& a : panel.assets) {
            std::string path = marginals_dir + "/marginal_" + a + ".json";
            partial.marginals.push_back(dcf::mdn_from_json(dcf::read_file(path)));
        }
        // Copula dimension comes from the trained model below; fake-validate later.
        Eigen::MatrixXd pit(train[0].size(), panel.dim());
        for (int i = 0; i < panel.dim(); ++i) {
            auto params = dcf::mdn_forward(partial.marginals[i], train[i]);
            for (Eigen::Index t = 0; t < train[i].size(); ++t)
                pit(t, i) = dcf::mixture_cdf(params[t], train[i].targets[t]);
        }
        u = pit;
    }

    auto result = dcf::train_cdc(u, make_schedule(c), c.cdc, c.cdc_hidden, c.seed, "cdc");
    result.model.langevin = c.langevin;
    dcf::write_file(c.out_dir + "/copula.json", dcf::cdc_to_json(result.model));
    dcf::write_file(c.out_dir + "/train_log_copula.csv", cdc_log_csv(result));
    std::cout << "trained copula on " << u.rows() << " x " << u.cols() << " points -> "
              << c.out_dir << "\n";
    return dcf::kExitOk;
}

int run_train(const RunConfig& c, const std::string& panel_path) {
    dcf::AlignedPanel panel = load_panel(panel_path);
    auto [train, test] = panel_windows(c, panel);

    auto marginal_results = train_marginals(train, panel.assets, c.mdn, c.seed);

    dcf::ModelBundle bundle;
    bundle.assets = panel.assets;
    bundle.interval_seconds = c.interval_seconds;
    for (auto& r : marginal_results) bundle.marginals.push_back(r.model);

    // PIT-transform the training targets, then fit the copula on them.
    Eigen::MatrixXd u(train[0].size(), panel.dim());
    for (int i = 0; i < panel.dim(); ++i) {
        auto params = dcf::mdn_forward(bundle.marginals[i], train[i]);
        for (Eigen::Index t = 0; t < train[i].size(); ++t)
            u(t, i) = dcf::mixture_cdf(params[t], train[i].targets[t]);
    }
    auto copula_result = dcf::train_cdc(u, make_schedule(c), c.cdc, c.cdc_hidden, c.seed, "cdc");
    copula_result.model.langevin = c.langevin;
    bundle.copula = copula_result.model;

    std::string bundle_dir = c.out_dir + "/bundle";
    dcf::save_bundle(bundle, bundle_dir);
    for (std::size_t i = 0; i < marginal_results.size(); ++i)
        dcf::write_file(c.out_dir + "/train_log_marginal_" + panel.assets[i] + ".csv",
                        mdn_log_csv(marginal_results[i]));
    dcf::write_file(c.out_dir + "/train_log_copula.csv", cdc_log_csv(copula_result));
    std::cout << "wrote bundle -> " << bundle_dir << "\n";
    return dcf::kExitOk;
}

int run_sample(const RunConfig& c, const std::string& bundle_dir, const std::string& panel_path,
               long long at_row, int m) {
    dcf::ModelBundle bundle = dcf::load_bundle(bundle_dir);
    dcf::AlignedPanel panel = load_panel(panel_path);
    if (panel.assets != bundle.assets)
        throw dcf::DataError("sample: panel assets do not match bundle");
    auto windows = dcf::make_all_windows(panel, bundle.window_length());
    Eigen::Index row = at_row < 0 ? windows[0].size() - 1 : at_row;
    if (row < 0 || row >= windows[0].size())
        throw dcf::DataError("sample: window row out of range");

    dcf::Rng rng(c.seed, "sample");
    dcf::ForecastDistribution fc = dcf::joint_sample(bundle, windows, row, m, rng);

    fs::create_directories(c.out_dir);
    std::string csv;
    for (int i = 0; i < bundle.dim(); ++i) csv += (i ? "," : "") + bundle.assets[i];
    csv += "\n";
    for (Eigen::Index r = 0; r < fc.samples.rows(); ++r) {
        for (Eigen::Index i = 0; i < fc.samples.cols(); ++i)
            csv += (i ? "," : "") + dcf::format_csv_double(fc.samples(r, i));
        csv += "\n";
    }
    dcf::write_file(c.out_dir + "/samples.csv", csv);

    json meta;
    meta["timestamp"] = fc.timestamp;
    meta["samples"] = m;
    json params = json::array();
    for (const dcf::MixtureParams& p : fc.marginal_params) {
        json pj;
        pj["weights"] = std::vector<double>(p.weights.data(), p.weights.data() + 9);
        pj["locations"] = std::vector<double>(p.locations.data(), p.locations.data() + 9);
        pj["scales"] = std::vector<double>(p.scales.data(), p.scales.data() + 9);
        pj["dofs"] = std::vector<double>(p.dofs.data(), p.dofs.data() + 3);
        params.push_back(pj);
    }
    meta["marginal_params"] = params;
    dcf::write_file(c.out_dir + "/samples_meta.json", meta.dump(2) + "\n");
    std::cout << "wrote " << m << " joint samples -> " << c.out_dir << "/samples.csv\n";
    return dcf::kExitOk;
}

int run_evaluate(const RunConfig& c, const std::string& bundle_dir,
                 const std::string& panel_path) {
    dcf::ModelBundle bundle = dcf::load_bundle(bundle_dir);
    dcf::AlignedPanel panel = load_panel(panel_path);
    if (panel.dim() != bundle.dim())
        throw dcf::DataError("evaluate: panel dimension does not match bundle");
    auto [train, test] = dcf::make_windows(panel, bundle.window_length(), c.split_fraction);
    dcf::EvalConfig eval = c.eval;
    eval.seed = c.seed;
    auto artifacts = dcf::run_evaluation(bundle, test, eval, c.seed);
    dcf::write_reports(artifacts, c.out_dir);
    std::cout << "wrote reports -> " << c.out_dir << "\n";
    return dcf::kExitOk;
}

int run_report(const RunConfig& c) {
    auto files = dcf::render_report_svgs(c.out_dir);
    for (const std::string& f : files) std::cout << "wrote " << f << "\n";
    if (files.empty()) std::cout << "no report CSVs found in " << c.out_dir << "\n";
    return dcf::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusion-copula probabilistic forecasting"};
    app.require_subcommand(1);

    std::string config_path, out_dir, panel_path, bundle_dir, marginals_dir;
    std::vector<std::string> csv_paths;
    std::string assets_list, quantiles_list;
    std::uint64_t seed = 0;
    long long interval = 0;
    double tail_threshold = -1.0;
    int samples = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", seed, "global seed");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--assets", assets_list, "comma-separated asset names");
        cmd->add_option("--interval", interval, "resample interval in seconds");
        cmd->add_option("--quantiles", quantiles_list, "comma-separated quantile grid");
        cmd->add_option("--tail-threshold", tail_threshold, "tail accuracy threshold");
        cmd->add_option("--samples", samples, "forecast samples per step");
    };

    CLI::App* c_ingest = app.add_subcommand("ingest", "parse OHLCV CSVs into a return panel");
    c_ingest->add_option("csv", csv_paths, "input CSV files (one per asset)");
    add_common(c_ingest);

    std::string synth_kind = "gaussian-copula";
    int synth_d = 2, synth_n = 20000;
    double synth_rho = 0.7, synth_theta = 2.0, synth_sd = 0.01, synth_nu = 5.0;
    CLI::App* c_synth = app.add_subcommand("synth", "generate synthetic panels");
    c_synth->add_option("--kind", synth_kind, "gaussian-copula | clayton | ar-vol");
    c_synth->add_option("--d", synth_d, "number of assets");
    c_synth->add_option("--n", synth_n, "number of usable returns");
    c_synth->add_option("--rho", synth_rho, "copula correlation");
    c_synth->add_option("--theta", synth_theta, "Clayton parameter");
    c_synth->add_option("--marginal-sd", synth_sd, "marginal standard deviation");
    c_synth->add_option("--marginal-nu", synth_nu, "marginal Student-t dof");
    add_common(c_synth);

    CLI::App* c_tm = app.add_subcommand("train-marginal", "train per-asset MDN marginals");
    c_tm->add_option("--panel", panel_path, "panel CSV")->required();
    add_common(c_tm);

    bool panel_is_u = false;
    CLI::App* c_tc = app.add_subcommand("train-copula", "train the CDC on PIT data");
    c_tc->add_option("--panel", panel_path, "panel CSV (returns, or u with --u-panel)")
        ->required();
    c_tc->add_option("--marginals", marginals_dir, "directory with marginal_<asset>.json");
    c_tc->add_flag("--u-panel", panel_is_u, "panel columns are copula-scale values already");
    add_common(c_tc);

    CLI::App* c_train = app.add_subcommand("train", "train marginals then the copula");
    c_train->add_option("--panel", panel_path, "panel CSV")->required();
    add_common(c_train);

    long long at_row = -1;
    CLI::App* c_sample = app.add_subcommand("sample", "draw joint forecast samples");
    c_sample->add_option("--bundle", bundle_dir, "bundle directory")->required();
    c_sample->add_option("--panel", panel_path, "panel CSV")->required();
    c_sample->add_option("--at-row", at_row, "window row (default: last)");
    add_common(c_sample);

    CLI::App* c_eval = app.add_subcommand("evaluate", "run the metric suite on the test split");
    c_eval->add_option("--bundle", bundle_dir, "bundle directory")->required();
    c_eval->add_option("--panel", panel_path, "panel CSV")->required();
    add_common(c_eval);

    CLI::App* c_report = app.add_subcommand("report", "render SVGs for report CSVs");
    add_common(c_report);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        for (CLI::App* sub : app.get_subcommands()) {
            if (sub->count("--seed")) cfg.seed = seed;
            if (sub->count("--out")) cfg.out_dir = out_dir;
            if (sub->count("--interval")) cfg.interval_seconds = interval;
            if (sub->count("--tail-threshold")) cfg.eval.tail_threshold = tail_threshold;
            if (sub->count("--samples")) cfg.eval.samples_per_step = samples;
            if (sub->count("--assets")) {
                cfg.assets.clear();
                std::stringstream ss(assets_list);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) cfg.assets.push_back(item);
            }
            if (sub->count("--quantiles")) {
                cfg.eval.quantiles.clear();
                std::stringstream ss(quantiles_list);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) cfg.eval.quantiles.push_back(std::stod(item));
            }
        }

        if (app.got_subcommand(c_ingest)) return run_ingest(cfg, csv_paths);
        if (app.got_subcommand(c_synth))
            return run_synth(cfg, synth_kind, synth_d, synth_n, synth_rho, synth_theta, synth_sd,
                             synth_nu);
        if (app.got_subcommand(c_tm)) return run_train_marginal(cfg, panel_path);
        if (app.got_subcommand(c_tc)) {
            std::string mdir = marginals_dir.empty() ? cfg.out_dir : marginals_dir;
            return run_train_copula(cfg, panel_path, mdir, panel_is_u);
        }
        if (app.got_subcommand(c_train)) return run_train(cfg, panel_path);
        if (app.got_subcommand(c_sample))
            return run_sample(cfg, bundle_dir, panel_path, at_row,
                              samples > 0 ? samples : cfg.eval.samples_per_step);
        if (app.got_subcommand(c_eval)) return run_evaluate(cfg, bundle_dir, panel_path);
        if (app.got_subcommand(c_report)) return run_report(cfg);
        std::cerr << "no subcommand\n";
        return dcf::kExitUsage;
    } catch (const dcf::TrainingError& e) {
        std::cerr << "training failure: " << e.what() << "\n";
        return dcf::kExitTraining;
    } catch (const dcf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dcf::kExitData;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config/data error: " << e.what() << "\n";
        return dcf::kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dcf::kExitData;
    }
}
