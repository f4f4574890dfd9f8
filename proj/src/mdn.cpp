#include "dcf/mdn.hpp"

#include <algorithm>
#include <cmath>

#include "dcf/error.hpp"
#include "dcf/optim.hpp"

namespace dcf {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kLog2 = 0.69314718055994530942;
constexpr double kHalfLogPi = 0.57236494292470008707;
constexpr Eigen::Index kForwardChunk = 256;

struct LayoutEntry {
    std::string name;
    Eigen::Index rows;
    Eigen::Index cols;
};

std::vector<LayoutEntry> mdn_layout(const MdnConfig& c) {
    std::vector<LayoutEntry> out;
    const Eigen::Index H = c.hidden;
    for (int l = 0; l < c.lstm_layers; ++l) {
        Eigen::Index in = l == 0 ? 1 : H;
        std::string p = "lstm" + std::to_string(l);
        out.push_back({p + "/Wx", 4 * H, in});
        out.push_back({p + "/Wh", 4 * H, H});
        out.push_back({p + "/b", 4 * H, 1});
    }
    out.push_back({"feat/W", c.feature_hidden, FeatureVector::kCount});
    out.push_back({"feat/b", c.feature_hidden, 1});
    out.push_back({"head/W", kMdnHeadDim, H + c.feature_hidden});
    out.push_back({"head/b", kMdnHeadDim, 1});
    return out;
}

}  // namespace

MdnModel MdnModel::init(const MdnConfig& config, int k, Rng& rng) {
    if (config.hidden < 1 || config.lstm_layers < 1 || config.feature_hidden < 1)
        throw Error("mdn: encoder dimensions must be positive");
    if (!(config.temperature > 0.0)) throw Error("mdn: temperature must be positive");
    if (config.entropy_coef < 0.0) throw Error("mdn: entropy coefficient must be >= 0");

    MdnModel m;
    m.config = config;
    m.k = k;
    for (const LayoutEntry& e : mdn_layout(config)) {
        if (e.cols == 1) {
            Tensor b = Tensor::Zero(e.rows, 1);
            if (e.name.rfind("lstm", 0) == 0 && e.name.find("/b") != std::string::npos) {
                // Forget-gate bias starts at 1 so early memory survives.
                b.middleRows(config.hidden, config.hidden).setOnes();
            }
            m.params.add(e.name, b);
        } else {
            m.params.add(e.name, glorot_uniform(e.rows, e.cols, rng));
        }
    }
    return m;
}

std::unique_ptr<MdnGraph> build_mdn_graph(const MdnConfig& config, int k, Eigen::Index batch,
                                          bool with_loss) {
    auto g = std::make_unique<MdnGraph>();
    Tape& tp = g->tape;
    const Eigen::Index H = config.hidden;

    g->in_lags = tp.input(k, batch);
    g->in_features = tp.input(FeatureVector::kCount, batch);
    if (with_loss) g->in_targets = tp.input(1, batch);

    auto layout = mdn_layout(config);
    std::vector<int> pnode(layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i)
        pnode[i] = tp.param(static_cast<int>(i), layout[i].rows, layout[i].cols);

    // Unrolled LSTM stack over the lag window.
    std::vector<int> h(config.lstm_layers), c(config.lstm_layers);
    int zero = tp.constant(Tensor::Zero(H, batch));
    for (int l = 0; l < config.lstm_layers; ++l) h[l] = c[l] = zero;
    for (int t = 0; t < k; ++t) {
        int x = tp.slice_rows(g->in_lags, t, 1);
        for (int l = 0; l < config.lstm_layers; ++l) {
            int Wx = pnode[3 * l], Wh = pnode[3 * l + 1], b = pnode[3 * l + 2];
            int z = tp.add(tp.add(tp.matmul(Wx, x), tp.matmul(Wh, h[l])), b);
            int gi = tp.sigmoid(tp.slice_rows(z, 0, H));
            int gf = tp.sigmoid(tp.slice_rows(z, H, H));
            int gg = tp.tanh(tp.slice_rows(z, 2 * H, H));
            int go = tp.sigmoid(tp.slice_rows(z, 3 * H, H));
            c[l] = tp.add(tp.mul(gf, c[l]), tp.mul(gi, gg));
            h[l] = tp.mul(go, tp.tanh(c[l]));
            x = h[l];
        }
    }

    const int pF = static_cast<int>(layout.size()) - 4;
    int fh = tp.tanh(tp.add(tp.matmul(pnode[pF], g->in_features), pnode[pF + 1]));
    int merged = tp.concat_rows({h[config.lstm_layers - 1], fh});
    int head = tp.add(tp.matmul(pnode[pF + 2], merged), pnode[pF + 3]);

    int logits = tp.slice_rows(head, 0, 9);
    int mu = tp.slice_rows(head, 9, 9);
    int raw_sigma = tp.slice_rows(head, 18, 9);
    int raw_nu = tp.slice_rows(head, 27, 3);

    g->pi = tp.softmax_t(logits, config.temperature);
    int scaled = tp.scale(logits, 1.0 / config.temperature);
    g->log_pi = tp.sub(scaled, tp.log_sum_exp_rows(scaled));
    g->sigma = tp.affine(tp.softplus(raw_sigma), 1.0, config.sigma_floor);
    g->nu = tp.affine(tp.softplus(raw_nu), 1.0, 2.0);
    g->mu = mu;

    if (!with_loss) return g;

    int log_sd = tp.log(g->sigma);
    int inv_sd = tp.exp(tp.scale(log_sd, -1.0));
    int std_t = tp.mul(tp.sub(mu, g->in_targets), inv_sd);

    int lp_normal = tp.sub(tp.affine(tp.square(tp.slice_rows(std_t, 0, 3)), -0.5, -kLogSqrt2Pi),
                           tp.slice_rows(log_sd, 0, 3));
    int lp_laplace = tp.sub(tp.affine(tp.smooth_abs(tp.slice_rows(std_t, 3, 3)), -1.0, -kLog2),
                            tp.slice_rows(log_sd, 3, 3));

    int t_part = tp.slice_rows(std_t, 6, 3);
    int log_nu = tp.log(g->nu);
    int inv_nu = tp.exp(tp.scale(log_nu, -1.0));
    int one_plus = tp.affine(tp.mul(tp.square(t_part), inv_nu), 1.0, 1.0);
    int half_nu_plus = tp.affine(g->nu, 0.5, 0.5);
    int lp_t = tp.sub(
        tp.sub(tp.sub(tp.log_gamma(half_nu_plus), tp.log_gamma(tp.scale(g->nu, 0.5))),
               tp.affine(log_nu, 0.5, kHalfLogPi)),
        tp.add(tp.slice_rows(log_sd, 6, 3), tp.mul(half_nu_plus, tp.log(one_plus))));

    int comp = tp.concat_rows({lp_normal, lp_laplace, lp_t});
    int log_mix = tp.log_sum_exp_rows(tp.add(g->log_pi, comp));
    g->nll = tp.scale(tp.mean_all(log_mix), -1.0);

    int ent = tp.scale(tp.mean_all(tp.col_sum(tp.mul(g->pi, g->log_pi))), -1.0);
    double sign = config.entropy_encourage ? -1.0 : 1.0;
    g->loss = tp.add(g->nll, tp.scale(ent, sign * config.entropy_coef));
    tp.set_output(g->loss);
    return g;
}

namespace {

// Pull de-normalized MixtureParams out of an evaluated graph column.
MixtureParams extract_params(const MdnGraph& g, Eigen::Index col, const MdnModel& m) {
    MixtureParams p;
    const Tensor& pi = g.tape.value(g.pi);
    const Tensor& mu = g.tape.value(g.mu);
    const Tensor& sigma = g.tape.value(g.sigma);
    const Tensor& nu = g.tape.value(g.nu);
    double total = 0.0;
    for (int j = 0; j < 9; ++j) {
        p.weights[j] = std::max(pi(j, col), 1e-12);
        total += p.weights[j];
        p.locations[j] = m.target_shift + m.target_scale * mu(j, col);
        p.scales[j] = m.target_scale * sigma(j, col);
    }
    p.weights /= total;
    for (int j = 0; j < 3; ++j) p.dofs[j] = std::min(nu(j, col), m.config.nu_cap);
    return p;
}

Eigen::MatrixXd normalize_lags(const MdnModel& m, const Eigen::MatrixXd& lags) {
    return ((lags.array() - m.target_shift) / m.target_scale).transpose().matrix();
}

Eigen::MatrixXd normalize_features(const MdnModel& m, const Eigen::MatrixXd& features) {
    Eigen::MatrixXd out = features.transpose();
    for (int r = 0; r < 4; ++r)
        out.row(r) = (out.row(r).array() - m.feature_shift[r]) / m.feature_scale[r];
    return out;
}

}  // namespace

std::vector<MixtureParams> mdn_forward(const MdnModel& model, const Eigen::MatrixXd& lags,
                                       const Eigen::MatrixXd& features) {
    if (lags.cols() != model.k) throw DataError("mdn_forward: lag width != window length");
    if (features.cols() != FeatureVector::kCount || features.rows() != lags.rows())
        throw DataError("mdn_forward: feature shape mismatch");

    const Eigen::Index n = lags.rows();
    std::vector<MixtureParams> out;
    out.reserve(n);
    std::unique_ptr<MdnGraph> graph;
    Eigen::Index graph_width = -1;
    for (Eigen::Index at = 0; at < n; at += kForwardChunk) {
        Eigen::Index width = std::min(kForwardChunk, n - at);
        if (width != graph_width) {
            graph = build_mdn_graph(model.config, model.k, width, false);
            graph_width = width;
        }
        Eigen::MatrixXd ln = normalize_lags(model, lags.middleRows(at, width));
        Eigen::MatrixXd fn = normalize_features(model, features.middleRows(at, width));
        graph->tape.forward({ln, fn}, model.params);
        for (Eigen::Index j = 0; j < width; ++j)
            out.push_back(extract_params(*graph, j, model));
    }
    return out;
}

std::vector<MixtureParams> mdn_forward(const MdnModel& model, const WindowSet& windows) {
    return mdn_forward(model, windows.lags, windows.features);
}

MixtureParams mdn_forward(const MdnModel& model, const Eigen::VectorXd& lags) {
    Eigen::MatrixXd l = lags.transpose();
    Eigen::MatrixXd f = build_features(lags).as_vector().transpose();
    return mdn_forward(model, l, f)[0];
}

double mdn_loss(const MdnModel& model, const WindowSet& batch) {
    if (batch.size() == 0) throw DataError("mdn_loss: empty batch");
    auto graph = build_mdn_graph(model.config, model.k, batch.size(), true);
    Eigen::MatrixXd ln = normalize_lags(model, batch.lags);
    Eigen::MatrixXd fn = normalize_features(model, batch.features);
    Eigen::MatrixXd tn =
        ((batch.targets.array() - model.target_shift) / model.target_scale).transpose().matrix();
    graph->tape.forward({ln, fn, tn}, model.params);
    return graph->tape.value(graph->loss)(0, 0) + std::log(model.target_scale);
}

double mdn_nll(const MdnModel& model, const WindowSet& windows) {
    if (windows.size() == 0) throw DataError("mdn_nll: empty window set");
    auto params = mdn_forward(model, windows);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < windows.size(); ++i)
        acc -= mixture_log_pdf(params[i], windows.targets[i]);
    return acc / static_cast<double>(windows.size());
}

namespace {

WindowSet gather_rows(const WindowSet& w, const std::vector<int>& idx, std::size_t begin,
                      std::size_t count) {
    WindowSet out;
    out.lags.resize(count, w.lags.cols());
    out.features.resize(count, w.features.cols());
    out.targets.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        int r = idx[begin + j];
        out.lags.row(j) = w.lags.row(r);
        out.features.row(j) = w.features.row(r);
        out.targets[j] = w.targets[r];
    }
    return out;
}

}  // namespace

MdnTrainResult train_mdn(const WindowSet& train_windows, const MdnConfig& config,
                         std::uint64_t seed, const std::string& stream_name) {
    const Eigen::Index n_total = train_windows.size();
    if (n_total == 0) throw DataError("train_mdn: empty training set");

    Rng init_rng(seed, stream_name + "/init");
    MdnModel model = MdnModel::init(config, static_cast<int>(train_windows.lags.cols()), init_rng);

    // Standardization from the full training set.
    model.target_shift = train_windows.targets.mean();
    double var = (train_windows.targets.array() - model.target_shift).square().mean();
    model.target_scale = std::max(std::sqrt(var), 1e-12);
    for (int j = 0; j < 4; ++j) {
        model.feature_shift[j] = train_windows.features.col(j).mean();
        double fv = (train_windows.features.col(j).array() - model.feature_shift[j]).square().mean();
        model.feature_scale[j] = std::max(std::sqrt(fv), 1e-12);
    }

    MdnTrainResult result;
    result.model = model;
    if (config.epochs == 0) return result;

    // Trailing slice of the (chronological) training windows for validation.
    Eigen::Index n_val = std::min<Eigen::Index>(
        n_total - 1, static_cast<Eigen::Index>(config.validation_fraction * n_total));
    if (n_val < 1) n_val = std::min<Eigen::Index>(1, n_total - 1);
    const Eigen::Index n_train = n_total - n_val;
    std::vector<int> train_idx(n_train);
    for (Eigen::Index i = 0; i < n_train; ++i) train_idx[i] = static_cast<int>(i);
    WindowSet val;
    {
        std::vector<int> vi(n_val);
        for (Eigen::Index i = 0; i < n_val; ++i) vi[i] = static_cast<int>(n_train + i);
        val = gather_rows(train_windows, vi, 0, vi.size());
    }

    Rng rng(seed, stream_name + "/train");
    AdamConfig adam;
    adam.weight_decay = config.weight_decay;
    AdamState state;
    OneCycle schedule{config.peak_lr, config.lr_div_initial, config.lr_div_final,
                      config.lr_warm_frac};

    const Eigen::Index batch = std::max<Eigen::Index>(1, std::min<Eigen::Index>(config.batch, n_train));
    const long long steps_per_epoch = (n_train + batch - 1) / batch;
    const long long total_steps = steps_per_epoch * config.epochs;

    std::map<Eigen::Index, std::unique_ptr<MdnGraph>> graphs;
    auto graph_for = [&](Eigen::Index width) -> MdnGraph& {
        auto it = graphs.find(width);
        if (it == graphs.end())
            it = graphs.emplace(width, build_mdn_graph(config, model.k, width, true)).first;
        return *it->second;
    };

    double initial_nll = 0.0;
    int high_epochs = 0;
    long long step = 0;
    double best = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates on the train indices.
        for (Eigen::Index i = n_train - 1; i > 0; --i) {
            auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(i + 1)));
            std::swap(train_idx[i], train_idx[j]);
        }

        double loss_acc = 0.0, nll_acc = 0.0;
        long long seen = 0;
        double lr_last = 0.0;
        for (Eigen::Index at = 0; at < n_train; at += batch) {
            Eigen::Index width = std::min(batch, n_train - at);
            MdnGraph& g = graph_for(width);
            WindowSet b = gather_rows(train_windows, train_idx, at, width);
            Eigen::MatrixXd ln = normalize_lags(model, b.lags);
            Eigen::MatrixXd fn = normalize_features(model, b.features);
            Eigen::MatrixXd tn =
                ((b.targets.array() - model.target_shift) / model.target_scale)
                    .transpose()
                    .matrix();
            g.tape.forward({ln, fn, tn}, model.params);
            g.tape.backward();
            auto grads = g.tape.param_gradients(model.params);
            lr_last = schedule.at(step, total_steps);
            adam_step(model.params.values(), grads, state, adam, lr_last);
            ++step;
            loss_acc += g.tape.value(g.loss)(0, 0) * static_cast<double>(width);
            nll_acc += g.tape.value(g.nll)(0, 0) * static_cast<double>(width);
            seen += width;
        }

        MdnEpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_acc / static_cast<double>(seen);
        entry.train_nll = nll_acc / static_cast<double>(seen) + std::log(model.target_scale);
        entry.val_nll = mdn_nll(model, val);
        entry.lr = lr_last;
        entry.skipped_steps = state.skipped;
        result.log.push_back(entry);

        double nll_norm = nll_acc / static_cast<double>(seen);
        if (epoch == 0) initial_nll = std::max(std::fabs(nll_norm), 1e-6);
        high_epochs = nll_norm > 10.0 * initial_nll ? high_epochs + 1 : 0;
        if (high_epochs >= 3) {
            std::string tail;
            for (std::size_t i = result.log.size() >= 3 ? result.log.size() - 3 : 0;
                 i < result.log.size(); ++i)
                tail += " epoch " + std::to_string(result.log[i].epoch) + " nll " +
                        std::to_string(result.log[i].train_nll) + ";";
            throw TrainingError("train_mdn diverged:" + tail);
        }

        if (entry.val_nll < best) {
            best = entry.val_nll;
            result.best_epoch = epoch;
            result.model = model;  // snapshot
        }
    }
    result.best_val_nll = best;
    return result;
}

Eigen::VectorXd mdn_sample(const MixtureParams& params, int n, Rng& rng) {
    return mixture_sample(params, n, rng);
}

}  // namespace dcf
