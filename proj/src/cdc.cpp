#include "dcf/cdc.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dcf/error.hpp"
#include "dcf/optim.hpp"
#include "dcf/special.hpp"

namespace dcf {

namespace {

constexpr Eigen::Index kScoreChunk = 4096;
constexpr Eigen::Index kClassifyChunk = 4096;

}  // namespace

DiffusionSchedule DiffusionSchedule::geometric(int levels, double t_min, double t_max) {
    if (levels < 2) throw Error("schedule: need at least 2 levels");
    if (!(t_min > 0.0 && t_max > t_min)) throw Error("schedule: need 0 < t_min < t_max");
    DiffusionSchedule s;
    s.times.resize(levels);
    double ratio = std::pow(t_max / t_min, 1.0 / (levels - 1));
    double t = t_min;
    for (int i = 0; i < levels; ++i, t *= ratio) s.times[i] = t;
    s.times[levels - 1] = t_max;
    return s;
}

double DiffusionSchedule::decay(int s) const {
    if (s < 1 || s > levels()) throw Error("schedule: level out of range");
    return std::exp(-times[s - 1]);
}

double DiffusionSchedule::sigma(int s) const {
    double a = decay(s);
    return std::sqrt(1.0 - a * a);
}

void DiffusionSchedule::validate() const {
    if (levels() < 2) throw Error("schedule: need at least 2 levels");
    if (!(times[0] > 0.0)) throw Error("schedule: T_1 must be positive");
    for (int i = 1; i < levels(); ++i)
        if (!(times[i] > times[i - 1])) throw Error("schedule: times must increase");
    if (!(decay(levels()) < 1e-3))
        throw Error("schedule: decay at T_K must fall below 1e-3 (near-independence)");
}

CdcModel CdcModel::init(int d, const DiffusionSchedule& schedule, int hidden, Rng& rng) {
    if (d < 1) throw Error("cdc: dimension must be positive");
    schedule.validate();
    CdcModel m;
    m.d = d;
    m.hidden = hidden;
    m.schedule = schedule;
    const int classes = schedule.levels() + 1;
    m.params.add("w1", glorot_uniform(hidden, d, rng));
    m.params.add("b1", Tensor::Zero(hidden, 1));
    m.params.add("w2", glorot_uniform(hidden, hidden, rng));
    m.params.add("b2", Tensor::Zero(hidden, 1));
    m.params.add("w3", glorot_uniform(classes, hidden, rng));
    m.params.add("b3", Tensor::Zero(classes, 1));
    return m;
}

Eigen::MatrixXd gaussianize(const Eigen::MatrixXd& u_rows) {
    Eigen::MatrixXd z(u_rows.rows(), u_rows.cols());
    for (Eigen::Index i = 0; i < u_rows.rows(); ++i)
        for (Eigen::Index j = 0; j < u_rows.cols(); ++j) {
            double u = u_rows(i, j);
            if (!(u >= 0.0 && u <= 1.0))
                throw DataError("gaussianize: value outside [0,1]");
            u = std::min(1.0 - kCopulaClampEps, std::max(kCopulaClampEps, u));
            z(i, j) = std_normal_inv_cdf(u);
        }
    return z;
}

Eigen::VectorXd gaussianize(const Eigen::VectorXd& u) {
    Eigen::MatrixXd z = gaussianize(Eigen::MatrixXd(u.transpose()));
    return z.row(0).transpose();
}

Eigen::MatrixXd ou_perturb(const Eigen::MatrixXd& z0_rows, int s, const DiffusionSchedule& sched,
                           Rng& rng, Eigen::MatrixXd* eps_out) {
    if (!z0_rows.allFinite()) throw DataError("ou_perturb: non-finite state");
    const double a = sched.decay(s);
    const double sig = sched.sigma(s);
    Eigen::MatrixXd eps(z0_rows.rows(), z0_rows.cols());
    for (Eigen::Index i = 0; i < eps.rows(); ++i)
        for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(i, j) = rng.normal();
    Eigen::MatrixXd z = a * z0_rows + sig * eps;
    if (eps_out) *eps_out = std::move(eps);
    return z;
}

CdcClassifierNodes append_cdc_classifier(Tape& tape, const CdcModel& model, int z) {
    CdcClassifierNodes n;
    const int classes = model.schedule.levels() + 1;
    n.w1 = tape.param(0, model.hidden, model.d);
    n.b1 = tape.param(1, model.hidden, 1);
    n.w2 = tape.param(2, model.hidden, model.hidden);
    n.b2 = tape.param(3, model.hidden, 1);
    n.w3 = tape.param(4, classes, model.hidden);
    n.b3 = tape.param(5, classes, 1);
    n.a1 = tape.tanh(tape.add(tape.matmul(n.w1, z), n.b1));
    n.a2 = tape.tanh(tape.add(tape.matmul(n.w2, n.a1), n.b2));
    n.logits = tape.add(tape.matmul(n.w3, n.a2), n.b3);
    return n;
}

int append_cdc_score(Tape& tape, const CdcClassifierNodes& nodes, int z, int level, int levels) {
    if (level < 0 || level > levels) throw Error("cdc score: level out of range");
    const int classes = levels + 1;
    Tensor e = Tensor::Zero(classes, 1);
    e(level, 0) += 1.0;
    e(levels, 0) -= 1.0;  // class index K is the last row
    int ev = tape.constant(std::move(e));
    int v = tape.matmul_ta(nodes.w3, ev);                      // hidden x 1
    int d2 = tape.affine(tape.square(nodes.a2), -1.0, 1.0);    // tanh'
    int t2 = tape.mul(d2, v);
    int u1 = tape.matmul_ta(nodes.w2, t2);
    int d1 = tape.affine(tape.square(nodes.a1), -1.0, 1.0);
    int t1 = tape.mul(d1, u1);
    int grad = tape.matmul_ta(nodes.w1, t1);
    return tape.sub(grad, z);
}

Eigen::MatrixXd cdc_classify(const CdcModel& model, const Eigen::MatrixXd& z_rows) {
    if (z_rows.cols() != model.d) throw DataError("cdc_classify: dimension mismatch");
    const int classes = model.schedule.levels() + 1;
    Eigen::MatrixXd out(z_rows.rows(), classes);
    for (Eigen::Index at = 0; at < z_rows.rows(); at += kClassifyChunk) {
        const Eigen::Index width = std::min(kClassifyChunk, z_rows.rows() - at);
        Tape tape;
        int z = tape.input(model.d, width);
        CdcClassifierNodes n = append_cdc_classifier(tape, model, z);
        int logp = tape.sub(n.logits, tape.log_sum_exp_rows(n.logits));
        Tensor zin = z_rows.middleRows(at, width).transpose();
        tape.forward({zin}, model.params);
        out.middleRows(at, width) = tape.value(logp).transpose();
    }
    return out;
}

Eigen::VectorXd copula_log_density(const CdcModel& model, const Eigen::MatrixXd& u_rows) {
    Eigen::MatrixXd z = gaussianize(u_rows);
    const int K = model.schedule.levels();
    Eigen::VectorXd out(z.rows());
    for (Eigen::Index at = 0; at < z.rows(); at += kClassifyChunk) {
        const Eigen::Index width = std::min(kClassifyChunk, z.rows() - at);
        Tape tape;
        int zi = tape.input(model.d, width);
        CdcClassifierNodes n = append_cdc_classifier(tape, model, zi);
        Tensor zin = z.middleRows(at, width).transpose();
        tape.forward({zin}, model.params);
        const Tensor& logits = tape.value(n.logits);
        out.segment(at, width) = (logits.row(0) - logits.row(K)).transpose();
    }
    return out;
}

double copula_log_density(const CdcModel& model, const Eigen::VectorXd& u) {
    return copula_log_density(model, Eigen::MatrixXd(u.transpose()))[0];
}

Tensor CdcScore::score(int level, const Tensor& z) const {
    const int K = model_->schedule.levels();
    if (level < 0 || level > K) throw Error("cdc score: level out of range");
    Tensor out(z.rows(), z.cols());
    for (Eigen::Index at = 0; at < z.cols(); at += kScoreChunk) {
        const Eigen::Index width = std::min(kScoreChunk, z.cols() - at);
        Tape tape;
        tape.set_check_finite(false);  // sampler handles non-finite chains itself
        int zi = tape.input(model_->d, width);
        CdcClassifierNodes n = append_cdc_classifier(tape, *model_, zi);
        int sc = append_cdc_score(tape, n, zi, level, K);
        Tensor zin = z.middleCols(at, width);
        tape.forward({zin}, model_->params);
        out.middleCols(at, width) = tape.value(sc);
    }
    return out;
}

CdcLossValue cdc_loss(const CdcModel& model, const Eigen::MatrixXd& z0_rows,
                      const CdcTrainConfig& config, Rng& rng, std::vector<Tensor>* param_grads) {
    const Eigen::Index B = z0_rows.rows();
    if (B == 0) throw DataError("cdc_loss: empty batch");
    if (z0_rows.cols() != model.d) throw DataError("cdc_loss: dimension mismatch");
    const int K = model.schedule.levels();
    const int classes = K + 1;

    // Balanced class assignment; perturb each example to its level.
    std::vector<int> cls(B);
    Eigen::MatrixXd z_all(model.d, B);
    Eigen::MatrixXd eps_all(model.d, B);
    std::vector<std::vector<int>> groups(K + 1);
    for (Eigen::Index i = 0; i < B; ++i) {
        int s = static_cast<int>(rng.index(static_cast<std::uint64_t>(classes)));
        cls[i] = s;
        groups[s].push_back(static_cast<int>(i));
        if (s == 0) {
            z_all.col(i) = z0_rows.row(i).transpose();
        } else {
            const double a = model.schedule.decay(s);
            const double sig = model.schedule.sigma(s);
            for (int r = 0; r < model.d; ++r) {
                double e = rng.normal();
                eps_all(r, i) = e;
                z_all(r, i) = a * z0_rows(i, r) + sig * e;
            }
        }
    }

    Tape tape;
    int z_node = tape.constant(z_all);
    CdcClassifierNodes n = append_cdc_classifier(tape, model, z_node);
    int logp = tape.sub(n.logits, tape.log_sum_exp_rows(n.logits));
    Tensor onehot = Tensor::Zero(classes, B);
    for (Eigen::Index i = 0; i < B; ++i) onehot(cls[i], i) = 1.0;
    int ce = tape.scale(tape.sum_all(tape.mul(logp, tape.constant(std::move(onehot)))),
                        -1.0 / static_cast<double>(B));

    long long noisy = 0;
    int mse_sum = -1;
    for (int s = 1; s <= K; ++s) {
        if (groups[s].empty()) continue;
        const Eigen::Index w = static_cast<Eigen::Index>(groups[s].size());
        noisy += w;
        Tensor zs(model.d, w), es(model.d, w);
        for (Eigen::Index j = 0; j < w; ++j) {
            zs.col(j) = z_all.col(groups[s][j]);
            es.col(j) = eps_all.col(groups[s][j]);
        }
        int zc = tape.constant(std::move(zs));
        CdcClassifierNodes ns = append_cdc_classifier(tape, model, zc);
        int sc = append_cdc_score(tape, ns, zc, s, K);
        int eps_hat = tape.scale(sc, -model.schedule.sigma(s));
        int sq = tape.sum_all(tape.square(tape.sub(eps_hat, tape.constant(std::move(es)))));
        mse_sum = mse_sum < 0 ? sq : tape.add(mse_sum, sq);
    }

    int loss;
    int mse = -1;
    if (mse_sum >= 0) {
        mse = tape.scale(mse_sum, 1.0 / static_cast<double>(noisy));
        loss = tape.add(tape.scale(ce, config.alpha), mse);
    } else {
        loss = tape.scale(ce, config.alpha);
    }
    tape.set_output(loss);
    tape.forward(std::vector<Tensor>{}, model.params);

    CdcLossValue out;
    out.total = tape.value(loss)(0, 0);
    out.cross_entropy = tape.value(ce)(0, 0);
    out.score_mse = mse >= 0 ? tape.value(mse)(0, 0) : 0.0;
    if (param_grads) {
        tape.backward();
        *param_grads = tape.param_gradients(model.params);
    }
    return out;
}

CdcTrainResult train_cdc(const Eigen::MatrixXd& u_panel, const DiffusionSchedule& schedule,
                         const CdcTrainConfig& config, int hidden, std::uint64_t seed,
                         const std::string& stream_name) {
    if (u_panel.rows() < 1000) throw DataError("train_cdc: need at least 1000 rows");
    Eigen::MatrixXd z0 = gaussianize(u_panel);
    const int d = static_cast<int>(u_panel.cols());

    Rng init_rng(seed, stream_name + "/init");
    CdcTrainResult result;
    result.model = CdcModel::init(d, schedule, hidden, init_rng);
    if (config.steps == 0) return result;

    Rng rng(seed, stream_name + "/train");
    AdamConfig adam;
    AdamState state;
    const Eigen::Index n = z0.rows();
    const Eigen::Index batch = std::min<Eigen::Index>(config.batch, n);
    constexpr double kPi = 3.14159265358979323846;

    double initial_ce = -1.0;
    for (int step = 0; step < config.steps; ++step) {
        Eigen::MatrixXd zb(batch, d);
        for (Eigen::Index i = 0; i < batch; ++i)
            zb.row(i) = z0.row(static_cast<Eigen::Index>(rng.index(n)));

        std::vector<Tensor> grads;
        CdcLossValue value = cdc_loss(result.model, zb, config, rng, &grads);
        double frac = config.steps > 1 ? static_cast<double>(step) / (config.steps - 1) : 0.0;
        double lr = config.lr * (config.lr_final_frac +
                                 (1.0 - config.lr_final_frac) * 0.5 * (1.0 + std::cos(kPi * frac)));
        adam_step(result.model.params.values(), grads, state, adam, lr);

        if (initial_ce < 0.0) initial_ce = std::max(value.cross_entropy, 1e-3);
        if (!std::isfinite(value.total) || value.cross_entropy > 100.0 * initial_ce)
            throw TrainingError("train_cdc diverged at step " + std::to_string(step) +
                                " (ce=" + std::to_string(value.cross_entropy) + ")");

        if (step % config.log_every == 0 || step == config.steps - 1)
            result.log.push_back({step, value.cross_entropy, value.score_mse, lr});
    }
    return result;
}

Eigen::MatrixXd langevin_sample(const ScoreModel& model, int n, Rng& rng,
                                const LangevinConfig& config) {
    const int d = model.dim();
    const DiffusionSchedule& sched = model.schedule();
    const int K = sched.levels();
    const double sig_k2 = sched.sigma(K) * sched.sigma(K);

    auto run_chains = [&](int count) {
        Tensor z(d, count);
        for (int r = 0; r < d; ++r)
            for (int j = 0; j < count; ++j) z(r, j) = rng.normal();
        Tensor noise(d, count);
        auto step_noise = [&](double eta) {
            for (int r = 0; r < d; ++r)
                for (int j = 0; j < count; ++j) noise(r, j) = rng.normal();
            return std::sqrt(eta) * noise;
        };
        for (int s = K; s >= 1; --s) {
            double ss = sched.sigma(s);
            double eta = config.step_size * std::pow(ss * ss / sig_k2, config.step_power);
            for (int it = 0; it < config.inner_steps; ++it)
                z += 0.5 * eta * model.score(s, z) + step_noise(eta);
        }
        // Data-level polish with geometrically shrinking steps.
        if (config.refine_steps > 0) {
            double eta0 = config.step_size *
                          std::pow(sched.sigma(1) * sched.sigma(1) / sig_k2, config.step_power);
            double decay = config.refine_steps > 1
                               ? std::pow(1.0 / config.refine_shrink,
                                          1.0 / static_cast<double>(config.refine_steps - 1))
                               : 1.0;
            double eta = eta0;
            for (int it = 0; it < config.refine_steps; ++it, eta *= decay)
                z += 0.5 * eta * model.score(0, z) + step_noise(eta);
        }
        return z;
    };

    Tensor z = run_chains(n);
    for (int attempt = 0; attempt <= config.max_restarts; ++attempt) {
        std::vector<int> bad;
        for (int j = 0; j < n; ++j)
            if (!z.col(j).allFinite()) bad.push_back(j);
        if (bad.empty()) break;
        if (attempt == config.max_restarts)
            throw TrainingError("langevin_sample: " + std::to_string(bad.size()) +
                                " chains stayed non-finite after restarts");
        Tensor fresh = run_chains(static_cast<int>(bad.size()));
        for (std::size_t j = 0; j < bad.size(); ++j) z.col(bad[j]) = fresh.col(j);
    }

    Eigen::MatrixXd u(n, d);
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < d; ++r) {
            double p = std_normal_cdf(z(r, j));
            u(j, r) = std::min(1.0 - kCopulaClampEps, std::max(kCopulaClampEps, p));
        }
    return u;
}

Eigen::MatrixXd langevin_sample(const CdcModel& model, int n, Rng& rng) {
    CdcScore score(model);
    return langevin_sample(score, n, rng, model.langevin);
}

}  // namespace dcf
