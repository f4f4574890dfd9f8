#include "dcf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcf/error.hpp"
#include "dcf/special.hpp"

namespace dcf {

double rmse(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
    if (observed.size() == 0 || observed.size() != predicted.size())
        throw DataError("rmse: need equal nonempty inputs");
    return std::sqrt((observed - predicted).array().square().mean());
}

double mae(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
    if (observed.size() == 0 || observed.size() != predicted.size())
        throw DataError("mae: need equal nonempty inputs");
    return (observed - predicted).array().abs().mean();
}

double crps_sample(const Eigen::VectorXd& samples, double y) {
    const Eigen::Index m = samples.size();
    if (m < 2) throw DataError("crps_sample: need at least 2 samples");
    Eigen::VectorXd x = samples;
    std::sort(x.data(), x.data() + m);

    double term1 = (x.array() - y).abs().mean();
    // mean_{i,j} |x_i - x_j| via the sorted identity sum_i (2i - m + 1) x_(i).
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        acc += (2.0 * static_cast<double>(i) - static_cast<double>(m) + 1.0) * x[i];
    double term2 = 2.0 * acc / (static_cast<double>(m) * static_cast<double>(m));
    return term1 - 0.5 * term2;
}

TailAccuracy tail_accuracy(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted,
                           double tau) {
    if (observed.size() != predicted.size())
        throw DataError("tail_accuracy: length mismatch");
    TailAccuracy out;
    int hits = 0;
    for (Eigen::Index t = 0; t < observed.size(); ++t) {
        if (observed[t] > tau) {
            ++out.events;
            if (predicted[t] > tau) ++hits;
        }
    }
    out.applicable = out.events > 0;
    out.value = out.applicable ? static_cast<double>(hits) / out.events : 0.0;
    return out;
}

Eigen::MatrixXd pit_cdf_curve(const Eigen::VectorXd& u, const Eigen::VectorXd& grid) {
    Eigen::VectorXd sorted = u;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    Eigen::MatrixXd out(grid.size(), 2);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        auto count = std::upper_bound(sorted.data(), sorted.data() + sorted.size(), grid[i]) -
                     sorted.data();
        out(i, 0) = grid[i];
        out(i, 1) = sorted.size() > 0
                        ? static_cast<double>(count) / static_cast<double>(sorted.size())
                        : 0.0;
    }
    return out;
}

QqPoints qq_points(const Eigen::VectorXd& u) {
    const Eigen::Index n = u.size();
    if (n < 2) throw DataError("qq_points: need at least 2 values");
    QqPoints out;
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = u[i];
        if (!(v > 0.0 && v < 1.0)) {
            v = std::min(1.0 - 1e-12, std::max(1e-12, v));
            ++out.clamped;
        }
        z[i] = std_normal_inv_cdf(v);
    }
    std::sort(z.data(), z.data() + n);
    out.empirical = z;
    out.theoretical.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out.theoretical[i] =
            std_normal_inv_cdf(static_cast<double>(i + 1) / static_cast<double>(n + 1));
    return out;
}

CorrelationEntry corr_extremes(const Eigen::MatrixXd& observed,
                               const std::vector<Eigen::MatrixXd>& samples, double q) {
    const Eigen::Index T = observed.rows();
    const Eigen::Index d = observed.cols();
    if (static_cast<Eigen::Index>(samples.size()) != T)
        throw DataError("corr_extremes: sample set count mismatch");

    CorrelationEntry entry;
    entry.q = q;

    Eigen::VectorXd market = observed.rowwise().mean();
    double cut = empirical_quantile(market, q);
    std::vector<Eigen::Index> sel;
    for (Eigen::Index t = 0; t < T; ++t)
        if (market[t] <= cut) sel.push_back(t);
    entry.n_timesteps = static_cast<int>(sel.size());
    if (static_cast<Eigen::Index>(sel.size()) < d + 2) return entry;  // insufficient

    Eigen::MatrixXd obs_sub(sel.size(), d);
    Eigen::Index total_samples = 0;
    for (std::size_t i = 0; i < sel.size(); ++i) {
        obs_sub.row(static_cast<Eigen::Index>(i)) = observed.row(sel[i]);
        total_samples += samples[sel[i]].rows();
    }
    Eigen::MatrixXd model_sub(total_samples, d);
    Eigen::Index at = 0;
    for (Eigen::Index t : sel) {
        model_sub.middleRows(at, samples[t].rows()) = samples[t];
        at += samples[t].rows();
    }

    Eigen::MatrixXd c_obs = pearson_correlation(obs_sub);
    Eigen::MatrixXd c_model = pearson_correlation(model_sub);
    entry.sufficient = true;
    entry.frobenius = (c_obs - c_model).norm();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (i != j) acc += c_model(i, j) - c_obs(i, j);
    entry.mean_bias = d > 1 ? acc / static_cast<double>(d * (d - 1)) : 0.0;
    return entry;
}

namespace {

// Tail thresholds per asset from the observed panel; membership test.
struct TailSets {
    Eigen::VectorXd lower;  // d, or -inf when unused
    Eigen::VectorXd upper;  // d, or +inf when unused

    bool in_tail(double v, Eigen::Index asset) const {
        return v <= lower[asset] || v >= upper[asset];
    }
};

TailSets make_tail_sets(const Eigen::MatrixXd& observed, double q, TailSide side) {
    const Eigen::Index d = observed.cols();
    TailSets ts;
    ts.lower = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
    ts.upper = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXd col = observed.col(i);
        if (side != TailSide::Upper) ts.lower[i] = empirical_quantile(col, q);
        if (side != TailSide::Lower) ts.upper[i] = empirical_quantile(col, 1.0 - q);
    }
    return ts;
}

int count_in_tails(const Eigen::RowVectorXd& row, const TailSets& ts) {
    int k = 0;
    for (Eigen::Index i = 0; i < row.size(); ++i)
        if (ts.in_tail(row[i], i)) ++k;
    return k;
}

}  // namespace

SystemicResult systemic_event_prob(const Eigen::MatrixXd& observed,
                                   const std::vector<Eigen::MatrixXd>& samples, double q,
                                   TailSide side) {
    const Eigen::Index T = observed.rows();
    const Eigen::Index d = observed.cols();
    if (static_cast<Eigen::Index>(samples.size()) != T)
        throw DataError("systemic_event_prob: sample set count mismatch");

    TailSets ts = make_tail_sets(observed, q, side);
    SystemicResult out;
    out.per_timestep = Eigen::MatrixXd::Zero(T, d + 1);
    out.observed_k.resize(T);

    for (Eigen::Index t = 0; t < T; ++t) {
        out.observed_k[t] = count_in_tails(observed.row(t), ts);
        const Eigen::MatrixXd& s = samples[t];
        if (s.rows() == 0) throw DataError("systemic_event_prob: empty sample set");
        for (Eigen::Index j = 0; j < s.rows(); ++j)
            out.per_timestep(t, count_in_tails(s.row(j), ts)) += 1.0;
        out.per_timestep.row(t) /= static_cast<double>(s.rows());
    }

    for (int k = 0; k <= d; ++k) {
        SystemicEntry e;
        e.k = k;
        double acc = 0.0;
        for (Eigen::Index t = 0; t < T; ++t) {
            if (out.observed_k[t] == k) {
                ++e.observed_count;
                acc += out.per_timestep(t, k);
            }
        }
        if (e.observed_count == 0) continue;  // omitted
        e.mean_model_prob = acc / e.observed_count;
        out.curve.push_back(e);
    }
    return out;
}

std::vector<BlackSwanPoint> black_swan_map(const Eigen::MatrixXd& observed,
                                           const std::vector<Eigen::MatrixXd>& samples,
                                           const std::vector<long long>& timestamps) {
    const Eigen::Index T = observed.rows();
    const Eigen::Index d = observed.cols();
    if (static_cast<Eigen::Index>(samples.size()) != T ||
        static_cast<Eigen::Index>(timestamps.size()) != T)
        throw DataError("black_swan_map: input length mismatch");

    std::vector<BlackSwanPoint> out(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::MatrixXd& s = samples[t];
        BlackSwanPoint& pt = out[t];
        pt.timestamp = timestamps[t];
        pt.magnitude = observed.row(t).array().abs().sum();
        if (s.rows() < d + 2) throw DataError("black_swan_map: need at least d+2 samples");

        Eigen::RowVectorXd mean = s.colwise().mean();
        Eigen::MatrixXd centered = s.rowwise() - mean;
        Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(s.rows() - 1);
        cov.diagonal().array() += 1e-10;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
        Eigen::VectorXd diff = (observed.row(t) - mean).transpose();
        if (ldlt.info() != Eigen::Success) {
            pt.valid = false;
            continue;
        }
        double m2 = diff.dot(ldlt.solve(diff));
        if (!(m2 >= 0.0) || !std::isfinite(m2)) {
            pt.valid = false;
            continue;
        }
        pt.surprise = std::sqrt(m2);
        pt.valid = true;
    }
    return out;
}

JointTailCrps joint_tail_crps(const Eigen::MatrixXd& observed,
                              const std::vector<Eigen::MatrixXd>& samples, double q) {
    const Eigen::Index T = observed.rows();
    const Eigen::Index d = observed.cols();
    if (static_cast<Eigen::Index>(samples.size()) != T)
        throw DataError("joint_tail_crps: sample set count mismatch");

    TailSets ts = make_tail_sets(observed, q, TailSide::Both);
    JointTailCrps out;
    double acc = 0.0;
    int n_values = 0;
    for (Eigen::Index t = 0; t < T; ++t) {
        if (count_in_tails(observed.row(t), ts) <= 2) continue;
        ++out.n_timesteps;
        for (Eigen::Index i = 0; i < d; ++i) {
            acc += crps_sample(samples[t].col(i), observed(t, i));
            ++n_values;
        }
    }
    out.applicable = out.n_timesteps > 0;
    out.value = out.applicable ? acc / n_values : 0.0;
    return out;
}

double empirical_quantile(Eigen::VectorXd values, double q) {
    const Eigen::Index n = values.size();
    if (n == 0) throw DataError("empirical_quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw DataError("empirical_quantile: q outside [0,1]");
    std::sort(values.data(), values.data() + n);
    double pos = q * static_cast<double>(n - 1);
    Eigen::Index lo = static_cast<Eigen::Index>(std::floor(pos));
    Eigen::Index hi = std::min(lo + 1, n - 1);
    double w = pos - static_cast<double>(lo);
    return (1.0 - w) * values[lo] + w * values[hi];
}

double ks_uniform(Eigen::VectorXd u) {
    const Eigen::Index n = u.size();
    if (n == 0) throw DataError("ks_uniform: empty input");
    std::sort(u.data(), u.data() + n);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double hi = static_cast<double>(i + 1) / n - u[i];
        double lo = u[i] - static_cast<double>(i) / n;
        worst = std::max({worst, hi, lo});
    }
    return worst;
}

Eigen::MatrixXd pearson_correlation(const Eigen::MatrixXd& data) {
    const Eigen::Index n = data.rows();
    if (n < 2) throw DataError("pearson_correlation: need at least 2 rows");
    Eigen::RowVectorXd mean = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::VectorXd sd = cov.diagonal().array().sqrt();
    Eigen::MatrixXd corr = cov;
    for (Eigen::Index i = 0; i < corr.rows(); ++i)
        for (Eigen::Index j = 0; j < corr.cols(); ++j) {
            double denom = sd[i] * sd[j];
            corr(i, j) = denom > 0.0 ? cov(i, j) / denom : (i == j ? 1.0 : 0.0);
        }
    corr.diagonal().setOnes();
    return corr;
}

namespace {

Eigen::VectorXd ranks(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
    Eigen::VectorXd r(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // average rank for ties
        for (Eigen::Index t = i; t <= j; ++t) r[order[t]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman_rho(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size() || x.size() < 2) throw DataError("spearman: bad input lengths");
    Eigen::MatrixXd r(x.size(), 2);
    r.col(0) = ranks(x);
    r.col(1) = ranks(y);
    return pearson_correlation(r)(0, 1);
}

}  // namespace dcf
