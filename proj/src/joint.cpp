#include "dcf/joint.hpp"

#include "dcf/error.hpp"

namespace dcf {

void ModelBundle::validate() const {
    if (assets.empty()) throw DataError("bundle: no assets");
    if (marginals.size() != assets.size())
        throw DataError("bundle: marginal count does not match assets");
    if (copula.d != dim()) throw DataError("bundle: copula dimension does not match assets");
    for (const MdnModel& m : marginals)
        if (m.k != marginals.front().k) throw DataError("bundle: window lengths disagree");
}

namespace {

void check_aligned(const ModelBundle& bundle, const std::vector<WindowSet>& windows) {
    if (windows.size() != bundle.marginals.size())
        throw DataError("windows: per-asset count does not match bundle");
    for (std::size_t i = 1; i < windows.size(); ++i) {
        if (windows[i].size() != windows[0].size() ||
            windows[i].target_timestamps != windows[0].target_timestamps)
            throw DataError("windows: misaligned targets across assets");
    }
}

}  // namespace

Eigen::MatrixXd pit_panel(const ModelBundle& bundle, const std::vector<WindowSet>& windows) {
    bundle.validate();
    check_aligned(bundle, windows);
    const Eigen::Index n = windows[0].size();
    Eigen::MatrixXd u(n, bundle.dim());
    for (int i = 0; i < bundle.dim(); ++i) {
        auto params = mdn_forward(bundle.marginals[i], windows[i]);
        for (Eigen::Index t = 0; t < n; ++t)
            u(t, i) = mixture_cdf(params[t], windows[i].targets[t]);
    }
    return u;
}

double joint_log_density(const ModelBundle& bundle, const Eigen::VectorXd& y,
                         const std::vector<MixtureParams>& step_params) {
    if (y.size() != bundle.dim() || step_params.size() != static_cast<std::size_t>(bundle.dim()))
        throw DataError("joint_log_density: dimension mismatch");
    double acc = 0.0;
    Eigen::VectorXd u(bundle.dim());
    for (int i = 0; i < bundle.dim(); ++i) {
        acc += mixture_log_pdf(step_params[i], y[i]);
        u[i] = mixture_cdf(step_params[i], y[i]);
    }
    return acc + copula_log_density(bundle.copula, u);
}

double joint_log_density(const ModelBundle& bundle, const std::vector<WindowSet>& windows,
                         Eigen::Index row) {
    check_aligned(bundle, windows);
    std::vector<MixtureParams> params;
    Eigen::VectorXd y(bundle.dim());
    for (int i = 0; i < bundle.dim(); ++i) {
        params.push_back(mdn_forward(bundle.marginals[i], windows[i].lags.row(row).transpose()));
        y[i] = windows[i].targets[row];
    }
    return joint_log_density(bundle, y, params);
}

Eigen::MatrixXd inverse_pit(const std::vector<MixtureParams>& step_params,
                            const Eigen::MatrixXd& u_rows) {
    const int d = static_cast<int>(step_params.size());
    if (u_rows.cols() != d) throw DataError("inverse_pit: dimension mismatch");
    Eigen::MatrixXd y(u_rows.rows(), d);
    for (int i = 0; i < d; ++i)
        for (Eigen::Index t = 0; t < u_rows.rows(); ++t)
            y(t, i) = mixture_inverse_cdf(step_params[i], u_rows(t, i));
    return y;
}

ForecastDistribution joint_sample(const ModelBundle& bundle,
                                  const std::vector<MixtureParams>& step_params,
                                  long long timestamp, int m, Rng& rng) {
    bundle.validate();
    if (step_params.size() != static_cast<std::size_t>(bundle.dim()))
        throw DataError("joint_sample: parameter count mismatch");
    ForecastDistribution out;
    out.timestamp = timestamp;
    out.marginal_params = step_params;
    if (m == 0) {
        out.samples.resize(0, bundle.dim());
        return out;
    }
    Eigen::MatrixXd u = langevin_sample(bundle.copula, m, rng);
    out.samples = inverse_pit(step_params, u);
    return out;
}

ForecastDistribution joint_sample(const ModelBundle& bundle,
                                  const std::vector<WindowSet>& windows, Eigen::Index row, int m,
                                  Rng& rng) {
    check_aligned(bundle, windows);
    std::vector<MixtureParams> params;
    for (int i = 0; i < bundle.dim(); ++i)
        params.push_back(mdn_forward(bundle.marginals[i], windows[i].lags.row(row).transpose()));
    return joint_sample(bundle, params, windows[0].target_timestamps[row], m, rng);
}

}  // namespace dcf
