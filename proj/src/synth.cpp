#include "dcf/synth.hpp"

#include <cmath>

#include "dcf/error.hpp"
#include "dcf/special.hpp"

namespace dcf {

namespace {

// Base row plus cumulative-product closes from a return matrix (n x d).
AlignedPanel panel_from_returns(const Eigen::MatrixXd& y, long long interval) {
    const Eigen::Index n = y.rows();
    const int d = static_cast<int>(y.cols());
    AlignedPanel panel;
    for (int i = 0; i < d; ++i) panel.assets.push_back("A" + std::to_string(i + 1));
    panel.timestamps.resize(n + 1);
    for (Eigen::Index t = 0; t <= n; ++t) panel.timestamps[t] = 1600000000 + t * interval;
    panel.returns.setZero(n + 1, d);
    panel.closes.resize(n + 1, d);
    for (int i = 0; i < d; ++i) {
        double level = 100.0;
        panel.closes(0, i) = level;
        for (Eigen::Index t = 0; t < n; ++t) {
            level *= 1.0 + y(t, i);
            panel.closes(t + 1, i) = level;
            // Store the close-implied return so the panel invariant is bit-tight.
            panel.returns(t + 1, i) =
                (panel.closes(t + 1, i) - panel.closes(t, i)) / panel.closes(t, i);
        }
    }
    return panel;
}

Eigen::MatrixXd equicorrelated_cholesky(double rho, int d) {
    if (!(std::fabs(rho) < 1.0)) throw DataError("gaussian copula: |rho| must be below 1");
    if (d > 1 && !(rho > -1.0 / (d - 1)))
        throw DataError("gaussian copula: equicorrelation matrix not positive definite");
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(d, d, rho);
    cov.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw DataError("gaussian copula: Cholesky factorization failed");
    return llt.matrixL();
}

}  // namespace

MixtureParams scaled_student_t_marginal(double sd, double nu) {
    // y = sd * T / sqrt(nu/(nu-2)) has unit-variance-scaled heavy tails.
    return MixtureParams::single(Family::StudentT, 0.0, sd * std::sqrt((nu - 2.0) / nu), nu);
}

double student_t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0)) throw Error("student_t_quantile: p must lie in (0,1)");
    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < 600 && student_t_cdf(lo, nu) > p; ++i) lo *= 2.0;
    for (int i = 0; i < 600 && student_t_cdf(hi, nu) < p; ++i) hi *= 2.0;
    double mid = 0.0;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        double f = student_t_cdf(mid, nu);
        if (std::fabs(f - p) < 1e-12) break;
        (f < p ? lo : hi) = mid;
    }
    return mid;
}

GaussianCopulaPanel gen_gaussian_copula(double rho, const std::vector<MixtureParams>& marginals,
                                        int n, std::uint64_t seed) {
    const int d = static_cast<int>(marginals.size());
    if (d < 1) throw DataError("gaussian copula: need at least one marginal");
    for (const MixtureParams& m : marginals) m.validate();
    Eigen::MatrixXd chol = equicorrelated_cholesky(rho, d);

    Rng rng(seed, "synth/gaussian-copula");
    GaussianCopulaPanel out;
    out.rho = rho;
    out.true_u.resize(n, d);
    Eigen::MatrixXd y(n, d);
    Eigen::VectorXd eps(d);
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < d; ++i) eps[i] = rng.normal();
        Eigen::VectorXd z = chol * eps;
        for (int i = 0; i < d; ++i) {
            double u = std_normal_cdf(z[i]);
            u = std::min(1.0 - 1e-12, std::max(1e-12, u));
            out.true_u(t, i) = u;
            y(t, i) = mixture_inverse_cdf(marginals[i], u);
        }
    }
    out.panel = panel_from_returns(y, 600);
    return out;
}

Eigen::MatrixXd gen_clayton(double theta, int d, int n, std::uint64_t seed) {
    if (!(theta > 0.0)) throw DataError("clayton: theta must be positive");
    Rng rng(seed, "synth/clayton");
    Eigen::MatrixXd u(n, d);
    for (int t = 0; t < n; ++t) {
        double w = rng.gamma(1.0 / theta);
        for (int i = 0; i < d; ++i) {
            double e = rng.exponential();
            u(t, i) = std::pow(1.0 + e / w, -1.0 / theta);
        }
    }
    return u;
}

ArVolPanel gen_ar_vol_panel(int d, int n, std::uint64_t seed, const ArVolSpec& spec) {
    if (n < 1000) throw DataError("ar-vol panel: need n >= 1000");
    if (!(spec.arch + spec.persist < 1.0)) throw DataError("ar-vol panel: nonstationary (a+b >= 1)");
    if (!(spec.nu > 2.0)) throw DataError("ar-vol panel: nu must exceed 2");

    const double tscale = std::sqrt((spec.nu - 2.0) / spec.nu);  // unit-variance innovations
    Eigen::MatrixXd chol =
        d > 1 ? equicorrelated_cholesky(spec.rho, d) : Eigen::MatrixXd::Identity(1, 1);

    Rng rng(seed, "synth/ar-vol");
    ArVolPanel out;
    out.spec = spec;
    out.sigma.resize(n, d);
    out.cond_log_density.resize(n, d);
    out.true_u.resize(n, d);

    Eigen::MatrixXd y(n, d);
    Eigen::VectorXd var =
        Eigen::VectorXd::Constant(d, spec.omega / (1.0 - spec.arch - spec.persist));
    Eigen::VectorXd raw(d);
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < d; ++i) raw[i] = rng.normal();
        Eigen::VectorXd z = chol * raw;
        for (int i = 0; i < d; ++i) {
            double u = std_normal_cdf(z[i]);
            u = std::min(1.0 - 1e-12, std::max(1e-12, u));
            out.true_u(t, i) = u;
            double tq = student_t_quantile(u, spec.nu);
            double eps = tq * tscale;
            double sd = std::sqrt(var[i]);
            out.sigma(t, i) = sd;
            y(t, i) = sd * eps;
            // log p(y | sigma) for the unit-variance scaled-t innovation.
            out.cond_log_density(t, i) =
                student_t_log_pdf(tq, spec.nu) - std::log(tscale) - std::log(sd);
            var[i] = spec.omega + spec.arch * y(t, i) * y(t, i) + spec.persist * var[i];
        }
    }
    out.panel = panel_from_returns(y, 600);
    return out;
}

}  // namespace dcf
