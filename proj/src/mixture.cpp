#include "dcf/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dcf/error.hpp"
#include "dcf/special.hpp"

namespace dcf {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double component_log_pdf(const MixtureParams& p, int k, double y) {
    const double mu = p.locations[k];
    const double s = p.scales[k];
    const double t = (y - mu) / s;
    switch (MixtureParams::family(k)) {
        case Family::Normal:
            return -0.5 * t * t - std::log(s) - kLogSqrt2Pi;
        case Family::Laplace:
            return -std::fabs(t) - std::log(2.0 * s);
        case Family::StudentT:
            return student_t_log_pdf(t, p.dofs[k - 6]) - std::log(s);
    }
    return 0.0;
}

double component_cdf(const MixtureParams& p, int k, double y) {
    const double mu = p.locations[k];
    const double s = p.scales[k];
    const double t = (y - mu) / s;
    switch (MixtureParams::family(k)) {
        case Family::Normal:
            return std_normal_cdf(t);
        case Family::Laplace:
            return t < 0.0 ? 0.5 * std::exp(t) : 1.0 - 0.5 * std::exp(-t);
        case Family::StudentT:
            return student_t_cdf(t, p.dofs[k - 6]);
    }
    return 0.0;
}

}  // namespace

void MixtureParams::validate() const {
    double total = 0.0;
    for (int k = 0; k < kComponents; ++k) {
        if (!(weights[k] > 0.0)) throw Error("mixture: weights must be positive");
        if (!(scales[k] > 0.0)) throw Error("mixture: scales must be positive");
        if (!std::isfinite(locations[k])) throw Error("mixture: non-finite location");
        total += weights[k];
    }
    for (int j = 0; j < kStudentT; ++j)
        if (!(dofs[j] > 2.0)) throw Error("mixture: dof must exceed 2");
    if (std::fabs(total - 1.0) > 1e-9) throw Error("mixture: weights must sum to 1");
}

MixtureParams MixtureParams::single(Family f, double mu, double sigma, double nu) {
    MixtureParams p;
    // Inactive components get a vanishing share of the mass and unit shape.
    const double eps = 1e-12;
    p.weights.setConstant(eps);
    p.locations.setZero();
    p.scales.setOnes();
    p.dofs.setConstant(nu);
    int k = f == Family::Normal ? 0 : (f == Family::Laplace ? 3 : 6);
    p.weights[k] = 1.0 - 8.0 * eps;
    p.locations[k] = mu;
    p.scales[k] = sigma;
    return p;
}

double mixture_log_pdf(const MixtureParams& p, double y) {
    p.validate();
    if (!std::isfinite(y)) throw Error("mixture_log_pdf: non-finite y");
    std::array<double, MixtureParams::kComponents> terms;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < MixtureParams::kComponents; ++k) {
        terms[k] = std::log(p.weights[k]) + component_log_pdf(p, k, y);
        best = std::max(best, terms[k]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
}

double mixture_cdf(const MixtureParams& p, double y) {
    p.validate();
    double acc = 0.0;
    for (int k = 0; k < MixtureParams::kComponents; ++k)
        acc += p.weights[k] * component_cdf(p, k, y);
    return std::min(1.0, std::max(0.0, acc));
}

double mixture_inverse_cdf(const MixtureParams& p, double u) {
    p.validate();
    if (!(u > 0.0 && u < 1.0)) throw Error("mixture_inverse_cdf: u must lie in (0,1)");

    // Student-t tails reach far beyond 60 sigma; inflate their share of the
    // initial bracket, then double until it straddles u.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < MixtureParams::kComponents; ++k) {
        double inflate = MixtureParams::family(k) == Family::StudentT ? 5.0 : 1.0;
        lo = std::min(lo, p.locations[k] - 60.0 * p.scales[k] * inflate);
        hi = std::max(hi, p.locations[k] + 60.0 * p.scales[k] * inflate);
    }
    double center = 0.5 * (lo + hi);
    for (int i = 0; i < 600 && mixture_cdf(p, lo) > u; ++i) lo = center - 2.0 * (center - lo);
    for (int i = 0; i < 600 && mixture_cdf(p, hi) < u; ++i) hi = center + 2.0 * (hi - center);

    double mid = center;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        double f = mixture_cdf(p, mid);
        if (std::fabs(f - u) < 1e-10) break;
        if (f < u)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

double mixture_sample(const MixtureParams& p, Rng& rng) {
    double u = rng.uniform();
    int k = 0;
    double acc = 0.0;
    for (; k < MixtureParams::kComponents; ++k) {
        acc += p.weights[k];
        if (u <= acc) break;
    }
    if (k == MixtureParams::kComponents) k -= 1;

    const double mu = p.locations[k];
    const double s = p.scales[k];
    switch (MixtureParams::family(k)) {
        case Family::Normal:
            return mu + s * rng.normal();
        case Family::Laplace: {
            double v = rng.uniform() - 0.5;
            return mu - s * (v < 0.0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::fabs(v));
        }
        case Family::StudentT: {
            double nu = p.dofs[k - 6];
            double z = rng.normal();
            double chi2 = 2.0 * rng.gamma(0.5 * nu);
            return mu + s * z / std::sqrt(chi2 / nu);
        }
    }
    return mu;
}

Eigen::VectorXd mixture_sample(const MixtureParams& p, int n, Rng& rng) {
    p.validate();
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) out[i] = mixture_sample(p, rng);
    return out;
}

}  // namespace dcf
