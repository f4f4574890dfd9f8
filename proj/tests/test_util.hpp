#pragma once

// Shared test oracles. Everything here recomputes expectations through an
// independent route (quadrature, enumeration, brute force); nothing calls the
// implementation path it is used to check.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace testutil {

// Adaptive Simpson quadrature.
inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fb, double fm, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) < 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int depth = 60) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fb, fm, whole, tol, depth);
}

// Integral of a density over (-inf, y] via the tangent compactification
// x = center + scale * tan(theta); handles heavy tails.
inline double integrate_left_tail(const std::function<double(double)>& pdf, double y,
                                  double center, double scale, double tol = 1e-12) {
    auto g = [&](double theta) {
        double c = std::cos(theta);
        double x = center + scale * std::tan(theta);
        double jac = scale / (c * c);
        double v = pdf(x) * jac;
        return std::isfinite(v) ? v : 0.0;
    };
    const double lo = -1.5707963267948966 + 1e-9;
    double hi = std::atan((y - center) / scale);
    return integrate(g, lo, hi, tol);
}

// Straight-line binomial pmf.
inline double binomial_pmf(int n, int k, double p) {
    double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return std::exp(logc + k * std::log(p) + (n - k) * std::log1p(-p));
}

// Spearman rho of two columns by explicit rank-and-correlate, O(n^2) rank
// computation so it shares nothing with the library implementation.
inline double spearman_bruteforce(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.size();
    auto rank = [n](const Eigen::VectorXd& v) {
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double less = 0, equal = 0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (v[j] < v[i]) ++less;
                if (v[j] == v[i]) ++equal;
            }
            r[i] = less + 0.5 * (equal + 1);
        }
        return r;
    };
    Eigen::VectorXd rx = rank(x), ry = rank(y);
    double mx = rx.mean(), my = ry.mean();
    double num = ((rx.array() - mx) * (ry.array() - my)).sum();
    double den = std::sqrt((rx.array() - mx).square().sum() * (ry.array() - my).square().sum());
    return num / den;
}

}  // namespace testutil
