#include <doctest.h>

#include <cmath>

#include "dcf/error.hpp"
#include "dcf/metrics.hpp"
#include "dcf/mixture.hpp"
#include "test_util.hpp"

using namespace dcf;

namespace {

MixtureParams random_params(Rng& rng) {
    MixtureParams p;
    double total = 0.0;
    for (int k = 0; k < 9; ++k) {
        p.weights[k] = rng.uniform(0.05, 1.0);
        total += p.weights[k];
        p.locations[k] = rng.uniform(-0.5, 0.5);
        p.scales[k] = rng.uniform(0.05, 0.6);
    }
    p.weights /= total;
    for (int j = 0; j < 3; ++j) p.dofs[j] = 2.0 + rng.uniform(0.3, 20.0);
    return p;
}

}  // namespace

TEST_CASE("mixture_log_pdf single-component anchors") {
    auto normal = MixtureParams::single(Family::Normal, 0.0, 1.0);
    CHECK(mixture_log_pdf(normal, 0.0) == doctest::Approx(-0.9189385332).epsilon(1e-9));
    auto laplace = MixtureParams::single(Family::Laplace, 0.0, 1.0);
    CHECK(mixture_log_pdf(laplace, 0.0) == doctest::Approx(-0.6931471806).epsilon(1e-9));
}

TEST_CASE("mixture_log_pdf matches componentwise direct sum") {
    Rng rng(5, "mixture-pdf");
    MixtureParams p = random_params(rng);
    double y = 0.3;
    // Direct densities, no log-sum-exp.
    double acc = 0.0;
    for (int k = 0; k < 9; ++k) {
        double t = (y - p.locations[k]) / p.scales[k];
        double f;
        if (k < 3)
            f = std::exp(-0.5 * t * t) / (p.scales[k] * std::sqrt(2.0 * M_PI));
        else if (k < 6)
            f = std::exp(-std::fabs(t)) / (2.0 * p.scales[k]);
        else {
            double nu = p.dofs[k - 6];
            f = std::exp(std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu)) /
                (std::sqrt(nu * M_PI) * p.scales[k]) *
                std::pow(1.0 + t * t / nu, -0.5 * (nu + 1.0));
        }
        acc += p.weights[k] * f;
    }
    CHECK(mixture_log_pdf(p, y) == doctest::Approx(std::log(acc)).epsilon(1e-10));
    CHECK(std::isfinite(mixture_log_pdf(p, 1e6)));

    MixtureParams bad = p;
    bad.scales[2] = -1.0;
    CHECK_THROWS_AS(mixture_log_pdf(bad, 0.0), Error);
}

TEST_CASE("mixture_cdf symmetry, limits, quadrature oracle") {
    Rng rng(6, "mixture-cdf");
    // All-centered mixture is symmetric around zero.
    MixtureParams sym = random_params(rng);
    sym.locations.setZero();
    CHECK(mixture_cdf(sym, 0.0) == doctest::Approx(0.5).epsilon(1e-12));

    double far_left = -50.0 * sym.scales.maxCoeff() * 50.0;
    CHECK(mixture_cdf(sym, far_left) < 1e-6);

    for (int trial = 0; trial < 12; ++trial) {
        MixtureParams p = random_params(rng);
        double center = p.locations.mean();
        double scale = p.scales.maxCoeff();
        for (double y : {-0.8, -0.1, 0.25, 1.2}) {
            double oracle = testutil::integrate_left_tail(
                [&](double x) { return std::exp(mixture_log_pdf(p, x)); }, y, center, scale);
            CHECK(std::fabs(mixture_cdf(p, y) - oracle) < 1e-8);
        }
    }
}

TEST_CASE("mixture_cdf is monotone and differentiates back to the pdf") {
    Rng rng(7, "mixture-mono");
    MixtureParams p = random_params(rng);
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
        double y = -3.0 + 6.0 * i / 100.0;
        double c = mixture_cdf(p, y);
        CHECK(c >= prev);
        prev = c;
        double h = 1e-6;
        double deriv = (mixture_cdf(p, y + h) - mixture_cdf(p, y - h)) / (2.0 * h);
        CHECK(deriv == doctest::Approx(std::exp(mixture_log_pdf(p, y))).epsilon(1e-5));
    }
    // Limits at the 60-sigma bracket edges.
    double lo = (p.locations.array() - 60.0 * p.scales.array()).minCoeff() * 5.0;
    double hi = (p.locations.array() + 60.0 * p.scales.array()).maxCoeff() * 5.0;
    CHECK(mixture_cdf(p, lo) < 1e-5);
    CHECK(mixture_cdf(p, hi) > 1.0 - 1e-5);
}

TEST_CASE("mixture_inverse_cdf anchors and roundtrip") {
    Rng rng(8, "mixture-inv");
    MixtureParams sym = random_params(rng);
    sym.locations.setZero();
    CHECK(std::fabs(mixture_inverse_cdf(sym, 0.5)) < 1e-8);

    // Affine standard normal: u = Phi(1) maps back to mu + sigma.
    auto n12 = MixtureParams::single(Family::Normal, 1.0, 2.0);
    double u = mixture_cdf(n12, 3.0);
    CHECK(mixture_inverse_cdf(n12, u) == doctest::Approx(3.0).epsilon(1e-7));

    for (int trial = 0; trial < 1000; ++trial) {
        MixtureParams p = random_params(rng);
        double uu = rng.uniform();
        double y = mixture_inverse_cdf(p, uu);
        CHECK(std::fabs(mixture_cdf(p, y) - uu) < 1e-8);
    }
    CHECK_THROWS_AS(mixture_inverse_cdf(sym, 0.0), Error);
    CHECK_THROWS_AS(mixture_inverse_cdf(sym, 1.0), Error);
}

TEST_CASE("mixture sampling: degenerate, symmetry, KS") {
    Rng rng(9, "mixture-sample");
    auto spike = MixtureParams::single(Family::Normal, 5.0, 1e-6);
    auto s = mixture_sample(spike, 200, rng);
    CHECK((s.array() - 5.0).abs().maxCoeff() < 1e-4);

    MixtureParams sym = random_params(rng);
    sym.locations.setZero();
    int n = 20000;
    auto draws = mixture_sample(sym, n, rng);
    double sd = std::sqrt((draws.array() - draws.mean()).square().mean());
    CHECK(std::fabs(draws.mean()) < 5.0 * sd / std::sqrt(static_cast<double>(n)));

    // Empirical CDF against mixture_cdf via the PIT + KS route.
    MixtureParams p = random_params(rng);
    int m = 100000;
    auto x = mixture_sample(p, m, rng);
    Eigen::VectorXd u(m);
    for (int i = 0; i < m; ++i) u[i] = mixture_cdf(p, x[i]);
    CHECK(ks_uniform(u) < 0.01);
}

TEST_CASE("invariants: weights and dofs validated") {
    Rng rng(10, "mixture-valid");
    MixtureParams p = random_params(rng);
    p.weights[0] += 0.1;  // sums past 1
    CHECK_THROWS_AS(p.validate(), Error);
    MixtureParams q = random_params(rng);
    q.dofs[1] = 2.0;  // must be strictly above 2
    CHECK_THROWS_AS(q.validate(), Error);
}
