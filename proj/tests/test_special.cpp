#include <doctest.h>

#include <cmath>

#include "dcf/special.hpp"
#include "test_util.hpp"

using namespace dcf;

TEST_CASE("standard normal cdf basics") {
    CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std_normal_cdf(1e3) == doctest::Approx(1.0));
    CHECK(std_normal_cdf(-40.0) >= 0.0);
    // Quadrature of the density as an independent check.
    double q = testutil::integrate_left_tail([](double x) { return std_normal_pdf(x); }, 1.3,
                                             0.0, 1.0);
    CHECK(std::fabs(std_normal_cdf(1.3) - q) < 1e-10);
}

TEST_CASE("inverse normal cdf roundtrip below 1e-12") {
    CHECK(std_normal_inv_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    for (double p : {1e-10, 1e-6, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.999999, 1.0 - 1e-10}) {
        double x = std_normal_inv_cdf(p);
        CHECK(std::fabs(std_normal_cdf(x) - p) < 1e-12);
    }
    CHECK_THROWS(std_normal_inv_cdf(0.0));
    CHECK_THROWS(std_normal_inv_cdf(1.0));
}

TEST_CASE("inverse normal at 0.975 against bisection oracle") {
    // Bisection on the erf-based CDF, fully independent of the rational fit.
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (std_normal_cdf(mid) < 0.975 ? lo : hi) = mid;
    }
    CHECK(std::fabs(std_normal_inv_cdf(0.975) - 0.5 * (lo + hi)) < 1e-6);
    CHECK(std_normal_inv_cdf(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
}

TEST_CASE("lanczos lgamma and digamma") {
    for (double x : {0.7, 1.0, 1.5, 2.0, 3.25, 7.0, 12.5, 51.0, 101.0}) {
        CHECK(lgamma_lanczos(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-12));
        double h = 1e-6;
        double fd = (lgamma_lanczos(x + h) - lgamma_lanczos(x - h)) / (2.0 * h);
        CHECK(digamma_lanczos(x) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("regularized incomplete beta") {
    CHECK(reg_incomplete_beta(0.0, 2.0, 3.0) == 0.0);
    CHECK(reg_incomplete_beta(1.0, 2.0, 3.0) == 1.0);
    // I_x(1,1) = x, I_x(2,1) = x^2.
    CHECK(reg_incomplete_beta(0.37, 1.0, 1.0) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(reg_incomplete_beta(0.37, 2.0, 1.0) == doctest::Approx(0.37 * 0.37).epsilon(1e-12));
    // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    CHECK(reg_incomplete_beta(0.3, 2.5, 4.5) ==
          doctest::Approx(1.0 - reg_incomplete_beta(0.7, 4.5, 2.5)).epsilon(1e-12));
}

TEST_CASE("student t cdf against density quadrature") {
    for (double nu : {2.5, 5.0, 30.0}) {
        for (double t : {-3.0, -0.5, 0.0, 1.7}) {
            double q = testutil::integrate_left_tail(
                [nu](double x) { return std::exp(student_t_log_pdf(x, nu)); }, t, 0.0, 1.0);
            CHECK(std::fabs(student_t_cdf(t, nu) - q) < 1e-9);
        }
    }
    CHECK(student_t_cdf(0.0, 7.0) == doctest::Approx(0.5).epsilon(1e-14));
    // nu -> infinity approaches the normal.
    CHECK(student_t_cdf(1.0, 1e6) == doctest::Approx(std_normal_cdf(1.0)).epsilon(1e-5));
}
