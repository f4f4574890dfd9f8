#pragma once

#include <array>
#include <Eigen/Dense>

#include "dcf/rng.hpp"

namespace dcf {

enum class Family { Normal, Laplace, StudentT };

// Heterogeneous 9-component mixture: three Normal, three Laplace, three
// Student-t components in that fixed order. sigma is the stdev for Normal
// components and the scale for Laplace/Student-t; nu applies to the three
// Student-t components only.
struct MixtureParams {
    static constexpr int kComponents = 9;
    static constexpr int kStudentT = 3;

    Eigen::Matrix<double, 9, 1> weights;
    Eigen::Matrix<double, 9, 1> locations;
    Eigen::Matrix<double, 9, 1> scales;
    Eigen::Matrix<double, 3, 1> dofs;

    static Family family(int k) {
        return k < 3 ? Family::Normal : (k < 6 ? Family::Laplace : Family::StudentT);
    }

    // weights sum to 1 (1e-9), all weights > 0, scales > 0, dofs > 2.
    void validate() const;

    // Single-component helper used all over the tests.
    static MixtureParams single(Family f, double mu, double sigma, double nu = 5.0);
};

double mixture_log_pdf(const MixtureParams& params, double y);

double mixture_cdf(const MixtureParams& params, double y);

// Bracketed bisection on mixture_cdf; stops at |F(y) - u| < 1e-10.
double mixture_inverse_cdf(const MixtureParams& params, double u);

double mixture_sample(const MixtureParams& params, Rng& rng);

Eigen::VectorXd mixture_sample(const MixtureParams& params, int n, Rng& rng);

}  // namespace dcf
