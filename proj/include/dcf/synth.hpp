#pragma once

#include <cstdint>
#include <vector>

#include "dcf/ingest.hpp"
#include "dcf/mixture.hpp"

namespace dcf {

// Generators with known ground truth; they stand in for market data wherever
// an exact oracle is needed.

struct GaussianCopulaPanel {
    AlignedPanel panel;
    Eigen::MatrixXd true_u;  // one row per usable return (panel rows 1..N)
    double rho = 0.0;
};

// Equicorrelated Gaussian copula, arbitrary mixture marginals per asset.
// n is the number of usable returns; the panel carries one extra base row.
GaussianCopulaPanel gen_gaussian_copula(double rho, const std::vector<MixtureParams>& marginals,
                                        int n, std::uint64_t seed);

// Clayton copula via gamma-frailty sampling; lower tail dependence 2^(-1/theta).
Eigen::MatrixXd gen_clayton(double theta, int d, int n, std::uint64_t seed);

struct ArVolSpec {
    double omega = 1e-6;
    double arch = 0.1;      // weight on y_{t-1}^2
    double persist = 0.85;  // weight on sigma_{t-1}^2
    double nu = 5.0;        // Student-t innovations, scaled to unit variance
    double rho = 0.5;       // Gaussian copula across assets (ignored for d=1)
};

struct ArVolPanel {
    AlignedPanel panel;
    Eigen::MatrixXd sigma;             // conditional vol per usable return
    Eigen::MatrixXd cond_log_density;  // exact log p(y_t | history) per asset
    Eigen::MatrixXd true_u;            // innovation copula values
    ArVolSpec spec;
};

// Volatility-clustered returns with heavy-tailed innovations and an exposed
// exact conditional law.
ArVolPanel gen_ar_vol_panel(int d, int n, std::uint64_t seed, const ArVolSpec& spec = {});

// Unit-variance Student-t marginal with the given standard deviation, as a
// single-component mixture. Used as the default synthetic marginal.
MixtureParams scaled_student_t_marginal(double sd, double nu = 5.0);

// Quantile of the standard Student-t; bisection on the CDF.
double student_t_quantile(double p, double nu);

}  // namespace dcf
