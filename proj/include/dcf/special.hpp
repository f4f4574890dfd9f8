#pragma once

namespace dcf {

double std_normal_pdf(double x);

// Phi via erfc; absolute error below 1e-15 over the double range.
double std_normal_cdf(double x);

// Rational approximation refined by one Newton step on the erfc-based CDF.
// |Phi(inv(p)) - p| < 1e-12 for p in (0,1). Throws outside (0,1).
double std_normal_inv_cdf(double p);

// Lanczos (g = 7, 9 coefficients), valid for x > 0. Matches std::lgamma to
// ~1e-13 relative on the range used here; also the tape primitive's kernel.
double lgamma_lanczos(double x);

// Analytic derivative of lgamma_lanczos (same approximation differentiated).
double digamma_lanczos(double x);

// Regularized incomplete beta I_x(a, b), modified-Lentz continued fraction.
double reg_incomplete_beta(double x, double a, double b);

// CDF of the standard Student-t with nu degrees of freedom.
double student_t_cdf(double t, double nu);

double student_t_log_pdf(double t, double nu);

}  // namespace dcf
