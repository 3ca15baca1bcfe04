#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sgmcmc {

// Standard normal CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse standard normal CDF, Wichura's AS 241 (PPND16) rational
// approximation, accurate to full double precision.
double norm_quantile(double p);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Adaptive Gauss-Kronrod (G7, K15) integration of f over [a, b] to absolute
// tolerance abs_tol. Throws std::runtime_error if the refinement cannot reach
// the tolerance.
QuadratureResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                              double abs_tol);

struct MinimizeResult {
  double argmin = 0.0;
  double value = 0.0;
};

// Golden-section minimization of a unimodal f over [a, b]; stops when the
// bracket width drops below x_tol.
MinimizeResult golden_section_min(const std::function<double(double)>& f, double a, double b,
                                  double x_tol);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares y = slope*x + intercept.
OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sgmcmc
