#pragma once

#include <functional>

namespace alleles {

/// exp(z^2) erfc(z) for z >= 0, accurate for large z.
double erfcx(double z);

double normal_cdf(double z);

/// Adaptive Gauss-Kronrod (7/15 points) quadrature of f on [a, b] to the
/// given absolute tolerance. b may be +infinity.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10);

/// Integral over [a, b] of a function with a y^{-1/2} type singularity at 0
/// (a >= 0), computed after substituting y = s^2.
double integrate_sqrt_substituted(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol = 1e-10);

}  // namespace alleles
