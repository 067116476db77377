#pragma once

#include <functional>

namespace sqr {

/// Adaptive Gauss-Kronrod (G7, K15) integration of f over [a, b] to the
/// given absolute tolerance. Throws NonConvergence if the recursion depth
/// budget is exhausted before the error estimate drops below tolerance.
double integrate_adaptive(const std::function<double(double)>& f,
                          double a, double b, double abs_tol);

/// log of the integral of exp(g) over the finite interval [a, b], evaluated
/// with an internal shift so that the integrand never overflows. `log_tol`
/// is the absolute tolerance on the returned log value.
double log_integral_exp(const std::function<double(double)>& g,
                        double a, double b, double log_tol);

}  // namespace sqr
