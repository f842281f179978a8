#pragma once

namespace flexembed::special {

/// Regularized incomplete beta I_x(a, b).
double regularized_beta(double a, double b, double x);

/// Regularized lower / upper incomplete gamma P(a, x), Q(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

/// Survival functions of the F and χ² distributions.
double f_survival(double f, double d1, double d2);
double chi_square_survival(double x, double df);

}  // namespace flexembed::special
