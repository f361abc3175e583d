#pragma once

namespace recnn {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Chi-square CDF, P(dof / 2, z / 2). z must be >= 0.
double chisq_cdf(double z, double dof);

}  // namespace recnn
