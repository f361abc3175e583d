#include "recnn/chisq.hpp"

#include <cmath>
#include <limits>

#include "recnn/error.hpp"

namespace recnn {

namespace {

constexpr int kMaxIter = 1000;
constexpr double kEps = 1e-16;

// Series sum_{n>=0} x^n / (a (a+1) ... (a+n)), good for x < a + 1.
double series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), good for x >= a + 1.
double continued_fraction(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw ValidationError("gamma_p: shape must be positive");
  if (!(x >= 0.0)) throw ValidationError("gamma_p: argument must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return series(a, x);
  return 1.0 - continued_fraction(a, x);
}

double chisq_cdf(double z, double dof) {
  if (!(dof >= 1.0)) throw ValidationError("chisq_cdf: dof must be >= 1");
  if (!(z >= 0.0)) throw ValidationError("chisq_cdf: z must be >= 0, got " + std::to_string(z));
  return gamma_p(0.5 * dof, 0.5 * z);
}

}  // namespace recnn
