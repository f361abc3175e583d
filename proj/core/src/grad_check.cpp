#include "recnn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "recnn/error.hpp"

namespace recnn {

double compare_with_central_differences(const std::function<double()>& f, Tensor& x,
                                        const Tensor& analytic, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("grad_check: step must be positive");
  if (analytic.shape() != x.shape()) {
    throw DimensionError("grad_check: gradient shape " + to_string(analytic.shape()) +
                         " does not match input " + to_string(x.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f();
    x[i] = saved - h;
    const double fm = f();
    x[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("grad_check: non-finite function value at coordinate " +
                           std::to_string(i));
    }
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

double grad_check(const TapeFunction& f, const Tensor& x, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("grad_check: step must be positive");
  Tensor analytic;
  {
    Tape tape;
    Var in = tape.leaf(x);
    Var out = f(tape, in);
    if (!std::isfinite(out.value().item())) {
      throw NumericalError("grad_check: non-finite function value");
    }
    tape.backward(out);
    analytic = tape.grad(in);
  }
  Tensor probe = x;
  auto eval = [&]() {
    Tape tape;
    return f(tape, tape.constant(probe)).value().item();
  };
  return compare_with_central_differences(eval, probe, analytic, h);
}

}  // namespace recnn
