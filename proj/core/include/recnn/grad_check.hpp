#pragma once

#include <functional>

#include "recnn/tape.hpp"

namespace recnn {

/// Scalar function of one tensor, recorded on the supplied tape.
using TapeFunction = std::function<Var(Tape&, const Var&)>;

/// Maximum over coordinates of |analytic - numeric| / max(1, |analytic|, |numeric|),
/// where numeric is the central difference (f(x+h) - f(x-h)) / 2h.
double grad_check(const TapeFunction& f, const Tensor& x, double h = 1e-5);

/// Same measure for an already computed analytic gradient of `f` at `x`
/// where `f` is a plain scalar evaluation that may mutate and restore `x`.
double compare_with_central_differences(const std::function<double()>& f, Tensor& x,
                                        const Tensor& analytic, double h = 1e-5);

}  // namespace recnn
