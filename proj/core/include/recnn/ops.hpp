#pragma once

#include <cstddef>

#include "recnn/tape.hpp"

namespace recnn {

enum class ElementwiseOp { add, sub, mul, sigmoid, tanh };

/// [m x k] * [k x n] -> [m x n].
Var matmul(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
/// 1 - a
Var one_minus(const Var& a);
Var scale(const Var& a, double factor);

/// Dispatcher over the elementwise family; `b` is required for binary ops
/// and ignored for unary ones.
Var elementwise(ElementwiseOp op, const Var& a, const Var& b = {});

/// Column vector [m] or [m x 1] replicated into [m x n]. Stands in for
/// broadcasting, which is not supported.
Var replicate_cols(const Var& v, std::size_t n);

Var reshape(const Var& a, Shape shape);
/// Rank-2 transpose.
Var transpose(const Var& a);
/// Column-wise softmax of a [C x N] matrix.
Var softmax_cols(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);

}  // namespace recnn
