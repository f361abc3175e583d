#include "recnn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "recnn/error.hpp"

namespace recnn {

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ValidationError("operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw ValidationError("operands recorded on different tapes");
  return t;
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                         " vs " + to_string(b.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Accumulates `g` (times `factor`) into the gradient of node `id` if it
// takes part in differentiation.
void accumulate(Tape& tape, std::size_t id, std::span<const double> g, double factor = 1.0) {
  if (!tape.requires_grad(id)) return;
  auto dst = tape.grad_buffer(id).data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * g[i];
}

template <class F>
Var unary(const Var& a, F forward_fn, Tape::BackwardFn backward) {
  Tape& tape = tape_of(a);
  Tensor out = a.value();
  for (auto& v : out.data()) v = forward_fn(v);
  return tape.record(std::move(out), {a.id()}, std::move(backward));
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& tape = tape_of(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + to_string(A.shape()) + " by " +
                         to_string(B.shape()));
  }
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor C({m, n}, 0.0);
  const double* pa = A.data().data();
  const double* pb = B.data().data();
  double* pc = C.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(C), {ia, ib}, [ia, ib, m, k, n](const Tensor& g, Tape& t) {
    const double* pa = t.value(ia).data().data();
    const double* pb = t.value(ib).data().data();
    const double* pg = g.data().data();
    if (t.requires_grad(ia)) {
      // dA += G * B^T
      double* da = t.grad_buffer(ia).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += pg[i * n + j] * pb[p * n + j];
          da[i * k + p] += s;
        }
      }
    }
    if (t.requires_grad(ib)) {
      // dB += A^T * G
      double* db = t.grad_buffer(ib).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa[i * k + p];
          for (std::size_t j = 0; j < n; ++j) db[p * n + j] += av * pg[i * n + j];
        }
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  Tape& tape = tape_of(a, b);
  require_same_shape("add", a, b);
  Tensor out = a.value();
  auto bv = b.value().data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](const Tensor& g, Tape& t) {
    accumulate(t, ia, g.data());
    accumulate(t, ib, g.data());
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = tape_of(a, b);
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  auto bv = b.value().data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](const Tensor& g, Tape& t) {
    accumulate(t, ia, g.data());
    accumulate(t, ib, g.data(), -1.0);
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& tape = tape_of(a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  auto bv = b.value().data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](const Tensor& g, Tape& t) {
    auto gv = g.data();
    if (t.requires_grad(ia)) {
      auto d = t.grad_buffer(ia).data();
      auto other = t.value(ib).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * other[i];
    }
    if (t.requires_grad(ib)) {
      auto d = t.grad_buffer(ib).data();
      auto other = t.value(ia).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * other[i];
    }
  });
}

Var sigmoid(const Var& a) {
  const std::size_t ia = a.id();
  const std::size_t self = a.tape() ? a.tape()->size() : 0;
  return unary(a, stable_sigmoid, [ia, self](const Tensor& g, Tape& t) {
    if (!t.requires_grad(ia)) return;
    auto y = t.value(self).data();
    auto gv = g.data();
    auto d = t.grad_buffer(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(const Var& a) {
  const std::size_t ia = a.id();
  const std::size_t self = a.tape() ? a.tape()->size() : 0;
  return unary(a, [](double x) { return std::tanh(x); }, [ia, self](const Tensor& g, Tape& t) {
    if (!t.requires_grad(ia)) return;
    auto y = t.value(self).data();
    auto gv = g.data();
    auto d = t.grad_buffer(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gv[i] * (1.0 - y[i] * y[i]);
  });
}

Var relu(const Var& a) {
  const std::size_t ia = a.id();
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [ia](const Tensor& g, Tape& t) {
    if (!t.requires_grad(ia)) return;
    auto x = t.value(ia).data();
    auto gv = g.data();
    auto d = t.grad_buffer(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += x[i] > 0.0 ? gv[i] : 0.0;
  });
}

Var one_minus(const Var& a) {
  const std::size_t ia = a.id();
  return unary(a, [](double x) { return 1.0 - x; },
               [ia](const Tensor& g, Tape& t) { accumulate(t, ia, g.data(), -1.0); });
}

Var scale(const Var& a, double factor) {
  const std::size_t ia = a.id();
  return unary(a, [factor](double x) { return factor * x; },
               [ia, factor](const Tensor& g, Tape& t) { accumulate(t, ia, g.data(), factor); });
}

Var elementwise(ElementwiseOp op, const Var& a, const Var& b) {
  switch (op) {
    case ElementwiseOp::add: return add(a, b);
    case ElementwiseOp::sub: return sub(a, b);
    case ElementwiseOp::mul: return mul(a, b);
    case ElementwiseOp::sigmoid: return sigmoid(a);
    case ElementwiseOp::tanh: return tanh(a);
  }
  throw ValidationError("unknown elementwise op");
}

Var replicate_cols(const Var& v, std::size_t n) {
  Tape& tape = tape_of(v);
  const Tensor& x = v.value();
  const bool column = x.rank() == 1 || (x.rank() == 2 && x.dim(1) == 1);
  if (!column || n == 0) {
    throw DimensionError("replicate_cols expects a column vector, got " + to_string(x.shape()));
  }
  const std::size_t m = x.dim(0);
  Tensor out({m, n});
  for (std::size_t r = 0; r < m; ++r) {
    std::fill_n(out.data().begin() + static_cast<std::ptrdiff_t>(r * n), n, x[r]);
  }
  const std::size_t iv = v.id();
  return tape.record(std::move(out), {iv}, [iv, m, n](const Tensor& g, Tape& t) {
    if (!t.requires_grad(iv)) return;
    auto d = t.grad_buffer(iv).data();
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += g[r * n + c];
      d[r] += s;
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tape& tape = tape_of(a);
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id();
  return tape.record(std::move(out), {ia},
                     [ia](const Tensor& g, Tape& t) { accumulate(t, ia, g.data()); });
}

Var transpose(const Var& a) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  if (x.rank() != 2) throw DimensionError("transpose expects rank 2, got " + to_string(x.shape()));
  const std::size_t r = x.dim(0), c = x.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  const std::size_t ia = a.id();
  return tape.record(std::move(out), {ia}, [ia, r, c](const Tensor& g, Tape& t) {
    if (!t.requires_grad(ia)) return;
    auto d = t.grad_buffer(ia).data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) d[i * c + j] += g[j * r + i];
  });
}

Var softmax_cols(const Var& a) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  if (x.rank() != 2) throw DimensionError("softmax_cols expects rank 2, got " + to_string(x.shape()));
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  Tensor out({rows, cols});
  for (std::size_t j = 0; j < cols; ++j) {
    double mx = x[j];
    for (std::size_t i = 1; i < rows; ++i) mx = std::max(mx, x[i * cols + j]);
    double z = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      out[i * cols + j] = std::exp(x[i * cols + j] - mx);
      z += out[i * cols + j];
    }
    for (std::size_t i = 0; i < rows; ++i) out[i * cols + j] /= z;
  }
  const std::size_t ia = a.id();
  const std::size_t self = tape.size();
  return tape.record(std::move(out), {ia}, [ia, self, rows, cols](const Tensor& g, Tape& t) {
    if (!t.requires_grad(ia)) return;
    const Tensor& y = t.value(self);
    auto d = t.grad_buffer(ia).data();
    for (std::size_t j = 0; j < cols; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < rows; ++i) dot += g[i * cols + j] * y[i * cols + j];
      for (std::size_t i = 0; i < rows; ++i)
        d[i * cols + j] += y[i * cols + j] * (g[i * cols + j] - dot);
    }
  });
}

Var sum(const Var& a) {
  Tape& tape = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return tape.record(Tensor::scalar(s), {ia}, [ia](const Tensor& g, Tape& t) {
    if (!t.requires_grad(ia)) return;
    for (auto& d : t.grad_buffer(ia).data()) d += g[0];
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

}  // namespace recnn
