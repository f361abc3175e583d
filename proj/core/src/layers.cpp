#include "recnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "recnn/error.hpp"
#include "recnn/ops.hpp"
#include "recnn/optim.hpp"

namespace recnn {

Var Binding::operator()(const Tensor& param) {
  auto it = vars_.find(&param);
  if (it != vars_.end()) return it->second;
  Var v = trainable_ ? tape_.leaf(param) : tape_.constant(param);
  vars_.emplace(&param, v);
  return v;
}

Tensor Binding::gradient(const Tensor& param) const {
  auto it = vars_.find(&param);
  if (it == vars_.end() || !tape_.has_gradients()) return Tensor(param.shape(), 0.0);
  return tape_.grad(it->second);
}

Activation parse_activation(std::string_view name) {
  if (name == "none") return Activation::none;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "softmax") return Activation::softmax;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
  }
  return "none";
}

Var conv2d_dilated(const Var& input, const Var& kernel, const Var& bias, std::size_t dilation) {
  if (!input.valid() || kernel.tape() != input.tape() || bias.tape() != input.tape()) {
    throw ValidationError("conv2d_dilated: operands must live on the same tape");
  }
  Tape& tape = *input.tape();
  const Tensor& x = input.value();
  const Tensor& k = kernel.value();
  const Tensor& b = bias.value();
  if (dilation == 0) throw ValidationError("conv2d_dilated: dilation must be >= 1");
  if (k.rank() != 4 || k.dim(2) != k.dim(3) || k.dim(2) % 2 == 0) {
    throw DimensionError("conv2d_dilated: kernel must be [O, C, 2r+1, 2r+1], got " +
                         to_string(k.shape()));
  }
  if (b.rank() != 1 || b.dim(0) != k.dim(0)) {
    throw DimensionError("conv2d_dilated: bias " + to_string(b.shape()) +
                         " does not match kernel " + to_string(k.shape()));
  }
  const bool batched = x.rank() == 4;
  if (x.rank() != 3 && !batched) {
    throw DimensionError("conv2d_dilated: input must be [C, H, W] or [N, C, H, W], got " +
                         to_string(x.shape()));
  }
  const std::size_t N = batched ? x.dim(0) : 1;
  const std::size_t C = x.dim(batched ? 1 : 0);
  const std::size_t H = x.dim(batched ? 2 : 1);
  const std::size_t W = x.dim(batched ? 3 : 2);
  const std::size_t O = k.dim(0);
  const std::size_t K = k.dim(2);
  const std::size_t r = K / 2;
  const std::size_t extent = 2 * r * dilation + 1;
  if (k.dim(1) != C) {
    throw DimensionError("conv2d_dilated: input has " + std::to_string(C) +
                         " channels, kernel expects " + std::to_string(k.dim(1)));
  }
  if (H < extent || W < extent) {
    throw DimensionError("conv2d_dilated: input " + std::to_string(H) + "x" + std::to_string(W) +
                         " is smaller than the effective kernel extent " +
                         std::to_string(extent) + "x" + std::to_string(extent));
  }
  const std::size_t Ho = H - 2 * r * dilation;
  const std::size_t Wo = W - 2 * r * dilation;
  const std::size_t l = dilation;

  Tensor out(batched ? Shape{N, O, Ho, Wo} : Shape{O, Ho, Wo});
  const double* px = x.data().data();
  const double* pk = k.data().data();
  double* po = out.data().data();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      double* plane = po + (n * O + o) * Ho * Wo;
      std::fill_n(plane, Ho * Wo, b[o]);
      for (std::size_t c = 0; c < C; ++c) {
        const double* in = px + (n * C + c) * H * W;
        for (std::size_t ky = 0; ky < K; ++ky) {
          for (std::size_t kx = 0; kx < K; ++kx) {
            const double w = pk[((o * C + c) * K + ky) * K + kx];
            for (std::size_t y = 0; y < Ho; ++y) {
              const double* row = in + (y + l * ky) * W + l * kx;
              double* orow = plane + y * Wo;
              for (std::size_t xo = 0; xo < Wo; ++xo) orow[xo] += w * row[xo];
            }
          }
        }
      }
    }
  }

  const std::size_t ix = input.id(), ik = kernel.id(), ib = bias.id();
  return tape.record(
      std::move(out), {ix, ik, ib},
      [=](const Tensor& g, Tape& t) {
        const double* pg = g.data().data();
        const double* px = t.value(ix).data().data();
        const double* pk = t.value(ik).data().data();
        const bool want_x = t.requires_grad(ix);
        const bool want_k = t.requires_grad(ik);
        double* dx = want_x ? t.grad_buffer(ix).data().data() : nullptr;
        double* dk = want_k ? t.grad_buffer(ik).data().data() : nullptr;
        if (t.requires_grad(ib)) {
          auto db = t.grad_buffer(ib).data();
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t o = 0; o < O; ++o) {
              const double* plane = pg + (n * O + o) * Ho * Wo;
              double s = 0.0;
              for (std::size_t i = 0; i < Ho * Wo; ++i) s += plane[i];
              db[o] += s;
            }
        }
        if (!want_x && !want_k) return;
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t o = 0; o < O; ++o) {
            const double* plane = pg + (n * O + o) * Ho * Wo;
            for (std::size_t c = 0; c < C; ++c) {
              const double* in = px + (n * C + c) * H * W;
              double* din = want_x ? dx + (n * C + c) * H * W : nullptr;
              for (std::size_t ky = 0; ky < K; ++ky) {
                for (std::size_t kx = 0; kx < K; ++kx) {
                  const std::size_t widx = ((o * C + c) * K + ky) * K + kx;
                  const double w = pk[widx];
                  double acc = 0.0;
                  for (std::size_t y = 0; y < Ho; ++y) {
                    const std::size_t base = (y + l * ky) * W + l * kx;
                    const double* grow = plane + y * Wo;
                    if (want_k) {
                      const double* row = in + base;
                      for (std::size_t xo = 0; xo < Wo; ++xo) acc += grow[xo] * row[xo];
                    }
                    if (want_x) {
                      double* drow = din + base;
                      for (std::size_t xo = 0; xo < Wo; ++xo) drow[xo] += w * grow[xo];
                    }
                  }
                  if (want_k) dk[widx] += acc;
                }
              }
            }
          }
        }
      });
}

DilatedConv2D DilatedConv2D::glorot(Rng& rng, std::size_t in_channels, std::size_t out_channels,
                                    std::size_t radius, std::size_t dilation) {
  if (dilation == 0) throw ValidationError("dilation must be >= 1");
  const std::size_t k = 2 * radius + 1;
  DilatedConv2D layer;
  layer.kernel = glorot_uniform(rng, in_channels * k * k, out_channels * k * k,
                                {out_channels, in_channels, k, k});
  layer.bias = Tensor({out_channels}, 0.0);
  layer.dilation = dilation;
  return layer;
}

Var DilatedConv2D::forward(Binding& bind, const Var& input) const {
  return conv2d_dilated(input, bind(kernel), bind(bias), dilation);
}

Dense Dense::glorot(Rng& rng, std::size_t in, std::size_t out) {
  Dense layer;
  layer.weight = glorot_uniform(rng, in, out, {out, in});
  layer.bias = Tensor({out}, 0.0);
  return layer;
}

Var Dense::forward(Binding& bind, const Var& x, Activation activation) const {
  return dense_forward(bind, x, *this, activation);
}

Var apply_activation(const Var& x, Activation activation) {
  switch (activation) {
    case Activation::none: return x;
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return tanh(x);
    case Activation::softmax: return softmax_cols(x);
  }
  return x;
}

Var dense_forward(Binding& bind, const Var& x, const Dense& layer, Activation activation) {
  const Shape& s = x.shape();
  const bool vector_input = s.size() == 1;
  if ((s.size() != 1 && s.size() != 2) || s[0] != layer.in_features()) {
    throw DimensionError("dense: input " + to_string(s) + " does not match layer input size " +
                         std::to_string(layer.in_features()));
  }
  const Var in = vector_input ? reshape(x, {s[0], 1}) : x;
  const std::size_t n = in.shape()[1];
  Var z = add(matmul(bind(layer.weight), in), replicate_cols(bind(layer.bias), n));
  Var y = apply_activation(z, activation);
  return vector_input ? reshape(y, {layer.out_features()}) : y;
}

namespace {

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

bool inside_clamp(double p) {
  return p >= kProbabilityClamp && p <= 1.0 - kProbabilityClamp;
}

}  // namespace

Var binary_cross_entropy(const Var& p, std::span<const std::size_t> labels) {
  if (!p.valid()) throw ValidationError("loss on an unbound Var");
  const Tensor& pv = p.value();
  if (labels.empty() || pv.size() != labels.size()) {
    throw DimensionError("binary_cross_entropy: " + std::to_string(pv.size()) +
                         " predictions for " + std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) {
      throw ValidationError("binary label out of range: " + std::to_string(labels[i]));
    }
    const double q = clamp_probability(pv[i]);
    total -= labels[i] ? std::log(q) : std::log(1.0 - q);
  }
  const double n = static_cast<double>(labels.size());
  std::vector<std::size_t> y(labels.begin(), labels.end());
  const std::size_t ip = p.id();
  return p.tape()->record(Tensor::scalar(total / n), {ip},
                          [ip, y = std::move(y), n](const Tensor& g, Tape& t) {
                            if (!t.requires_grad(ip)) return;
                            const Tensor& pv = t.value(ip);
                            auto d = t.grad_buffer(ip).data();
                            for (std::size_t i = 0; i < y.size(); ++i) {
                              const double q = pv[i];
                              if (!inside_clamp(q)) continue;
                              d[i] += g[0] * (y[i] ? -1.0 / q : 1.0 / (1.0 - q)) / n;
                            }
                          });
}

Var cross_entropy(const Var& p, std::span<const std::size_t> labels) {
  if (!p.valid()) throw ValidationError("loss on an unbound Var");
  const Tensor& pv = p.value();
  const bool column = pv.rank() == 1;
  if ((pv.rank() != 2 && !column) || labels.empty() ||
      (column ? 1 : pv.dim(1)) != labels.size()) {
    throw DimensionError("cross_entropy: predictions " + to_string(pv.shape()) + " for " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t classes = pv.dim(0);
  const std::size_t cols = labels.size();
  double total = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (labels[j] >= classes) {
      throw ValidationError("class label " + std::to_string(labels[j]) + " out of range [0, " +
                            std::to_string(classes) + ")");
    }
    total -= std::log(clamp_probability(pv[labels[j] * cols + j]));
  }
  const double n = static_cast<double>(cols);
  std::vector<std::size_t> y(labels.begin(), labels.end());
  const std::size_t ip = p.id();
  return p.tape()->record(Tensor::scalar(total / n), {ip},
                          [ip, y = std::move(y), n, cols](const Tensor& g, Tape& t) {
                            if (!t.requires_grad(ip)) return;
                            const Tensor& pv = t.value(ip);
                            auto d = t.grad_buffer(ip).data();
                            for (std::size_t j = 0; j < cols; ++j) {
                              const std::size_t idx = y[j] * cols + j;
                              if (!inside_clamp(pv[idx])) continue;
                              d[idx] -= g[0] / (pv[idx] * n);
                            }
                          });
}

Var loss(const Var& prediction, std::span<const std::size_t> labels, TaskMode mode) {
  return mode == TaskMode::binary ? binary_cross_entropy(prediction, labels)
                                  : cross_entropy(prediction, labels);
}

}  // namespace recnn
