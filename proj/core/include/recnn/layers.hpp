#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <unordered_map>

#include "recnn/rng.hpp"
#include "recnn/tape.hpp"

namespace recnn {

/// Binds parameter tensors to tape leaves, once per tensor, so that a tensor
/// used twice (shared branch weights) accumulates both gradient paths.
class Binding {
 public:
  /// With trainable = false parameters are recorded as constants and the
  /// tape stores no backward closures (inference).
  explicit Binding(Tape& tape, bool trainable = true) : tape_(tape), trainable_(trainable) {}

  Tape& tape() const { return tape_; }
  Var operator()(const Tensor& param);
  bool bound(const Tensor& param) const { return vars_.contains(&param); }
  /// Gradient of a bound parameter after tape.backward(); zeros if unbound.
  Tensor gradient(const Tensor& param) const;

 private:
  Tape& tape_;
  bool trainable_;
  std::unordered_map<const Tensor*, Var> vars_;
};

enum class Activation { none, relu, sigmoid, tanh, softmax };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// Valid (unpadded) l-dilated cross-correlation plus per-channel bias.
///   input  [C, H, W] or [N, C, H, W]
///   kernel [O, C, 2r+1, 2r+1]
///   bias   [O]
///   output [O, H', W'] or [N, O, H', W'] with H' = H - 2 r l.
Var conv2d_dilated(const Var& input, const Var& kernel, const Var& bias, std::size_t dilation);

struct DilatedConv2D {
  Tensor kernel;
  Tensor bias;
  std::size_t dilation = 1;

  /// Glorot-initialized kernel (fan_in = in*k*k, fan_out = out*k*k), zero bias.
  static DilatedConv2D glorot(Rng& rng, std::size_t in_channels, std::size_t out_channels,
                              std::size_t radius, std::size_t dilation);

  std::size_t in_channels() const { return kernel.dim(1); }
  std::size_t out_channels() const { return kernel.dim(0); }
  std::size_t radius() const { return kernel.dim(2) / 2; }
  /// Effective field of view: 2 r l + 1.
  std::size_t extent() const { return 2 * radius() * dilation + 1; }
  std::size_t parameter_count() const { return kernel.size() + bias.size(); }

  Var forward(Binding& bind, const Var& input) const;
};

struct Dense {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  static Dense glorot(Rng& rng, std::size_t in, std::size_t out);

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  Var forward(Binding& bind, const Var& x, Activation activation) const;
};

/// activation(W x + b) for x of shape [in] or [in, N]; softmax is column-wise.
Var dense_forward(Binding& bind, const Var& x, const Dense& layer, Activation activation);

Var apply_activation(const Var& x, Activation activation);

enum class TaskMode { binary, multiclass };

inline constexpr double kProbabilityClamp = 1e-12;

/// Mean binary cross-entropy; `p` holds one probability per label.
Var binary_cross_entropy(const Var& p, std::span<const std::size_t> labels);
/// Mean categorical cross-entropy; `p` is [C, N], column j a simplex for labels[j].
Var cross_entropy(const Var& p, std::span<const std::size_t> labels);
Var loss(const Var& prediction, std::span<const std::size_t> labels, TaskMode mode);

}  // namespace recnn
