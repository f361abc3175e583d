#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "recnn/rng.hpp"
#include "recnn/tensor.hpp"

namespace recnn {

/// Samples U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out, Shape shape);
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

struct NadamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double schedule_decay = 0.004;
  /// Global L2-norm gradient clipping; 0 disables it.
  double clip_norm = 0.0;
};

/// Momentum coefficient at step t (1-based):
///   mu_t = beta1 * (1 - 0.5 * 0.96^(t * schedule_decay))
double nadam_momentum(const NadamConfig& cfg, std::size_t t);

/// Nesterov-accelerated Adam with a warming momentum schedule (Dozat, 2016).
///
/// One step, for every scalar parameter p with gradient g:
///   mu_t, mu_{t+1}   from nadam_momentum()
///   S_t     = S_{t-1} * mu_t               (running momentum product, S_0 = 1)
///   m       = beta1 * m + (1 - beta1) * g
///   v       = beta2 * v + (1 - beta2) * g^2
///   g_hat   = g / (1 - S_t)
///   m_hat   = m / (1 - S_t * mu_{t+1})
///   v_hat   = v / (1 - beta2^t)
///   blend   = (1 - mu_t) * g_hat + mu_{t+1} * m_hat
///   p      -= lr * blend / (sqrt(v_hat) + epsilon)
class Nadam {
 public:
  explicit Nadam(NadamConfig cfg = {}) : cfg_(cfg) {}

  const NadamConfig& config() const { return cfg_; }
  std::size_t step_count() const { return t_; }
  double momentum_product() const { return momentum_product_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  /// Moment buffers are created on the first call and must keep the same
  /// parameter layout afterwards. Throws NumericalError on non-finite
  /// gradients before touching any parameter.
  void step(std::span<Tensor* const> params, std::span<const Tensor> grads);

 private:
  NadamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t t_ = 0;
  double momentum_product_ = 1.0;
};

}  // namespace recnn
