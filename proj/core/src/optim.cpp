#include "recnn/optim.hpp"

#include <cmath>

#include "recnn/error.hpp"

namespace recnn {

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0) throw ValidationError("glorot_uniform: fans must be >= 1");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out, Shape shape) {
  const double a = glorot_bound(fan_in, fan_out);
  Tensor out(std::move(shape));
  for (auto& v : out.data()) v = rng.uniform(-a, a);
  return out;
}

double nadam_momentum(const NadamConfig& cfg, std::size_t t) {
  return cfg.beta1 *
         (1.0 - 0.5 * std::pow(0.96, static_cast<double>(t) * cfg.schedule_decay));
}

void Nadam::step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("nadam: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) {
      throw DimensionError("nadam: parameter " + std::to_string(i) + " has shape " +
                           to_string(params[i]->shape()) + " but gradient " +
                           to_string(grads[i].shape()));
    }
    if (!grads[i].all_finite()) {
      throw NumericalError("nadam: non-finite gradient in parameter " + std::to_string(i));
    }
  }
  if (m_.empty()) {
    for (auto* p : params) {
      m_.emplace_back(p->shape(), 0.0);
      v_.emplace_back(p->shape(), 0.0);
    }
  } else if (m_.size() != params.size()) {
    throw DimensionError("nadam: parameter layout changed between steps");
  }

  double clip = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& g : grads)
      for (double x : g.data()) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;
  }

  ++t_;
  const double mu = nadam_momentum(cfg_, t_);
  const double mu_next = nadam_momentum(cfg_, t_ + 1);
  const double product = momentum_product_ * mu;
  const double product_next = product * mu_next;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double v_correction = 1.0 - std::pow(b2, static_cast<double>(t_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j] * clip;
      m[j] = b1 * m[j] + (1.0 - b1) * gj;
      v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
      const double g_hat = gj / (1.0 - product);
      const double m_hat = m[j] / (1.0 - product_next);
      const double v_hat = v[j] / v_correction;
      const double blend = (1.0 - mu) * g_hat + mu_next * m_hat;
      p[j] -= cfg_.learning_rate * blend / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
  momentum_product_ = product;
}

}  // namespace recnn
