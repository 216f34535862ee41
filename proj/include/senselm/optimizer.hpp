#pragma once

#include <cstdint>

#include "senselm/model.hpp"

namespace senselm {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with bias correction and decoupled weight decay. Decay skips biases
/// and layer-norm parameters.
template <typename Real>
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelConfig& config, AdamSettings settings);
  AdamOptimizer(AdamSettings settings, ModelParams<Real> first_moment, ModelParams<Real> second_moment,
                std::uint64_t step);

  /// One update with learning rate `lr`; throws NumericsError if a parameter
  /// becomes non-finite.
  void step(ModelParams<Real>& params, const ModelParams<Real>& grads, double lr);

  std::uint64_t steps_taken() const noexcept { return step_; }
  const ModelParams<Real>& first_moment() const noexcept { return m_; }
  const ModelParams<Real>& second_moment() const noexcept { return v_; }
  const AdamSettings& settings() const noexcept { return settings_; }

 private:
  AdamSettings settings_;
  ModelParams<Real> m_;
  ModelParams<Real> v_;
  std::uint64_t step_ = 0;
};

/// Linear warmup over `warmup` steps to `peak`, then linear decay towards
/// zero at `total`. `step` is zero-based.
double learning_rate_at(std::uint64_t step, std::uint64_t total, std::uint64_t warmup, double peak);

}  // namespace senselm
