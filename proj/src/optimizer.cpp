#include "senselm/optimizer.hpp"

#include <cmath>

#include "senselm/errors.hpp"

namespace senselm {

template <typename Real>
AdamOptimizer<Real>::AdamOptimizer(const ModelConfig& config, AdamSettings settings)
    : settings_(settings), m_(ModelParams<Real>::zeros(config)), v_(ModelParams<Real>::zeros(config)) {}

template <typename Real>
AdamOptimizer<Real>::AdamOptimizer(AdamSettings settings, ModelParams<Real> first_moment,
                                   ModelParams<Real> second_moment, std::uint64_t step)
    : settings_(settings), m_(std::move(first_moment)), v_(std::move(second_moment)), step_(step) {}

template <typename Real>
void AdamOptimizer<Real>::step(ModelParams<Real>& params, const ModelParams<Real>& grads, double lr) {
  ++step_;
  const auto b1 = static_cast<Real>(settings_.beta1);
  const auto b2 = static_cast<Real>(settings_.beta2);
  const auto eps = static_cast<Real>(settings_.epsilon);
  const auto rate = static_cast<Real>(lr);
  const auto correction1 = static_cast<Real>(1.0 - std::pow(settings_.beta1, static_cast<double>(step_)));
  const auto correction2 = static_cast<Real>(1.0 - std::pow(settings_.beta2, static_cast<double>(step_)));
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t t = 0; t < p.size(); ++t) {
    const bool decay = p[t].role == ParamRole::weight || p[t].role == ParamRole::embedding;
    const auto wd = static_cast<Real>(decay ? settings_.weight_decay : 0.0);
    Real* pd = p[t].data;
    const Real* gd = g[t].data;
    Real* md = m[t].data;
    Real* vd = v[t].data;
    for (std::size_t k = 0; k < p[t].size(); ++k) {
      md[k] = b1 * md[k] + (Real(1) - b1) * gd[k];
      vd[k] = b2 * vd[k] + (Real(1) - b2) * gd[k] * gd[k];
      const Real update = (md[k] / correction1) / (std::sqrt(vd[k] / correction2) + eps) + wd * pd[k];
      pd[k] -= rate * update;
    }
    for (std::size_t k = 0; k < p[t].size(); ++k) {
      if (!std::isfinite(pd[k])) throw NumericsError("parameter " + p[t].name + " became non-finite");
    }
  }
}

double learning_rate_at(std::uint64_t step, std::uint64_t total, std::uint64_t warmup, double peak) {
  if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (total <= warmup) return peak;
  const double remaining = static_cast<double>(total - std::min(step, total)) / static_cast<double>(total - warmup);
  return peak * remaining;
}

template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

}  // namespace senselm
