#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "senselm/errors.hpp"
#include "senselm/masker.hpp"
#include "senselm/model.hpp"

namespace senselm {

/// How supersense supervision treats words split into several tokens.
enum class OovMode : std::uint8_t {
  sixty_k_no_oov,     // multi-token words get word-level loss only
  average_embedding,  // senses predicted from the mean of the span's outputs
};

std::string_view to_string(OovMode mode);
OovMode parse_oov_mode(std::string_view text);  // "60k" | "avg" (and the long names)

/// Which loss terms enter the total; all on for training, toggled
/// individually by gradient checks.
struct LossTerms {
  bool lm = true;
  bool slm_allowed = true;
  bool slm_reg = true;
};

struct ObjectiveConfig {
  OovMode mode = OovMode::sixty_k_no_oov;
  /// Multiplier on the supersense loss. 1.0 reproduces the unweighted joint
  /// objective; other values are an extension.
  double sense_weight = 1.0;
  LossTerms terms;
};

/// Reported losses are accumulated in extended precision so a long double
/// forward pass keeps its accuracy through the batch mean.
using LossValue = long double;

struct TargetLoss {
  std::size_t sequence = 0;
  std::size_t target = 0;
  LossValue lm = 0;  // summed over the span's tokens
  std::size_t lm_tokens = 0;
  bool sense_scored = false;
  LossValue slm_allowed = 0;
  LossValue slm_reg = 0;
};

struct LossReport {
  LossValue lm = 0;           // mean over target tokens
  LossValue slm_allowed = 0;  // mean over sense-scored targets
  LossValue slm_reg = 0;
  LossValue slm = 0;
  LossValue total = 0;
  std::size_t lm_tokens = 0;
  std::size_t sense_targets = 0;
  std::vector<TargetLoss> targets;
};

/// -log softmax(scores)[gold]
template <typename Real>
Real lm_loss(std::span<const Real> scores, std::size_t gold) {
  if (gold >= scores.size()) throw ContractError("gold id outside the score vector");
  return log_sum_exp(scores) - scores[gold];
}

/// -log sum_{s in allowed} softmax(scores)[s]
template <typename Real>
Real slm_allowed_loss(std::span<const Real> scores, std::span<const SenseId> allowed) {
  if (allowed.empty()) throw ContractError("allowed-senses loss needs a non-empty sense set");
  std::vector<Real> picked;
  picked.reserve(allowed.size());
  for (SenseId s : allowed) {
    if (s >= scores.size()) throw ContractError("sense id outside the score vector");
    picked.push_back(scores[s]);
  }
  return log_sum_exp(scores) - log_sum_exp(std::span<const Real>(picked));
}

/// -(1/|A|) sum_{s in allowed} log softmax(scores)[s]
template <typename Real>
Real slm_reg_loss(std::span<const Real> scores, std::span<const SenseId> allowed) {
  if (allowed.empty()) throw ContractError("regularization loss needs a non-empty sense set");
  Real picked = 0;
  for (SenseId s : allowed) {
    if (s >= scores.size()) throw ContractError("sense id outside the score vector");
    picked += scores[s];
  }
  return log_sum_exp(scores) - picked / static_cast<Real>(allowed.size());
}

/// Loss over a batch of traces of masked sequences and their plans.
/// L_LM is averaged over target tokens; L_SLM over targets whose allowed set
/// is non-empty and which the OOV mode scores; total = L_LM + w * L_SLM.
template <typename Real>
LossReport batch_loss(const ModelParams<Real>& params, std::span<const ForwardTrace<Real>> traces,
                      std::span<const MaskPlan> plans, const ObjectiveConfig& objective);

/// Analytic gradient of batch_loss().total. W and S collect gradient from
/// both the output heads and the input embedding. `threads` > 1 spreads the
/// per-sequence work; the result is bit-identical for every thread count.
template <typename Real>
ModelParams<Real> backward(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                           std::span<const ForwardTrace<Real>> traces, std::span<const MaskPlan> plans,
                           const ObjectiveConfig& objective, LossReport* report = nullptr, std::size_t threads = 1);

}  // namespace senselm
