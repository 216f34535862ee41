#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "senselm/masker.hpp"
#include "senselm/model.hpp"
#include "senselm/objective.hpp"
#include "senselm/trainer.hpp"

namespace senselm {

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  /// Coordinates drawn per tensor; smaller tensors are checked in full.
  std::size_t samples_per_group = 200;
  std::uint64_t seed = 0;
  /// Offenders kept per group in the report.
  std::size_t worst_kept = 5;

  void validate() const;
};

struct GradCheckEntry {
  std::size_t index = 0;  // row-major offset in the tensor
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
  bool refined = false;  // numeric value recomputed in extended precision
};

struct GradCheckGroup {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0;
  std::vector<GradCheckEntry> worst;  // descending rel_error
  bool passed = true;
};

struct GradCheckReport {
  std::string label;
  std::vector<GradCheckGroup> groups;
  double max_rel_error = 0;
  double tol = 0;
  bool passed = true;

  /// One line per group, failing groups followed by their worst offenders.
  std::string to_text() const;
};

/// Parameters for gradient checks: matrices ~ N(0, 1/fan_in), embeddings
/// ~ N(0, 0.25), biases and layer-norm offsets ~ N(0, 0.01), gains 1 + N(0,
/// 0.01). The small training init leaves attention almost uniform, where
/// query/key gradients are too small to compare against finite differences.
ModelParams<double> grad_check_params(const ModelConfig& config, std::uint64_t seed);

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

using LossFunction = std::function<double(const ModelParams<double>&)>;
using PreciseLossFunction = std::function<long double(const ModelParams<double>&)>;

/// Compares `analytic` with central differences of `loss` on sampled
/// coordinates of every tensor. `loss` must be a pure function of the
/// parameters it is handed. Coordinates above a tenth of the tolerance are
/// re-differenced with `precise_loss` when given, which removes float64
/// rounding noise (about 1e-10 at eps 1e-5) from the reference.
GradCheckReport grad_check(ModelParams<double> params, const ModelParams<double>& analytic, const LossFunction& loss,
                           const GradCheckOptions& options, std::string label = {},
                           const PreciseLossFunction& precise_loss = {});

/// Full model check on one batch: backward() against batch_loss().total,
/// with a long double forward pass as the precise reference.
GradCheckReport grad_check(const ModelParams<double>& params, const SenseMembershipMatrix& membership,
                           std::span<const EncodedSequence> inputs, std::span<const MaskPlan> plans,
                           const ObjectiveConfig& objective, const GradCheckOptions& options,
                           std::string label = {});

/// The standard suite on a generated problem shaped by `run`: each supersense
/// loss term alone, the word loss alone and the full objective in both OOV
/// modes. Problem, masking and parameters all derive from `options.seed`.
std::vector<GradCheckReport> check_model_gradients(const RunConfig& run, const GradCheckOptions& options);

}  // namespace senselm
