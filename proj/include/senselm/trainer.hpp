#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "senselm/checkpoint.hpp"
#include "senselm/config.hpp"
#include "senselm/masker.hpp"
#include "senselm/model.hpp"
#include "senselm/objective.hpp"
#include "senselm/optimizer.hpp"
#include "senselm/textpipe.hpp"

namespace senselm {

struct TrainConfig {
  std::uint64_t steps = 1000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  /// Defaults to 10% of `steps` when unset.
  std::optional<std::uint64_t> warmup_steps;
  AdamSettings adam;
  std::uint64_t seed = 0;
  std::uint64_t log_interval = 100;
  std::uint64_t checkpoint_interval = 0;  // 0 disables periodic checkpoints
  Precision precision = Precision::f32;
  std::size_t threads = 1;

  std::uint64_t warmup() const { return warmup_steps.value_or(steps / 10); }
  void validate() const;
  /// Hash of every field that affects the optimization trajectory
  /// (`threads` and the logging cadence excluded).
  std::uint64_t digest() const;
};

/// Everything a pretraining or gradient-check run reads from the flat config
/// file. Unknown keys are errors.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  MaskPolicy masking;
  ObjectiveConfig objective;
  /// Vocabulary size of the generated problem used by grad-check when no
  /// artifacts are given.
  std::size_t synthetic_vocab = 200;

  static RunConfig from_config(const KeyValueConfig& config);
  static RunConfig load(const std::filesystem::path& path);
  std::uint64_t digest() const;
};

/// Tokenizes every non-blank corpus line; lines producing no tokens are
/// dropped.
std::vector<EncodedSequence> prepare_corpus(std::istream& corpus, const Vocab& vocab, std::size_t max_length);
std::vector<EncodedSequence> prepare_corpus(const std::filesystem::path& corpus, const Vocab& vocab,
                                            std::size_t max_length);

/// NaN/Inf loss. Parameters are left at their last good values.
class TrainingAborted : public NumericsError {
 public:
  TrainingAborted(std::uint64_t step, const std::string& what) : NumericsError(what), step_(step) {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

/// One training batch after masking: plans and the masked sequences.
struct PreparedBatch {
  std::vector<EncodedSequence> inputs;
  std::vector<MaskPlan> plans;
};

/// Deterministic pretraining loop. Batch b of step s is a pure function of
/// (seed, s, b): data order comes from a per-epoch shuffle, masking from a
/// per-slot stream. That makes resuming from a checkpoint at step k
/// bit-identical to training straight through.
template <typename Real>
class Trainer {
 public:
  Trainer(RunConfig config, const Vocab& vocab, const Lexicon& lexicon, const SenseMembershipMatrix& membership,
          std::vector<EncodedSequence> data);

  /// Continues from a checkpoint; throws CompatError if it was produced
  /// with different artifacts or a different training configuration.
  void resume(const Checkpoint<Real>& checkpoint);

  PreparedBatch batch_at(std::uint64_t step) const;
  /// Loss of the batch scheduled for `step` under the current parameters.
  LossReport evaluate(std::uint64_t step) const;
  /// Forward, loss, backward and one Adam update. Returns the pre-update
  /// loss of the batch.
  LossReport step();

  std::uint64_t current_step() const noexcept { return step_; }
  const ModelParams<Real>& params() const noexcept { return params_; }
  ModelParams<Real>& mutable_params() noexcept { return params_; }
  const RunConfig& config() const noexcept { return config_; }
  Checkpoint<Real> checkpoint() const;

 private:
  std::size_t data_index(std::uint64_t position) const;

  RunConfig config_;
  const Vocab* vocab_;
  const SenseMembershipMatrix* membership_;
  LexiconSenseLookup senses_;
  std::vector<EncodedSequence> data_;
  ModelParams<Real> params_;
  AdamOptimizer<Real> optimizer_;
  std::uint64_t step_ = 0;
  std::uint64_t vocab_hash_ = 0;
  std::uint64_t membership_hash_ = 0;
  mutable std::map<std::uint64_t, std::vector<std::size_t>> epoch_order_;
};

/// "step,lm,slm_allowed,slm_reg,total"
std::string loss_csv_header();
std::string loss_csv_row(std::uint64_t step, const LossReport& report);

struct TrainOptions {
  /// Where loss.csv and checkpoints go; nothing is written when unset.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(std::uint64_t step, const LossReport&)> on_step;
};

/// Runs `config.train.steps` updates. Writes loss.csv at the log interval,
/// ckpt_step<k>.sblm at the checkpoint interval and ckpt_final.sblm. On a
/// non-finite loss, saves ckpt_last_good.sblm and rethrows TrainingAborted.
template <typename Real>
Checkpoint<Real> train(const RunConfig& config, const Vocab& vocab, const Lexicon& lexicon,
                       const SenseMembershipMatrix& membership, std::vector<EncodedSequence> data,
                       const TrainOptions& options = {}, const Checkpoint<Real>* resume_from = nullptr);

}  // namespace senselm
