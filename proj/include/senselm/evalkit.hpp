#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "senselm/lexicon.hpp"
#include "senselm/model.hpp"
#include "senselm/optimizer.hpp"
#include "senselm/synthetic.hpp"
#include "senselm/textpipe.hpp"

namespace senselm {

/// Tokenizes `text`, turning each literal "[MASK]" into one mask token that
/// forms its own word span.
EncodedSequence encode_with_masks(const Vocab& vocab, std::string_view text,
                                  std::size_t max_length = kDefaultMaxLength);

struct WordSenses {
  std::string word;
  std::vector<double> probabilities;  // one per supersense, sums to 1
};

/// Unmasked forward pass; per word, the sense distribution of the mean of
/// its span's outputs.
template <typename Real>
std::vector<WordSenses> predict_supersenses(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                                            const Vocab& vocab, std::string_view text);

/// "sentence<TAB>word index<TAB>supersense"
std::vector<SenseTaggedExample> parse_semeval(std::istream& in, const SupersenseInventory& inventory);
std::vector<SenseTaggedExample> load_semeval(const std::filesystem::path& path, const SupersenseInventory& inventory);
std::string format_semeval(const std::vector<SenseTaggedExample>& examples, const SupersenseInventory& inventory);
/// "sentence A<TAB>sentence B<TAB>word<TAB>0|1"
std::vector<WiCExample> parse_wic(std::istream& in);
std::vector<WiCExample> load_wic(const std::filesystem::path& path);
std::string format_wic(const std::vector<WiCExample>& examples);

/// Mean of the output vectors over each span.
template <typename Real>
Eigen::VectorXd span_embedding(const Matrix<Real>& v_output, const WordSpan& span);

struct LinearHead {
  Eigen::MatrixXd weight;  // classes x features
  Eigen::VectorXd bias;
  Eigen::VectorXd scores(const Eigen::VectorXd& features) const { return weight * features + bias; }
  std::size_t predict(const Eigen::VectorXd& features) const;
};

struct ProbeConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

/// Softmax regression trained with Adam on fixed features.
LinearHead train_linear_head(const std::vector<Eigen::VectorXd>& features, const std::vector<std::size_t>& labels,
                             std::size_t classes, const ProbeConfig& config);
double accuracy(const LinearHead& head, const std::vector<Eigen::VectorXd>& features,
                const std::vector<std::size_t>& labels);

struct ProbeResult {
  double train_accuracy = 0;
  double test_accuracy = 0;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  std::size_t skipped = 0;  // target word missing after tokenization
  /// Test targets whose gold sense lies outside A(w); scored normally.
  std::size_t gold_outside_allowed = 0;
  LinearHead head;
};

/// Linear d -> D_S classifier on frozen target-word output embeddings.
template <typename Real>
ProbeResult frozen_probe(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                         const Vocab& vocab, const std::vector<SenseTaggedExample>& train,
                         const std::vector<SenseTaggedExample>& test, const ProbeConfig& config = {},
                         const Lexicon* lexicon = nullptr, std::size_t threads = 1);

struct FineTuneConfig {
  std::vector<double> learning_rates{5e-6, 1e-5, 2e-5, 3e-5, 5e-5};
  std::vector<std::size_t> batch_sizes{16, 32};
  std::size_t max_epochs = 10;
  /// Share of the training examples held back for model selection.
  double dev_fraction = 0.2;
  /// Warmup share of each run's steps before linear decay.
  double warmup_fraction = 0.1;
  /// The head starts from a frozen probe trained with these settings.
  ProbeConfig head_init;
  AdamSettings adam;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct FineTuneRun {
  double learning_rate = 0;
  std::size_t batch_size = 0;
  std::size_t best_epoch = 0;  // 1-based; 0 = the initial state
  double dev_accuracy = 0;
  double test_accuracy = 0;
};

struct FineTuneResult {
  std::vector<FineTuneRun> runs;
  std::size_t selected = 0;
  double dev_accuracy = 0;
  double test_accuracy = 0;
  /// Test accuracy of the initial head on the frozen encoder.
  double frozen_test_accuracy = 0;
  /// Test accuracy of always predicting the most frequent training label.
  double majority_accuracy = 0;
  std::size_t train_examples = 0;
  std::size_t dev_examples = 0;
  std::size_t test_examples = 0;
  std::size_t skipped = 0;
};

/// Every weight trainable plus a linear head; grid over learning rate and
/// batch size, best dev epoch reported with its test accuracy.
template <typename Real>
FineTuneResult fine_tune_eval(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                              const Vocab& vocab, const std::vector<SenseTaggedExample>& train,
                              const std::vector<SenseTaggedExample>& test, const FineTuneConfig& config = {});

/// Each sentence is encoded on its own; a two-way head reads
/// [a, b, |a - b|, a * b] built from the two target-word embeddings.
/// Pairs whose target word is missing from either sentence are skipped.
template <typename Real>
FineTuneResult wic_eval(const ModelParams<Real>& params, const SenseMembershipMatrix& membership, const Vocab& vocab,
                        const std::vector<WiCExample>& train, const std::vector<WiCExample>& test,
                        const FineTuneConfig& config = {});

}  // namespace senselm
