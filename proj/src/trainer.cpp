#include "senselm/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "senselm/binio.hpp"
#include "senselm/errors.hpp"
#include "senselm/parallel.hpp"
#include "senselm/rng.hpp"
#include "senselm/version.hpp"

namespace senselm {

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("lr must be positive");
  if (warmup() > steps) throw ConfigError("warmup_steps must not exceed steps");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!(adam.weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

std::uint64_t TrainConfig::digest() const {
  Fnv1a hash;
  hash.update_value(steps);
  hash.update_value(static_cast<std::uint64_t>(batch_size));
  hash.update_value(learning_rate);
  hash.update_value(warmup());
  hash.update_value(adam.beta1);
  hash.update_value(adam.beta2);
  hash.update_value(adam.epsilon);
  hash.update_value(adam.weight_decay);
  hash.update_value(seed);
  hash.update_value(static_cast<std::uint8_t>(precision));
  return hash.digest();
}

RunConfig RunConfig::from_config(const KeyValueConfig& config) {
  config.require_known({"d", "layers", "heads", "ff_dim", "n_max", "steps", "batch_size", "lr", "warmup_steps",
                        "adam_beta1", "adam_beta2", "adam_eps", "weight_decay", "seed", "log_interval",
                        "checkpoint_interval", "precision", "threads", "sense_weight", "mode", "mask_rate",
                        "single_sense_take", "single_sense_cap", "keep_prob", "whole_word", "vocab_size"});
  RunConfig run;
  run.model = ModelConfig::from_config(config);
  auto& t = run.train;
  t.steps = config.get_uint("steps", t.steps);
  t.batch_size = config.get_uint("batch_size", t.batch_size);
  t.learning_rate = config.get_double("lr", t.learning_rate);
  if (config.contains("warmup_steps")) t.warmup_steps = config.get_uint("warmup_steps", 0);
  t.adam.beta1 = config.get_double("adam_beta1", t.adam.beta1);
  t.adam.beta2 = config.get_double("adam_beta2", t.adam.beta2);
  t.adam.epsilon = config.get_double("adam_eps", t.adam.epsilon);
  t.adam.weight_decay = config.get_double("weight_decay", t.adam.weight_decay);
  t.seed = config.get_uint("seed", t.seed);
  t.log_interval = config.get_uint("log_interval", t.log_interval);
  t.checkpoint_interval = config.get_uint("checkpoint_interval", t.checkpoint_interval);
  t.precision = parse_precision(config.get_string("precision", "32"));
  t.threads = config.get_uint("threads", t.threads);
  t.validate();
  run.masking = MaskPolicy::from_config(config);
  run.objective.mode = parse_oov_mode(config.get_string("mode", "60k"));
  run.objective.sense_weight = config.get_double("sense_weight", run.objective.sense_weight);
  if (!(run.objective.sense_weight >= 0.0)) throw ConfigError("sense_weight must be non-negative");
  run.synthetic_vocab = config.get_uint("vocab_size", run.synthetic_vocab);
  if (run.objective.mode == OovMode::average_embedding) run.masking.whole_word = true;
  return run;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return from_config(KeyValueConfig::load(path)); }

std::uint64_t RunConfig::digest() const {
  Fnv1a hash;
  hash.update_value(train.digest());
  hash.update_value(masking.mask_rate);
  hash.update_value(masking.single_sense_take);
  hash.update_value(masking.single_sense_cap);
  hash.update_value(masking.keep_prob);
  hash.update_value(masking.whole_word);
  hash.update_value(static_cast<std::uint8_t>(objective.mode));
  hash.update_value(objective.sense_weight);
  return hash.digest();
}

std::vector<EncodedSequence> prepare_corpus(std::istream& corpus, const Vocab& vocab, std::size_t max_length) {
  std::vector<EncodedSequence> out;
  std::string line;
  while (std::getline(corpus, line)) {
    auto seq = tokenize(vocab, line, max_length);
    if (!seq.empty()) out.push_back(std::move(seq));
  }
  return out;
}

std::vector<EncodedSequence> prepare_corpus(const std::filesystem::path& corpus, const Vocab& vocab,
                                            std::size_t max_length) {
  std::ifstream in(corpus);
  if (!in) throw IoError("cannot open corpus: " + corpus.string());
  return prepare_corpus(in, vocab, max_length);
}

namespace {

RunConfig resolve(RunConfig config, const Vocab& vocab, const SenseMembershipMatrix& membership) {
  config.train.validate();
  config.masking.validate();
  if (config.objective.mode == OovMode::average_embedding) config.masking.whole_word = true;
  if (membership.word_count() != vocab.size()) {
    throw CompatError("membership matrix has " + std::to_string(membership.word_count()) +
                      " columns but the vocabulary has " + std::to_string(vocab.size()) + " tokens");
  }
  config.model.vocab_size = vocab.size();
  config.model.sense_count = membership.sense_count();
  config.model.validate();
  return config;
}

}  // namespace

template <typename Real>
Trainer<Real>::Trainer(RunConfig config, const Vocab& vocab, const Lexicon& lexicon,
                       const SenseMembershipMatrix& membership, std::vector<EncodedSequence> data)
    : config_(resolve(std::move(config), vocab, membership)),
      vocab_(&vocab),
      membership_(&membership),
      senses_(lexicon),
      data_(std::move(data)),
      params_(init_params<Real>(config_.model, config_.train.seed)),
      optimizer_(config_.model, config_.train.adam),
      vocab_hash_(vocab.content_hash()),
      membership_hash_(membership.content_hash()) {
  if (data_.empty()) throw ContractError("training corpus is empty");
  for (const auto& seq : data_) {
    if (seq.size() > config_.model.max_positions) throw LengthError("corpus sequence longer than n_max");
  }
}

template <typename Real>
void Trainer<Real>::resume(const Checkpoint<Real>& checkpoint) {
  const auto& h = checkpoint.header;
  check_artifacts(h, vocab_hash_, membership_hash_);
  if (h.model != config_.model) throw CompatError("checkpoint model shape differs from the configuration");
  if (h.train_config_digest != config_.digest() || h.seed != config_.train.seed) {
    throw CompatError("checkpoint was trained with a different configuration");
  }
  if (h.step > config_.train.steps) throw CompatError("checkpoint step lies beyond the configured steps");
  params_ = checkpoint.params;
  optimizer_ = AdamOptimizer<Real>(config_.train.adam, checkpoint.adam_first, checkpoint.adam_second, h.step);
  step_ = h.step;
}

template <typename Real>
std::size_t Trainer<Real>::data_index(std::uint64_t position) const {
  const std::uint64_t n = data_.size();
  const std::uint64_t epoch = position / n;
  auto it = epoch_order_.find(epoch);
  if (it == epoch_order_.end()) {
    if (epoch_order_.size() > 4) epoch_order_.erase(epoch_order_.begin());
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    auto rng = derive_rng(config_.train.seed, RngStream::epoch_order, epoch);
    rng.shuffle(std::span<std::size_t>(order));
    it = epoch_order_.emplace(epoch, std::move(order)).first;
  }
  return it->second[position % n];
}

template <typename Real>
PreparedBatch Trainer<Real>::batch_at(std::uint64_t step) const {
  PreparedBatch batch;
  const std::size_t b = config_.train.batch_size;
  for (std::size_t k = 0; k < b; ++k) {
    const auto& seq = data_[data_index(step * b + k)];
    const std::uint64_t mask_seed = derive_rng(config_.train.seed, RngStream::masking, step, k).next();
    auto plan = plan_masking(seq, senses_, config_.masking, mask_seed);
    batch.inputs.push_back(apply_plan(seq, plan, *vocab_));
    batch.plans.push_back(std::move(plan));
  }
  return batch;
}

template <typename Real>
LossReport Trainer<Real>::evaluate(std::uint64_t step) const {
  const auto batch = batch_at(step);
  std::vector<ForwardTrace<Real>> traces(batch.inputs.size());
  parallel_for(traces.size(), config_.train.threads, [&](std::size_t i) {
    traces[i] = forward(params_, *membership_, std::span<const TokenId>(batch.inputs[i].ids));
  });
  return batch_loss<Real>(params_, traces, batch.plans, config_.objective);
}

template <typename Real>
LossReport Trainer<Real>::step() {
  if (step_ >= config_.train.steps) throw ContractError("training already reached the configured steps");
  const auto batch = batch_at(step_);
  std::vector<ForwardTrace<Real>> traces(batch.inputs.size());
  try {
    parallel_for(traces.size(), config_.train.threads, [&](std::size_t i) {
      traces[i] = forward(params_, *membership_, std::span<const TokenId>(batch.inputs[i].ids));
    });
  } catch (const NumericsError& e) {
    throw TrainingAborted(step_, "step " + std::to_string(step_) + ": " + e.what());
  }
  LossReport report;
  const auto grads = backward<Real>(params_, *membership_, traces, batch.plans, config_.objective, &report,
                                    config_.train.threads);
  if (!std::isfinite(report.total)) {
    throw TrainingAborted(step_, "non-finite loss at step " + std::to_string(step_));
  }
  const double lr = learning_rate_at(step_, config_.train.steps, config_.train.warmup(), config_.train.learning_rate);
  // The update is applied to a copy so a failure leaves the last good state.
  auto updated = params_;
  auto optimizer = optimizer_;
  try {
    optimizer.step(updated, grads, lr);
  } catch (const NumericsError& e) {
    throw TrainingAborted(step_, "step " + std::to_string(step_) + ": " + e.what());
  }
  params_ = std::move(updated);
  optimizer_ = std::move(optimizer);
  ++step_;
  return report;
}

template <typename Real>
Checkpoint<Real> Trainer<Real>::checkpoint() const {
  Checkpoint<Real> ckpt;
  auto& h = ckpt.header;
  h.model = config_.model;
  h.step = step_;
  h.seed = config_.train.seed;
  h.train_config_digest = config_.digest();
  h.vocab_hash = vocab_hash_;
  h.membership_hash = membership_hash_;
  h.precision = precision_of<Real>();
  h.mode = config_.objective.mode;
  h.rng_algorithm = std::string(CounterRng::kAlgorithm);
  h.rng_counter = step_;
  h.software_version = std::string(kSoftwareVersion);
  ckpt.params = params_;
  ckpt.adam_first = optimizer_.first_moment();
  ckpt.adam_second = optimizer_.second_moment();
  return ckpt;
}

std::string loss_csv_header() { return "step,lm,slm_allowed,slm_reg,total"; }

std::string loss_csv_row(std::uint64_t step, const LossReport& report) {
  std::ostringstream out;
  out.precision(9);
  out << step << ',' << report.lm << ',' << report.slm_allowed << ',' << report.slm_reg << ',' << report.total;
  return out.str();
}

template <typename Real>
Checkpoint<Real> train(const RunConfig& config, const Vocab& vocab, const Lexicon& lexicon,
                       const SenseMembershipMatrix& membership, std::vector<EncodedSequence> data,
                       const TrainOptions& options, const Checkpoint<Real>* resume_from) {
  Trainer<Real> trainer(config, vocab, lexicon, membership, std::move(data));
  if (resume_from != nullptr) trainer.resume(*resume_from);

  std::ofstream log;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    const auto log_path = *options.out_dir / "loss.csv";
    const bool fresh = resume_from == nullptr || !std::filesystem::exists(log_path);
    log.open(log_path, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot write " + log_path.string());
    if (fresh) log << loss_csv_header() << '\n';
  }

  const auto& tc = trainer.config().train;
  while (trainer.current_step() < tc.steps) {
    const std::uint64_t step = trainer.current_step();
    LossReport report;
    try {
      report = trainer.step();
    } catch (const TrainingAborted&) {
      if (options.out_dir) save_checkpoint(trainer.checkpoint(), *options.out_dir / "ckpt_last_good.sblm");
      throw;
    }
    if (options.on_step) options.on_step(step, report);
    const std::uint64_t done = trainer.current_step();
    if (log.is_open() && (done == tc.steps || (tc.log_interval > 0 && step % tc.log_interval == 0))) {
      log << loss_csv_row(step, report) << '\n';
    }
    if (options.out_dir && tc.checkpoint_interval > 0 && done % tc.checkpoint_interval == 0 && done != tc.steps) {
      save_checkpoint(trainer.checkpoint(), *options.out_dir / ("ckpt_step" + std::to_string(done) + ".sblm"));
    }
  }
  auto final_checkpoint = trainer.checkpoint();
  if (options.out_dir) save_checkpoint(final_checkpoint, *options.out_dir / "ckpt_final.sblm");
  return final_checkpoint;
}

template class Trainer<float>;
template class Trainer<double>;
template Checkpoint<float> train<float>(const RunConfig&, const Vocab&, const Lexicon&, const SenseMembershipMatrix&,
                                        std::vector<EncodedSequence>, const TrainOptions&, const Checkpoint<float>*);
template Checkpoint<double> train<double>(const RunConfig&, const Vocab&, const Lexicon&,
                                          const SenseMembershipMatrix&, std::vector<EncodedSequence>,
                                          const TrainOptions&, const Checkpoint<double>*);

}  // namespace senselm
