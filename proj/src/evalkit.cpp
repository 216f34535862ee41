#include "senselm/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "senselm/errors.hpp"
#include "senselm/parallel.hpp"
#include "senselm/rng.hpp"
#include "senselm/text.hpp"

namespace senselm {

EncodedSequence encode_with_masks(const Vocab& vocab, std::string_view text, std::size_t max_length) {
  static constexpr std::string_view kMarker = "[MASK]";
  EncodedSequence out;
  auto append = [&](std::string_view segment) {
    auto part = tokenize(vocab, segment, max_length - out.ids.size());
    const std::size_t offset = out.ids.size();
    out.ids.insert(out.ids.end(), part.ids.begin(), part.ids.end());
    for (auto& span : part.spans) out.spans.push_back({span.begin + offset, span.end + offset, std::move(span.word)});
  };
  for (;;) {
    const auto at = text.find(kMarker);
    append(text.substr(0, at));
    if (at == std::string_view::npos || out.ids.size() >= max_length) break;
    out.spans.push_back({out.ids.size(), out.ids.size() + 1, std::string(kMarker)});
    out.ids.push_back(Vocab::kMask);
    text.remove_prefix(at + kMarker.size());
  }
  return out;
}

template <typename Real>
Eigen::VectorXd span_embedding(const Matrix<Real>& v_output, const WordSpan& span) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(v_output.rows());
  for (std::size_t j = span.begin; j < span.end; ++j) sum += v_output.col(static_cast<Eigen::Index>(j)).template cast<double>();
  return sum / static_cast<double>(span.length());
}

template <typename Real>
std::vector<WordSenses> predict_supersenses(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                                            const Vocab& vocab, std::string_view text) {
  const auto seq = encode_with_masks(vocab, text, params.config.max_positions);
  std::vector<WordSenses> out;
  if (seq.empty()) return out;
  const auto trace = forward(params, membership, std::span<const TokenId>(seq.ids));
  const Eigen::MatrixXd senses = params.senses.template cast<double>();
  for (const auto& span : seq.spans) {
    const Eigen::VectorXd probs = softmax<double>(senses.transpose() * span_embedding(trace.v_output, span));
    out.push_back({span.word, std::vector<double>(probs.data(), probs.data() + probs.size())});
  }
  return out;
}

namespace {

std::size_t parse_index(std::string_view text, const std::string& where) {
  std::size_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError(where + "bad word index '" + std::string(text) + "'");
  }
  return value;
}

std::string location(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<SenseTaggedExample> parse_semeval(std::istream& in, const SupersenseInventory& inventory) {
  std::vector<SenseTaggedExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError(location(n) + "expected 'sentence<TAB>index<TAB>supersense'");
    SenseTaggedExample ex;
    ex.sentence = std::string(fields[0]);
    ex.target = parse_index(trim(fields[1]), location(n));
    const auto sense = inventory.find(trim(fields[2]));
    if (!sense) throw ParseError(location(n) + "unknown supersense '" + std::string(fields[2]) + "'");
    ex.gold = *sense;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<SenseTaggedExample> load_semeval(const std::filesystem::path& path, const SupersenseInventory& inventory) {
  auto in = open_input(path);
  return parse_semeval(in, inventory);
}

std::string format_semeval(const std::vector<SenseTaggedExample>& examples, const SupersenseInventory& inventory) {
  std::string out;
  for (const auto& ex : examples) {
    out += ex.sentence + "\t" + std::to_string(ex.target) + "\t" + inventory[ex.gold].name + "\n";
  }
  return out;
}

std::vector<WiCExample> parse_wic(std::istream& in) {
  std::vector<WiCExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 4) throw ParseError(location(n) + "expected 'sentence<TAB>sentence<TAB>word<TAB>0|1'");
    const auto label = trim(fields[3]);
    if (label != "0" && label != "1") throw ParseError(location(n) + "label must be 0 or 1");
    out.push_back({std::string(fields[0]), std::string(fields[1]), std::string(trim(fields[2])), label == "1"});
  }
  return out;
}

std::vector<WiCExample> load_wic(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_wic(in);
}

std::string format_wic(const std::vector<WiCExample>& examples) {
  std::string out;
  for (const auto& ex : examples) out += ex.first + "\t" + ex.second + "\t" + ex.word + "\t" + (ex.same ? "1\n" : "0\n");
  return out;
}

std::size_t LinearHead::predict(const Eigen::VectorXd& features) const {
  Eigen::Index best = 0;
  scores(features).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

namespace {

struct HeadAdam {
  Eigen::MatrixXd m_w, v_w;
  Eigen::VectorXd m_b, v_b;
  std::uint64_t t = 0;

  explicit HeadAdam(const LinearHead& head)
      : m_w(Eigen::MatrixXd::Zero(head.weight.rows(), head.weight.cols())),
        v_w(m_w),
        m_b(Eigen::VectorXd::Zero(head.bias.size())),
        v_b(m_b) {}

  void step(LinearHead& head, const Eigen::MatrixXd& g_w, const Eigen::VectorXd& g_b, double lr,
            const AdamSettings& s = {}) {
    ++t;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t));
    m_w = s.beta1 * m_w + (1 - s.beta1) * g_w;
    v_w = s.beta2 * v_w + (1 - s.beta2) * g_w.cwiseAbs2();
    m_b = s.beta1 * m_b + (1 - s.beta1) * g_b;
    v_b = s.beta2 * v_b + (1 - s.beta2) * g_b.cwiseAbs2();
    head.weight.array() -= lr * (m_w.array() / c1) / ((v_w.array() / c2).sqrt() + s.epsilon);
    head.bias.array() -= lr * (m_b.array() / c1) / ((v_b.array() / c2).sqrt() + s.epsilon);
  }
};

// d(mean cross-entropy)/d(scores) for one example, already divided by the
// batch size.
Eigen::VectorXd score_gradient(const LinearHead& head, const Eigen::VectorXd& features, std::size_t label,
                               double scale) {
  Eigen::VectorXd g = softmax<double>(head.scores(features));
  g[static_cast<Eigen::Index>(label)] -= 1.0;
  return g * scale;
}

std::vector<std::size_t> shuffled(std::size_t n, CounterRng rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

}  // namespace

LinearHead train_linear_head(const std::vector<Eigen::VectorXd>& features, const std::vector<std::size_t>& labels,
                             std::size_t classes, const ProbeConfig& config) {
  if (features.empty()) throw ContractError("probe needs training examples");
  if (features.size() != labels.size()) throw ContractError("probe features and labels differ in count");
  if (config.batch_size == 0) throw ConfigError("probe batch size must be positive");
  const auto dim = features.front().size();
  LinearHead head{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes), dim),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes))};
  HeadAdam adam(head);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(features.size(), derive_rng(config.seed, RngStream::probe, epoch));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      Eigen::MatrixXd g_w = Eigen::MatrixXd::Zero(head.weight.rows(), head.weight.cols());
      Eigen::VectorXd g_b = Eigen::VectorXd::Zero(head.bias.size());
      for (std::size_t k = start; k < stop; ++k) {
        const auto& x = features[order[k]];
        const Eigen::VectorXd g = score_gradient(head, x, labels[order[k]], scale);
        g_w.noalias() += g * x.transpose();
        g_b += g;
      }
      adam.step(head, g_w, g_b, config.learning_rate);
    }
  }
  return head;
}

double accuracy(const LinearHead& head, const std::vector<Eigen::VectorXd>& features,
                const std::vector<std::size_t>& labels) {
  if (features.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i) hits += head.predict(features[i]) == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

namespace {

// One classification example: one sequence per target word, the target
// spans and the label.
struct TaskItem {
  std::vector<std::vector<TokenId>> sequences;
  std::vector<WordSpan> targets;
  std::size_t label = 0;
};

template <typename Real>
Eigen::VectorXd item_features(const std::vector<Matrix<Real>>& outputs, const TaskItem& item) {
  if (item.targets.size() == 1) return span_embedding(outputs[0], item.targets[0]);
  const Eigen::VectorXd a = span_embedding(outputs[0], item.targets[0]);
  const Eigen::VectorXd b = span_embedding(outputs[1], item.targets[1]);
  const Eigen::Index d = a.size();
  Eigen::VectorXd f(4 * d);
  f << a, b, (a - b).cwiseAbs(), a.cwiseProduct(b);
  return f;
}

template <typename Real>
std::vector<Matrix<Real>> feature_backward(const std::vector<Matrix<Real>>& outputs, const TaskItem& item,
                                           const Eigen::VectorXd& d_features) {
  std::vector<Matrix<Real>> out;
  for (const auto& v : outputs) out.push_back(Matrix<Real>::Zero(v.rows(), v.cols()));
  auto scatter = [](Matrix<Real>& m, const WordSpan& span, const Eigen::VectorXd& g) {
    const Eigen::VectorXd share = g / static_cast<double>(span.length());
    for (std::size_t j = span.begin; j < span.end; ++j) m.col(static_cast<Eigen::Index>(j)) += share.cast<Real>();
  };
  if (item.targets.size() == 1) {
    scatter(out[0], item.targets[0], d_features);
    return out;
  }
  const Eigen::VectorXd a = span_embedding(outputs[0], item.targets[0]);
  const Eigen::VectorXd b = span_embedding(outputs[1], item.targets[1]);
  const Eigen::Index d = a.size();
  const Eigen::VectorXd sign = (a - b).unaryExpr([](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
  const auto g0 = d_features.segment(0, d), g1 = d_features.segment(d, d), g2 = d_features.segment(2 * d, d),
             g3 = d_features.segment(3 * d, d);
  scatter(out[0], item.targets[0], g0 + sign.cwiseProduct(g2) + b.cwiseProduct(g3));
  scatter(out[1], item.targets[1], g1 - sign.cwiseProduct(g2) + a.cwiseProduct(g3));
  return out;
}

template <typename Real>
std::vector<Matrix<Real>> encode_item(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                                      const TaskItem& item) {
  std::vector<Matrix<Real>> outputs;
  for (const auto& ids : item.sequences) {
    outputs.push_back(forward(params, membership, std::span<const TokenId>(ids)).v_output);
  }
  return outputs;
}

template <typename Real>
std::vector<Eigen::VectorXd> all_features(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                                          const std::vector<TaskItem>& items, std::size_t threads) {
  std::vector<Eigen::VectorXd> out(items.size());
  parallel_for(items.size(), threads,
               [&](std::size_t i) { out[i] = item_features(encode_item(params, membership, items[i]), items[i]); });
  return out;
}

std::vector<std::size_t> labels_of(const std::vector<TaskItem>& items) {
  std::vector<std::size_t> out;
  for (const auto& item : items) out.push_back(item.label);
  return out;
}

std::vector<TaskItem> tagging_items(const Vocab& vocab, const std::vector<SenseTaggedExample>& examples,
                                    std::size_t max_length, std::size_t& skipped,
                                    std::vector<std::string>* target_words = nullptr) {
  std::vector<TaskItem> out;
  for (const auto& ex : examples) {
    auto seq = tokenize(vocab, ex.sentence, max_length);
    if (ex.target >= seq.spans.size()) {
      ++skipped;
      continue;
    }
    if (target_words) target_words->push_back(seq.spans[ex.target].word);
    out.push_back({{std::move(seq.ids)}, {seq.spans[ex.target]}, ex.gold});
  }
  return out;
}

std::vector<TaskItem> wic_items(const Vocab& vocab, const std::vector<WiCExample>& examples, std::size_t max_length,
                                std::size_t& skipped) {
  std::vector<TaskItem> out;
  for (const auto& ex : examples) {
    const auto word = canonical_form(ex.word);
    const auto a = tokenize(vocab, ex.first, max_length);
    const auto b = tokenize(vocab, ex.second, max_length);
    auto find = [&](const EncodedSequence& seq) {
      return std::find_if(seq.spans.begin(), seq.spans.end(), [&](const WordSpan& s) { return s.word == word; });
    };
    const auto ta = find(a);
    const auto tb = find(b);
    if (ta == a.spans.end() || tb == b.spans.end()) {
      ++skipped;
      continue;
    }
    TaskItem item;
    item.sequences = {a.ids, b.ids};
    item.targets = {*ta, *tb};
    item.label = ex.same ? 1 : 0;
    out.push_back(std::move(item));
  }
  return out;
}

template <typename Real>
FineTuneResult run_fine_tune(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                             std::vector<TaskItem> train_all, const std::vector<TaskItem>& test, std::size_t classes,
                             const FineTuneConfig& config, std::size_t skipped) {
  if (config.learning_rates.empty() || config.batch_sizes.empty()) throw ConfigError("fine-tune grid is empty");
  if (!(config.dev_fraction > 0.0 && config.dev_fraction < 1.0)) throw ConfigError("dev fraction must lie in (0, 1)");
  for (std::size_t b : config.batch_sizes) {
    if (b == 0) throw ConfigError("fine-tune batch size must be positive");
  }
  if (train_all.size() < 2 || test.empty()) throw ContractError("fine-tuning needs at least two training and one test example");

  FineTuneResult result;
  result.skipped = skipped;
  {
    const auto order = shuffled(train_all.size(), derive_rng(config.seed, RngStream::fine_tune, 0));
    std::vector<TaskItem> permuted;
    for (std::size_t i : order) permuted.push_back(std::move(train_all[i]));
    train_all = std::move(permuted);
  }
  const auto dev_count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.dev_fraction * static_cast<double>(train_all.size()))), 1,
      train_all.size() - 1);
  const std::vector<TaskItem> dev(train_all.end() - static_cast<std::ptrdiff_t>(dev_count), train_all.end());
  train_all.resize(train_all.size() - dev_count);
  const std::vector<TaskItem>& train = train_all;
  result.train_examples = train.size();
  result.dev_examples = dev.size();
  result.test_examples = test.size();

  const auto train_labels = labels_of(train);
  const auto dev_labels = labels_of(dev);
  const auto test_labels = labels_of(test);
  {
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t l : train_labels) ++counts[l];
    const auto majority = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    result.majority_accuracy =
        static_cast<double>(std::count(test_labels.begin(), test_labels.end(), majority)) / test_labels.size();
  }
  const std::size_t threads = config.threads;
  const LinearHead initial_head =
      train_linear_head(all_features(params, membership, train, threads), train_labels, classes, config.head_init);
  const auto frozen_dev = accuracy(initial_head, all_features(params, membership, dev, threads), dev_labels);
  result.frozen_test_accuracy =
      accuracy(initial_head, all_features(params, membership, test, threads), test_labels);

  std::size_t run_index = 0;
  for (double lr : config.learning_rates) {
    for (std::size_t batch : config.batch_sizes) {
      ++run_index;
      ModelParams<Real> p = params;
      LinearHead head = initial_head;
      AdamOptimizer<Real> encoder_adam(p.config, config.adam);
      HeadAdam head_adam(head);
      const std::size_t per_epoch = (train.size() + batch - 1) / batch;
      const std::uint64_t total = static_cast<std::uint64_t>(per_epoch * config.max_epochs);
      const auto warmup = static_cast<std::uint64_t>(std::llround(config.warmup_fraction * static_cast<double>(total)));
      FineTuneRun run{lr, batch, 0, frozen_dev, result.frozen_test_accuracy};
      std::uint64_t step = 0;
      for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto order = shuffled(train.size(), derive_rng(config.seed, RngStream::fine_tune, run_index, epoch));
        for (std::size_t start = 0; start < order.size(); start += batch) {
          const std::size_t stop = std::min(order.size(), start + batch);
          const double scale = 1.0 / static_cast<double>(stop - start);
          std::vector<ModelParams<Real>> grads(stop - start);
          std::vector<Eigen::MatrixXd> head_w(stop - start);
          std::vector<Eigen::VectorXd> head_b(stop - start);
          parallel_for(stop - start, threads, [&](std::size_t k) {
            const auto& item = train[order[start + k]];
            std::vector<ForwardTrace<Real>> traces;
            std::vector<Matrix<Real>> outputs;
            for (const auto& ids : item.sequences) {
              traces.push_back(forward(p, membership, std::span<const TokenId>(ids)));
              outputs.push_back(traces.back().v_output);
            }
            const Eigen::VectorXd x = item_features(outputs, item);
            const Eigen::VectorXd g = score_gradient(head, x, item.label, scale);
            head_w[k] = g * x.transpose();
            head_b[k] = g;
            const Eigen::VectorXd d_features = head.weight.transpose() * g;
            grads[k] = ModelParams<Real>::zeros(p.config);
            const auto d_out = feature_backward(outputs, item, d_features);
            for (std::size_t s = 0; s < traces.size(); ++s) {
              const Matrix<Real> d_in = encode_backward(p, traces[s], d_out[s], grads[k]);
              embed_backward(membership, std::span<const TokenId>(item.sequences[s]), d_in, grads[k]);
            }
          });
          for (std::size_t k = 1; k < grads.size(); ++k) {
            grads[0].add_scaled(grads[k], Real(1));
            head_w[0] += head_w[k];
            head_b[0] += head_b[k];
          }
          const double rate = learning_rate_at(step, total, warmup, lr);
          encoder_adam.step(p, grads[0], rate);
          head_adam.step(head, head_w[0], head_b[0], rate);
          ++step;
        }
        const double dev_acc = accuracy(head, all_features(p, membership, dev, threads), dev_labels);
        if (dev_acc > run.dev_accuracy) {
          run.dev_accuracy = dev_acc;
          run.best_epoch = epoch;
          run.test_accuracy = accuracy(head, all_features(p, membership, test, threads), test_labels);
        }
      }
      result.runs.push_back(run);
    }
  }
  for (std::size_t r = 1; r < result.runs.size(); ++r) {
    if (result.runs[r].dev_accuracy > result.runs[result.selected].dev_accuracy) result.selected = r;
  }
  result.dev_accuracy = result.runs[result.selected].dev_accuracy;
  result.test_accuracy = result.runs[result.selected].test_accuracy;
  return result;
}

}  // namespace

template <typename Real>
ProbeResult frozen_probe(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                         const Vocab& vocab, const std::vector<SenseTaggedExample>& train,
                         const std::vector<SenseTaggedExample>& test, const ProbeConfig& config,
                         const Lexicon* lexicon, std::size_t threads) {
  if (train.empty() || test.empty()) throw ContractError("frozen probe needs training and test examples");
  ProbeResult result;
  const std::size_t n_max = params.config.max_positions;
  const auto train_items = tagging_items(vocab, train, n_max, result.skipped);
  std::vector<std::string> test_words;
  const auto test_items = tagging_items(vocab, test, n_max, result.skipped, &test_words);
  if (train_items.empty() || test_items.empty()) throw ContractError("no probe example survived tokenization");
  const auto train_features = all_features(params, membership, train_items, threads);
  const auto test_features = all_features(params, membership, test_items, threads);
  const auto train_labels = labels_of(train_items);
  const auto test_labels = labels_of(test_items);
  result.head = train_linear_head(train_features, train_labels, params.config.sense_count, config);
  result.train_accuracy = accuracy(result.head, train_features, train_labels);
  result.test_accuracy = accuracy(result.head, test_features, test_labels);
  result.train_examples = train_items.size();
  result.test_examples = test_items.size();
  if (lexicon) {
    for (std::size_t i = 0; i < test_items.size(); ++i) {
      const auto allowed = allowed_senses(*lexicon, test_words[i]);
      if (!std::binary_search(allowed.begin(), allowed.end(), static_cast<SenseId>(test_labels[i]))) {
        ++result.gold_outside_allowed;
      }
    }
  }
  return result;
}

template <typename Real>
FineTuneResult fine_tune_eval(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                              const Vocab& vocab, const std::vector<SenseTaggedExample>& train,
                              const std::vector<SenseTaggedExample>& test, const FineTuneConfig& config) {
  if (train.empty() || test.empty()) throw ContractError("fine-tuning needs training and test examples");
  std::size_t skipped = 0;
  const std::size_t n_max = params.config.max_positions;
  auto train_items = tagging_items(vocab, train, n_max, skipped);
  const auto test_items = tagging_items(vocab, test, n_max, skipped);
  return run_fine_tune(params, membership, std::move(train_items), test_items, params.config.sense_count,
                       config, skipped);
}

template <typename Real>
FineTuneResult wic_eval(const ModelParams<Real>& params, const SenseMembershipMatrix& membership, const Vocab& vocab,
                        const std::vector<WiCExample>& train, const std::vector<WiCExample>& test,
                        const FineTuneConfig& config) {
  if (train.empty() || test.empty()) throw ContractError("WiC evaluation needs training and test pairs");
  std::size_t skipped = 0;
  const std::size_t n_max = params.config.max_positions;
  auto train_items = wic_items(vocab, train, n_max, skipped);
  const auto test_items = wic_items(vocab, test, n_max, skipped);
  return run_fine_tune(params, membership, std::move(train_items), test_items, 2, config, skipped);
}

#define SENSELM_EVALKIT(Real)                                                                                       \
  template Eigen::VectorXd span_embedding<Real>(const Matrix<Real>&, const WordSpan&);                             \
  template std::vector<WordSenses> predict_supersenses<Real>(const ModelParams<Real>&, const SenseMembershipMatrix&, \
                                                             const Vocab&, std::string_view);                       \
  template ProbeResult frozen_probe<Real>(const ModelParams<Real>&, const SenseMembershipMatrix&, const Vocab&,     \
                                          const std::vector<SenseTaggedExample>&,                                   \
                                          const std::vector<SenseTaggedExample>&, const ProbeConfig&,               \
                                          const Lexicon*, std::size_t);                                             \
  template FineTuneResult fine_tune_eval<Real>(const ModelParams<Real>&, const SenseMembershipMatrix&,              \
                                               const Vocab&, const std::vector<SenseTaggedExample>&,                \
                                               const std::vector<SenseTaggedExample>&, const FineTuneConfig&);      \
  template FineTuneResult wic_eval<Real>(const ModelParams<Real>&, const SenseMembershipMatrix&, const Vocab&,      \
                                         const std::vector<WiCExample>&, const std::vector<WiCExample>&,            \
                                         const FineTuneConfig&);

SENSELM_EVALKIT(float)
SENSELM_EVALKIT(double)

}  // namespace senselm
