#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "senselm/checkpoint.hpp"
#include "senselm/cluster.hpp"
#include "senselm/evalkit.hpp"
#include "senselm/gradcheck.hpp"
#include "senselm/lexicon.hpp"
#include "senselm/objective.hpp"
#include "senselm/rng.hpp"
#include "senselm/synthetic.hpp"
#include "senselm/trainer.hpp"

using namespace senselm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Options {
  fs::path work;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> steps;
  std::size_t threads = 1;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << x;
  return out.str();
}

std::span<const double> view(const std::vector<double>& v) { return v; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 1: closed forms of the sense losses.
Outcome loss_identities() {
  double worst = 0;
  auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  const std::vector<double> scores{std::log(2.0), 0.0, 0.0};
  const SenseSet a{0, 1};
  const double allowed = slm_allowed_loss(view(scores), std::span<const SenseId>(a));
  const double reg = slm_reg_loss(view(scores), std::span<const SenseId>(a));
  track(allowed, -std::log(0.75));
  track(reg, 0.5 * (-std::log(0.5) - std::log(0.25)));
  const bool worked = worst <= 1e-12;

  CounterRng rng(derive_rng(1, RngStream::synthetic, 1).key());
  bool bitwise = true;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(45);
    for (auto& x : s) x = 4.0 * rng.normal();
    const SenseSet one{static_cast<SenseId>(rng.below(45))};
    bitwise = bitwise && slm_allowed_loss(view(s), std::span<const SenseId>(one)) ==
                             slm_reg_loss(view(s), std::span<const SenseId>(one));
  }

  double uniform_worst = 0;
  for (std::size_t k = 1; k <= 45; ++k) {
    const std::vector<double> s(45, 0.37 * static_cast<double>(k));
    SenseSet set(k);
    std::iota(set.begin(), set.end(), 0);
    uniform_worst = std::max(uniform_worst, std::abs(slm_allowed_loss(view(s), std::span<const SenseId>(set)) -
                                                     std::log(45.0 / static_cast<double>(k))));
    uniform_worst =
        std::max(uniform_worst, std::abs(slm_reg_loss(view(s), std::span<const SenseId>(set)) - std::log(45.0)));
  }
  return {worked && bitwise && uniform_worst <= 1e-9,
          "worked-example error " + fmt(worst, 3) + ", |A|=1 bitwise " + (bitwise ? "yes" : "no") +
              ", uniform closed-form error " + fmt(uniform_worst, 3)};
}

// 2: slm_allowed + ln|A| <= slm_reg, tight exactly for a uniform restriction.
Outcome jensen_bound() {
  CounterRng rng(derive_rng(2, RngStream::synthetic, 2).key());
  std::size_t violations = 0, missed_equalities = 0, false_equalities = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(45);
    for (auto& x : s) x = 3.0 * rng.normal();
    std::vector<SenseId> ids(45);
    std::iota(ids.begin(), ids.end(), 0);
    rng.shuffle(std::span<SenseId>(ids));
    SenseSet set(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(2 + rng.below(44)));
    std::sort(set.begin(), set.end());
    const bool uniform = i % 2 == 1;
    if (uniform) {
      const double level = rng.normal();
      for (SenseId id : set) s[id] = level;
    }
    const double ln_k = std::log(static_cast<double>(set.size()));
    const double gap = slm_reg_loss(view(s), std::span<const SenseId>(set)) -
                       (slm_allowed_loss(view(s), std::span<const SenseId>(set)) + ln_k);
    const bool equal = std::abs(gap) <= 1e-12;
    if (gap < -1e-12) ++violations;
    if (uniform && !equal) ++missed_equalities;
    if (!uniform && equal) ++false_equalities;
    if (!uniform) min_gap = std::min(min_gap, gap);
  }
  return {violations == 0 && missed_equalities == 0 && false_equalities == 0,
          "1000 instances, violations " + std::to_string(violations) + ", equality detected on " +
              std::to_string(500 - missed_equalities) + "/500 uniform restrictions, smallest non-uniform gap " +
              fmt(min_gap, 3)};
}

// 3: analytic backward against central differences on the toy configuration.
Outcome gradient_check(const Options& options) {
  const auto run = RunConfig::load(fs::path(SENSELM_DATA_DIR) / "toy.cfg");
  GradCheckOptions gc;
  gc.seed = options.seed;
  double worst = 0;
  bool passed = true;
  std::size_t groups = 0;
  std::string failing;
  for (const auto& report : check_model_gradients(run, gc)) {
    worst = std::max(worst, report.max_rel_error);
    passed = passed && report.passed;
    groups += report.groups.size();
    if (!report.passed) failing += report.to_text();
  }
  const bool shape = run.model.layers == 2 && run.model.hidden == 32 && run.synthetic_vocab == 200;
  return {passed && shape && worst < 1e-4,
          "5 cases, " + std::to_string(groups) + " tensor checks, max relative error " + fmt(worst, 3) + failing};
}

// 4: masking statistics over 10,000 seeded 100-word sequences.
Outcome masking_statistics(const Options& options) {
  SyntheticWorldConfig wc;
  wc.corpus_lines = 10;
  wc.seed = options.seed;
  const auto world = make_synthetic_world(wc);
  const auto lexicon = world.lexicon();
  std::vector<std::string> pool(world.function_words.begin(), world.function_words.end());
  for (const auto& [word, senses] : world.entries) pool.push_back(word);
  for (const auto& cat : world.categories) pool.insert(pool.end(), cat.cues.begin(), cat.cues.end());
  Vocab vocab;
  for (const auto& w : pool) vocab.add(w);
  LexiconSenseLookup senses(lexicon);

  std::size_t words = 0, targets = 0, keep = 0, over_cap = 0, largest_prioritized = 0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    auto rng = derive_rng(options.seed, RngStream::synthetic, 4, i);
    std::string text;
    for (int w = 0; w < 100; ++w) text += pool[rng.below(pool.size())] + ' ';
    const auto seq = tokenize(vocab, text);
    const auto plan = plan_masking(seq, senses, MaskPolicy{}, rng.next());
    words += seq.spans.size();
    targets += plan.targets.size();
    for (const auto& t : plan.targets) keep += t.actions.front() == MaskAction::keep;
    const auto cap = static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(plan.budget) - 1e-9));
    if (plan.prioritized > cap) ++over_cap;
    largest_prioritized = std::max(largest_prioritized, plan.prioritized);
  }
  const double masked = static_cast<double>(targets) / static_cast<double>(words);
  const double kept = static_cast<double>(keep) / static_cast<double>(targets);
  return {std::abs(masked - 0.15) <= 0.01 && std::abs(kept - 0.10) <= 0.01 && over_cap == 0,
          "masked " + fmt(100 * masked) + "%, KEEP among targets " + fmt(100 * kept) +
              "%, prioritized above ceil(0.4 B) in " + std::to_string(over_cap) + " plans (largest " +
              std::to_string(largest_prioritized) + ")"};
}

// Shared pretraining world for criteria 5 and 6.
struct ToyWorld {
  SyntheticWorld world;
  Vocab vocab;
  Lexicon sense_lexicon;
  Lexicon word_lexicon;  // same stopwords, no entries
  SenseMembershipMatrix sense_membership;
  SenseMembershipMatrix word_membership;
  std::vector<EncodedSequence> data;
  RunConfig run;
};

ToyWorld make_toy_world(const Options& options) {
  ToyWorld t;
  SyntheticWorldConfig wc;
  wc.seed = options.seed;
  t.world = make_synthetic_world(wc);
  t.run = RunConfig::load(fs::path(SENSELM_DATA_DIR) / "synthetic.cfg");
  if (options.steps) t.run.train.steps = *options.steps;
  t.run.train.threads = options.threads;
  std::istringstream corpus(t.world.corpus_text());
  t.vocab = build_vocab(corpus, t.run.synthetic_vocab);
  t.sense_lexicon = t.world.lexicon();
  t.word_lexicon.stopwords = t.sense_lexicon.stopwords;
  const auto d_s = canonical_inventory().size();
  t.sense_membership = build_membership_matrix(t.sense_lexicon, t.vocab, d_s);
  t.word_membership = build_membership_matrix(t.word_lexicon, t.vocab, d_s);
  std::istringstream again(t.world.corpus_text());
  t.data = prepare_corpus(again, t.vocab, t.run.model.max_positions);
  return t;
}

double mean_slot_probability(const ModelParams<double>& params, const ToyWorld& t, double* lowest = nullptr) {
  double sum = 0, low = 1;
  const auto probes = t.world.slot_probes();
  for (const auto& probe : probes) {
    const auto words = predict_supersenses(params, t.sense_membership, t.vocab, probe.text);
    const auto it = std::find_if(words.begin(), words.end(), [](const WordSenses& w) { return w.word == "[MASK]"; });
    const double p = it == words.end() ? 0.0 : it->probabilities[probe.sense];
    sum += p;
    low = std::min(low, p);
  }
  if (lowest) *lowest = low;
  return sum / static_cast<double>(probes.size());
}

struct Pretrained {
  Checkpoint<double> sense;
  Checkpoint<double> word;
  std::vector<std::pair<std::uint64_t, double>> curve;  // step, mean slot probability
  double sense_seconds = 0;
  double word_seconds = 0;
};

Pretrained pretrain_pair(const ToyWorld& t, const Options& options, bool with_baseline) {
  using clock = std::chrono::steady_clock;
  Pretrained out;
  const auto steps = t.run.train.steps;
  const std::uint64_t every = std::max<std::uint64_t>(1, steps / 4);
  {
    const auto start = clock::now();
    Trainer<double> trainer(t.run, t.vocab, t.sense_lexicon, t.sense_membership, t.data);
    out.curve.emplace_back(0, mean_slot_probability(trainer.params(), t));
    while (trainer.current_step() < steps) {
      trainer.step();
      if (trainer.current_step() % every == 0 || trainer.current_step() == steps) {
        out.curve.emplace_back(trainer.current_step(), mean_slot_probability(trainer.params(), t));
      }
    }
    out.sense = trainer.checkpoint();
    out.sense_seconds = std::chrono::duration<double>(clock::now() - start).count();
  }
  save_checkpoint(out.sense, options.work / "sense.sblm");
  if (with_baseline) {
    const auto start = clock::now();
    out.word = train<double>(t.run, t.vocab, t.word_lexicon, t.word_membership, t.data);
    out.word_seconds = std::chrono::duration<double>(clock::now() - start).count();
    save_checkpoint(out.word, options.work / "word.sblm");
  }
  return out;
}

// 5: on held-out templates the shared supersense of the slot dominates.
Outcome soft_label_cancellation(const ToyWorld& t, const Pretrained& p) {
  double lowest = 0;
  const double mean = mean_slot_probability(p.sense.params, t, &lowest);
  std::string curve;
  for (const auto& [step, prob] : p.curve) curve += (curve.empty() ? "" : " ") + std::to_string(step) + ":" + fmt(prob, 3);
  const auto& m = t.run.model;
  const bool shape = m.layers == 2 && m.hidden == 64 && t.run.train.steps <= 20000;
  return {shape && mean >= 0.8,
          "mean p(shared sense) " + fmt(mean) + " over " + std::to_string(t.world.slot_probes().size()) +
              " held-out probes (lowest " + fmt(lowest, 3) + "), vocab " + std::to_string(t.vocab.size()) + ", " +
              std::to_string(t.run.train.steps) + " steps, curve " + curve};
}

// 6: sense pretraining beats word-only pretraining on both synthetic tasks.
Outcome directional_table(const ToyWorld& t, const Pretrained& p, const Options& options) {
  const auto train = t.world.semeval_train();
  const auto test = t.world.semeval_test();
  const auto sense_probe =
      frozen_probe(p.sense.params, t.sense_membership, t.vocab, train, test, {}, nullptr, options.threads);
  const auto word_probe =
      frozen_probe(p.word.params, t.word_membership, t.vocab, train, test, {}, nullptr, options.threads);
  FineTuneConfig ft;
  ft.seed = options.seed;
  ft.threads = options.threads;
  const auto wic_train = t.world.wic_train();
  const auto wic_test = t.world.wic_test();
  const auto sense_wic = wic_eval(p.sense.params, t.sense_membership, t.vocab, wic_train, wic_test, ft);
  const auto word_wic = wic_eval(p.word.params, t.word_membership, t.vocab, wic_train, wic_test, ft);
  const double probe_gain = 100 * (sense_probe.test_accuracy - word_probe.test_accuracy);
  const double wic_gain = 100 * (sense_wic.test_accuracy - word_wic.test_accuracy);
  return {probe_gain >= 10.0 && wic_gain >= 5.0,
          "SemEval-SS frozen probe " + fmt(100 * sense_probe.test_accuracy) + " vs " +
              fmt(100 * word_probe.test_accuracy) + " (" + fmt(probe_gain) + " points, need 10); WiC " +
              fmt(100 * sense_wic.test_accuracy) + " vs " + fmt(100 * word_wic.test_accuracy) + " (" + fmt(wic_gain) +
              " points, need 5; frozen heads " + fmt(100 * sense_wic.frozen_test_accuracy) + " vs " +
              fmt(100 * word_wic.frozen_test_accuracy) + ")"};
}

// 7: identical seeds give identical bytes; resuming at k changes nothing.
Outcome determinism_and_resume(const Options& options) {
  SyntheticWorldConfig wc;
  wc.corpus_lines = 2000;
  wc.seed = options.seed;
  const auto world = make_synthetic_world(wc);
  auto run = RunConfig::load(fs::path(SENSELM_DATA_DIR) / "toy.cfg");
  run.train.steps = 40;
  run.train.checkpoint_interval = 15;
  std::istringstream corpus(world.corpus_text());
  const auto vocab = build_vocab(corpus, 500);
  const auto lexicon = world.lexicon();
  const auto membership = build_membership_matrix(lexicon, vocab, canonical_inventory().size());
  std::istringstream again(world.corpus_text());
  const auto data = prepare_corpus(again, vocab, run.model.max_positions);

  const auto dir = options.work / "determinism";
  fs::remove_all(dir);
  train<double>(run, vocab, lexicon, membership, data, {dir / "a", {}});
  train<double>(run, vocab, lexicon, membership, data, {dir / "b", {}});
  auto threaded = run;
  threaded.train.threads = 4;
  train<double>(threaded, vocab, lexicon, membership, data, {dir / "c", {}});
  const auto a = slurp(dir / "a" / "ckpt_final.sblm");
  const bool identical = !a.empty() && a == slurp(dir / "b" / "ckpt_final.sblm");
  const bool thread_free = a == slurp(dir / "c" / "ckpt_final.sblm");

  bool resumed_equal = true;
  for (int k : {15, 30}) {
    const auto mid = load_checkpoint<double>(dir / "a" / ("ckpt_step" + std::to_string(k) + ".sblm"));
    train<double>(run, vocab, lexicon, membership, data, {dir / ("resume" + std::to_string(k)), {}}, &mid);
    resumed_equal = resumed_equal && a == slurp(dir / ("resume" + std::to_string(k)) / "ckpt_final.sblm");
  }

  auto f32 = run;
  f32.train.precision = Precision::f32;
  train<float>(f32, vocab, lexicon, membership, data, {dir / "f1", {}});
  train<float>(f32, vocab, lexicon, membership, data, {dir / "f2", {}});
  const bool float_identical = slurp(dir / "f1" / "ckpt_final.sblm") == slurp(dir / "f2" / "ckpt_final.sblm");
  return {identical && thread_free && resumed_equal && float_identical,
          std::string("repeat run identical: ") + (identical ? "yes" : "no") + ", 1 vs 4 threads identical: " +
              (thread_free ? "yes" : "no") + ", resume at 15 and 30 identical: " + (resumed_equal ? "yes" : "no") +
              ", f32 repeat identical: " + (float_identical ? "yes" : "no")};
}

// Brute-force average linkage: distances recomputed from member leaves.
std::vector<Merge> brute_force_linkage(const std::vector<std::vector<double>>& v) {
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < v.size(); ++i) {
    members.push_back({i});
    active.push_back(i);
  }
  std::vector<Merge> merges;
  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        double sum = 0;
        for (std::size_t x : members[active[a]]) {
          for (std::size_t y : members[active[b]]) sum += cosine_distance(v[x], v[y]);
        }
        const double d = sum / static_cast<double>(members[active[a]].size() * members[active[b]].size());
        if (d < best) {
          best = d;
          ba = active[a];
          bb = active[b];
        }
      }
    }
    auto joined = members[ba];
    joined.insert(joined.end(), members[bb].begin(), members[bb].end());
    merges.push_back({ba, bb, best, joined.size()});
    members.push_back(std::move(joined));
    std::erase(active, ba);
    std::erase(active, bb);
    active.push_back(members.size() - 1);
  }
  return merges;
}

// 8: dendrogram against the brute-force oracle.
Outcome clustering_oracle(const Options& options) {
  auto rng = derive_rng(options.seed, RngStream::synthetic, 8);
  std::size_t mismatches = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t d = 1 + rng.below(8);
    std::vector<std::vector<double>> v(n, std::vector<double>(d));
    for (auto& row : v) {
      for (auto& x : row) x = rng.normal();
    }
    const auto tree = cluster_vectors(v);
    const auto oracle = brute_force_linkage(v);
    bool same = tree.merges.size() == oracle.size();
    for (std::size_t k = 0; same && k < oracle.size(); ++k) {
      const auto& m = tree.merges[k];
      same = m.left == oracle[k].left && m.right == oracle[k].right && m.size == oracle[k].size &&
             std::abs(m.height - oracle[k].height) <= 1e-12;
      worst = std::max(worst, std::abs(m.height - oracle[k].height));
    }
    mismatches += !same;
  }
  return {mismatches == 0, "100 instances of up to 12 vectors, mismatches " + std::to_string(mismatches) +
                               ", max height difference " + fmt(worst, 3)};
}

// 9: the shipped inventory.
Outcome inventory_fidelity() {
  const auto inv = load_inventory(fs::path(SENSELM_DATA_DIR) / "supersenses.tsv");
  const auto n = inv.count(PartOfSpeech::noun), v = inv.count(PartOfSpeech::verb), a = inv.count(PartOfSpeech::adj),
             r = inv.count(PartOfSpeech::adv);
  const bool builtin = canonical_inventory().content_hash() == inv.content_hash();
  return {inv.size() == 45 && n == 26 && v == 15 && a == 3 && r == 1 && builtin,
          std::to_string(inv.size()) + " supersenses, split " + std::to_string(n) + "/" + std::to_string(v) + "/" +
              std::to_string(a) + "/" + std::to_string(r) + ", built-in table " + (builtin ? "matches" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the supersense-aware language model"};
  Options options;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory")->capture_default_str();
  app.add_option("--seed", options.seed, "Seed for generated data")->capture_default_str();
  app.add_option("--steps", options.steps, "Override pretraining steps for criteria 5 and 6");
  app.add_option("--threads", options.threads, "Worker threads")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  options.work = work;
  fs::create_directories(options.work);

  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };
  bool all_passed = true;
  auto report = [&](int id, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
    if (!wanted(id)) return;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = body();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= limit_seconds;
    const bool passed = outcome.passed && in_time;
    all_passed = all_passed && passed;
    std::cout << "criterion " << id << " " << (passed ? "PASS" : "FAIL") << "  " << name << ": " << outcome.detail
              << " [" << fmt(seconds, 3) << " s, limit " << fmt(limit_seconds) << " s"
              << (in_time ? "" : ", over time") << "]" << std::endl;
  };

  report(1, "loss identities", 1, loss_identities);
  report(2, "Jensen bound", 1, jensen_bound);
  report(3, "gradient check", 60, [&] { return gradient_check(options); });
  report(4, "masking statistics", 30, [&] { return masking_statistics(options); });
  if (wanted(5) || wanted(6)) {
    const auto start = std::chrono::steady_clock::now();
    std::optional<ToyWorld> world;
    std::optional<Pretrained> pretrained;
    std::string setup_error;
    try {
      world = make_toy_world(options);
      pretrained = pretrain_pair(*world, options, wanted(6));
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto guarded = [&](auto body) {
      return [&, body]() -> Outcome {
        if (!pretrained) return {false, "pretraining failed: " + setup_error};
        return body();
      };
    };
    if (pretrained) {
      std::cout << "pretraining: sense model " << fmt(pretrained->sense_seconds, 3) << " s";
      if (wanted(6)) std::cout << ", word-only baseline " << fmt(pretrained->word_seconds, 3) << " s";
      std::cout << std::endl;
    }
    // Each criterion is charged with its own pretraining time.
    const double sense_setup = pretrained ? setup - pretrained->word_seconds : setup;
    report(5, "soft-label cancellation", 1800 - sense_setup,
           guarded([&] { return soft_label_cancellation(*world, *pretrained); }));
    report(6, "directional SemEval-SS and WiC", 1800 - setup,
           guarded([&] { return directional_table(*world, *pretrained, options); }));
  }
  report(7, "determinism and resume", 300, [&] { return determinism_and_resume(options); });
  report(8, "clustering oracle", 5, [&] { return clustering_oracle(options); });
  report(9, "inventory fidelity", 1, inventory_fidelity);
  std::cout << (all_passed ? "all selected criteria passed" : "some criteria FAILED") << std::endl;
  return all_passed ? 0 : 1;
}
