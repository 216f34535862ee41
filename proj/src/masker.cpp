#include "senselm/masker.hpp"

#include <algorithm>
#include <cmath>

#include "senselm/errors.hpp"
#include "senselm/rng.hpp"

namespace senselm {

namespace {

// Guards the rounding helpers against products like 0.15 * 10 landing a hair
// below the exact half.
constexpr double kRoundingSlack = 1e-9;

void check_fraction(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ConfigError(std::string("masking policy: ") + name + " must lie in [0, 1]");
  }
}

}  // namespace

void MaskPolicy::validate() const {
  check_fraction(mask_rate, "mask_rate");
  check_fraction(single_sense_take, "single_sense_take");
  check_fraction(single_sense_cap, "single_sense_cap");
  check_fraction(keep_prob, "keep_prob");
}

MaskPolicy MaskPolicy::from_config(const KeyValueConfig& config) {
  MaskPolicy policy;
  policy.mask_rate = config.get_double("mask_rate", policy.mask_rate);
  policy.single_sense_take = config.get_double("single_sense_take", policy.single_sense_take);
  policy.single_sense_cap = config.get_double("single_sense_cap", policy.single_sense_cap);
  policy.keep_prob = config.get_double("keep_prob", policy.keep_prob);
  policy.whole_word = config.get_bool("whole_word", policy.whole_word);
  policy.validate();
  return policy;
}

std::size_t masking_budget(double mask_rate, std::size_t words) {
  if (words == 0) return 0;
  const auto rounded = static_cast<std::size_t>(std::floor(mask_rate * static_cast<double>(words) + 0.5 + kRoundingSlack));
  return std::clamp<std::size_t>(rounded, 1, words);
}

std::size_t single_sense_slots(double cap, std::size_t budget) {
  return static_cast<std::size_t>(std::ceil(cap * static_cast<double>(budget) - kRoundingSlack));
}

const SenseSet& LexiconSenseLookup::senses(const std::string& word) const {
  auto it = cache_.find(word);
  if (it == cache_.end()) it = cache_.emplace(word, allowed_senses(*lexicon_, word)).first;
  return it->second;
}

MaskPlan plan_masking(const EncodedSequence& seq, const SenseLookup& senses, const MaskPolicy& policy,
                      std::uint64_t seed) {
  if (seq.empty()) throw ContractError("plan_masking needs a non-empty sequence");
  CounterRng rng(CounterRng::mix(seed), 0);

  // [UNK] words are never prediction targets.
  std::vector<std::size_t> single;
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < seq.spans.size(); ++i) {
    const auto& span = seq.spans[i];
    if (span.length() == 1 && seq.ids[span.begin] == Vocab::kUnk) continue;
    (senses.senses(span.word).size() == 1 ? single : others).push_back(i);
  }
  const std::size_t candidates = single.size() + others.size();

  MaskPlan plan;
  plan.budget = std::min(masking_budget(policy.mask_rate, seq.spans.size()), candidates);
  plan.single_sense_candidates = single.size();

  // Prioritization: take a share of the single-supersensed words, truncated
  // (uniformly at random, via the shuffle) to the cap on the budget.
  const auto take = static_cast<std::size_t>(
      std::floor(policy.single_sense_take * static_cast<double>(single.size()) + 0.5 + kRoundingSlack));
  const std::size_t prioritized =
      std::min({take, single_sense_slots(policy.single_sense_cap, plan.budget), plan.budget});
  rng.shuffle(std::span<std::size_t>(single));
  std::vector<std::pair<std::size_t, bool>> chosen;
  for (std::size_t i = 0; i < prioritized; ++i) chosen.emplace_back(single[i], true);
  plan.prioritized = prioritized;

  // Random fill from every word not yet chosen.
  std::vector<std::size_t> rest(single.begin() + static_cast<std::ptrdiff_t>(prioritized), single.end());
  rest.insert(rest.end(), others.begin(), others.end());
  std::sort(rest.begin(), rest.end());
  rng.shuffle(std::span<std::size_t>(rest));
  for (std::size_t i = 0; chosen.size() < plan.budget; ++i) chosen.emplace_back(rest[i], false);

  std::sort(chosen.begin(), chosen.end());
  for (const auto& [span_index, was_prioritized] : chosen) {
    const auto& span = seq.spans[span_index];
    MaskTarget target;
    target.span_index = span_index;
    target.span = span;
    target.prioritized = was_prioritized;
    target.gold.assign(seq.ids.begin() + static_cast<std::ptrdiff_t>(span.begin),
                       seq.ids.begin() + static_cast<std::ptrdiff_t>(span.end));
    target.allowed = senses.senses(span.word);
    if (policy.whole_word) {
      const MaskAction action = rng.bernoulli(policy.keep_prob) ? MaskAction::keep : MaskAction::mask;
      target.actions.assign(span.length(), action);
    } else {
      for (std::size_t p = 0; p < span.length(); ++p) {
        target.actions.push_back(rng.bernoulli(policy.keep_prob) ? MaskAction::keep : MaskAction::mask);
      }
    }
    plan.targets.push_back(std::move(target));
  }
  return plan;
}

MaskPlan plan_masking(const EncodedSequence& seq, const Lexicon& lexicon, const MaskPolicy& policy,
                      std::uint64_t seed) {
  LexiconSenseLookup lookup(lexicon);
  return plan_masking(seq, lookup, policy, seed);
}

EncodedSequence apply_plan(const EncodedSequence& seq, const MaskPlan& plan, const Vocab& vocab) {
  EncodedSequence out = seq;
  for (const auto& target : plan.targets) {
    const auto& span = target.span;
    if (target.span_index >= seq.spans.size() || !(seq.spans[target.span_index] == span)) {
      throw PlanError("mask target does not match span " + std::to_string(target.span_index) + " of the sequence");
    }
    if (target.actions.size() != span.length() || target.gold.size() != span.length()) {
      throw PlanError("mask target has the wrong number of actions");
    }
    for (std::size_t p = 0; p < span.length(); ++p) {
      if (seq.ids[span.begin + p] != target.gold[p]) throw PlanError("mask target gold ids differ from the sequence");
      if (target.actions[p] == MaskAction::mask) out.ids[span.begin + p] = Vocab::kMask;
    }
  }
  if (vocab.size() <= Vocab::kMask) throw PlanError("vocabulary has no [MASK] token");
  return out;
}

}  // namespace senselm
