#pragma once

#include <cstdint>
#include <vector>

#include "senselm/config.hpp"
#include "senselm/lexicon.hpp"
#include "senselm/textpipe.hpp"

namespace senselm {

struct MaskPolicy {
  double mask_rate = 0.15;
  double single_sense_take = 0.5;
  double single_sense_cap = 0.4;
  double keep_prob = 0.1;
  bool whole_word = false;

  void validate() const;
  static MaskPolicy from_config(const KeyValueConfig& config);
};

enum class MaskAction : std::uint8_t { mask, keep };

struct MaskTarget {
  std::size_t span_index = 0;
  WordSpan span;
  /// One action per token of the span; all equal under whole-word masking.
  std::vector<MaskAction> actions;
  std::vector<TokenId> gold;
  SenseSet allowed;
  /// Chosen in the single-supersense prioritization phase.
  bool prioritized = false;
  friend bool operator==(const MaskTarget&, const MaskTarget&) = default;
};

struct MaskPlan {
  std::vector<MaskTarget> targets;  // ordered by span position
  std::size_t budget = 0;
  std::size_t single_sense_candidates = 0;
  std::size_t prioritized = 0;
  friend bool operator==(const MaskPlan&, const MaskPlan&) = default;
};

/// Round-half-up of mask_rate x words, at least one for a non-empty sequence.
std::size_t masking_budget(double mask_rate, std::size_t words);
/// ceil(single_sense_cap x budget).
std::size_t single_sense_slots(double cap, std::size_t budget);

/// Looks up A(w) for a span's surface word. The trainer passes a memoizing
/// wrapper around allowed_senses().
class SenseLookup {
 public:
  virtual ~SenseLookup() = default;
  virtual const SenseSet& senses(const std::string& word) const = 0;
};

class LexiconSenseLookup final : public SenseLookup {
 public:
  explicit LexiconSenseLookup(const Lexicon& lexicon) : lexicon_(&lexicon) {}
  const SenseSet& senses(const std::string& word) const override;

 private:
  const Lexicon* lexicon_;
  mutable std::unordered_map<std::string, SenseSet> cache_;
};

MaskPlan plan_masking(const EncodedSequence& seq, const SenseLookup& senses, const MaskPolicy& policy,
                      std::uint64_t seed);
MaskPlan plan_masking(const EncodedSequence& seq, const Lexicon& lexicon, const MaskPolicy& policy,
                      std::uint64_t seed);

/// MASK actions overwrite their positions with [MASK]; KEEP leaves the id.
/// Throws PlanError if the plan does not fit the sequence.
EncodedSequence apply_plan(const EncodedSequence& seq, const MaskPlan& plan, const Vocab& vocab);

}  // namespace senselm
