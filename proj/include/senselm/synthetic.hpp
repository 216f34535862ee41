#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "senselm/lexicon.hpp"
#include "senselm/textpipe.hpp"

namespace senselm {

/// Labelled word in context: `target` indexes the sentence's words.
struct SenseTaggedExample {
  std::string sentence;
  std::size_t target = 0;
  SenseId gold = 0;
};

/// Do the two occurrences of `word` share a supersense?
struct WiCExample {
  std::string first;
  std::string second;
  std::string word;
  bool same = false;
};

/// A context with its slot replaced by "[MASK]" and the sense every filler
/// of that context shares.
struct SlotProbe {
  std::string text;
  SenseId sense = 0;
};

struct SyntheticCategory {
  std::string name;  // supersense name
  SenseId sense = 0;
  std::vector<std::string> cues;
  std::vector<std::string> mono;   // sense set {sense}
  std::vector<std::string> poly;   // {sense, partner}
  std::vector<std::string> rare;   // {sense}, seen only a few times
  std::vector<std::string> train_templates;    // "_" marks the slot
  std::vector<std::string> heldout_templates;  // never in the corpus
};

struct SyntheticWorldConfig {
  std::size_t mono_words = 60;
  std::size_t poly_words = 30;
  std::size_t rare_words = 15;
  std::size_t rare_occurrences = 2;
  std::size_t train_templates = 40;
  std::size_t heldout_templates = 3;
  std::size_t corpus_lines = 40000;
  double neutral_share = 0.15;
  /// Mono words per category the SemEval-style probe trains on; the rest
  /// and the rare words are its test set.
  std::size_t probe_train_words = 45;
  std::uint64_t seed = 0;
};

/// Template corpus over twelve noun and verb supersenses. Each category has
/// cue words that mark its contexts; every word filling a category's slot
/// has that category in its sense set, and poly words pair it with a second
/// category, so the only sense shared by all fillers of a context is the
/// context's own.
struct SyntheticWorld {
  std::vector<SyntheticCategory> categories;
  std::vector<std::string> function_words;
  std::vector<std::string> neutral_templates;
  /// Every content word with its sense names.
  std::map<std::string, std::vector<std::string>> entries;
  std::vector<std::string> corpus;
  std::size_t probe_train_words = 0;
  std::uint64_t seed = 0;

  std::string lexicon_text() const;   // "word<TAB>sense,sense"
  std::string stoplist_text() const;  // one function word per line
  std::string corpus_text() const;
  Lexicon lexicon(const SupersenseInventory& inventory = canonical_inventory()) const;

  /// Held-out templates with the slot masked.
  std::vector<SlotProbe> slot_probes() const;
  /// Neutral contexts: train on common mono words, test on held-out mono
  /// words and rare words.
  std::vector<SenseTaggedExample> semeval_train() const;
  std::vector<SenseTaggedExample> semeval_test() const;
  /// Balanced pairs over poly words, split by word; contexts are drawn from
  /// the corpus templates of the word's two categories.
  std::vector<WiCExample> wic_train() const;
  std::vector<WiCExample> wic_test() const;
};

SyntheticWorld make_synthetic_world(const SyntheticWorldConfig& config = {},
                                    const SupersenseInventory& inventory = canonical_inventory());

/// Small problem for gradient checks: a vocabulary of exactly `vocab_size`
/// tokens with "##" pieces, a random lexicon and sequences that mix single-
/// and multi-token words.
struct GradCheckProblem {
  Vocab vocab;
  Lexicon lexicon;
  SenseMembershipMatrix membership;
  std::vector<EncodedSequence> sequences;
};

GradCheckProblem make_grad_check_problem(std::size_t vocab_size, std::size_t sequences, std::size_t words,
                                         std::uint64_t seed,
                                         const SupersenseInventory& inventory = canonical_inventory());

}  // namespace senselm
