#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace senselm {

class Vocab;

using SenseId = std::uint32_t;
using TokenId = std::uint32_t;

/// Sorted, duplicate-free list of supersense ids.
using SenseSet = std::vector<SenseId>;

enum class PartOfSpeech : std::uint8_t { noun, verb, adj, adv };

std::string_view to_string(PartOfSpeech pos);
std::optional<PartOfSpeech> parse_part_of_speech(std::string_view text);

struct Supersense {
  SenseId id = 0;
  std::string name;  // "<pos>.<category>", e.g. "noun.food"
  PartOfSpeech pos = PartOfSpeech::noun;
};

class SupersenseInventory {
 public:
  SupersenseInventory() = default;
  /// Validates uniqueness and the "<pos>.<category>" shape; ids are
  /// reassigned densely in the given order.
  explicit SupersenseInventory(std::vector<Supersense> entries);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const Supersense& operator[](SenseId id) const { return entries_.at(id); }
  const std::vector<Supersense>& entries() const noexcept { return entries_; }
  std::optional<SenseId> find(std::string_view name) const;
  std::size_t count(PartOfSpeech pos) const;
  /// Content hash over names and part-of-speech tags in id order.
  std::uint64_t content_hash() const;

 private:
  std::vector<Supersense> entries_;
  std::unordered_map<std::string, SenseId> index_;
};

/// The 45 WordNet lexicographer supersenses, in the order shipped in
/// data/supersenses.tsv.
const SupersenseInventory& canonical_inventory();

SupersenseInventory parse_inventory(std::istream& in);
SupersenseInventory load_inventory(const std::filesystem::path& path);
/// "name<TAB>pos" lines in id order; parse_inventory() reads it back.
std::string format_inventory(const SupersenseInventory& inventory);

struct LemmaRule {
  std::string suffix;
  std::string replacement;
};

/// Ordered suffix rewrites; the first rule whose suffix matches wins.
using LemmaRules = std::vector<LemmaRule>;

/// ies->y, sses->ss, ses->s, ing->, ed->, s->
LemmaRules default_lemma_rules();

/// Applies the first matching rule once. A rule only matches when a
/// non-empty stem remains.
std::string lemmatize(std::string_view word, const LemmaRules& rules);

struct Lexicon {
  std::unordered_map<std::string, SenseSet> allowed;
  std::unordered_set<std::string> stopwords;
  LemmaRules rules = default_lemma_rules();

  /// Hash of the sorted entry list, stopwords and rules.
  std::uint64_t content_hash() const;
};

Lexicon parse_lexicon(std::istream& lexicon, std::istream& stoplist, const SupersenseInventory& inventory,
                      LemmaRules rules = default_lemma_rules());
Lexicon parse_lexicon(const std::filesystem::path& lexicon, const std::filesystem::path& stoplist,
                      const SupersenseInventory& inventory, LemmaRules rules = default_lemma_rules());

/// A(w). Empty for words of at most three characters and for stopwords
/// (checked on the surface form and its lemma). Otherwise the lexicon entry
/// for the surface form, falling back to the union over every matching
/// lemma rule.
SenseSet allowed_senses(const Lexicon& lexicon, std::string_view word);

/// Static 0/1 matrix M of shape D_S x D_W, stored as sorted
/// (sense id, word id) pairs plus a per-word column index.
class SenseMembershipMatrix {
 public:
  struct Entry {
    SenseId sense;
    TokenId word;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  SenseMembershipMatrix() = default;
  SenseMembershipMatrix(std::size_t sense_count, std::size_t word_count, std::vector<Entry> entries);

  std::size_t sense_count() const noexcept { return sense_count_; }
  std::size_t word_count() const noexcept { return word_count_; }
  std::size_t nonzeros() const noexcept { return entries_.size(); }
  /// Entries sorted by (sense, word).
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  /// Nonzero rows of column `word`, ascending.
  std::span<const SenseId> senses_of(TokenId word) const;
  bool contains(SenseId sense, TokenId word) const;
  std::uint64_t content_hash() const;

 private:
  std::size_t sense_count_ = 0;
  std::size_t word_count_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::size_t> column_offsets_;
  std::vector<SenseId> column_senses_;
};

SenseMembershipMatrix build_membership_matrix(const Lexicon& lexicon, const Vocab& vocab, std::size_t sense_count);

void save_membership_matrix(const SenseMembershipMatrix& matrix, const std::filesystem::path& path);
SenseMembershipMatrix load_membership_matrix(const std::filesystem::path& path);

}  // namespace senselm
