#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "senselm/lexicon.hpp"

namespace senselm {

enum class TokenKind : std::uint8_t { special, whole_word, sub_word };

/// Kind implied by a token's spelling: bracketed upper-case names are
/// specials, a "##" prefix marks a word-internal piece, anything else is a
/// whole word (word-initial pieces share ids with whole words, as in BERT).
TokenKind infer_token_kind(std::string_view text);

class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kMask = 2;
  static constexpr std::size_t kSpecialCount = 3;

  /// Vocabulary holding only the specials.
  Vocab();
  /// Throws BuildError if the specials are missing or a token repeats.
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& text(TokenId id) const { return tokens_.at(id); }
  TokenKind kind(TokenId id) const { return kinds_.at(id); }
  std::optional<TokenId> find(std::string_view text) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::uint64_t content_hash() const;

  /// Appends a token if absent; returns its id either way.
  TokenId add(std::string token);

 private:
  std::vector<std::string> tokens_;
  std::vector<TokenKind> kinds_;
  std::unordered_map<std::string, TokenId> index_;
};

struct WordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::string word;
  std::size_t length() const noexcept { return end - begin; }
  friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

struct EncodedSequence {
  std::vector<TokenId> ids;
  std::vector<WordSpan> spans;
  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
  friend bool operator==(const EncodedSequence&, const EncodedSequence&) = default;
};

inline constexpr std::size_t kDefaultMaxLength = 128;
/// Longest sub-word piece produced by the vocabulary builder, in code points.
inline constexpr std::size_t kMaxPieceLength = 8;
/// Share of the non-special budget kept back for sub-word pieces when the
/// corpus has more distinct words than fit.
inline constexpr double kPieceReserve = 0.2;

/// Builds a vocabulary of exactly `size` tokens when the corpus supports it
/// (fewer if the corpus runs out of words and pieces). With `base`, every
/// base id is kept and only whole words are appended.
Vocab build_vocab(std::istream& corpus, std::size_t size, const Vocab* base = nullptr);
Vocab build_vocab(const std::filesystem::path& corpus, std::size_t size, const Vocab* base = nullptr);

Vocab load_vocab(const std::filesystem::path& path);
void save_vocab(const Vocab& vocab, const std::filesystem::path& path);

/// Greedy longest-match-first segmentation of one canonical word. Returns an
/// empty vector when no segmentation exists.
std::vector<TokenId> segment_word(const Vocab& vocab, std::string_view word);

/// Words that do not fit in `max_length` positions are dropped from the end.
EncodedSequence tokenize(const Vocab& vocab, std::string_view text, std::size_t max_length = kDefaultMaxLength);

std::span<const WordSpan> word_boundaries(const EncodedSequence& seq);

/// Words joined by single spaces, pieces glued back together.
std::string detokenize(const Vocab& vocab, const EncodedSequence& seq);

/// Throws ContractError unless spans are ordered, disjoint and tile [0, size).
void check_span_tiling(const EncodedSequence& seq);

}  // namespace senselm
