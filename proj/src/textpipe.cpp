#include "senselm/textpipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "senselm/binio.hpp"
#include "senselm/errors.hpp"
#include "senselm/text.hpp"

namespace senselm {

namespace {

constexpr std::string_view kSpecials[] = {"[PAD]", "[UNK]", "[MASK]"};
constexpr std::size_t kMaxWordCodepoints = 100;

using WordCounts = std::vector<std::pair<std::string, std::uint64_t>>;

WordCounts count_words(std::istream& corpus) {
  std::unordered_map<std::string, std::uint64_t> counts;
  std::string line;
  while (std::getline(corpus, line)) {
    for (auto& word : pre_tokenize(line)) ++counts[std::move(word)];
  }
  WordCounts sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return sorted;
}

std::string strip_marker(std::string_view piece) {
  return std::string(piece.starts_with("##") ? piece.substr(2) : piece);
}

// Fills `vocab` with sub-word pieces until it holds `target` tokens: first the
// character alphabet (word-initial and word-internal forms) by frequency, then
// greedy merges of the most frequent adjacent pair.
void mine_pieces(Vocab& vocab, const WordCounts& words, std::size_t target) {
  std::map<std::string, std::uint64_t> alphabet;
  std::vector<std::pair<std::vector<std::string>, std::uint64_t>> segmented;
  segmented.reserve(words.size());
  for (const auto& [word, freq] : words) {
    auto chars = split_codepoints(word);
    if (chars.empty() || chars.size() > kMaxWordCodepoints) continue;
    for (std::size_t i = 1; i < chars.size(); ++i) chars[i] = "##" + chars[i];
    for (const auto& c : chars) alphabet[c] += freq;
    segmented.emplace_back(std::move(chars), freq);
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked(alphabet.begin(), alphabet.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [piece, freq] : ranked) {
    if (vocab.size() >= target) return;
    vocab.add(piece);
  }

  while (vocab.size() < target) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> pairs;
    for (const auto& [symbols, freq] : segmented) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        const std::size_t merged_length =
            codepoint_length(strip_marker(symbols[i])) + codepoint_length(strip_marker(symbols[i + 1]));
        if (merged_length > kMaxPieceLength) continue;
        pairs[{symbols[i], symbols[i + 1]}] += freq;
      }
    }
    if (pairs.empty()) return;
    // Highest count wins; std::map order breaks ties lexicographically.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    const std::string merged = left + right.substr(2);
    for (auto& [symbols, freq] : segmented) {
      std::vector<std::string> next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(std::move(symbols[i]));
        }
      }
      symbols = std::move(next);
    }
    vocab.add(merged);
  }
}

}  // namespace

TokenKind infer_token_kind(std::string_view text) {
  if (text.size() >= 3 && text.front() == '[' && text.back() == ']' &&
      std::all_of(text.begin() + 1, text.end() - 1, [](char c) { return (c >= 'A' && c <= 'Z') || c == '_'; })) {
    return TokenKind::special;
  }
  if (text.size() > 2 && text.starts_with("##")) return TokenKind::sub_word;
  return TokenKind::whole_word;
}

Vocab::Vocab() {
  for (auto special : kSpecials) add(std::string(special));
}

Vocab::Vocab(std::vector<std::string> tokens) {
  if (tokens.size() < kSpecialCount) throw BuildError("vocabulary lacks the special tokens");
  for (std::size_t i = 0; i < kSpecialCount; ++i) {
    if (tokens[i] != kSpecials[i]) {
      throw BuildError("token " + std::to_string(i) + " must be " + std::string(kSpecials[i]) + ", found '" +
                       tokens[i] + "'");
    }
  }
  for (auto& token : tokens) {
    if (token.empty()) throw BuildError("empty token");
    if (index_.contains(token)) throw BuildError("duplicate token '" + token + "'");
    add(std::move(token));
  }
}

std::optional<TokenId> Vocab::find(std::string_view text) const {
  auto it = index_.find(std::string(text));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::add(std::string token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  kinds_.push_back(infer_token_kind(token));
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

std::uint64_t Vocab::content_hash() const {
  Fnv1a hash;
  for (const auto& token : tokens_) {
    hash.update(token);
    hash.update("\n");
  }
  return hash.digest();
}

Vocab build_vocab(std::istream& corpus, std::size_t size, const Vocab* base) {
  if (size < Vocab::kSpecialCount + 1) {
    throw BuildError("vocabulary size " + std::to_string(size) + " leaves no room beyond the special tokens");
  }
  if (base != nullptr && size <= base->size()) {
    throw BuildError("augmented size " + std::to_string(size) + " must exceed the base size " +
                     std::to_string(base->size()));
  }
  const WordCounts words = count_words(corpus);
  if (words.empty()) throw BuildError("corpus contains no words");

  if (base != nullptr) {
    Vocab vocab = *base;
    for (const auto& [word, freq] : words) {
      if (vocab.size() >= size) break;
      if (infer_token_kind(word) != TokenKind::whole_word || vocab.find(word)) continue;
      vocab.add(word);
    }
    return vocab;
  }

  Vocab vocab;
  const std::size_t budget = size - Vocab::kSpecialCount;
  const auto reserve = static_cast<std::size_t>(std::floor(kPieceReserve * static_cast<double>(budget)));
  const std::size_t word_slots = words.size() <= budget - reserve ? words.size() : budget - reserve;
  for (const auto& [word, freq] : words) {
    if (vocab.size() >= Vocab::kSpecialCount + word_slots) break;
    if (infer_token_kind(word) != TokenKind::whole_word) continue;
    vocab.add(word);
  }
  mine_pieces(vocab, words, size);
  return vocab;
}

Vocab build_vocab(const std::filesystem::path& corpus, std::size_t size, const Vocab* base) {
  std::ifstream in(corpus);
  if (!in) throw IoError("cannot open corpus: " + corpus.string());
  return build_vocab(in, size, base);
}

Vocab load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocab(std::move(tokens));
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& token : vocab.tokens()) out << token << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TokenId> segment_word(const Vocab& vocab, std::string_view word) {
  if (auto id = vocab.find(word); id && vocab.kind(*id) == TokenKind::whole_word) return {*id};
  const auto chars = split_codepoints(word);
  if (chars.empty() || chars.size() > kMaxWordCodepoints) return {};
  std::vector<TokenId> pieces;
  std::size_t start = 0;
  while (start < chars.size()) {
    std::optional<TokenId> match;
    std::size_t end = chars.size();
    for (; end > start; --end) {
      std::string candidate = start == 0 ? std::string() : std::string("##");
      for (std::size_t i = start; i < end; ++i) candidate += chars[i];
      auto id = vocab.find(candidate);
      if (id && vocab.kind(*id) != TokenKind::special) {
        match = id;
        break;
      }
    }
    if (!match) return {};
    pieces.push_back(*match);
    start = end;
  }
  return pieces;
}

EncodedSequence tokenize(const Vocab& vocab, std::string_view text, std::size_t max_length) {
  EncodedSequence seq;
  for (auto& word : pre_tokenize(text)) {
    auto pieces = segment_word(vocab, word);
    if (pieces.empty()) pieces = {Vocab::kUnk};
    if (seq.ids.size() + pieces.size() > max_length) break;
    const std::size_t begin = seq.ids.size();
    seq.ids.insert(seq.ids.end(), pieces.begin(), pieces.end());
    seq.spans.push_back(WordSpan{begin, seq.ids.size(), std::move(word)});
  }
  return seq;
}

std::span<const WordSpan> word_boundaries(const EncodedSequence& seq) { return seq.spans; }

std::string detokenize(const Vocab& vocab, const EncodedSequence& seq) {
  std::string out;
  for (const auto& span : seq.spans) {
    if (!out.empty()) out += ' ';
    for (std::size_t i = span.begin; i < span.end; ++i) out += strip_marker(vocab.text(seq.ids[i]));
  }
  return out;
}

void check_span_tiling(const EncodedSequence& seq) {
  std::size_t cursor = 0;
  for (const auto& span : seq.spans) {
    if (span.begin != cursor || span.end <= span.begin) {
      throw ContractError("word spans do not tile the sequence at position " + std::to_string(cursor));
    }
    cursor = span.end;
  }
  if (cursor != seq.ids.size()) throw ContractError("word spans stop before the end of the sequence");
}

}  // namespace senselm
