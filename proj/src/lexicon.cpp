#include "senselm/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "senselm/binio.hpp"
#include "senselm/errors.hpp"
#include "senselm/text.hpp"
#include "senselm/textpipe.hpp"

namespace senselm {

namespace {

constexpr std::string_view kCanonicalInventory =
    "adj.all\tadj\nadj.pert\tadj\nadv.all\tadv\nnoun.Tops\tnoun\nnoun.act\tnoun\nnoun.animal\tnoun\n"
    "noun.artifact\tnoun\nnoun.attribute\tnoun\nnoun.body\tnoun\nnoun.cognition\tnoun\n"
    "noun.communication\tnoun\nnoun.event\tnoun\nnoun.feeling\tnoun\nnoun.food\tnoun\nnoun.group\tnoun\n"
    "noun.location\tnoun\nnoun.motive\tnoun\nnoun.object\tnoun\nnoun.person\tnoun\nnoun.phenomenon\tnoun\n"
    "noun.plant\tnoun\nnoun.possession\tnoun\nnoun.process\tnoun\nnoun.quantity\tnoun\nnoun.relation\tnoun\n"
    "noun.shape\tnoun\nnoun.state\tnoun\nnoun.substance\tnoun\nnoun.time\tnoun\nverb.body\tverb\n"
    "verb.change\tverb\nverb.cognition\tverb\nverb.communication\tverb\nverb.competition\tverb\n"
    "verb.consumption\tverb\nverb.contact\tverb\nverb.creation\tverb\nverb.emotion\tverb\nverb.motion\tverb\n"
    "verb.perception\tverb\nverb.possession\tverb\nverb.social\tverb\nverb.stative\tverb\nverb.weather\tverb\n"
    "adj.ppl\tadj\n";

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

void insert_sorted(SenseSet& set, SenseId id) {
  auto it = std::lower_bound(set.begin(), set.end(), id);
  if (it == set.end() || *it != id) set.insert(it, id);
}

const SenseSet* lookup(const Lexicon& lexicon, const std::string& word) {
  auto it = lexicon.allowed.find(word);
  return it == lexicon.allowed.end() ? nullptr : &it->second;
}

}  // namespace

std::string_view to_string(PartOfSpeech pos) {
  switch (pos) {
    case PartOfSpeech::noun: return "noun";
    case PartOfSpeech::verb: return "verb";
    case PartOfSpeech::adj: return "adj";
    case PartOfSpeech::adv: return "adv";
  }
  return "?";
}

std::optional<PartOfSpeech> parse_part_of_speech(std::string_view text) {
  if (text == "noun") return PartOfSpeech::noun;
  if (text == "verb") return PartOfSpeech::verb;
  if (text == "adj") return PartOfSpeech::adj;
  if (text == "adv") return PartOfSpeech::adv;
  return std::nullopt;
}

SupersenseInventory::SupersenseInventory(std::vector<Supersense> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& entry = entries_[i];
    entry.id = static_cast<SenseId>(i);
    const auto dot = entry.name.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == entry.name.size()) {
      throw ParseError("supersense name '" + entry.name + "' is not of the form <pos>.<category>");
    }
    if (parse_part_of_speech(std::string_view(entry.name).substr(0, dot)) != entry.pos) {
      throw ParseError("supersense '" + entry.name + "' disagrees with its part of speech '" +
                       std::string(to_string(entry.pos)) + "'");
    }
    if (!index_.emplace(entry.name, entry.id).second) {
      throw ParseError("duplicate supersense '" + entry.name + "'");
    }
  }
}

std::optional<SenseId> SupersenseInventory::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t SupersenseInventory::count(PartOfSpeech pos) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [pos](const Supersense& s) { return s.pos == pos; }));
}

std::uint64_t SupersenseInventory::content_hash() const {
  Fnv1a hash;
  for (const auto& entry : entries_) {
    hash.update(entry.name);
    hash.update("\t");
    hash.update(to_string(entry.pos));
    hash.update("\n");
  }
  return hash.digest();
}

const SupersenseInventory& canonical_inventory() {
  static const SupersenseInventory inventory = [] {
    std::istringstream in{std::string(kCanonicalInventory)};
    return parse_inventory(in);
  }();
  return inventory;
}

SupersenseInventory parse_inventory(std::istream& in) {
  std::vector<Supersense> entries;
  std::string raw;
  std::size_t line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw ParseError(where(line_number) + "expected 'name<TAB>pos'");
    auto pos = parse_part_of_speech(trim(fields[1]));
    if (!pos) throw ParseError(where(line_number) + "unknown part of speech '" + std::string(fields[1]) + "'");
    std::string name(trim(fields[0]));
    for (const auto& e : entries) {
      if (e.name == name) throw ParseError(where(line_number) + "duplicate supersense '" + name + "'");
    }
    entries.push_back(Supersense{static_cast<SenseId>(entries.size()), std::move(name), *pos});
  }
  try {
    return SupersenseInventory(std::move(entries));
  } catch (const ParseError& e) {
    throw ParseError(std::string("inventory: ") + e.what());
  }
}

std::string format_inventory(const SupersenseInventory& inventory) {
  std::string out;
  for (const auto& e : inventory.entries()) {
    out += e.name;
    out += '\t';
    out += to_string(e.pos);
    out += '\n';
  }
  return out;
}

SupersenseInventory load_inventory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open inventory: " + path.string());
  return parse_inventory(in);
}

LemmaRules default_lemma_rules() {
  return {{"ies", "y"}, {"sses", "ss"}, {"ses", "s"}, {"ing", ""}, {"ed", ""}, {"s", ""}};
}

std::string lemmatize(std::string_view word, const LemmaRules& rules) {
  for (const auto& rule : rules) {
    if (word.size() > rule.suffix.size() && word.ends_with(rule.suffix)) {
      std::string out(word.substr(0, word.size() - rule.suffix.size()));
      out += rule.replacement;
      return out;
    }
  }
  return std::string(word);
}

std::uint64_t Lexicon::content_hash() const {
  std::vector<std::pair<std::string, SenseSet>> sorted(allowed.begin(), allowed.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::string> stops(stopwords.begin(), stopwords.end());
  std::sort(stops.begin(), stops.end());
  Fnv1a hash;
  for (const auto& [word, senses] : sorted) {
    hash.update(word);
    for (SenseId s : senses) hash.update_value(s);
    hash.update("\n");
  }
  hash.update("\x01");
  for (const auto& s : stops) {
    hash.update(s);
    hash.update("\n");
  }
  hash.update("\x01");
  for (const auto& rule : rules) {
    hash.update(rule.suffix);
    hash.update(">");
    hash.update(rule.replacement);
    hash.update("\n");
  }
  return hash.digest();
}

Lexicon parse_lexicon(std::istream& lexicon_in, std::istream& stoplist_in, const SupersenseInventory& inventory,
                      LemmaRules rules) {
  Lexicon lexicon;
  lexicon.rules = std::move(rules);
  std::string raw;
  std::size_t line_number = 0;
  while (std::getline(lexicon_in, raw)) {
    ++line_number;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw ParseError("lexicon " + where(line_number) + "expected 'lemma<TAB>senses'");
    const std::string lemma = canonical_form(trim(fields[0]));
    if (lemma.empty()) throw ParseError("lexicon " + where(line_number) + "empty lemma");
    SenseSet& senses = lexicon.allowed[lemma];
    for (std::string_view name : split(fields[1], ',')) {
      name = trim(name);
      auto id = inventory.find(name);
      if (!id) {
        throw ParseError("lexicon " + where(line_number) + "unknown supersense '" + std::string(name) + "'");
      }
      insert_sorted(senses, *id);
    }
  }
  line_number = 0;
  while (std::getline(stoplist_in, raw)) {
    ++line_number;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    lexicon.stopwords.insert(canonical_form(line));
  }
  return lexicon;
}

Lexicon parse_lexicon(const std::filesystem::path& lexicon, const std::filesystem::path& stoplist,
                      const SupersenseInventory& inventory, LemmaRules rules) {
  std::ifstream lex_in(lexicon);
  if (!lex_in) throw IoError("cannot open lexicon: " + lexicon.string());
  std::ifstream stop_in(stoplist);
  if (!stop_in) throw IoError("cannot open stoplist: " + stoplist.string());
  return parse_lexicon(lex_in, stop_in, inventory, std::move(rules));
}

SenseSet allowed_senses(const Lexicon& lexicon, std::string_view word) {
  const std::string surface = canonical_form(word);
  if (codepoint_length(surface) <= 3) return {};
  if (lexicon.stopwords.contains(surface)) return {};
  if (lexicon.stopwords.contains(lemmatize(surface, lexicon.rules))) return {};
  if (const SenseSet* hit = lookup(lexicon, surface)) return *hit;
  SenseSet out;
  for (const auto& rule : lexicon.rules) {
    if (surface.size() <= rule.suffix.size() || !surface.ends_with(rule.suffix)) continue;
    std::string candidate = surface.substr(0, surface.size() - rule.suffix.size()) + rule.replacement;
    if (const SenseSet* hit = lookup(lexicon, candidate)) {
      for (SenseId s : *hit) insert_sorted(out, s);
    }
  }
  return out;
}

SenseMembershipMatrix::SenseMembershipMatrix(std::size_t sense_count, std::size_t word_count,
                                             std::vector<Entry> entries)
    : sense_count_(sense_count), word_count_(word_count), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) { return a.sense != b.sense ? a.sense < b.sense : a.word < b.word; });
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
  column_offsets_.assign(word_count_ + 1, 0);
  for (const auto& e : entries_) {
    if (e.sense >= sense_count_ || e.word >= word_count_) {
      throw ContractError("membership entry (" + std::to_string(e.sense) + ", " + std::to_string(e.word) +
                          ") outside " + std::to_string(sense_count_) + "x" + std::to_string(word_count_));
    }
    ++column_offsets_[e.word + 1];
  }
  for (std::size_t w = 0; w < word_count_; ++w) column_offsets_[w + 1] += column_offsets_[w];
  column_senses_.resize(entries_.size());
  std::vector<std::size_t> cursor(column_offsets_.begin(), column_offsets_.end() - 1);
  // entries_ is sense-major, so each column receives its senses in ascending order.
  for (const auto& e : entries_) column_senses_[cursor[e.word]++] = e.sense;
}

std::span<const SenseId> SenseMembershipMatrix::senses_of(TokenId word) const {
  if (word >= word_count_) return {};
  return std::span<const SenseId>(column_senses_).subspan(column_offsets_[word],
                                                          column_offsets_[word + 1] - column_offsets_[word]);
}

bool SenseMembershipMatrix::contains(SenseId sense, TokenId word) const {
  auto senses = senses_of(word);
  return std::binary_search(senses.begin(), senses.end(), sense);
}

std::uint64_t SenseMembershipMatrix::content_hash() const {
  Fnv1a hash;
  hash.update_value(static_cast<std::uint64_t>(sense_count_));
  hash.update_value(static_cast<std::uint64_t>(word_count_));
  for (const auto& e : entries_) {
    hash.update_value(e.sense);
    hash.update_value(e.word);
  }
  return hash.digest();
}

SenseMembershipMatrix build_membership_matrix(const Lexicon& lexicon, const Vocab& vocab, std::size_t sense_count) {
  std::vector<SenseMembershipMatrix::Entry> entries;
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (vocab.kind(id) != TokenKind::whole_word) continue;
    for (SenseId s : allowed_senses(lexicon, vocab.text(id))) {
      if (s >= sense_count) throw ContractError("lexicon sense id outside the inventory");
      entries.push_back({s, id});
    }
  }
  return SenseMembershipMatrix(sense_count, vocab.size(), std::move(entries));
}

void save_membership_matrix(const SenseMembershipMatrix& matrix, const std::filesystem::path& path) {
  ByteWriter out;
  const HeaderField fields[] = {
      {"kind", "membership"},
      {"sense_count", std::to_string(matrix.sense_count())},
      {"word_count", std::to_string(matrix.word_count())},
  };
  write_header(out, fields);
  out.u64(matrix.nonzeros());
  for (const auto& e : matrix.entries()) {
    out.u32(e.sense);
    out.u32(e.word);
  }
  out.write_file(path);
}

SenseMembershipMatrix load_membership_matrix(const std::filesystem::path& path) {
  auto in = ByteReader::from_file(path);
  const auto fields = read_header(in);
  if (header_value(fields, "kind") != "membership") throw FormatError(path.string() + " is not a membership matrix");
  const std::size_t senses = std::stoull(header_value(fields, "sense_count"));
  const std::size_t words = std::stoull(header_value(fields, "word_count"));
  const std::uint64_t count = in.u64();
  if (count > in.remaining() / 8) throw FormatError("membership matrix truncated");
  std::vector<SenseMembershipMatrix::Entry> entries(count);
  for (auto& e : entries) {
    e.sense = in.u32();
    e.word = in.u32();
  }
  if (!in.at_end()) throw FormatError("trailing bytes after membership matrix");
  return SenseMembershipMatrix(senses, words, std::move(entries));
}

}  // namespace senselm
