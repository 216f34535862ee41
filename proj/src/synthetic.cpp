#include "senselm/synthetic.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "senselm/errors.hpp"
#include "senselm/rng.hpp"
#include "senselm/text.hpp"

namespace senselm {

namespace {

struct CategorySeed {
  const char* name;
  std::vector<std::string> cues;
};

const std::vector<CategorySeed>& category_seeds() {
  static const std::vector<CategorySeed> seeds = {
      {"noun.food",
       {"delicious", "tasty", "cooked", "fresh", "spicy", "baked", "sweet", "served", "flavor", "kitchen", "dinner",
        "recipe"}},
      {"noun.animal",
       {"wild", "barked", "furry", "zoo", "hunted", "fur", "tail", "paws", "herd", "feathers", "nest", "cage"}},
      {"noun.artifact",
       {"built", "broken", "tool", "machine", "repaired", "plastic", "metal", "assembled", "handle", "factory",
        "installed", "device"}},
      {"noun.person",
       {"friendly", "smiled", "married", "hired", "elected", "clever", "neighbor", "citizen", "retired", "polite",
        "greeted", "laughed"}},
      {"noun.location",
       {"north", "city", "traveled", "border", "region", "located", "map", "coast", "village", "distant", "capital",
        "mountains"}},
      {"noun.plant",
       {"bloomed", "leaves", "garden", "planted", "seeds", "roots", "watered", "green", "grew", "forest", "petals",
        "soil"}},
      {"noun.time",
       {"yesterday", "lasted", "hours", "ago", "season", "annual", "midnight", "weekly", "calendar", "until",
        "century", "morning"}},
      {"noun.feeling",
       {"felt", "deep", "overwhelmed", "joy", "sudden", "emotion", "sadness", "heart", "calm", "fear", "mood",
        "anxious"}},
      {"verb.motion",
       {"quickly", "toward", "across", "fast", "slowly", "hurried", "uphill", "downstairs", "onward", "sprint",
        "distance", "stride"}},
      {"verb.consumption",
       {"hungry", "meal", "thirsty", "bite", "feast", "greedily", "leftovers", "appetite", "plate", "cup", "gulp",
        "snack"}},
      {"verb.communication",
       {"loudly", "message", "letter", "phone", "speech", "news", "rumor", "reply", "audience", "microphone",
        "gossip", "announcement"}},
      {"verb.creation",
       {"painted", "designed", "artwork", "studio", "original", "canvas", "sculpture", "sketch", "masterpiece",
        "pottery", "workshop", "draft"}},
  };
  return seeds;
}

const std::vector<std::string>& base_function_words() {
  static const std::vector<std::string> words = {
      "the",   "a",     "an",    "this", "that",  "is",    "was",   "were", "be",    "it",   "they",
      "we",    "i",     "you",   "he",   "she",   "of",    "to",    "in",   "on",    "at",   "with",
      "for",   "and",   "but",   "so",   "very",  "there", "then",  "some", "my",    "our",  "his",
      "her",   "their", "will",  "had",  "has",   "have",  "again", "just", "really", "here", "now",
      "about", "think", "know",  "look", "said",  "saw",   "meant", "what", "where", "did",  "not"};
  return words;
}

const std::vector<std::string>& neutral_patterns() {
  static const std::vector<std::string> patterns = {
      "i think the _ is here",   "we know about the _",       "look at this _ now",
      "it was the _ i meant",    "what about the _ again",    "they said the _ was there",
      "she saw the _ then",      "where is my _",             "he did not know the _",
      "you have the _ now",      "our _ is just there",       "i saw some _ here",
  };
  return patterns;
}

class WordMaker {
 public:
  explicit WordMaker(CounterRng rng) : rng_(rng) {}

  // Consonant-vowel syllables; every word ends in a vowel so no lemma rule
  // applies.
  std::string make(std::size_t syllables) {
    static constexpr std::string_view consonants = "bdfgklmnprtvz";
    static constexpr std::string_view vowels = "aeiou";
    for (;;) {
      std::string word;
      for (std::size_t i = 0; i < syllables; ++i) {
        word += consonants[rng_.below(consonants.size())];
        word += vowels[rng_.below(vowels.size())];
      }
      if (used_.insert(word).second) return word;
    }
  }
  void reserve(const std::string& word) { used_.insert(word); }

 private:
  CounterRng rng_;
  std::set<std::string> used_;
};

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string fill(const std::string& pattern, const std::string& word) {
  std::vector<std::string> words;
  for (auto part : split(pattern, ' ')) words.emplace_back(part == "_" ? word : std::string(part));
  return join(words);
}

std::size_t slot_index(const std::string& pattern) {
  const auto parts = split(pattern, ' ');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] == "_") return i;
  }
  throw BuildError("template without a slot: " + pattern);
}

template <typename T>
const T& pick(const std::vector<T>& items, CounterRng& rng) {
  return items[rng.below(items.size())];
}

std::string make_template(const std::vector<std::string>& cues, const std::vector<std::string>& function_words,
                          CounterRng& rng) {
  std::vector<std::string> words;
  const std::size_t cue_count = 2 + rng.below(2);
  std::vector<std::string> pool = cues;
  rng.shuffle(std::span<std::string>(pool));
  for (std::size_t i = 0; i < cue_count; ++i) words.push_back(pool[i]);
  const std::size_t fn_count = 2 + rng.below(3);
  for (std::size_t i = 0; i < fn_count; ++i) words.push_back(pick(function_words, rng));
  rng.shuffle(std::span<std::string>(words));
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), "_");
  return join(words);
}

}  // namespace

SyntheticWorld make_synthetic_world(const SyntheticWorldConfig& config, const SupersenseInventory& inventory) {
  if (config.train_templates == 0 || config.mono_words <= config.probe_train_words) {
    throw ConfigError("synthetic world needs templates and held-out mono words");
  }
  SyntheticWorld world;
  world.function_words = base_function_words();
  world.neutral_templates = neutral_patterns();
  world.probe_train_words = config.probe_train_words;
  world.seed = config.seed;
  auto rng = derive_rng(config.seed, RngStream::synthetic, 0);
  WordMaker maker(derive_rng(config.seed, RngStream::synthetic, 1));
  for (const auto& w : world.function_words) maker.reserve(w);

  const auto& seeds = category_seeds();
  std::set<std::string> seen_cues;
  for (const auto& seed : seeds) {
    for (const auto& c : seed.cues) {
      if (!seen_cues.insert(c).second) throw BuildError("cue word used twice: " + c);
      maker.reserve(c);
    }
  }
  for (const auto& seed : seeds) {
    SyntheticCategory cat;
    cat.name = seed.name;
    const auto id = inventory.find(cat.name);
    if (!id) throw BuildError("inventory lacks " + cat.name);
    cat.sense = *id;
    cat.cues = seed.cues;
    for (std::size_t i = 0; i < config.mono_words; ++i) cat.mono.push_back(maker.make(2 + i % 2));
    for (std::size_t i = 0; i < config.poly_words; ++i) cat.poly.push_back(maker.make(2 + i % 2));
    for (std::size_t i = 0; i < config.rare_words; ++i) cat.rare.push_back(maker.make(3));
    std::set<std::string> templates;
    if (cat.name == "noun.food") {
      cat.train_templates.push_back("this _ is delicious");
      templates.insert(cat.train_templates.back());
    }
    while (cat.train_templates.size() < config.train_templates) {
      auto t = make_template(cat.cues, world.function_words, rng);
      if (templates.insert(t).second) cat.train_templates.push_back(std::move(t));
    }
    while (cat.heldout_templates.size() < config.heldout_templates) {
      auto t = make_template(cat.cues, world.function_words, rng);
      if (templates.insert(t).second) cat.heldout_templates.push_back(std::move(t));
    }
    world.categories.push_back(std::move(cat));
  }

  const std::size_t n = world.categories.size();
  // Fillers for each category's slot: its mono words, its own poly words and
  // the poly words of categories that pair with it.
  std::vector<std::vector<std::string>> poly_pool(n);
  for (std::size_t c = 0; c < n; ++c) {
    auto& cat = world.categories[c];
    for (const auto& w : cat.mono) world.entries[w] = {cat.name};
    for (const auto& w : cat.rare) world.entries[w] = {cat.name};
    for (std::size_t i = 0; i < cat.poly.size(); ++i) {
      const std::size_t partner = (c + 1 + i % (n - 1)) % n;
      auto names = std::vector<std::string>{cat.name, world.categories[partner].name};
      std::sort(names.begin(), names.end());
      world.entries[cat.poly[i]] = names;
      poly_pool[c].push_back(cat.poly[i]);
      poly_pool[partner].push_back(cat.poly[i]);
    }
  }
  world.entries["bass"] = {"noun.animal", "noun.artifact", "noun.food", "noun.person"};
  world.entries["sword"] = {"noun.artifact"};
  for (std::size_t c = 0; c < n; ++c) {
    const auto& name = world.categories[c].name;
    if (name == "noun.food" || name == "noun.animal" || name == "noun.artifact" || name == "noun.person") {
      poly_pool[c].push_back("bass");
    }
    if (name == "noun.artifact") poly_pool[c].push_back("sword");
  }

  std::vector<std::string> common;
  for (const auto& cat : world.categories) {
    common.insert(common.end(), cat.mono.begin(), cat.mono.end());
    common.insert(common.end(), cat.poly.begin(), cat.poly.end());
  }

  auto instance = [&](CounterRng& r) {
    if (r.uniform() < config.neutral_share) return fill(pick(world.neutral_templates, r), pick(common, r));
    const std::size_t c = r.below(n);
    const auto& cat = world.categories[c];
    const auto& filler = r.uniform() < 0.5 ? pick(cat.mono, r) : pick(poly_pool[c], r);
    return fill(pick(cat.train_templates, r), filler);
  };
  auto line_rng = derive_rng(config.seed, RngStream::synthetic, 2);
  for (std::size_t i = 0; i < config.corpus_lines; ++i) {
    std::string line = instance(line_rng);
    if (line_rng.bernoulli(0.5)) line += " " + instance(line_rng);
    world.corpus.push_back(std::move(line));
  }
  for (const auto& cat : world.categories) {
    for (const auto& w : cat.rare) {
      for (std::size_t k = 0; k < config.rare_occurrences; ++k) {
        world.corpus.push_back(fill(pick(cat.train_templates, line_rng), w));
      }
    }
  }
  line_rng.shuffle(std::span<std::string>(world.corpus));

  // The lexicon must give exactly the intended sets, and nothing to cues.
  const Lexicon lex = world.lexicon(inventory);
  for (const auto& cat : world.categories) {
    for (const auto& cue : cat.cues) {
      if (!allowed_senses(lex, cue).empty()) throw BuildError("cue word has senses: " + cue);
    }
  }
  return world;
}

std::string SyntheticWorld::lexicon_text() const {
  std::string out;
  for (const auto& [word, senses] : entries) {
    out += word;
    out += '\t';
    for (std::size_t i = 0; i < senses.size(); ++i) {
      if (i > 0) out += ',';
      out += senses[i];
    }
    out += '\n';
  }
  return out;
}

std::string SyntheticWorld::stoplist_text() const {
  std::string out;
  for (const auto& w : function_words) out += w + "\n";
  return out;
}

std::string SyntheticWorld::corpus_text() const {
  std::string out;
  for (const auto& line : corpus) out += line + "\n";
  return out;
}

Lexicon SyntheticWorld::lexicon(const SupersenseInventory& inventory) const {
  std::istringstream lex(lexicon_text());
  std::istringstream stop(stoplist_text());
  return parse_lexicon(lex, stop, inventory);
}

std::vector<SlotProbe> SyntheticWorld::slot_probes() const {
  std::vector<SlotProbe> out;
  for (const auto& cat : categories) {
    for (const auto& t : cat.heldout_templates) out.push_back({fill(t, "[MASK]"), cat.sense});
  }
  return out;
}

std::vector<SenseTaggedExample> SyntheticWorld::semeval_train() const {
  std::vector<SenseTaggedExample> out;
  for (const auto& cat : categories) {
    for (std::size_t i = 0; i < probe_train_words; ++i) {
      for (std::size_t k = 0; k < 2; ++k) {
        const auto& t = neutral_templates[(i * 2 + k) % neutral_templates.size()];
        out.push_back({fill(t, cat.mono[i]), slot_index(t), cat.sense});
      }
    }
  }
  return out;
}

std::vector<SenseTaggedExample> SyntheticWorld::semeval_test() const {
  std::vector<SenseTaggedExample> out;
  for (const auto& cat : categories) {
    std::vector<std::string> words(cat.mono.begin() + static_cast<std::ptrdiff_t>(probe_train_words), cat.mono.end());
    words.insert(words.end(), cat.rare.begin(), cat.rare.end());
    for (std::size_t i = 0; i < words.size(); ++i) {
      for (std::size_t k = 0; k < 2; ++k) {
        const auto& t = neutral_templates[(i * 2 + k + 1) % neutral_templates.size()];
        out.push_back({fill(t, words[i]), slot_index(t), cat.sense});
      }
    }
  }
  return out;
}

namespace {

std::vector<WiCExample> wic_pairs(const SyntheticWorld& world, bool train) {
  auto rng = derive_rng(world.seed, RngStream::synthetic, 3, train ? 1 : 0);
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < world.categories.size(); ++c) index[world.categories[c].name] = c;
  std::vector<WiCExample> out;
  for (const auto& cat : world.categories) {
    for (std::size_t i = 0; i < cat.poly.size(); ++i) {
      if ((i % 3 != 2) != train) continue;
      const auto& word = cat.poly[i];
      const auto& names = world.entries.at(word);
      const auto& a = world.categories[index.at(names[0])];
      const auto& b = world.categories[index.at(names[1])];
      auto same = [&](const SyntheticCategory& c) {
        const std::size_t n = c.train_templates.size();
        const std::size_t first = rng.below(n);
        const std::size_t second = n > 1 ? (first + 1 + rng.below(n - 1)) % n : first;
        return WiCExample{fill(c.train_templates[first], word), fill(c.train_templates[second], word), word, true};
      };
      auto differ = [&](const SyntheticCategory& x, const SyntheticCategory& y) {
        return WiCExample{fill(pick(x.train_templates, rng), word), fill(pick(y.train_templates, rng), word), word,
                          false};
      };
      out.push_back(same(a));
      out.push_back(same(b));
      out.push_back(differ(a, b));
      out.push_back(differ(b, a));
    }
  }
  return out;
}

}  // namespace

std::vector<WiCExample> SyntheticWorld::wic_train() const { return wic_pairs(*this, true); }
std::vector<WiCExample> SyntheticWorld::wic_test() const { return wic_pairs(*this, false); }

GradCheckProblem make_grad_check_problem(std::size_t vocab_size, std::size_t sequences, std::size_t words,
                                         std::uint64_t seed, const SupersenseInventory& inventory) {
  constexpr std::size_t kPieces = 40;
  if (vocab_size < Vocab::kSpecialCount + kPieces + 10) throw ConfigError("grad-check vocabulary too small");
  auto rng = derive_rng(seed, RngStream::synthetic, 100);
  WordMaker maker(derive_rng(seed, RngStream::synthetic, 101));
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[MASK]"};
  std::vector<std::string> whole;
  while (tokens.size() < vocab_size - kPieces) {
    whole.push_back(maker.make(2));
    tokens.push_back(whole.back());
  }
  std::vector<std::string> pieces;
  std::set<std::string> piece_set;
  while (pieces.size() < kPieces) {
    std::string p = maker.make(1);
    if (piece_set.insert(p).second) pieces.push_back(p);
  }
  for (const auto& p : pieces) tokens.push_back("##" + p);

  GradCheckProblem problem;
  problem.vocab = Vocab(tokens);
  std::vector<std::string> compound;
  for (std::size_t i = 0; i < 30; ++i) compound.push_back(pick(whole, rng) + pick(pieces, rng));

  std::ostringstream lex;
  auto random_senses = [&] {
    std::string out;
    const std::size_t count = 1 + rng.below(3);
    for (std::size_t k = 0; k < count; ++k) {
      if (k > 0) out += ',';
      out += inventory[static_cast<SenseId>(rng.below(inventory.size()))].name;
    }
    return out;
  };
  for (const auto& w : whole) {
    if (rng.uniform() < 0.7) lex << w << '\t' << random_senses() << '\n';
  }
  for (const auto& w : compound) lex << w << '\t' << random_senses() << '\n';
  std::istringstream lex_in(lex.str());
  std::istringstream stop_in(whole[0] + "\n" + whole[1] + "\n");
  problem.lexicon = parse_lexicon(lex_in, stop_in, inventory);
  problem.membership = build_membership_matrix(problem.lexicon, problem.vocab, inventory.size());

  for (std::size_t s = 0; s < sequences; ++s) {
    std::vector<std::string> line;
    for (std::size_t k = 0; k < words; ++k) line.push_back(rng.uniform() < 0.3 ? pick(compound, rng) : pick(whole, rng));
    problem.sequences.push_back(tokenize(problem.vocab, join(line), kDefaultMaxLength));
  }
  return problem;
}

}  // namespace senselm
