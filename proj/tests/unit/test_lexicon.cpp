#include <doctest.h>

#include <fstream>
#include <sstream>

#include "senselm/errors.hpp"
#include "senselm/lexicon.hpp"
#include "senselm/textpipe.hpp"
#include "support.hpp"

using namespace senselm;
using senselm::testing::lexicon_of;
using senselm::testing::sense;
using senselm::testing::TempDir;

TEST_SUITE("lexicon") {
  TEST_CASE("canonical inventory has 45 supersenses split 26/15/3/1") {
    const auto& inv = canonical_inventory();
    CHECK(inv.size() == 45);
    CHECK(inv.count(PartOfSpeech::noun) == 26);
    CHECK(inv.count(PartOfSpeech::verb) == 15);
    CHECK(inv.count(PartOfSpeech::adj) == 3);
    CHECK(inv.count(PartOfSpeech::adv) == 1);
    for (const char* name : {"noun.food", "noun.Tops", "verb.consumption", "adj.ppl", "adv.all"}) {
      CHECK_MESSAGE(inv.find(name).has_value(), name);
    }
    for (SenseId id = 0; id < inv.size(); ++id) CHECK(inv[id].id == id);
  }

  TEST_CASE("inventory text round-trips and the shipped file matches the built-in table") {
    const auto& inv = canonical_inventory();
    std::istringstream in(format_inventory(inv));
    const auto back = parse_inventory(in);
    CHECK(back.content_hash() == inv.content_hash());
    CHECK(load_inventory(std::filesystem::path(SENSELM_DATA_DIR) / "supersenses.tsv").content_hash() ==
          inv.content_hash());
  }

  TEST_CASE("malformed inventories are rejected") {
    for (const char* text : {"noun.food\tnoun\nnoun.food\tnoun\n", "noun.food\tverb\n", "food\tnoun\n",
                             "noun.food\tpronoun\n", "noun.food\n"}) {
      std::istringstream in(text);
      CHECK_THROWS_AS(parse_inventory(in), ParseError);
    }
  }

  TEST_CASE("lemma rules apply the first matching suffix and keep a stem") {
    const auto rules = default_lemma_rules();
    CHECK(lemmatize("berries", rules) == "berry");
    CHECK(lemmatize("glasses", rules) == "glass");
    CHECK(lemmatize("buses", rules) == "bus");
    CHECK(lemmatize("walked", rules) == "walk");
    CHECK(lemmatize("cats", rules) == "cat");
    CHECK(lemmatize("ing", rules) == "ing");
    CHECK(lemmatize("s", rules) == "s");
    CHECK(lemmatize("sword", rules) == "sword");
  }

  TEST_CASE("allowed senses: surface entry, lemma union, short words and stopwords") {
    const auto lex = lexicon_of(
        "bass\tnoun.food,noun.animal\n"
        "glasses\tnoun.artifact\nglass\tnoun.substance\n"
        "ply\tnoun.artifact\nplie\tnoun.act\n"
        "cat\tnoun.animal\nabout\tnoun.Tops\nthing\tnoun.Tops\n",
        "about\nthing\n");
    SenseSet bass{sense("noun.food"), sense("noun.animal")};
    std::sort(bass.begin(), bass.end());
    CHECK(allowed_senses(lex, "Bass") == bass);
    CHECK(allowed_senses(lex, "basses") == bass);
    CHECK(allowed_senses(lex, "glasses") == SenseSet{sense("noun.artifact")});
    SenseSet plies{sense("noun.artifact"), sense("noun.act")};
    std::sort(plies.begin(), plies.end());
    CHECK(allowed_senses(lex, "plies") == plies);
    CHECK(allowed_senses(lex, "cat").empty());
    CHECK(allowed_senses(lex, "about").empty());
    CHECK(allowed_senses(lex, "things").empty());
    CHECK(allowed_senses(lex, "unknownword").empty());
  }

  TEST_CASE("lexicon parse errors") {
    CHECK_THROWS_AS(lexicon_of("bass\n"), ParseError);
    CHECK_THROWS_AS(lexicon_of("bass\tnoun.nothing\n"), ParseError);
    CHECK_THROWS_AS(lexicon_of("\tnoun.food\n"), ParseError);
    CHECK_NOTHROW(lexicon_of("# header\n\nbass\tnoun.food\n"));
  }

  TEST_CASE("repeated lemma lines merge their senses") {
    const auto lex = lexicon_of("bass\tnoun.food\nbass\tnoun.animal,noun.food\n");
    CHECK(allowed_senses(lex, "bass").size() == 2);
  }

  TEST_CASE("membership matrix matches A(w) for every whole-word token") {
    const auto lex = lexicon_of("bass\tnoun.food,noun.animal\nsword\tnoun.artifact\nfish\tnoun.food\n");
    Vocab vocab;
    for (const char* t : {"bass", "sword", "the", "##fish", "fish", "swords"}) vocab.add(t);
    const auto m = build_membership_matrix(lex, vocab, 45);
    CHECK(m.sense_count() == 45);
    CHECK(m.word_count() == vocab.size());
    std::size_t expected = 0;
    for (TokenId id = 0; id < vocab.size(); ++id) {
      const SenseSet a = vocab.kind(id) == TokenKind::whole_word ? allowed_senses(lex, vocab.text(id)) : SenseSet{};
      expected += a.size();
      const auto col = m.senses_of(id);
      CHECK(SenseSet(col.begin(), col.end()) == a);
      for (SenseId s = 0; s < 45; ++s) CHECK(m.contains(s, id) == std::binary_search(a.begin(), a.end(), s));
    }
    CHECK(m.nonzeros() == expected);
    CHECK(m.senses_of(*vocab.find("##fish")).empty());
    CHECK(m.senses_of(*vocab.find("swords")).size() == 1);
  }

  TEST_CASE("membership matrix file round-trip and corruption") {
    TempDir dir("membership");
    SenseMembershipMatrix m(45, 10, {{3, 4}, {1, 4}, {44, 9}, {1, 4}});
    CHECK(m.nonzeros() == 3);
    save_membership_matrix(m, dir / "m.bin");
    const auto back = load_membership_matrix(dir / "m.bin");
    CHECK(back.entries() == m.entries());
    CHECK(back.content_hash() == m.content_hash());

    std::string raw;
    {
      std::ifstream in(dir / "m.bin", std::ios::binary);
      raw.assign(std::istreambuf_iterator<char>(in), {});
    }
    {
      std::ofstream out(dir / "cut.bin", std::ios::binary);
      out << raw.substr(0, raw.size() - 3);
    }
    CHECK_THROWS_AS(load_membership_matrix(dir / "cut.bin"), FormatError);
    CHECK_THROWS_AS(SenseMembershipMatrix(45, 10, {{45, 0}}), ContractError);
    CHECK_THROWS_AS(SenseMembershipMatrix(45, 10, {{0, 10}}), ContractError);
  }
}
