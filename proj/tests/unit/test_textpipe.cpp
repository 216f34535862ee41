#include <doctest.h>

#include <sstream>

#include "senselm/errors.hpp"
#include "senselm/rng.hpp"
#include "senselm/textpipe.hpp"
#include "support.hpp"

using namespace senselm;
using senselm::testing::TempDir;
using senselm::testing::vocab_of;

namespace {

const char* kCorpus =
    "the bass swam in the lake\n"
    "the fisherman cooked the bass\n"
    "a sword hung on the wall\n"
    "the swordsman drew his sword\n"
    "unaffable people rarely smile\n";

}  // namespace

TEST_SUITE("textpipe") {
  TEST_CASE("token kinds follow the spelling") {
    CHECK(infer_token_kind("[PAD]") == TokenKind::special);
    CHECK(infer_token_kind("[MASK]") == TokenKind::special);
    CHECK(infer_token_kind("##ing") == TokenKind::sub_word);
    CHECK(infer_token_kind("bass") == TokenKind::whole_word);
    CHECK(infer_token_kind("[x]") == TokenKind::whole_word);
  }

  TEST_CASE("specials occupy the first ids") {
    Vocab v;
    CHECK(v.size() == Vocab::kSpecialCount);
    CHECK(v.text(Vocab::kPad) == "[PAD]");
    CHECK(v.text(Vocab::kUnk) == "[UNK]");
    CHECK(v.text(Vocab::kMask) == "[MASK]");
    CHECK(v.add("bass") == 3);
    CHECK(v.add("bass") == 3);
    CHECK_THROWS_AS(Vocab({"[PAD]", "[UNK]", "[MASK]", "a", "a"}), BuildError);
    CHECK_THROWS_AS(Vocab({"a", "[UNK]", "[MASK]"}), BuildError);
  }

  TEST_CASE("greedy longest-match segmentation") {
    const auto v = vocab_of({"un", "una", "##aff", "##a", "##ff", "##able", "##ab", "##le", "aff"});
    const auto ids = segment_word(v, "unaffable");
    REQUIRE(ids.size() == 3);
    CHECK(v.text(ids[0]) == "una");
    CHECK(v.text(ids[1]) == "##ff");
    CHECK(v.text(ids[2]) == "##able");
    CHECK(segment_word(v, "zzz").empty());
    CHECK(segment_word(v, "aff") == std::vector<TokenId>{*v.find("aff")});
  }

  TEST_CASE("tokenize maps unknown words to [UNK] and drops words past the length limit") {
    const auto v = vocab_of({"the", "bass", "##es", "swam"});
    const auto seq = tokenize(v, "The basses swam quickly", 5);
    CHECK(seq.ids == std::vector<TokenId>{*v.find("the"), *v.find("bass"), *v.find("##es"), *v.find("swam"),
                                          Vocab::kUnk});
    REQUIRE(seq.spans.size() == 4);
    CHECK(seq.spans[1] == WordSpan{1, 3, "basses"});
    CHECK(detokenize(v, seq) == "the basses swam [UNK]");
    const auto cut = tokenize(v, "the basses swam", 2);
    CHECK(cut.spans.size() == 1);
    CHECK(cut.ids.size() == 1);
  }

  TEST_CASE("build_vocab reaches the requested size deterministically") {
    std::istringstream a(kCorpus), b(kCorpus);
    const auto v1 = build_vocab(a, 60);
    const auto v2 = build_vocab(b, 60);
    CHECK(v1.size() == 60);
    CHECK(v1.tokens() == v2.tokens());
    CHECK(v1.find("the").has_value());
    CHECK(v1.find("bass").has_value());
    std::size_t pieces = 0;
    for (TokenId id = 0; id < v1.size(); ++id) pieces += v1.kind(id) == TokenKind::sub_word;
    CHECK(pieces > 0);
    std::istringstream c(kCorpus);
    CHECK_THROWS_AS(build_vocab(c, 3), BuildError);
    std::istringstream empty("");
    CHECK_THROWS_AS(build_vocab(empty, 50), BuildError);
  }

  TEST_CASE("augmenting a vocabulary keeps every base id") {
    std::istringstream a(kCorpus);
    const auto base = build_vocab(a, 40);
    std::istringstream b(std::string(kCorpus) + "brand new words appear here\n");
    const auto grown = build_vocab(b, 45, &base);
    CHECK(grown.size() == 45);
    for (TokenId id = 0; id < base.size(); ++id) CHECK(grown.text(id) == base.text(id));
    std::istringstream c(kCorpus);
    CHECK_THROWS_AS(build_vocab(c, 40, &base), BuildError);
  }

  TEST_CASE("every word of the corpus segments with a built vocabulary") {
    std::istringstream a(kCorpus);
    const auto v = build_vocab(a, 50);
    std::istringstream lines(kCorpus);
    std::string line;
    while (std::getline(lines, line)) {
      const auto seq = tokenize(v, line);
      for (TokenId id : seq.ids) CHECK(id != Vocab::kUnk);
      CHECK(detokenize(v, seq) == line);
    }
  }

  TEST_CASE("spans tile random sequences") {
    std::istringstream a(kCorpus);
    const auto v = build_vocab(a, 45);
    const std::vector<std::string> words{"bass", "unaffable", "swordsman", "qqq", "the", ",", "wall", "lakes"};
    CounterRng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      std::string text;
      const auto n = 1 + rng.below(20);
      for (std::uint64_t i = 0; i < n; ++i) text += words[rng.below(words.size())] + " ";
      const auto seq = tokenize(v, text, 1 + rng.below(30));
      CHECK_NOTHROW(check_span_tiling(seq));
    }
    EncodedSequence broken{{4, 5, 6}, {{0, 1, "a"}, {2, 3, "b"}}};
    CHECK_THROWS_AS(check_span_tiling(broken), ContractError);
  }

  TEST_CASE("vocabulary file round-trip") {
    TempDir dir("vocab");
    std::istringstream a(kCorpus);
    const auto v = build_vocab(a, 50);
    save_vocab(v, dir / "vocab.txt");
    const auto back = load_vocab(dir / "vocab.txt");
    CHECK(back.tokens() == v.tokens());
    CHECK(back.content_hash() == v.content_hash());
  }
}
