#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "senselm/lexicon.hpp"
#include "senselm/textpipe.hpp"

namespace senselm::testing {

// Fresh directory under the build tree, removed with the object.
class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(std::filesystem::path(SENSELM_TEST_TMP) / name) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline Vocab vocab_of(std::initializer_list<std::string> words) {
  Vocab vocab;
  for (const auto& w : words) vocab.add(w);
  return vocab;
}

inline Lexicon lexicon_of(const std::string& entries, const std::string& stoplist = "") {
  std::istringstream lex(entries);
  std::istringstream stop(stoplist);
  return parse_lexicon(lex, stop, canonical_inventory());
}

inline SenseId sense(std::string_view name) { return *canonical_inventory().find(name); }

}  // namespace senselm::testing
