#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "senselm/evalkit.hpp"
#include "senselm/synthetic.hpp"

namespace fs = std::filesystem;
using namespace senselm;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic supersense world: corpus, lexicon and evaluation sets"};
  std::string out;
  SyntheticWorldConfig config;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", config.seed, "Generator seed")->capture_default_str();
  app.add_option("--lines", config.corpus_lines, "Corpus lines")->capture_default_str();
  app.add_option("--train-templates", config.train_templates, "Corpus templates per category")->capture_default_str();
  app.add_option("--heldout-templates", config.heldout_templates, "Held-out templates per category")
      ->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    const auto world = make_synthetic_world(config);
    const fs::path dir = out;
    fs::create_directories(dir);
    write_text(dir / "corpus.txt", world.corpus_text());
    write_text(dir / "lexicon.tsv", world.lexicon_text());
    write_text(dir / "stoplist.txt", world.stoplist_text());
    const auto& inventory = canonical_inventory();
    write_text(dir / "semeval_train.tsv", format_semeval(world.semeval_train(), inventory));
    write_text(dir / "semeval_test.tsv", format_semeval(world.semeval_test(), inventory));
    write_text(dir / "wic_train.tsv", format_wic(world.wic_train()));
    write_text(dir / "wic_test.tsv", format_wic(world.wic_test()));
    std::string probes;
    for (const auto& p : world.slot_probes()) probes += p.text + "\t" + inventory[p.sense].name + "\n";
    write_text(dir / "slot_probes.tsv", probes);
    std::cout << "wrote " << world.corpus.size() << " corpus lines and " << world.entries.size()
              << " lexicon entries to " << dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
