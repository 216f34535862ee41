#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "senselm/binio.hpp"
#include "senselm/checkpoint.hpp"
#include "senselm/cluster.hpp"
#include "senselm/errors.hpp"
#include "senselm/evalkit.hpp"
#include "senselm/gradcheck.hpp"
#include "senselm/lexicon.hpp"
#include "senselm/rng.hpp"
#include "senselm/synthetic.hpp"
#include "senselm/textpipe.hpp"
#include "senselm/trainer.hpp"
#include "senselm/version.hpp"

namespace fs = std::filesystem;
using namespace senselm;

namespace {

const fs::path kDataDir = SENSELM_DATA_DIR;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

SupersenseInventory inventory_from(const std::string& path) {
  return path.empty() ? canonical_inventory() : load_inventory(path);
}

// Artifacts an evaluation command needs next to a checkpoint.
struct ModelFiles {
  std::string ckpt;
  std::string vocab;
  std::string membership;
  std::string inventory;
  bool force = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--ckpt", ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--vocab", vocab, "Vocabulary (default: vocab.txt beside the checkpoint)");
    cmd->add_option("--membership", membership, "Membership matrix (default: membership.bin beside the checkpoint)");
    cmd->add_option("--inventory", inventory, "Supersense inventory (default: inventory.tsv beside the checkpoint)");
    cmd->add_flag("--force", force, "Load even if artifact hashes differ from the checkpoint");
  }
  fs::path sibling(const std::string& given, const char* name) const {
    return given.empty() ? fs::path(ckpt).parent_path() / name : fs::path(given);
  }
  SupersenseInventory load_inventory_file() const {
    const auto path = sibling(inventory, "inventory.tsv");
    return inventory.empty() && !fs::exists(path) ? canonical_inventory() : load_inventory(path);
  }
};

// Loads the checkpoint at its stored precision and hands the parameters to
// `fn` together with the vocabulary and membership matrix.
template <typename Fn>
void with_model(const ModelFiles& files, Fn&& fn) {
  const Vocab vocab = load_vocab(files.sibling(files.vocab, "vocab.txt"));
  const SenseMembershipMatrix membership = load_membership_matrix(files.sibling(files.membership, "membership.bin"));
  const auto header = read_checkpoint_header(files.ckpt);
  check_artifacts(header, vocab.content_hash(), membership.content_hash(), files.force);
  if (header.precision == Precision::f64) {
    const auto ckpt = load_checkpoint<double>(files.ckpt);
    fn(ckpt.params, vocab, membership);
  } else {
    const auto ckpt = load_checkpoint<float>(files.ckpt);
    fn(ckpt.params, vocab, membership);
  }
}

std::vector<std::pair<std::string, double>> top_senses(const std::vector<double>& probs,
                                                       const SupersenseInventory& inventory, std::size_t k) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return probs[a] > probs[b] || (probs[a] == probs[b] && a < b); });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(inventory[static_cast<SenseId>(order[i])].name, probs[order[i]]);
  return out;
}

void print_fine_tune(const FineTuneResult& r, const char* task) {
  std::cout << std::fixed << std::setprecision(4);
  std::cout << task << ": train=" << r.train_examples << " dev=" << r.dev_examples << " test=" << r.test_examples
            << " skipped=" << r.skipped << "\n";
  std::cout << "lr\tbatch\tbest_epoch\tdev_acc\ttest_acc\n";
  for (const auto& run : r.runs) {
    std::cout << std::defaultfloat << run.learning_rate << std::fixed << '\t' << run.batch_size << '\t'
              << run.best_epoch << '\t' << run.dev_accuracy << '\t' << run.test_accuracy << '\n';
  }
  const auto& best = r.runs[r.selected];
  std::cout << "selected lr=" << std::defaultfloat << best.learning_rate << std::fixed << " batch=" << best.batch_size
            << " epoch=" << best.best_epoch << "\n";
  std::cout << "frozen_head_test_accuracy " << r.frozen_test_accuracy << "\n";
  std::cout << "majority_accuracy " << r.majority_accuracy << "\n";
  std::cout << "test_accuracy " << r.test_accuracy << "\n";
}

struct FineTuneFlags {
  std::vector<double> lrs{5e-6, 1e-5, 2e-5, 3e-5, 5e-5};
  std::vector<std::size_t> batches{16, 32};
  std::size_t epochs = 10;
  double dev_fraction = 0.2;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lrs", lrs, "Learning-rate grid")->capture_default_str()->delimiter(',');
    cmd->add_option("--batch-sizes", batches, "Batch-size grid")->capture_default_str()->delimiter(',');
    cmd->add_option("--epochs", epochs, "Maximum epochs per run")->capture_default_str();
    cmd->add_option("--dev-fraction", dev_fraction, "Share of training data used for selection")->capture_default_str();
  }
  FineTuneConfig config(std::uint64_t seed, std::size_t threads) const {
    FineTuneConfig c;
    c.learning_rates = lrs;
    c.batch_sizes = batches;
    c.max_epochs = epochs;
    c.dev_fraction = dev_fraction;
    c.seed = seed;
    c.head_init.seed = seed;
    c.threads = threads;
    return c;
  }
};

int run_grad_check(const std::string& config_path, double eps, double tol, std::size_t samples,
                   std::optional<std::uint64_t> seed_flag) {
  RunConfig run = RunConfig::load(config_path);
  const std::uint64_t seed = seed_flag.value_or(run.train.seed);
  GradCheckOptions options;
  options.eps = eps;
  options.tol = tol;
  options.samples_per_group = samples;
  options.seed = seed;
  options.validate();
  bool passed = true;
  double worst = 0;
  for (const auto& report : check_model_gradients(run, options)) {
    std::cout << report.to_text();
    passed = passed && report.passed;
    worst = std::max(worst, report.max_rel_error);
  }
  std::cout << (passed ? "grad-check passed" : "grad-check FAILED") << ", max relative error " << std::scientific
            << worst << "\n";
  return passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supersense-aware masked language model: pretraining, checks and evaluation"};
  app.set_version_flag("--version", std::string("sense-lm ") + std::string(kSoftwareVersion) + " (checkpoint format " +
                                        std::to_string(kFormatVersion) + ")");
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", seed, "Random seed (overrides the config)"); };
  auto add_threads = [&](CLI::App* cmd) {
    cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  // build-vocab
  std::string corpus, out, base_vocab;
  std::size_t vocab_size = 0;
  auto* build_vocab_cmd = app.add_subcommand("build-vocab", "Build a word/piece vocabulary from a corpus");
  build_vocab_cmd->add_option("--corpus", corpus, "Corpus, one sentence per line")->required()->check(CLI::ExistingFile);
  build_vocab_cmd->add_option("--size", vocab_size, "Vocabulary size including specials")->required();
  build_vocab_cmd->add_option("--out", out, "Output vocabulary file")->required();
  build_vocab_cmd->add_option("--base", base_vocab, "Existing vocabulary whose ids are kept")->check(CLI::ExistingFile);

  // build-lexicon
  std::string lexicon_path, stoplist_path = (kDataDir / "stoplist.txt").string(), vocab_path, inventory_path;
  auto* build_lexicon_cmd = app.add_subcommand("build-lexicon", "Build the sense membership matrix for a vocabulary");
  build_lexicon_cmd->add_option("--lexicon", lexicon_path, "Lexicon TSV: lemma<TAB>sense,sense")->required()->check(CLI::ExistingFile);
  build_lexicon_cmd->add_option("--stoplist", stoplist_path, "Stopword list")->capture_default_str()->check(CLI::ExistingFile);
  build_lexicon_cmd->add_option("--vocab", vocab_path, "Vocabulary file")->required()->check(CLI::ExistingFile);
  build_lexicon_cmd->add_option("--inventory", inventory_path, "Supersense inventory (default: built-in 45)")->check(CLI::ExistingFile);
  build_lexicon_cmd->add_option("--out", out, "Output membership matrix")->required();

  // pretrain
  std::string config_path, mode, resume;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "Pretrain with the joint word and supersense objective");
  pretrain_cmd->add_option("--corpus", corpus, "Corpus, one sentence per line")->required()->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--vocab", vocab_path, "Vocabulary file")->required()->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--lexicon", lexicon_path, "Lexicon TSV")->required()->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--stoplist", stoplist_path, "Stopword list")->capture_default_str()->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--inventory", inventory_path, "Supersense inventory (default: built-in 45)")->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--out", out, "Run directory")->required();
  pretrain_cmd->add_option("--mode", mode, "OOV strategy (overrides the config)")->check(CLI::IsMember({"60k", "avg"}));
  pretrain_cmd->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  add_seed(pretrain_cmd);
  add_threads(pretrain_cmd);

  // grad-check
  double eps = 1e-5, tol = 1e-4;
  std::size_t samples = 200;
  auto* grad_check_cmd = app.add_subcommand("grad-check", "Compare analytic gradients with central differences");
  grad_check_cmd->add_option("--config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
  grad_check_cmd->add_option("--eps", eps, "Finite-difference step")->capture_default_str();
  grad_check_cmd->add_option("--tol", tol, "Relative-error tolerance")->capture_default_str();
  grad_check_cmd->add_option("--samples", samples, "Coordinates per parameter tensor")->capture_default_str();
  add_seed(grad_check_cmd);

  // tag
  ModelFiles model_files;
  std::string text, text_file;
  std::size_t top_k = 3;
  auto* tag_cmd = app.add_subcommand("tag", "Supersense distribution for every word of raw text ([MASK] allowed)");
  model_files.add_to(tag_cmd);
  auto* text_opt = tag_cmd->add_option("--text", text, "Input text");
  auto* file_opt = tag_cmd->add_option("--file", text_file, "Input file, one text per line")->check(CLI::ExistingFile);
  text_opt->excludes(file_opt);
  tag_cmd->add_option("--top", top_k, "Senses shown per word")->capture_default_str();

  // probe
  std::string train_path, test_path;
  ProbeConfig probe_config;
  auto* probe_cmd = app.add_subcommand("probe", "Linear probe on frozen output embeddings (SemEval-SS format)");
  model_files.add_to(probe_cmd);
  probe_cmd->add_option("--train", train_path, "Training TSV")->required()->check(CLI::ExistingFile);
  probe_cmd->add_option("--test", test_path, "Test TSV")->required()->check(CLI::ExistingFile);
  probe_cmd->add_option("--lexicon", lexicon_path, "Lexicon for counting gold senses outside A(w)")->check(CLI::ExistingFile);
  probe_cmd->add_option("--stoplist", stoplist_path, "Stopword list")->capture_default_str()->check(CLI::ExistingFile);
  probe_cmd->add_option("--lr", probe_config.learning_rate, "Probe learning rate")->capture_default_str();
  probe_cmd->add_option("--epochs", probe_config.epochs, "Probe epochs")->capture_default_str();
  probe_cmd->add_option("--batch", probe_config.batch_size, "Probe batch size")->capture_default_str();
  add_seed(probe_cmd);
  add_threads(probe_cmd);

  // finetune
  FineTuneFlags ft_flags;
  auto* finetune_cmd = app.add_subcommand("finetune", "Fine-tune encoder and head (SemEval-SS format)");
  model_files.add_to(finetune_cmd);
  finetune_cmd->add_option("--train", train_path, "Training TSV")->required()->check(CLI::ExistingFile);
  finetune_cmd->add_option("--test", test_path, "Test TSV")->required()->check(CLI::ExistingFile);
  ft_flags.add_to(finetune_cmd);
  add_seed(finetune_cmd);
  add_threads(finetune_cmd);

  // wic
  auto* wic_cmd = app.add_subcommand("wic", "Word-in-context pair classification");
  model_files.add_to(wic_cmd);
  wic_cmd->add_option("--train", train_path, "Training TSV")->required()->check(CLI::ExistingFile);
  wic_cmd->add_option("--test", test_path, "Test TSV")->required()->check(CLI::ExistingFile);
  ft_flags.add_to(wic_cmd);
  add_seed(wic_cmd);
  add_threads(wic_cmd);

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "Average-linkage cosine dendrogram of the supersense vectors");
  model_files.add_to(cluster_cmd);
  cluster_cmd->add_option("--out", out, "Output JSON file")->required();

  // export
  std::string matrix = "S";
  auto* export_cmd = app.add_subcommand("export", "Write supersense or word vectors as TSV");
  model_files.add_to(export_cmd);
  export_cmd->add_option("--matrix", matrix, "Which matrix")->capture_default_str()->check(CLI::IsMember({"S", "W"}));
  export_cmd->add_option("--out", out, "Output TSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*build_vocab_cmd) {
      std::optional<Vocab> base;
      if (!base_vocab.empty()) base = load_vocab(base_vocab);
      const Vocab vocab = build_vocab(fs::path(corpus), vocab_size, base ? &*base : nullptr);
      save_vocab(vocab, out);
      std::cout << "wrote " << vocab.size() << " tokens to " << out << "\n";
    } else if (*build_lexicon_cmd) {
      const auto inventory = inventory_from(inventory_path);
      const Vocab vocab = load_vocab(vocab_path);
      const Lexicon lexicon = parse_lexicon(fs::path(lexicon_path), fs::path(stoplist_path), inventory);
      const auto membership = build_membership_matrix(lexicon, vocab, inventory.size());
      save_membership_matrix(membership, out);
      std::size_t covered = 0;
      for (TokenId w = 0; w < vocab.size(); ++w) covered += membership.senses_of(w).empty() ? 0 : 1;
      std::cout << "lexicon entries " << lexicon.allowed.size() << ", vocabulary tokens with senses " << covered << "/"
                << vocab.size() << ", nonzeros " << membership.nonzeros() << "\n";
    } else if (*pretrain_cmd) {
      KeyValueConfig kv = KeyValueConfig::load(config_path);
      if (!mode.empty()) kv.set("mode", mode);
      if (seed) kv.set("seed", std::to_string(*seed));
      if (pretrain_cmd->count("--threads") > 0) kv.set("threads", std::to_string(threads));
      const RunConfig run = RunConfig::from_config(kv);
      const auto inventory = inventory_from(inventory_path);
      const Vocab vocab = load_vocab(vocab_path);
      const Lexicon lexicon = parse_lexicon(fs::path(lexicon_path), fs::path(stoplist_path), inventory);
      const auto membership = build_membership_matrix(lexicon, vocab, inventory.size());
      auto data = prepare_corpus(fs::path(corpus), vocab, run.model.max_positions);
      const fs::path dir = out;
      fs::create_directories(dir);
      save_vocab(vocab, dir / "vocab.txt");
      save_membership_matrix(membership, dir / "membership.bin");
      write_text(dir / "inventory.tsv", format_inventory(inventory));
      write_text(dir / "run.cfg", kv.canonical_text());
      TrainOptions options;
      options.out_dir = dir;
      const auto every = std::max<std::uint64_t>(run.train.log_interval, 1);
      options.on_step = [&](std::uint64_t step, const LossReport& r) {
        if (step % every == 0 || step + 1 == run.train.steps) {
          std::cout << "step " << step << " lm " << r.lm << " slm_allowed " << r.slm_allowed << " slm_reg "
                    << r.slm_reg << " total " << r.total << std::endl;
        }
      };
      std::cout << data.size() << " sequences, " << run.train.steps << " steps, mode "
                << to_string(run.objective.mode) << "\n";
      try {
        if (run.train.precision == Precision::f64) {
          std::optional<Checkpoint<double>> from;
          if (!resume.empty()) from = load_checkpoint<double>(resume);
          train<double>(run, vocab, lexicon, membership, std::move(data), options, from ? &*from : nullptr);
        } else {
          std::optional<Checkpoint<float>> from;
          if (!resume.empty()) from = load_checkpoint<float>(resume);
          train<float>(run, vocab, lexicon, membership, std::move(data), options, from ? &*from : nullptr);
        }
      } catch (const TrainingAborted& e) {
        std::cerr << "error: training aborted at step " << e.step() << ": " << e.what() << "; last good state in "
                  << (dir / "ckpt_last_good.sblm").string() << "\n";
        return 2;
      }
      std::cout << "wrote " << (dir / "ckpt_final.sblm").string() << "\n";
    } else if (*grad_check_cmd) {
      return run_grad_check(config_path, eps, tol, samples, seed);
    } else if (*tag_cmd) {
      if (text.empty() && text_file.empty()) throw CLI::RequiredError("--text or --file");
      std::vector<std::string> texts;
      if (!text_file.empty()) {
        std::ifstream in(text_file);
        for (std::string line; std::getline(in, line);) texts.push_back(line);
      } else {
        texts.push_back(text);
      }
      const auto inventory = model_files.load_inventory_file();
      with_model(model_files, [&](const auto& params, const Vocab& vocab, const SenseMembershipMatrix& membership) {
        for (const auto& t : texts) {
          for (const auto& w : predict_supersenses(params, membership, vocab, t)) {
            std::cout << w.word;
            for (const auto& [name, p] : top_senses(w.probabilities, inventory, top_k)) {
              std::cout << '\t' << name << ':' << std::fixed << std::setprecision(4) << p;
            }
            std::cout << '\n';
          }
          if (texts.size() > 1) std::cout << '\n';
        }
      });
    } else if (*probe_cmd) {
      const auto inventory = model_files.load_inventory_file();
      const auto train_set = load_semeval(train_path, inventory);
      const auto test_set = load_semeval(test_path, inventory);
      std::optional<Lexicon> lexicon;
      if (!lexicon_path.empty()) lexicon = parse_lexicon(fs::path(lexicon_path), fs::path(stoplist_path), inventory);
      probe_config.seed = seed.value_or(0);
      with_model(model_files, [&](const auto& params, const Vocab& vocab, const SenseMembershipMatrix& membership) {
        const auto r = frozen_probe(params, membership, vocab, train_set, test_set, probe_config,
                                    lexicon ? &*lexicon : nullptr, threads);
        std::cout << std::fixed << std::setprecision(4) << "train_examples " << r.train_examples << "\ntest_examples "
                  << r.test_examples << "\nskipped " << r.skipped << "\n";
        if (lexicon) std::cout << "gold_outside_allowed " << r.gold_outside_allowed << "\n";
        std::cout << "train_accuracy " << r.train_accuracy << "\ntest_accuracy " << r.test_accuracy << "\n";
      });
    } else if (*finetune_cmd || *wic_cmd) {
      const auto inventory = model_files.load_inventory_file();
      const auto config = ft_flags.config(seed.value_or(0), threads);
      with_model(model_files, [&](const auto& params, const Vocab& vocab, const SenseMembershipMatrix& membership) {
        if (*finetune_cmd) {
          print_fine_tune(fine_tune_eval(params, membership, vocab, load_semeval(train_path, inventory),
                                         load_semeval(test_path, inventory), config),
                          "finetune");
        } else {
          print_fine_tune(wic_eval(params, membership, vocab, load_wic(train_path), load_wic(test_path), config), "wic");
        }
      });
    } else if (*cluster_cmd || *export_cmd) {
      const auto inventory = model_files.load_inventory_file();
      with_model(model_files, [&](const auto& params, const Vocab& vocab, const SenseMembershipMatrix&) {
        const bool senses = *cluster_cmd || matrix == "S";
        const auto& m = senses ? params.senses : params.words;
        VectorTable table;
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          const auto id = static_cast<std::uint32_t>(c);
          table.labels.push_back(senses ? inventory[id].name : vocab.text(id));
          std::vector<double> row(static_cast<std::size_t>(m.rows()));
          for (Eigen::Index r = 0; r < m.rows(); ++r) row[static_cast<std::size_t>(r)] = m(r, c);
          table.rows.push_back(std::move(row));
        }
        if (*cluster_cmd) {
          write_text(out, cluster_vectors(table.rows).to_json(table.labels) + "\n");
          std::cout << "wrote dendrogram of " << table.rows.size() << " supersense vectors to " << out << "\n";
        } else {
          write_vectors(table, out);
          std::cout << "wrote " << table.rows.size() << " vectors to " << out << "\n";
        }
      });
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
