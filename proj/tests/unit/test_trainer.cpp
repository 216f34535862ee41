#include <doctest.h>

#include <fstream>
#include <set>

#include "senselm/errors.hpp"
#include "senselm/trainer.hpp"
#include "support.hpp"
#include "world.hpp"

using namespace senselm;
using namespace senselm::testing;

namespace {

bool same_params(const ModelParams<double>& a, const ModelParams<double>& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!std::equal(ta[i].values().begin(), ta[i].values().end(), tb[i].values().begin())) return false;
  }
  return true;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("run configuration validation") {
    CHECK_THROWS_AS(tiny_run("epochs=3\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(KeyValueConfig::parse("steps=0\n")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(KeyValueConfig::parse("steps=5\nwarmup_steps=6\n")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(KeyValueConfig::parse("lr=0\n")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(KeyValueConfig::parse("mode=both\n")), ConfigError);
    const auto avg = tiny_run("mode=avg\n");
    CHECK(avg.masking.whole_word);
    CHECK(avg.objective.mode == OovMode::average_embedding);
    CHECK(tiny_run().train.warmup() == 0);
    CHECK(RunConfig::from_config(KeyValueConfig::parse("steps=50\n")).train.warmup() == 5);
  }

  TEST_CASE("digest covers the trajectory but not threads or logging") {
    const auto base = tiny_run().digest();
    CHECK(tiny_run("threads=3\nlog_interval=7\n").digest() == base);
    CHECK(tiny_run("lr=2e-3\n").digest() != base);
    CHECK(tiny_run("mask_rate=0.2\n").digest() != base);
    CHECK(tiny_run("mode=avg\n").digest() != base);
  }

  TEST_CASE("trainer rejects inconsistent inputs") {
    const auto t = tiny_world();
    CHECK_THROWS_AS(Trainer<double>(tiny_run(), t.vocab, t.lexicon, t.membership, {}), ContractError);
    const SenseMembershipMatrix narrow(45, t.vocab.size() - 1, {});
    CHECK_THROWS_AS(Trainer<double>(tiny_run(), t.vocab, t.lexicon, narrow, t.data), CompatError);
    auto long_data = t.data;
    long_data[0].ids.assign(65, 5);
    long_data[0].spans = {{0, 65, "x"}};
    CHECK_THROWS_AS(Trainer<double>(tiny_run(), t.vocab, t.lexicon, t.membership, long_data), LengthError);
  }

  TEST_CASE("batches are a pure function of seed and step") {
    const auto t = tiny_world();
    Trainer<double> a(tiny_run(), t.vocab, t.lexicon, t.membership, t.data);
    Trainer<double> b(tiny_run(), t.vocab, t.lexicon, t.membership, t.data);
    for (std::uint64_t s : {5u, 0u, 200u, 5u}) {
      const auto x = a.batch_at(s);
      const auto y = b.batch_at(s);
      CHECK(x.inputs == y.inputs);
      CHECK(x.plans == y.plans);
    }
    CHECK_FALSE(a.batch_at(1).inputs == a.batch_at(2).inputs);
  }

  TEST_CASE("each epoch visits every sequence once") {
    const auto t = tiny_world(1, 40);
    auto run = tiny_run("batch_size=1\nmask_rate=0\n");
    Trainer<double> trainer(run, t.vocab, t.lexicon, t.membership, t.data);
    for (std::uint64_t epoch = 0; epoch < 2; ++epoch) {
      std::multiset<std::vector<TokenId>> seen, expected;
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        const auto batch = trainer.batch_at(epoch * t.data.size() + i);
        auto ids = batch.inputs[0].ids;
        for (const auto& target : batch.plans[0].targets) {
          for (std::size_t k = 0; k < target.gold.size(); ++k) ids[target.span.begin + k] = target.gold[k];
        }
        seen.insert(ids);
        expected.insert(t.data[i].ids);
      }
      CHECK(seen == expected);
    }
  }

  TEST_CASE("identical runs give byte-identical checkpoints, independent of threads") {
    const auto t = tiny_world();
    TempDir dir("train_det");
    TrainOptions a{dir / "a", {}}, b{dir / "b", {}}, c{dir / "c", {}};
    train<double>(tiny_run(), t.vocab, t.lexicon, t.membership, t.data, a);
    train<double>(tiny_run(), t.vocab, t.lexicon, t.membership, t.data, b);
    train<double>(tiny_run("threads=3\n"), t.vocab, t.lexicon, t.membership, t.data, c);
    const auto final_a = slurp(dir / "a" / "ckpt_final.sblm");
    CHECK(!final_a.empty());
    CHECK(final_a == slurp(dir / "b" / "ckpt_final.sblm"));
    CHECK(final_a == slurp(dir / "c" / "ckpt_final.sblm"));
  }

  TEST_CASE("resuming at step k equals training straight through") {
    const auto t = tiny_world();
    TempDir dir("train_resume");
    const auto run = tiny_run("checkpoint_interval=2\n");
    const auto straight = train<double>(run, t.vocab, t.lexicon, t.membership, t.data, {dir / "full", {}});
    for (int k : {2, 4}) {
      const auto mid = load_checkpoint<double>(dir / "full" / ("ckpt_step" + std::to_string(k) + ".sblm"));
      CHECK(mid.header.step == static_cast<std::uint64_t>(k));
      const auto resumed = train<double>(run, t.vocab, t.lexicon, t.membership, t.data, {}, &mid);
      CHECK(resumed.header == straight.header);
      CHECK(same_params(resumed.params, straight.params));
      CHECK(same_params(resumed.adam_second, straight.adam_second));
    }
  }

  TEST_CASE("resume refuses foreign checkpoints") {
    const auto t = tiny_world();
    Trainer<double> trainer(tiny_run(), t.vocab, t.lexicon, t.membership, t.data);
    trainer.step();
    const auto ck = trainer.checkpoint();
    Trainer<double> other_seed(tiny_run("seed=4\n"), t.vocab, t.lexicon, t.membership, t.data);
    CHECK_THROWS_AS(other_seed.resume(ck), CompatError);
    Trainer<double> other_lr(tiny_run("lr=5e-3\n"), t.vocab, t.lexicon, t.membership, t.data);
    CHECK_THROWS_AS(other_lr.resume(ck), CompatError);
    Trainer<double> other_shape(tiny_run("d=32\n"), t.vocab, t.lexicon, t.membership, t.data);
    CHECK_THROWS_AS(other_shape.resume(ck), CompatError);
    auto foreign = ck;
    foreign.header.vocab_hash ^= 1;
    Trainer<double> fresh(tiny_run(), t.vocab, t.lexicon, t.membership, t.data);
    CHECK_THROWS_AS(fresh.resume(foreign), CompatError);
    CHECK_NOTHROW(fresh.resume(ck));
    CHECK(fresh.current_step() == 1);
  }

  TEST_CASE("training lowers the loss on a fixed batch") {
    const auto t = tiny_world();
    Trainer<double> trainer(tiny_run("steps=80\nlr=3e-3\nbatch_size=8\n"), t.vocab, t.lexicon, t.membership, t.data);
    const auto before = trainer.evaluate(0);
    while (trainer.current_step() < 80) trainer.step();
    const auto after = trainer.evaluate(0);
    CHECK(after.total < 0.8L * before.total);
    CHECK(after.lm < before.lm);
    CHECK(after.slm < before.slm);
    CHECK_THROWS_AS(trainer.step(), ContractError);
  }

  TEST_CASE("a non-finite step aborts and keeps the last good parameters") {
    const auto t = tiny_world();
    Trainer<double> trainer(tiny_run(), t.vocab, t.lexicon, t.membership, t.data);
    trainer.step();
    trainer.mutable_params().layers[0].ff_in(0, 0) = std::numeric_limits<double>::quiet_NaN();
    const auto poisoned = trainer.params();
    try {
      trainer.step();
      FAIL("expected TrainingAborted");
    } catch (const TrainingAborted& e) {
      CHECK(e.step() == 1);
    }
    CHECK(trainer.current_step() == 1);
    CHECK(std::isnan(trainer.params().layers[0].ff_in(0, 0)));
    CHECK(trainer.params().words == poisoned.words);
  }

  TEST_CASE("an exploding run writes the last good checkpoint") {
    const auto t = tiny_world();
    TempDir dir("train_abort");
    const auto run = tiny_run("lr=1e300\nsteps=20\n");
    CHECK_THROWS_AS(train<double>(run, t.vocab, t.lexicon, t.membership, t.data, {dir.path(), {}}), TrainingAborted);
    REQUIRE(std::filesystem::exists(dir / "ckpt_last_good.sblm"));
    const auto ck = load_checkpoint<double>(dir / "ckpt_last_good.sblm");
    CHECK(ck.params.all_finite());
    CHECK_FALSE(std::filesystem::exists(dir / "ckpt_final.sblm"));
  }

  TEST_CASE("loss log rows land on the interval and the final step") {
    const auto t = tiny_world();
    TempDir dir("train_log");
    std::vector<std::uint64_t> callbacks;
    TrainOptions options{dir.path(), [&](std::uint64_t s, const LossReport&) { callbacks.push_back(s); }};
    train<double>(tiny_run("steps=7\nlog_interval=3\n"), t.vocab, t.lexicon, t.membership, t.data, options);
    std::ifstream in(dir / "loss.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,lm,slm_allowed,slm_reg,total");
    std::vector<std::string> steps;
    while (std::getline(in, line)) steps.push_back(line.substr(0, line.find(',')));
    CHECK(steps == std::vector<std::string>{"0", "3", "6"});
    CHECK(callbacks == std::vector<std::uint64_t>{0, 1, 2, 3, 4, 5, 6});
  }

  TEST_CASE("float training runs") {
    const auto t = tiny_world();
    const auto ck = train<float>(tiny_run("precision=32\n"), t.vocab, t.lexicon, t.membership, t.data);
    CHECK(ck.header.precision == Precision::f32);
    CHECK(ck.header.step == 6);
    CHECK(ck.params.all_finite());
  }
}
