#include <doctest.h>

#include <json.hpp>
#include <fstream>
#include <limits>
#include <set>

#include "senselm/cluster.hpp"
#include "senselm/errors.hpp"
#include "senselm/rng.hpp"
#include "support.hpp"

using namespace senselm;

namespace {

// Recomputes every cluster distance from its member leaves at every step.
std::vector<Merge> brute_force(const std::vector<std::vector<double>>& v) {
  const std::size_t n = v.size();
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members.push_back({i});
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i) active.push_back(i);
  std::vector<Merge> merges;
  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        double sum = 0;
        for (std::size_t x : members[active[a]]) {
          for (std::size_t y : members[active[b]]) sum += cosine_distance(v[x], v[y]);
        }
        const double d = sum / static_cast<double>(members[active[a]].size() * members[active[b]].size());
        if (d < best) {
          best = d;
          ba = active[a];
          bb = active[b];
        }
      }
    }
    std::vector<std::size_t> joined = members[ba];
    joined.insert(joined.end(), members[bb].begin(), members[bb].end());
    merges.push_back({ba, bb, best, joined.size()});
    members.push_back(joined);
    std::erase(active, ba);
    std::erase(active, bb);
    active.push_back(members.size() - 1);
  }
  return merges;
}

std::vector<std::vector<double>> random_vectors(CounterRng& rng, std::size_t n, std::size_t d) {
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (auto& row : out) {
    for (auto& x : row) x = rng.normal();
  }
  return out;
}

}  // namespace

TEST_SUITE("cluster") {
  TEST_CASE("cosine distance") {
    const std::vector<double> a{1, 0}, b{0, 2}, c{-3, 0}, z{0, 0};
    CHECK(cosine_distance(a, a) == doctest::Approx(0.0));
    CHECK(cosine_distance(a, b) == doctest::Approx(1.0));
    CHECK(cosine_distance(a, c) == doctest::Approx(2.0));
    CHECK(cosine_distance(a, z) == 1.0);
    CHECK_THROWS_AS(cosine_distance(a, std::vector<double>{1, 2, 3}), ContractError);
  }

  TEST_CASE("average linkage matches the brute-force oracle") {
    CounterRng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      const auto v = random_vectors(rng, 2 + rng.below(11), 1 + rng.below(6));
      const auto tree = cluster_vectors(v);
      const auto oracle = brute_force(v);
      REQUIRE(tree.merges.size() == oracle.size());
      for (std::size_t k = 0; k < oracle.size(); ++k) {
        CHECK(tree.merges[k].left == oracle[k].left);
        CHECK(tree.merges[k].right == oracle[k].right);
        CHECK(tree.merges[k].size == oracle[k].size);
        CHECK(std::abs(tree.merges[k].height - oracle[k].height) < 1e-12);
      }
    }
  }

  TEST_CASE("tree structure properties") {
    CounterRng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 1 + rng.below(20);
      const auto tree = cluster_vectors(random_vectors(rng, n, 3));
      CHECK(tree.leaves == n);
      CHECK(tree.merges.size() == n - 1);
      std::set<std::size_t> used;
      for (std::size_t k = 0; k < tree.merges.size(); ++k) {
        const auto& m = tree.merges[k];
        CHECK(m.left < n + k);
        CHECK(m.right < n + k);
        CHECK(used.insert(m.left).second);
        CHECK(used.insert(m.right).second);
        if (k > 0) CHECK(m.height >= tree.merges[k - 1].height - 1e-12);
      }
      if (n > 1) CHECK(tree.merges.back().size == n);
    }
  }

  TEST_CASE("ties go to the smallest pair") {
    const std::vector<std::vector<double>> v{{1, 0}, {0, 1}, {1, 0}, {0, 1}};
    const auto tree = cluster_vectors(v);
    CHECK(tree.merges[0] == Merge{0, 2, 0.0, 2});
    CHECK(tree.merges[1].left == 1);
    CHECK(tree.merges[1].right == 3);
  }

  TEST_CASE("json export nests children with labels") {
    const std::vector<std::vector<double>> v{{1, 0}, {0.9, 0.1}, {0, 1}};
    const auto tree = cluster_vectors(v);
    const std::vector<std::string> labels{"noun.food", "noun.plant", "verb.motion"};
    const auto j = nlohmann::json::parse(tree.to_json(labels));
    CHECK(j["id"] == 4);
    CHECK(j["size"] == 3);
    std::multiset<std::string> seen;
    std::function<void(const nlohmann::json&)> walk = [&](const nlohmann::json& node) {
      if (node.contains("children")) {
        for (const auto& c : node["children"]) walk(c);
      } else {
        seen.insert(node["label"].get<std::string>());
      }
    };
    walk(j);
    CHECK(seen == std::multiset<std::string>(labels.begin(), labels.end()));
    CHECK_THROWS_AS(tree.to_json(std::vector<std::string>{"a"}), ContractError);
  }

  TEST_CASE("vector tables round-trip exactly") {
    testing::TempDir dir("vectors");
    CounterRng rng(10);
    VectorTable table;
    for (int i = 0; i < 5; ++i) {
      table.labels.push_back("row" + std::to_string(i));
      table.rows.push_back({rng.normal(), 1e-300 * rng.normal(), 0.1, -0.0});
    }
    write_vectors(table, dir / "v.tsv");
    const auto back = read_vectors(dir / "v.tsv");
    CHECK(back.labels == table.labels);
    CHECK(back.rows == table.rows);
    std::ofstream(dir / "bad.tsv") << "a\t1\t2\nb\t1\n";
    CHECK_THROWS_AS(read_vectors(dir / "bad.tsv"), ParseError);
    std::ofstream(dir / "nan.tsv") << "a\t1\tx\n";
    CHECK_THROWS_AS(read_vectors(dir / "nan.tsv"), ParseError);
  }
}
