#include "senselm/cluster.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "senselm/errors.hpp"
#include "senselm/text.hpp"

namespace senselm {

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("cosine distance of vectors with different lengths");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

Dendrogram cluster_vectors(const std::vector<std::vector<double>>& vectors, Linkage, Metric) {
  const std::size_t n = vectors.size();
  Dendrogram tree;
  tree.leaves = n;
  if (n < 2) return tree;
  const std::size_t total = 2 * n - 1;
  std::vector<std::vector<double>> dist(total, std::vector<double>(total, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = cosine_distance(vectors[i], vectors[j]);
  }
  std::vector<std::size_t> size(total, 1);
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    // `active` stays sorted, so the first strict minimum is the smallest pair.
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const double d = dist[active[a]][active[b]];
        if (d < best) {
          best = d;
          bi = a;
          bj = b;
        }
      }
    }
    const std::size_t left = active[bi], right = active[bj], merged = n + k;
    size[merged] = size[left] + size[right];
    tree.merges.push_back({left, right, best, size[merged]});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    for (std::size_t other : active) {
      const double d = (static_cast<double>(size[left]) * dist[other][left] +
                        static_cast<double>(size[right]) * dist[other][right]) /
                       static_cast<double>(size[merged]);
      dist[other][merged] = dist[merged][other] = d;
    }
    active.push_back(merged);
  }
  return tree;
}

std::string Dendrogram::to_json(std::span<const std::string> labels, int indent) const {
  using nlohmann::ordered_json;
  if (!labels.empty() && labels.size() != leaves) throw ContractError("label count differs from leaf count");
  std::vector<ordered_json> nodes;
  for (std::size_t i = 0; i < leaves; ++i) {
    ordered_json leaf;
    leaf["id"] = i;
    if (!labels.empty()) leaf["label"] = labels[i];
    nodes.push_back(std::move(leaf));
  }
  for (std::size_t k = 0; k < merges.size(); ++k) {
    const auto& m = merges[k];
    ordered_json node;
    node["id"] = leaves + k;
    node["height"] = m.height;
    node["size"] = m.size;
    node["children"] = ordered_json::array({std::move(nodes[m.left]), std::move(nodes[m.right])});
    nodes.push_back(std::move(node));
  }
  if (nodes.empty()) return "null";
  return nodes.back().dump(indent);
}

void write_vectors(const VectorTable& table, const std::filesystem::path& path) {
  if (table.labels.size() != table.rows.size()) throw ContractError("vector table has mismatched labels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  char buffer[64];
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << table.labels[r];
    for (double v : table.rows[r]) {
      const auto res = std::to_chars(buffer, buffer + sizeof buffer, v);
      out << '\t' << std::string_view(buffer, static_cast<std::size_t>(res.ptr - buffer));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

VectorTable read_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  VectorTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    table.labels.emplace_back(fields[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0;
      const auto f = fields[i];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ParseError(path.string() + ":" + std::to_string(line_number) + ": bad number '" + std::string(f) + "'");
      }
      row.push_back(v);
    }
    if (!table.rows.empty() && row.size() != table.rows.front().size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": ragged row");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace senselm
