#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace senselm {

enum class Linkage { average };
enum class Metric { cosine };

/// One agglomeration step. Leaves are clusters 0..n-1; merge k creates
/// cluster n+k.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0;
  std::size_t size = 0;
  friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;

  /// Nested object: leaves {"id", "label"}, inner nodes {"id", "height",
  /// "size", "children"}.
  std::string to_json(std::span<const std::string> labels, int indent = 2) const;
};

/// 1 - cos(a, b); a zero vector is at distance 1 from everything.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Agglomerative clustering. At each step the closest pair of active
/// clusters merges; ties go to the lexicographically smallest (id, id) pair.
Dendrogram cluster_vectors(const std::vector<std::vector<double>>& vectors, Linkage linkage = Linkage::average,
                           Metric metric = Metric::cosine);

struct VectorTable {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
};

/// label<TAB>v1<TAB>...<TAB>vd, shortest round-trip decimal form.
void write_vectors(const VectorTable& table, const std::filesystem::path& path);
VectorTable read_vectors(const std::filesystem::path& path);

}  // namespace senselm
