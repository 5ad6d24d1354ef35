#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "chiron/dense_rows.hpp"
#include "chiron/rating_matrix.hpp"

namespace chiron {

struct Edge {
  int neighbor;
  double weight;  // agreement count, integral
};

/// Undirected weighted k-NN graph over users or items.
///
/// Neighbors are ranked by Pearson correlation; each kept pair is weighted by
/// the number of co-rated entries with identical ratings. The edge set is the
/// union of both endpoints' selections, zero-weight edges are dropped, and no
/// node links to itself. Adjacency lists are sorted by neighbor index.
class SimilarityGraph {
 public:
  SimilarityGraph() = default;
  SimilarityGraph(Axis axis, int size, int k, std::vector<std::vector<Edge>> adjacency);

  /// Graph with no edges (every degree 0).
  static SimilarityGraph empty(Axis axis, int size);

  Axis axis() const { return axis_; }
  int size() const { return size_; }
  int k() const { return k_; }
  std::span<const Edge> neighbors(int node) const { return adjacency_[static_cast<std::size_t>(node)]; }
  double degree(int node) const { return degrees_[static_cast<std::size_t>(node)]; }
  std::size_t edge_count() const;  // undirected edges

  /// (L x)[node] = d_node x_node - sum_t w_node,t x_t, reading x[t * stride + offset].
  double laplacian_row(int node, std::span<const double> x, std::size_t stride = 1,
                       std::size_t offset = 0) const;

 private:
  Axis axis_ = Axis::users;
  int size_ = 0;
  int k_ = 0;
  std::vector<std::vector<Edge>> adjacency_;
  std::vector<double> degrees_;
};

/// Pearson correlation of two nodes over their co-observed entries; nullopt
/// when undefined (< 2 co-observations or zero variance).
std::optional<double> pearson_similarity(const RatingMatrix& ratings, Axis axis, int a, int b);

/// Number of co-observed entries on which both nodes gave the same rating.
int agreement_weight(const RatingMatrix& ratings, Axis axis, int a, int b);

/// k-NN graph: Pearson ranks neighbors (ties: higher agreement, then lower
/// index), agreement counts weight edges. Requires 1 <= k < node count.
SimilarityGraph build_graph(const RatingMatrix& ratings, Axis axis, int k = 10);

/// x^T L x = 1/2 sum_{a,b} w_ab (x_a - x_b)^2. Throws on size mismatch.
double laplacian_quadratic(const SimilarityGraph& graph, std::span<const double> x);

/// Debug dump, one `a <tab> b <tab> weight` line per undirected edge (a < b).
void write_edge_list(const std::filesystem::path& path, const SimilarityGraph& graph);

}  // namespace chiron
