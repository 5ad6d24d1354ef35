#include "chiron/similarity_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace chiron {
namespace {

// Pearson kept as exact integer moments: r = cov / sqrt(var_a * var_b)
struct PairRecord {
  std::int64_t cov = 0;
  std::int64_t var_a = 0;  // 0 when undefined
  std::int64_t var_b = 0;
  std::int32_t agree = 0;

  bool defined() const { return var_a > 0 && var_b > 0; }
  double value() const {
    return std::clamp(static_cast<double>(cov) /
                          std::sqrt(static_cast<double>(var_a) * static_cast<double>(var_b)),
                      -1.0, 1.0);
  }
};

PairRecord make_record(const simd::CoStats& s) {
  PairRecord r;
  r.agree = static_cast<std::int32_t>(s.agree);
  if (!pearson_from_stats(s)) return r;
  r.cov = s.count * s.sum_ab - s.sum_a * s.sum_b;
  r.var_a = s.count * s.sum_aa - s.sum_a * s.sum_a;
  r.var_b = s.count * s.sum_bb - s.sum_b * s.sum_b;
  return r;
}

// -1, 0, 1 as x's correlation is below, equal to, above y's. Exact in 128-bit
// arithmetic, so values equal as reals tie even when their doubles differ.
int compare_pearson(const PairRecord& x, const PairRecord& y) {
  const int sx = (x.cov > 0) - (x.cov < 0);
  const int sy = (y.cov > 0) - (y.cov < 0);
  if (sx != sy) return sx < sy ? -1 : 1;
  if (sx == 0) return 0;
  using u128 = unsigned __int128;
  const auto mag = [](std::int64_t v) { return static_cast<u128>(v < 0 ? -static_cast<u128>(v) : v); };
  // compare cov_x^2 var_a_y var_b_y against cov_y^2 var_a_x var_b_x
  u128 lhs = 0;
  u128 rhs = 0;
  const bool overflow = __builtin_mul_overflow(mag(x.cov), mag(x.cov), &lhs) ||
                        __builtin_mul_overflow(lhs, static_cast<u128>(y.var_a), &lhs) ||
                        __builtin_mul_overflow(lhs, static_cast<u128>(y.var_b), &lhs) ||
                        __builtin_mul_overflow(mag(y.cov), mag(y.cov), &rhs) ||
                        __builtin_mul_overflow(rhs, static_cast<u128>(x.var_a), &rhs) ||
                        __builtin_mul_overflow(rhs, static_cast<u128>(x.var_b), &rhs);
  if (overflow) {
    const double a = x.value();
    const double b = y.value();
    return a < b ? -1 : (a > b ? 1 : 0);
  }
  if (lhs == rhs) return 0;
  return (lhs > rhs) == (sx > 0) ? 1 : -1;
}

struct Candidate {
  const PairRecord* record;
  int node;
};

bool ranks_before(const Candidate& x, const Candidate& y) {
  if (const int c = compare_pearson(*x.record, *y.record); c != 0) return c > 0;
  if (x.record->agree != y.record->agree) return x.record->agree > y.record->agree;
  return x.node < y.node;
}

}  // namespace

SimilarityGraph::SimilarityGraph(Axis axis, int size, int k, std::vector<std::vector<Edge>> adjacency)
    : axis_(axis), size_(size), k_(k), adjacency_(std::move(adjacency)) {
  if (adjacency_.size() != static_cast<std::size_t>(size_)) {
    throw std::invalid_argument("adjacency size does not match node count");
  }
  degrees_.assign(static_cast<std::size_t>(size_), 0.0);
  for (int a = 0; a < size_; ++a) {
    auto& list = adjacency_[static_cast<std::size_t>(a)];
    std::sort(list.begin(), list.end(), [](const Edge& x, const Edge& y) { return x.neighbor < y.neighbor; });
    for (const Edge& e : list) {
      if (e.neighbor == a) throw std::invalid_argument("self-loop in similarity graph");
      if (e.weight < 0.0) throw std::invalid_argument("negative edge weight");
      degrees_[static_cast<std::size_t>(a)] += e.weight;
    }
  }
}

SimilarityGraph SimilarityGraph::empty(Axis axis, int size) {
  return SimilarityGraph(axis, size, 0, std::vector<std::vector<Edge>>(static_cast<std::size_t>(size)));
}

std::size_t SimilarityGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& list : adjacency_) total += list.size();
  return total / 2;
}

double SimilarityGraph::laplacian_row(int node, std::span<const double> x, std::size_t stride,
                                      std::size_t offset) const {
  double acc = degree(node) * x[static_cast<std::size_t>(node) * stride + offset];
  for (const Edge& e : neighbors(node)) {
    acc -= e.weight * x[static_cast<std::size_t>(e.neighbor) * stride + offset];
  }
  return acc;
}

std::optional<double> pearson_similarity(const RatingMatrix& ratings, Axis axis, int a, int b) {
  return pearson_from_stats(sparse_co_stats(ratings, axis, a, b));
}

int agreement_weight(const RatingMatrix& ratings, Axis axis, int a, int b) {
  return static_cast<int>(sparse_co_stats(ratings, axis, a, b).agree);
}

SimilarityGraph build_graph(const RatingMatrix& ratings, Axis axis, int k) {
  const int n = axis_size(ratings, axis);
  if (k < 1 || k >= n) {
    throw std::invalid_argument("build_graph needs 1 <= k < node count (k=" + std::to_string(k) +
                                ", nodes=" + std::to_string(n) + ")");
  }
  const LevelRows rows(ratings, axis);
  const TriangularTable<PairRecord> table(n, [&](int a, int b) { return make_record(rows.stats(a, b)); });

  std::vector<std::pair<int, int>> selected;
  std::vector<Candidate> candidates;
  candidates.reserve(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    candidates.clear();
    for (int b = 0; b < n; ++b) {
      if (b == a) continue;
      const PairRecord& rec = table.at(a, b);
      if (!rec.defined()) continue;
      candidates.push_back(Candidate{&rec, b});
    }
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), ranks_before);
    for (std::size_t c = 0; c < keep; ++c) {
      if (candidates[c].record->agree > 0) selected.emplace_back(std::min(a, candidates[c].node), std::max(a, candidates[c].node));
    }
  }
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());

  std::vector<std::vector<Edge>> adjacency(static_cast<std::size_t>(n));
  for (const auto& [a, b] : selected) {
    const double w = table.at(a, b).agree;
    adjacency[static_cast<std::size_t>(a)].push_back(Edge{b, w});
    adjacency[static_cast<std::size_t>(b)].push_back(Edge{a, w});
  }
  return SimilarityGraph(axis, n, k, std::move(adjacency));
}

double laplacian_quadratic(const SimilarityGraph& graph, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(graph.size())) {
    throw std::invalid_argument("laplacian_quadratic: vector length " + std::to_string(x.size()) +
                                " does not match graph size " + std::to_string(graph.size()));
  }
  double total = 0.0;
  for (int a = 0; a < graph.size(); ++a) {
    const double xa = x[static_cast<std::size_t>(a)];
    total += xa * graph.laplacian_row(a, x);
  }
  return total;
}

void write_edge_list(const std::filesystem::path& path, const SimilarityGraph& graph) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (int a = 0; a < graph.size(); ++a) {
    for (const Edge& e : graph.neighbors(a)) {
      if (a < e.neighbor) out << a << '\t' << e.neighbor << '\t' << e.weight << '\n';
    }
  }
}

}  // namespace chiron
