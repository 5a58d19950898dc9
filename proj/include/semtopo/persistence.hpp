#pragma once

// Vietoris-Rips persistent homology in degrees 0 and 1, and the two diagram
// summaries used to score query neighborhoods.
//
// Filtration order is total: (filtration value, dimension, lexicographic
// vertex tuple). H0 is read off a union-find sweep over edges in that order;
// H1 comes from reducing the coboundary matrix of the non-tree edges (the tree
// edges are cleared by the H0 pass).

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "semtopo/error.hpp"
#include "semtopo/geometry.hpp"

namespace semtopo {

struct Bar {
  int degree = 0;
  double birth = 0.0;
  std::optional<double> death;  // empty: the feature never dies

  bool infinite() const noexcept { return !death.has_value(); }
  double persistence() const noexcept {
    return death ? *death - birth : std::numeric_limits<double>::infinity();
  }

  friend bool operator==(const Bar&, const Bar&) = default;
  friend std::partial_ordering operator<=>(const Bar& a, const Bar& b) {
    if (a.degree != b.degree) return a.degree <=> b.degree;
    if (auto c = a.birth <=> b.birth; c != 0) return c;
    // Infinite deaths sort last.
    if (a.infinite() != b.infinite())
      return a.infinite() ? std::partial_ordering::greater : std::partial_ordering::less;
    if (a.infinite()) return std::partial_ordering::equivalent;
    return *a.death <=> *b.death;
  }
};

class PersistenceDiagram {
 public:
  PersistenceDiagram() = default;
  PersistenceDiagram(std::vector<Bar> bars, std::size_t point_count)
      : bars_(std::move(bars)), point_count_(point_count) {
    std::sort(bars_.begin(), bars_.end(), [](const Bar& a, const Bar& b) { return a < b; });
  }

  const std::vector<Bar>& bars() const noexcept { return bars_; }
  std::size_t point_count() const noexcept { return point_count_; }

  std::vector<Bar> bars_of_degree(int degree) const {
    std::vector<Bar> out;
    for (const auto& b : bars_)
      if (b.degree == degree) out.push_back(b);
    return out;
  }

  std::size_t count(int degree) const {
    return static_cast<std::size_t>(
        std::count_if(bars_.begin(), bars_.end(), [degree](const Bar& b) { return b.degree == degree; }));
  }

  // Number of bars of `degree` alive at radius r, i.e. birth <= r < death.
  std::size_t alive_at(int degree, double r) const {
    std::size_t c = 0;
    for (const auto& b : bars_)
      if (b.degree == degree && b.birth <= r && (b.infinite() || r < *b.death)) ++c;
    return c;
  }

 private:
  std::vector<Bar> bars_;
  std::size_t point_count_ = 0;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) noexcept {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  bool unite(std::size_t a, std::size_t b) noexcept {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

struct Edge {
  double value;
  std::uint32_t i, j;  // i < j
};

inline std::vector<Edge> sorted_edges(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) edges.push_back({d(i, j), i, j});
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  return edges;
}

// Position of triangle {i<j<k} in colex enumeration.
inline std::size_t triangle_key(std::size_t i, std::size_t j, std::size_t k) noexcept {
  return k * (k - 1) * (k - 2) / 6 + j * (j - 1) / 2 + i;
}

// Symmetric difference of two sorted index lists.
inline void add_column(std::vector<std::uint32_t>& target, const std::vector<std::uint32_t>& source,
                       std::vector<std::uint32_t>& scratch) {
  scratch.clear();
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(scratch));
  target.swap(scratch);
}

}  // namespace detail

inline void validate_distance_matrix(const DistanceMatrix& d) {
  if (d.size() == 0) throw InvalidArgument("rips_persistence needs at least one point");
}

/// Degree-0 and degree-1 persistence of the Vietoris-Rips filtration on `d`.
/// Degree-1 bars of zero persistence are dropped; degree-0 bars are kept so
/// that their count always equals the number of points.
inline PersistenceDiagram rips_persistence(const DistanceMatrix& d, int max_degree = 1) {
  validate_distance_matrix(d);
  if (max_degree < 0 || max_degree > 1) throw InvalidArgument("rips_persistence supports degrees 0 and 1");
  const std::size_t n = d.size();
  std::vector<Bar> bars;
  bars.reserve(2 * n);

  const auto edges = detail::sorted_edges(d);

  // H0, with the tree edges remembered for clearing.
  std::vector<bool> tree_edge(edges.size(), false);
  {
    detail::DisjointSets sets(n);
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (sets.unite(edges[e].i, edges[e].j)) {
        tree_edge[e] = true;
        bars.push_back({0, 0.0, edges[e].value});
      }
    bars.push_back({0, 0.0, std::nullopt});
  }

  if (max_degree >= 1 && n >= 3) {
    // Rank every triangle in filtration order.
    const std::size_t triangle_count = n * (n - 1) * (n - 2) / 6;
    struct Triangle {
      double value;
      std::uint32_t i, j, k;
    };
    std::vector<Triangle> triangles;
    triangles.reserve(triangle_count);
    for (std::uint32_t k = 2; k < n; ++k)
      for (std::uint32_t j = 1; j < k; ++j)
        for (std::uint32_t i = 0; i < j; ++i)
          triangles.push_back({std::max({d(i, j), d(i, k), d(j, k)}), i, j, k});
    std::sort(triangles.begin(), triangles.end(), [](const Triangle& a, const Triangle& b) {
      if (a.value != b.value) return a.value < b.value;
      if (a.i != b.i) return a.i < b.i;
      if (a.j != b.j) return a.j < b.j;
      return a.k < b.k;
    });
    std::vector<std::uint32_t> rank_of(triangle_count);
    std::vector<double> triangle_value(triangle_count);
    for (std::uint32_t r = 0; r < triangle_count; ++r) {
      const auto& t = triangles[r];
      rank_of[detail::triangle_key(t.i, t.j, t.k)] = r;
      triangle_value[r] = t.value;
    }
    triangles.clear();
    triangles.shrink_to_fit();

    constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> pivot_owner(triangle_count, kNone);
    std::vector<std::vector<std::uint32_t>> reduced;
    reduced.reserve(edges.size());
    std::vector<std::uint32_t> column, scratch;

    // Coboundary columns, latest edge first; the pivot of a column is its
    // earliest coface.
    for (std::size_t e = edges.size(); e-- > 0;) {
      if (tree_edge[e]) continue;
      const auto [value, i, j] = edges[e];
      column.clear();
      for (std::uint32_t m = 0; m < n; ++m) {
        if (m == i || m == j) continue;
        std::uint32_t a = i, b = j, c = m;
        if (c < a) std::swap(a, c);
        if (c < b) std::swap(b, c);
        if (b < a) std::swap(a, b);
        column.push_back(rank_of[detail::triangle_key(a, b, c)]);
      }
      std::sort(column.begin(), column.end());

      while (!column.empty()) {
        const std::uint32_t pivot = column.front();
        const std::uint32_t owner = pivot_owner[pivot];
        if (owner == kNone) break;
        detail::add_column(column, reduced[owner], scratch);
      }
      if (column.empty())
        throw std::logic_error("rips_persistence: essential degree-1 class in a full 2-skeleton");

      const std::uint32_t pivot = column.front();
      pivot_owner[pivot] = static_cast<std::uint32_t>(reduced.size());
      reduced.push_back(column);
      const double death = triangle_value[pivot];
      if (death > value) bars.push_back({1, value, death});
    }
  }

  return PersistenceDiagram(std::move(bars), n);
}

/// Minimum spanning tree edge weights, ascending, via Prim's algorithm on the
/// dense matrix. Independent of the union-find path in rips_persistence.
inline std::vector<double> h0_deaths_via_mst(const DistanceMatrix& d) {
  validate_distance_matrix(d);
  const std::size_t n = d.size();
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> in_tree(n, false);
  std::vector<double> weights;
  weights.reserve(n - 1);
  best[0] = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
    in_tree[u] = true;
    if (step > 0) weights.push_back(best[u]);
    for (std::size_t v = 0; v < n; ++v)
      if (!in_tree[v] && d(u, v) < best[v]) best[v] = d(u, v);
  }
  std::sort(weights.begin(), weights.end());
  return weights;
}

/// Normalization of the H0 diagram norm. The default divides by N-1 where N
/// counts every degree-0 bar including the infinite one; kSum leaves the sum
/// unnormalized.
enum class H0Normalization { kMeanOverFinite, kSum };

struct MetricValue {
  double value = 0.0;
  bool degenerate = false;
};

// Distance from (birth, death) to its orthogonal projection on the diagonal,
// measured along the death axis: (death - birth) / 2.
inline double diagonal_offset(const Bar& bar) noexcept { return (*bar.death - bar.birth) / 2.0; }

inline MetricValue w1_h0(const PersistenceDiagram& diagram,
                         H0Normalization normalization = H0Normalization::kMeanOverFinite) {
  std::size_t total = 0;
  double sum = 0.0;
  for (const auto& b : diagram.bars()) {
    if (b.degree != 0) continue;
    ++total;
    if (!b.infinite()) sum += diagonal_offset(b);
  }
  if (total < 2) return {0.0, true};
  if (normalization == H0Normalization::kSum) return {sum, false};
  return {sum / static_cast<double>(total - 1), false};
}

inline double lt_max_h1(const PersistenceDiagram& diagram) {
  double best = 0.0;
  for (const auto& b : diagram.bars())
    if (b.degree == 1 && !b.infinite()) best = std::max(best, diagonal_offset(b));
  return best;
}

struct BettiNumbers {
  std::size_t b0 = 0;
  std::size_t b1 = 0;
  friend bool operator==(const BettiNumbers&, const BettiNumbers&) = default;
};

namespace detail {

// Rank over Z/2 of a matrix given as rows of packed bits.
inline std::size_t gf2_rank(std::vector<std::vector<std::uint64_t>> rows, std::size_t columns) {
  std::size_t rank = 0;
  for (std::size_t c = 0; c < columns && rank < rows.size(); ++c) {
    const std::size_t word = c / 64;
    const std::uint64_t bit = std::uint64_t{1} << (c % 64);
    std::size_t pivot = rank;
    while (pivot < rows.size() && !(rows[pivot][word] & bit)) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[rank], rows[pivot]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (r != rank && (rows[r][word] & bit))
        for (std::size_t w = 0; w < rows[r].size(); ++w) rows[r][w] ^= rows[rank][w];
    ++rank;
  }
  return rank;
}

}  // namespace detail

/// Betti numbers of the Rips complex at a fixed radius from explicit boundary
/// matrix ranks. Exponential in nothing, but cubic in the triangle count, so
/// limited to tiny clouds.
inline BettiNumbers betti_oracle(const DistanceMatrix& d, double radius) {
  constexpr std::size_t kMaxPoints = 10;
  validate_distance_matrix(d);
  const std::size_t n = d.size();
  if (n > kMaxPoints) throw InvalidArgument("betti_oracle is limited to 10 points");

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (d(i, j) <= radius) edges.emplace_back(i, j);
  auto edge_index = [&](std::size_t a, std::size_t b) -> std::size_t {
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges[e].first == a && edges[e].second == b) return e;
    return edges.size();
  };

  std::vector<std::array<std::size_t, 3>> triangles;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        if (d(i, j) <= radius && d(i, k) <= radius && d(j, k) <= radius) triangles.push_back({i, j, k});

  // d1: rows are vertices, columns edges.
  const std::size_t edge_words = (edges.size() + 63) / 64 + 1;
  std::vector<std::vector<std::uint64_t>> d1(n, std::vector<std::uint64_t>(edge_words, 0));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    d1[edges[e].first][e / 64] |= std::uint64_t{1} << (e % 64);
    d1[edges[e].second][e / 64] |= std::uint64_t{1} << (e % 64);
  }
  // d2: rows are edges, columns triangles.
  const std::size_t tri_words = (triangles.size() + 63) / 64 + 1;
  std::vector<std::vector<std::uint64_t>> d2(edges.size(), std::vector<std::uint64_t>(tri_words, 0));
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto [i, j, k] = triangles[t];
    for (const auto& [a, b] : {std::pair{i, j}, std::pair{i, k}, std::pair{j, k}})
      d2[edge_index(a, b)][t / 64] |= std::uint64_t{1} << (t % 64);
  }

  const std::size_t rank1 = detail::gf2_rank(std::move(d1), edges.size());
  const std::size_t rank2 = detail::gf2_rank(std::move(d2), triangles.size());
  return {n - rank1, edges.size() - rank1 - rank2};
}

}  // namespace semtopo
