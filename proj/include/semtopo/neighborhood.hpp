#pragma once

// Query neighborhoods scaled relative to the nearest neighbor, and the
// persistence-based ambiguity scores computed on them.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "semtopo/error.hpp"
#include "semtopo/geometry.hpp"
#include "semtopo/index.hpp"
#include "semtopo/persistence.hpp"

namespace semtopo {

inline constexpr std::size_t kDefaultNeighborCount = 50;

/// {0.2, 0.4, ..., 3.0}
inline std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 15; ++i) grid.push_back(i / 5.0);
  return grid;
}

struct Neighbor {
  std::size_t index = 0;  // position in the VectorIndex
  Vector vector;
  double similarity = 0.0;
  double distance = 0.0;  // |v_i - v_q|
  double epsilon = 0.0;   // distance / nearest distance - 1
};

struct QueryNeighborhood {
  Vector query;  // unit-normalized
  std::vector<Neighbor> neighbors;
  bool truncated = false;  // fewer records than requested
  std::vector<std::string> warnings;

  double max_epsilon() const { return neighbors.empty() ? 0.0 : neighbors.back().epsilon; }
};

struct AmbiguityScore {
  double epsilon = 0.0;
  double w1_h0 = 0.0;
  double lt_max_h1 = 0.0;
  std::size_t points_used = 0;
  bool degenerate = false;
};

inline constexpr double kZeroDistance = 1e-12;

inline QueryNeighborhood build_neighborhood(const Vector& query, const VectorIndex& index, std::size_t k,
                                            const std::function<bool(std::size_t)>& skip = {}) {
  if (k < 2) throw InvalidArgument("neighborhood size k must be at least 2");
  if (static_cast<std::size_t>(query.size()) != index.dimension())
    throw DimensionMismatch("query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                            std::to_string(index.dimension()));
  QueryNeighborhood nbhd;
  nbhd.query = normalize(query);
  const auto hits = index.search(nbhd.query, k, skip);
  if (hits.empty()) throw InvalidArgument("index has no searchable records");
  if (hits.size() < k) {
    nbhd.truncated = true;
    nbhd.warnings.push_back("requested k=" + std::to_string(k) + " but only " + std::to_string(hits.size()) +
                            " records are available; neighborhood truncated");
  }
  nbhd.neighbors.reserve(hits.size());
  for (const auto& hit : hits) {
    Neighbor nb;
    nb.index = hit.index;
    nb.vector = index.record(hit.index).vector;
    nb.similarity = hit.similarity;
    nb.distance = (nb.vector - nbhd.query).norm();
    nbhd.neighbors.push_back(std::move(nb));
  }
  const double nearest = nbhd.neighbors.front().distance;
  if (nearest <= kZeroDistance)
    throw DegenerateInput(
        "nearest neighbor coincides with the query (zero distance), so the relative scale is undefined; "
        "deduplicate the corpus or exclude the query's own record");
  for (auto& nb : nbhd.neighbors) nb.epsilon = nb.distance / nearest - 1.0;
  return nbhd;
}

/// Ranks of neighbors whose relative scale is within `epsilon`. The nearest
/// neighbor is always included.
inline std::vector<std::size_t> select_by_scale(const QueryNeighborhood& nbhd, double epsilon) {
  std::vector<std::size_t> ranks;
  for (std::size_t r = 0; r < nbhd.neighbors.size(); ++r)
    if (r == 0 || nbhd.neighbors[r].epsilon <= epsilon) ranks.push_back(r);
  return ranks;
}

/// Unit directions from the query to each selected neighbor. The query itself
/// is not part of the cloud.
inline std::vector<Vector> difference_cloud(const QueryNeighborhood& nbhd, std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InvalidArgument("difference_cloud needs a non-empty subset");
  std::vector<Vector> cloud;
  cloud.reserve(ranks.size());
  for (const auto r : ranks) {
    const Vector delta = nbhd.neighbors.at(r).vector - nbhd.query;
    if (delta.norm() <= kZeroDistance) throw DegenerateInput("neighbor coincides with the query");
    cloud.push_back(delta / delta.norm());
  }
  return cloud;
}

/// Both diagram metrics for an arbitrary point cloud.
inline AmbiguityScore score_cloud(std::span<const Vector> cloud, double epsilon = 0.0,
                                  H0Normalization normalization = H0Normalization::kMeanOverFinite) {
  AmbiguityScore s;
  s.epsilon = epsilon;
  s.points_used = cloud.size();
  if (cloud.size() < 2) {
    s.degenerate = true;
    return s;
  }
  const auto diagram = rips_persistence(pairwise_distances(cloud));
  const auto w1 = w1_h0(diagram, normalization);
  s.w1_h0 = w1.value;
  s.degenerate = w1.degenerate;
  s.lt_max_h1 = lt_max_h1(diagram);
  return s;
}

/// Scores a prepared neighborhood at each scale in an ascending grid.
inline std::vector<AmbiguityScore> score_neighborhood(const QueryNeighborhood& nbhd,
                                                      std::span<const double> epsilon_grid,
                                                      H0Normalization normalization = H0Normalization::kMeanOverFinite) {
  if (!std::is_sorted(epsilon_grid.begin(), epsilon_grid.end()))
    throw InvalidArgument("epsilon grid must be sorted ascending");
  std::vector<AmbiguityScore> out;
  out.reserve(epsilon_grid.size());
  for (const double eps : epsilon_grid) {
    if (eps < 0.0) throw InvalidArgument("epsilon must be non-negative");
    const auto ranks = select_by_scale(nbhd, eps);
    // Consecutive scales often select the same neighbors.
    if (!out.empty() && out.back().points_used == ranks.size()) {
      AmbiguityScore s = out.back();
      s.epsilon = eps;
      out.push_back(s);
      continue;
    }
    const auto cloud = difference_cloud(nbhd, ranks);
    out.push_back(score_cloud(cloud, eps, normalization));
  }
  return out;
}

inline AmbiguityScore ambiguity_score(const Vector& query, const VectorIndex& index, std::size_t k, double epsilon,
                                      H0Normalization normalization = H0Normalization::kMeanOverFinite) {
  const auto nbhd = build_neighborhood(query, index, k);
  const double grid[] = {epsilon};
  return score_neighborhood(nbhd, grid, normalization).front();
}

inline std::vector<AmbiguityScore> ambiguity_profile(const Vector& query, const VectorIndex& index, std::size_t k,
                                                     std::span<const double> epsilon_grid,
                                                     H0Normalization normalization = H0Normalization::kMeanOverFinite) {
  const auto nbhd = build_neighborhood(query, index, k);
  return score_neighborhood(nbhd, epsilon_grid, normalization);
}

}  // namespace semtopo
