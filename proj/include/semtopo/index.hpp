#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "semtopo/error.hpp"
#include "semtopo/geometry.hpp"

namespace semtopo {

// Identifies a chunk by document and token span; enough to run the
// containment check without the text.
struct ChunkRef {
  std::string doc_id;
  std::size_t chunk_id = 0;
  std::size_t token_start = 0;
  std::size_t token_end = 0;

  friend bool operator==(const ChunkRef&, const ChunkRef&) = default;
};

struct EmbeddingRecord {
  ChunkRef chunk;
  Vector vector;  // unit norm
  std::string model_tag;
};

inline EmbeddingRecord make_record(ChunkRef chunk, const Vector& raw, std::string model_tag) {
  return {std::move(chunk), normalize(raw), std::move(model_tag)};
}

struct SearchHit {
  std::size_t index = 0;
  double similarity = 0.0;
};

/// Exact brute-force cosine search over unit-normalized embeddings.
/// Immutable once built; safe to query from many threads.
class VectorIndex {
 public:
  explicit VectorIndex(std::vector<EmbeddingRecord> records) : records_(std::move(records)) {
    if (records_.empty()) throw InvalidArgument("cannot build an index from zero records");
    const auto dim = records_.front().vector.size();
    matrix_.resize(static_cast<Eigen::Index>(records_.size()), dim);
    for (std::size_t r = 0; r < records_.size(); ++r) {
      if (records_[r].vector.size() != dim)
        throw DimensionMismatch("index records have mixed dimensions (" + std::to_string(dim) + " vs " +
                                std::to_string(records_[r].vector.size()) + ")");
      records_[r].vector = normalize(records_[r].vector);
      matrix_.row(static_cast<Eigen::Index>(r)) = records_[r].vector.transpose();
    }
  }

  static VectorIndex from_vectors(std::span<const Vector> vectors, const std::string& model_tag = "raw") {
    std::vector<EmbeddingRecord> records;
    records.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
      records.push_back({ChunkRef{"", i, i, i + 1}, vectors[i], model_tag});
    return VectorIndex(std::move(records));
  }

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(matrix_.cols()); }
  const EmbeddingRecord& record(std::size_t i) const { return records_.at(i); }
  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }

  /// Top-k records by descending cosine similarity; ties go to the lower
  /// record index. `skip` removes records from consideration.
  std::vector<SearchHit> search(const Vector& query, std::size_t k,
                                const std::function<bool(std::size_t)>& skip = {}) const {
    if (static_cast<std::size_t>(query.size()) != dimension())
      throw DimensionMismatch("query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                              std::to_string(dimension()));
    const Vector q = normalize(query);
    const Vector sims = matrix_ * q;
    std::vector<std::size_t> order;
    order.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
      if (!skip || !skip(i)) order.push_back(i);
    const std::size_t take = std::min(k, order.size());
    auto better = [&](std::size_t a, std::size_t b) {
      const double sa = sims(static_cast<Eigen::Index>(a)), sb = sims(static_cast<Eigen::Index>(b));
      return sa != sb ? sa > sb : a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t r = 0; r < take; ++r) hits.push_back({order[r], sims(static_cast<Eigen::Index>(order[r]))});
    return hits;
  }

 private:
  std::vector<EmbeddingRecord> records_;
  Matrix matrix_;
};

inline VectorIndex build_index(std::vector<EmbeddingRecord> records) { return VectorIndex(std::move(records)); }

}  // namespace semtopo
