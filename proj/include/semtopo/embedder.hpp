#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "semtopo/chunking.hpp"
#include "semtopo/error.hpp"
#include "semtopo/geometry.hpp"
#include "semtopo/index.hpp"

namespace semtopo {

/// Batch text -> vectors. Implementations may return unnormalized vectors;
/// embed_chunks normalizes.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string model_tag() const = 0;
};

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) {
  std::uint64_t h = basis;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Lowercased, with leading/trailing punctuation stripped. A token made only
/// of punctuation is kept as-is.
inline std::string normalize_token(std::string_view raw) {
  const auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0, e = raw.size();
  while (b < e && !alnum(raw[b])) ++b;
  while (e > b && !alnum(raw[e - 1])) --e;
  if (b == e) b = 0, e = raw.size();
  std::string out(raw.substr(b, e - b));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Signed feature hashing of whitespace tokens. Offline and deterministic.
class MockEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDimension = 384;

  explicit MockEmbedder(std::size_t dimension = kDefaultDimension, std::uint64_t seed = 0)
      : dimension_(dimension), seed_(seed) {
    if (dimension < 2) throw InvalidArgument("mock embedder dimension must be at least 2");
  }

  std::size_t dimension() const noexcept { return dimension_; }

  Vector embed_one(std::string_view text) const {
    const auto tokens = whitespace_tokenize(text);
    if (tokens.empty()) throw DegenerateInput("cannot embed empty text");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dimension_));
    const std::uint64_t basis = fnv1a64(std::to_string(seed_));
    for (const auto& t : tokens) {
      const auto h = fnv1a64(normalize_token(text.substr(t.begin, t.end - t.begin)), basis);
      const auto slot = static_cast<Eigen::Index>((h & 0x7fffffffffffffffULL) % dimension_);
      v(slot) += (h >> 63) ? -1.0 : 1.0;
    }
    return normalize(v);
  }

  std::vector<Vector> embed(const std::vector<std::string>& texts) override {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

  std::string model_tag() const override {
    return "mock-hash-d" + std::to_string(dimension_) + "-s" + std::to_string(seed_);
  }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// One unit-norm record per chunk, in chunk order.
inline std::vector<EmbeddingRecord> embed_chunks(const ChunkSet& chunks, Embedder& embedder,
                                                 std::size_t batch_size = 64) {
  if (batch_size == 0) throw InvalidArgument("batch size must be at least 1");
  for (const auto& c : chunks.chunks)
    if (whitespace_tokenize(c.text).empty())
      throw DegenerateInput("chunk " + c.doc_id + "#" + std::to_string(c.chunk_id) + " has empty text");
  std::vector<EmbeddingRecord> records;
  records.reserve(chunks.size());
  const std::string tag = embedder.model_tag();
  std::size_t dim = 0;
  for (std::size_t start = 0; start < chunks.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, chunks.size());
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(chunks.chunks[i].text);
    const auto vectors = embedder.embed(texts);
    if (vectors.size() != texts.size())
      throw IoError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                    std::to_string(texts.size()) + " texts");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const auto d = static_cast<std::size_t>(vectors[i].size());
      if (dim == 0) dim = d;
      if (d != dim)
        throw DimensionMismatch("embedding dimension drifted from " + std::to_string(dim) + " to " +
                                std::to_string(d));
      records.push_back(make_record(chunks.chunks[start + i].ref(), vectors[i], tag));
    }
  }
  return records;
}

}  // namespace semtopo
