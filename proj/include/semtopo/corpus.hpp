#pragma once

// Retrieval experiment between two chunk granularities, calibration by
// clustering, and a planted-topic synthetic corpus for offline runs.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semtopo/chunking.hpp"
#include "semtopo/embedder.hpp"
#include "semtopo/error.hpp"
#include "semtopo/index.hpp"
#include "semtopo/neighborhood.hpp"
#include "semtopo/parallel.hpp"
#include "semtopo/random.hpp"
#include "semtopo/simulation.hpp"

namespace semtopo {

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SyntheticCorpusConfig {
  std::size_t documents = 12;
  std::size_t topics = 8;
  std::size_t words_per_topic = 150;
  std::size_t shared_words = 60;
  double shared_fraction = 0.3;  // share of tokens drawn from the common pool
  std::size_t tokens_per_document = 3000;
  std::size_t section_min = 150;
  std::size_t section_max = 350;
  bool single_topic_documents = false;  // document i is entirely topic i % topics
  std::uint64_t seed = 0;

  void validate() const {
    if (documents == 0 || topics == 0 || words_per_topic == 0 || tokens_per_document == 0)
      throw InvalidArgument("synthetic corpus needs documents, topics, words and tokens");
    if (shared_fraction < 0.0 || shared_fraction >= 1.0) throw InvalidArgument("shared_fraction must be in [0, 1)");
    if (shared_fraction > 0.0 && shared_words == 0) throw InvalidArgument("shared_fraction > 0 needs shared_words");
    if (section_min == 0 || section_min > section_max) throw InvalidArgument("bad section length range");
  }
};

/// Documents made of consecutive single-topic sections. Topic t uses words
/// "t<t>w<j>"; every section also mixes in common words "c<j>".
inline std::vector<Document> synthetic_corpus(const SyntheticCorpusConfig& cfg) {
  cfg.validate();
  std::vector<Document> docs;
  for (std::size_t d = 0; d < cfg.documents; ++d) {
    auto rng = make_rng(derive_seed(cfg.seed, d));
    std::uniform_int_distribution<std::size_t> topic_dist(0, cfg.topics - 1);
    std::uniform_int_distribution<std::size_t> word_dist(0, cfg.words_per_topic - 1);
    std::uniform_int_distribution<std::size_t> shared_dist(0, cfg.shared_words == 0 ? 0 : cfg.shared_words - 1);
    std::uniform_int_distribution<std::size_t> section_dist(cfg.section_min, cfg.section_max);
    std::bernoulli_distribution shared(cfg.shared_fraction);

    std::string text;
    std::size_t written = 0;
    std::size_t topic = cfg.single_topic_documents ? d % cfg.topics : topic_dist(rng);
    while (written < cfg.tokens_per_document) {
      const std::size_t len = std::min(section_dist(rng), cfg.tokens_per_document - written);
      for (std::size_t i = 0; i < len; ++i, ++written) {
        if (shared(rng))
          text += "c" + std::to_string(shared_dist(rng));
        else
          text += "t" + std::to_string(topic) + "w" + std::to_string(word_dist(rng));
        text += (written + 1) % 16 == 0 ? '\n' : ' ';
      }
      if (!cfg.single_topic_documents && cfg.topics > 1) {
        std::size_t next = topic_dist(rng);
        while (next == topic) next = topic_dist(rng);
        topic = next;
      }
    }
    char name[32];
    std::snprintf(name, sizeof name, "doc%03zu", d);
    docs.push_back({name, std::move(text)});
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Retrieval experiment

enum class QueryStatus { kScored, kNotContained, kDuplicate };

inline const char* to_string(QueryStatus s) {
  switch (s) {
    case QueryStatus::kScored: return "scored";
    case QueryStatus::kNotContained: return "not_contained";
    case QueryStatus::kDuplicate: return "duplicate";
  }
  return "?";
}

struct QueryOutcome {
  ChunkRef query;
  ChunkRef top;
  QueryStatus status = QueryStatus::kScored;
  double max_epsilon = 0.0;
  std::vector<AmbiguityScore> profile;  // one entry per grid value when scored
};

struct ExperimentOptions {
  std::size_t k = kDefaultNeighborCount;
  std::vector<double> epsilon_grid{0.4};
  std::size_t workers = default_worker_count();
  H0Normalization normalization = H0Normalization::kMeanOverFinite;
};

struct DirectionResult {
  std::string label;
  std::vector<double> epsilon_grid;
  std::vector<QueryOutcome> queries;
  std::vector<EpsilonPoint> summary;  // over scored queries only

  std::size_t count(QueryStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(queries.begin(), queries.end(), [&](const QueryOutcome& q) { return q.status == s; }));
  }
};

inline std::vector<EpsilonPoint> summarize_profiles(const std::vector<std::vector<AmbiguityScore>>& profiles,
                                                    const std::vector<double>& grid) {
  std::vector<EpsilonPoint> out;
  if (profiles.empty()) return out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<AmbiguityScore> column;
    for (const auto& p : profiles) column.push_back(p[g]);
    out.push_back({grid[g], summarize_scores(column)});
  }
  return out;
}

/// Every query record searches the corpus index. Queries whose top hit is not
/// nested with them are dropped, as are queries with an exact duplicate.
inline DirectionResult retrieval_experiment(const std::vector<EmbeddingRecord>& queries, const VectorIndex& corpus,
                                            const ExperimentOptions& opt, std::string label = {}) {
  if (queries.empty()) throw InvalidArgument("retrieval experiment has no queries");
  if (opt.epsilon_grid.empty()) throw InvalidArgument("epsilon grid is empty");
  if (!std::is_sorted(opt.epsilon_grid.begin(), opt.epsilon_grid.end()))
    throw InvalidArgument("epsilon grid must be sorted ascending");
  for (const auto& q : queries)
    if (static_cast<std::size_t>(q.vector.size()) != corpus.dimension())
      throw DimensionMismatch("query dimension " + std::to_string(q.vector.size()) +
                              " does not match corpus dimension " + std::to_string(corpus.dimension()));
  DirectionResult result;
  result.label = std::move(label);
  result.epsilon_grid = opt.epsilon_grid;
  result.queries = parallel_map<QueryOutcome>(
      queries.size(),
      [&](std::size_t i) {
        QueryOutcome out;
        out.query = queries[i].chunk;
        const auto top = corpus.search(queries[i].vector, 1);
        out.top = corpus.record(top.front().index).chunk;
        if (!containment_check(out.query, out.top)) {
          out.status = QueryStatus::kNotContained;
          return out;
        }
        QueryNeighborhood nbhd;
        try {
          nbhd = build_neighborhood(queries[i].vector, corpus, std::min(opt.k, corpus.size()));
        } catch (const DegenerateInput&) {
          out.status = QueryStatus::kDuplicate;
          return out;
        }
        out.max_epsilon = nbhd.max_epsilon();
        out.profile = score_neighborhood(nbhd, opt.epsilon_grid, opt.normalization);
        return out;
      },
      opt.workers);
  std::vector<std::vector<AmbiguityScore>> scored;
  for (const auto& q : result.queries)
    if (q.status == QueryStatus::kScored) scored.push_back(q.profile);
  result.summary = summarize_profiles(scored, opt.epsilon_grid);
  return result;
}

inline DirectionResult retrieval_experiment(const ChunkSet& queries, const ChunkSet& corpus, Embedder& embedder,
                                            const ExperimentOptions& opt, std::string label = {}) {
  if (corpus.empty()) throw InvalidArgument("retrieval experiment corpus is empty");
  const VectorIndex index(embed_chunks(corpus, embedder));
  return retrieval_experiment(embed_chunks(queries, embedder), index, opt, std::move(label));
}

// ---------------------------------------------------------------------------
// Calibration

namespace detail {

/// k distinct items in draw order (partial Fisher-Yates).
inline std::vector<std::size_t> draw_distinct(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace detail

struct Clustering {
  std::vector<std::size_t> labels;
  std::vector<Vector> centroids;
  std::size_t iterations = 0;

  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> m(centroids.size());
    for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].push_back(i);
    return m;
  }
};

/// k-means on the unit sphere (cosine similarity), k-means++ seeding.
inline Clustering spherical_kmeans(std::span<const Vector> points, std::size_t k, std::uint64_t seed,
                                   std::size_t max_iterations = 100) {
  if (points.empty()) throw InvalidArgument("cannot cluster an empty set");
  if (k == 0 || k > points.size())
    throw InvalidArgument("cluster count " + std::to_string(k) + " must be in [1, " + std::to_string(points.size()) + "]");
  auto rng = make_rng(seed);
  const std::size_t n = points.size();
  const auto dist = [&](std::size_t i, const Vector& c) { return std::max(0.0, 1.0 - points[i].dot(c)); };

  Clustering c;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  c.centroids.push_back(points[first(rng)]);
  std::vector<double> nearest(n);
  while (c.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = dist(i, c.centroids.front());
      for (const auto& ctr : c.centroids) best = std::min(best, dist(i, ctr));
      nearest[i] = best * best;
      total += nearest[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (chosen = 0; chosen + 1 < n && r >= nearest[chosen]; ++chosen) r -= nearest[chosen];
    } else {
      chosen = first(rng);
    }
    c.centroids.push_back(points[chosen]);
  }

  c.labels.assign(n, 0);
  for (c.iterations = 1; c.iterations <= max_iterations; ++c.iterations) {
    bool changed = c.iterations == 1;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_sim = points[i].dot(c.centroids[0]);
      for (std::size_t j = 1; j < k; ++j) {
        const double s = points[i].dot(c.centroids[j]);
        if (s > best_sim) best_sim = s, best = j;
      }
      if (c.labels[i] != best) changed = true;
      c.labels[i] = best;
    }
    if (!changed) break;
    std::vector<Vector> sums(k, Vector::Zero(points.front().size()));
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[c.labels[i]] += points[i];
      ++sizes[c.labels[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] > 0 && sums[j].norm() > 0.0) {
        c.centroids[j] = sums[j].normalized();
        continue;
      }
      // Empty cluster: take the point worst served by its centroid.
      std::size_t worst = 0;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = dist(i, c.centroids[c.labels[i]]);
        if (d > worst_d) worst_d = d, worst = i;
      }
      c.centroids[j] = points[worst];
    }
  }
  c.iterations = std::min(c.iterations, max_iterations);
  return c;
}

struct CalibrationOptions {
  std::size_t cluster_count = 3;
  std::size_t queries_per_group = 50;
  std::size_t chunks_per_query = 3;
  std::size_t k = kDefaultNeighborCount;
  std::vector<double> epsilon_grid{0.4};
  std::uint64_t seed = 0;
  std::size_t max_iterations = 100;
  std::size_t workers = default_worker_count();
};

struct CalibrationGroup {
  std::string name;
  std::vector<std::vector<AmbiguityScore>> profiles;
  std::size_t skipped = 0;  // exact duplicates
  std::vector<EpsilonPoint> summary;
};

struct SyntheticQuery {
  std::vector<std::size_t> constituents;  // corpus chunk indices
  std::string text;
};

struct CalibrationBaseline {
  Clustering clustering;
  std::vector<SyntheticQuery> multi_factual_queries;
  std::vector<SyntheticQuery> single_cluster_queries;
  // Synthetic queries searching the corpus, then corpus chunks searching the
  // synthetic queries.
  CalibrationGroup multi_factual;
  CalibrationGroup single_cluster;
  CalibrationGroup reverse_multi_factual;
  CalibrationGroup reverse_single_cluster;

  std::vector<const CalibrationGroup*> groups() const {
    return {&multi_factual, &single_cluster, &reverse_multi_factual, &reverse_single_cluster};
  }
};

/// Query q of either kind draws from its own stream: first the clusters, then
/// chunks. Multi-factual takes one chunk per distinct cluster; single-cluster
/// takes all chunks from the first cluster drawn. With one cluster the two
/// draws are identical.
inline std::pair<SyntheticQuery, SyntheticQuery> synthesize_queries(const ChunkSet& corpus,
                                                                    const std::vector<std::vector<std::size_t>>& members,
                                                                    std::size_t width, std::uint64_t seed) {
  std::vector<std::size_t> clusters;
  for (std::size_t j = 0; j < members.size(); ++j)
    if (!members[j].empty()) clusters.push_back(j);
  width = std::min(width, clusters.size());
  const auto assemble = [&](const std::vector<std::size_t>& chunks) {
    SyntheticQuery q;
    q.constituents = chunks;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      if (i) q.text += '\n';
      q.text += corpus.chunks[chunks[i]].text;
    }
    return q;
  };

  auto rng_multi = make_rng(seed);
  std::vector<std::size_t> multi;
  for (const auto c : detail::draw_distinct(clusters, width, rng_multi))
    multi.push_back(detail::draw_distinct(members[c], 1, rng_multi).front());

  auto rng_single = make_rng(seed);
  const auto c0 = detail::draw_distinct(clusters, width, rng_single).front();
  const auto single = detail::draw_distinct(members[c0], width, rng_single);
  return {assemble(multi), assemble(single)};
}

namespace detail {

inline CalibrationGroup score_group(std::string name, const std::vector<Vector>& queries,
                                    const std::vector<std::vector<std::size_t>>& exclude, const VectorIndex& index,
                                    const CalibrationOptions& opt) {
  CalibrationGroup g;
  g.name = std::move(name);
  const std::size_t k = std::min(opt.k, index.size());
  auto profiles = parallel_map<std::vector<AmbiguityScore>>(
      queries.size(),
      [&](std::size_t i) -> std::vector<AmbiguityScore> {
        const auto& ex = exclude.empty() ? std::vector<std::size_t>{} : exclude[i];
        const auto skip = [&](std::size_t r) { return std::find(ex.begin(), ex.end(), r) != ex.end(); };
        try {
          return score_neighborhood(build_neighborhood(queries[i], index, k, skip), opt.epsilon_grid);
        } catch (const DegenerateInput&) {
          return {};
        }
      },
      opt.workers);
  for (auto& p : profiles) {
    if (p.empty())
      ++g.skipped;
    else
      g.profiles.push_back(std::move(p));
  }
  g.summary = summarize_profiles(g.profiles, opt.epsilon_grid);
  return g;
}

}  // namespace detail

/// `embeddings` are the corpus records in chunk order.
inline CalibrationBaseline calibrate(const ChunkSet& corpus, const std::vector<EmbeddingRecord>& embeddings,
                                     Embedder& embedder, const CalibrationOptions& opt) {
  if (corpus.empty()) throw InvalidArgument("calibration corpus is empty");
  if (embeddings.size() != corpus.size()) throw InvalidArgument("need one embedding per corpus chunk");
  if (opt.cluster_count == 0 || opt.cluster_count > corpus.size())
    throw InvalidArgument("cluster count " + std::to_string(opt.cluster_count) + " exceeds corpus size " +
                          std::to_string(corpus.size()));
  if (opt.queries_per_group < 2) throw InvalidArgument("calibration needs at least 2 queries per group");
  if (opt.chunks_per_query == 0) throw InvalidArgument("chunks_per_query must be at least 1");
  if (opt.epsilon_grid.empty() || !std::is_sorted(opt.epsilon_grid.begin(), opt.epsilon_grid.end()))
    throw InvalidArgument("epsilon grid must be non-empty and ascending");

  CalibrationBaseline out;
  std::vector<Vector> vectors;
  for (const auto& r : embeddings) vectors.push_back(r.vector);
  out.clustering = spherical_kmeans(vectors, opt.cluster_count, derive_seed(opt.seed, 0), opt.max_iterations);
  const auto members = out.clustering.members();

  const std::uint64_t query_stream = derive_seed(opt.seed, 1);
  for (std::size_t q = 0; q < opt.queries_per_group; ++q) {
    auto [multi, single] = synthesize_queries(corpus, members, opt.chunks_per_query, derive_seed(query_stream, q));
    out.multi_factual_queries.push_back(std::move(multi));
    out.single_cluster_queries.push_back(std::move(single));
  }

  const auto embed_queries = [&](const std::vector<SyntheticQuery>& qs) {
    std::vector<std::string> texts;
    for (const auto& q : qs) texts.push_back(q.text);
    auto vs = embedder.embed(texts);
    for (auto& v : vs) {
      if (static_cast<std::size_t>(v.size()) != static_cast<std::size_t>(vectors.front().size()))
        throw DimensionMismatch("query embeddings do not match corpus dimension");
      v = normalize(v);
    }
    return vs;
  };
  const auto multi_vecs = embed_queries(out.multi_factual_queries);
  const auto single_vecs = embed_queries(out.single_cluster_queries);

  const VectorIndex corpus_index(embeddings);
  const auto constituents = [](const std::vector<SyntheticQuery>& qs) {
    std::vector<std::vector<std::size_t>> c;
    for (const auto& q : qs) c.push_back(q.constituents);
    return c;
  };
  out.multi_factual = detail::score_group("multi_factual", multi_vecs, constituents(out.multi_factual_queries),
                                          corpus_index, opt);
  out.single_cluster = detail::score_group("single_cluster", single_vecs, constituents(out.single_cluster_queries),
                                           corpus_index, opt);

  // Reverse: a seeded sample of corpus chunks searches each synthetic set.
  auto rng = make_rng(derive_seed(opt.seed, 2));
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<Vector> reverse_queries;
  for (const auto i : detail::draw_distinct(all, opt.queries_per_group, rng)) reverse_queries.push_back(vectors[i]);
  out.reverse_multi_factual =
      detail::score_group("reverse_multi_factual", reverse_queries, {}, VectorIndex::from_vectors(multi_vecs), opt);
  out.reverse_single_cluster =
      detail::score_group("reverse_single_cluster", reverse_queries, {}, VectorIndex::from_vectors(single_vecs), opt);
  return out;
}

inline CalibrationBaseline calibrate(const ChunkSet& corpus, Embedder& embedder, const CalibrationOptions& opt) {
  if (corpus.empty()) throw InvalidArgument("calibration corpus is empty");
  return calibrate(corpus, embed_chunks(corpus, embedder), embedder, opt);
}

}  // namespace semtopo
