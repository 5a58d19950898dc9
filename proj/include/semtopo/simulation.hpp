#pragma once

// Synthetic queries and corpora built from a vocabulary of topic vectors.
// A datapoint is the normalized sum of a few topic vectors plus Gaussian
// noise. Parents carry n_parent topics, children a subset of n_child of them.
//
//   scenario 1  parent query, corpus of children from its own lineage
//   scenario 2  child query, corpus of parents (own lineage and unrelated)
//   scenario 3  parent query, corpus mixing own-lineage and foreign children

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "semtopo/error.hpp"
#include "semtopo/geometry.hpp"
#include "semtopo/index.hpp"
#include "semtopo/neighborhood.hpp"
#include "semtopo/parallel.hpp"
#include "semtopo/random.hpp"
#include "semtopo/stats.hpp"

namespace semtopo {

enum class TopicStyle {
  kBinaryMask,   // median-thresholded mask of each orthonormal column
  kOrthonormal,  // the raw orthonormal columns
};

struct TopicVocabulary {
  std::size_t dimension = 0;
  std::vector<Vector> topics;

  std::size_t size() const noexcept { return topics.size(); }
};

namespace detail {

// Median with the midpoint convention for even lengths.
inline double median(const Vector& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

// k distinct entries of `pool`, partial Fisher-Yates.
inline std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  if (k > pool.size())
    throw InvalidArgument("cannot sample " + std::to_string(k) + " topics from a pool of " +
                          std::to_string(pool.size()));
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline std::vector<std::size_t> all_topics(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace detail

inline TopicVocabulary generate_vocabulary(std::size_t topic_count, std::size_t dimension, std::uint64_t seed,
                                           TopicStyle style = TopicStyle::kBinaryMask) {
  const auto basis = orthonormal_columns(dimension, topic_count, seed);
  TopicVocabulary vocab;
  vocab.dimension = dimension;
  vocab.topics.reserve(topic_count);
  for (std::size_t i = 0; i < topic_count; ++i) {
    Vector column = basis.column(i);
    if (style == TopicStyle::kOrthonormal) {
      vocab.topics.push_back(std::move(column));
      continue;
    }
    const double threshold = detail::median(column);
    Vector mask = (column.array() >= threshold).cast<double>().matrix();
    vocab.topics.push_back(normalize(mask));
  }
  return vocab;
}

struct Datapoints {
  std::vector<Vector> points;
  std::vector<std::vector<std::size_t>> topic_sets;
};

/// Each point: normalize(sum of k sampled topics + N(0, sigma) per coordinate).
/// Topics are drawn without replacement from `parent_topics`, or from the
/// whole vocabulary when it is empty.
inline Datapoints generate_datapoints(std::size_t k_topics, std::span<const std::size_t> parent_topics,
                                      const TopicVocabulary& vocab, std::size_t n_points, double sigma_noise,
                                      Rng& rng) {
  if (sigma_noise < 0.0) throw InvalidArgument("noise level must be non-negative");
  std::vector<std::size_t> pool = parent_topics.empty()
                                      ? detail::all_topics(vocab.size())
                                      : std::vector<std::size_t>(parent_topics.begin(), parent_topics.end());
  for (auto t : pool)
    if (t >= vocab.size()) throw InvalidArgument("topic index out of range");
  if (k_topics == 0) throw InvalidArgument("a datapoint needs at least one topic");
  if (k_topics > pool.size())
    throw InvalidArgument("k_topics (" + std::to_string(k_topics) + ") exceeds the topic pool (" +
                          std::to_string(pool.size()) + ")");
  std::normal_distribution<double> noise(0.0, sigma_noise > 0.0 ? sigma_noise : 1.0);
  Datapoints out;
  out.points.reserve(n_points);
  out.topic_sets.reserve(n_points);
  for (std::size_t j = 0; j < n_points; ++j) {
    auto chosen = detail::sample_without_replacement(pool, k_topics, rng);
    Vector x = Vector::Zero(static_cast<Eigen::Index>(vocab.dimension));
    for (auto t : chosen) x += vocab.topics[t];
    if (sigma_noise > 0.0)
      for (Eigen::Index c = 0; c < x.size(); ++c) x(c) += noise(rng);
    out.points.push_back(normalize(x));
    out.topic_sets.push_back(std::move(chosen));
  }
  return out;
}

struct ScenarioConfig {
  std::size_t dimension = 256;
  std::size_t topic_count = 64;
  std::size_t n_parent = 32;
  std::size_t n_child = 0;  // 0 selects n_parent / 2
  double sigma_noise = 0.1;
  std::size_t corpus_size = 50;
  double epsilon = 0.4;
  std::uint64_t seed = 0;
  TopicStyle topic_style = TopicStyle::kBinaryMask;
  // Scenario 2: share of corpus parents that belong to the query's lineage.
  double lineage_fraction = 0.5;
  // Scenario 3: share of corpus children from the query's own lineage, and
  // how many foreign lineages supply the rest.
  double mix_ratio = 0.5;
  std::size_t foreign_lineages = 4;

  std::size_t child_topics() const noexcept { return n_child == 0 ? n_parent / 2 : n_child; }

  void validate() const {
    const std::size_t nc = child_topics();
    if (!(nc >= 1 && nc < n_parent)) throw InvalidArgument("need 1 <= n_child < n_parent");
    if (n_parent > topic_count) throw InvalidArgument("n_parent exceeds the topic count");
    if (topic_count > dimension) throw InvalidArgument("topic count exceeds the embedding dimension");
    if (corpus_size < 2) throw InvalidArgument("corpus_size must be at least 2");
    if (!(sigma_noise >= 0.0)) throw InvalidArgument("sigma_noise must be non-negative");
    if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be non-negative");
    if (!(lineage_fraction >= 0.0 && lineage_fraction <= 1.0))
      throw InvalidArgument("lineage_fraction must be in [0, 1]");
    if (!(mix_ratio >= 0.0 && mix_ratio <= 1.0)) throw InvalidArgument("mix_ratio must be in [0, 1]");
    if (foreign_lineages == 0) throw InvalidArgument("foreign_lineages must be positive");
  }
};

struct SimulatedPair {
  int scenario = 1;
  TopicVocabulary vocabulary;
  Vector query;
  std::vector<Vector> corpus;
  std::vector<std::size_t> query_topics;
  std::vector<std::vector<std::size_t>> corpus_topics;
};

inline void validate_scenario(int scenario) {
  if (scenario < 1 || scenario > 3)
    throw InvalidArgument("scenario must be 1, 2 or 3 (got " + std::to_string(scenario) + ")");
}

inline SimulatedPair sample_scenario(const ScenarioConfig& config, int scenario, std::uint64_t seed) {
  validate_scenario(scenario);
  config.validate();
  auto rng = make_rng(seed);
  SimulatedPair pair;
  pair.scenario = scenario;
  pair.vocabulary = generate_vocabulary(config.topic_count, config.dimension, rng(), config.topic_style);
  const auto& vocab = pair.vocabulary;
  const std::size_t n_child = config.child_topics();
  const std::size_t corpus_size = config.corpus_size;
  const double sigma = config.sigma_noise;

  const auto lineage = detail::sample_without_replacement(detail::all_topics(vocab.size()), config.n_parent, rng);

  auto append = [&pair](Datapoints d) {
    for (auto& p : d.points) pair.corpus.push_back(std::move(p));
    for (auto& t : d.topic_sets) pair.corpus_topics.push_back(std::move(t));
  };

  const std::size_t query_topics = scenario == 2 ? n_child : config.n_parent;
  auto query = generate_datapoints(query_topics, lineage, vocab, 1, sigma, rng);
  pair.query = std::move(query.points.front());
  pair.query_topics = std::move(query.topic_sets.front());

  switch (scenario) {
    case 1:
      append(generate_datapoints(n_child, lineage, vocab, corpus_size, sigma, rng));
      break;
    case 2: {
      const auto own = static_cast<std::size_t>(std::lround(config.lineage_fraction * static_cast<double>(corpus_size)));
      if (own > 0) append(generate_datapoints(config.n_parent, lineage, vocab, own, sigma, rng));
      if (corpus_size > own)
        append(generate_datapoints(config.n_parent, {}, vocab, corpus_size - own, sigma, rng));
      break;
    }
    case 3: {
      const auto own = static_cast<std::size_t>(std::lround(config.mix_ratio * static_cast<double>(corpus_size)));
      if (own > 0) append(generate_datapoints(n_child, lineage, vocab, own, sigma, rng));
      if (corpus_size > own) {
        std::vector<std::vector<std::size_t>> foreign;
        for (std::size_t l = 0; l < config.foreign_lineages; ++l)
          foreign.push_back(detail::sample_without_replacement(detail::all_topics(vocab.size()), config.n_parent, rng));
        for (std::size_t j = own; j < corpus_size; ++j)
          append(generate_datapoints(n_child, foreign[(j - own) % foreign.size()], vocab, 1, sigma, rng));
      }
      break;
    }
  }
  return pair;
}

struct MetricSummaries {
  Summary w1_h0;
  Summary lt_max_h1;
  Summary points_used;
};

inline MetricSummaries summarize_scores(std::span<const AmbiguityScore> scores) {
  std::vector<double> w1, lt, used;
  for (const auto& s : scores) {
    w1.push_back(s.w1_h0);
    lt.push_back(s.lt_max_h1);
    used.push_back(static_cast<double>(s.points_used));
  }
  return {summarize(w1), summarize(lt), summarize(used)};
}

struct SimulationRun {
  int scenario = 1;
  std::vector<AmbiguityScore> trials;
  MetricSummaries summary;
};

inline std::uint64_t trial_seed(std::uint64_t master, int scenario, std::size_t trial) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(scenario)), trial);
}

inline AmbiguityScore score_pair(const SimulatedPair& pair, const ScenarioConfig& config) {
  const auto index = VectorIndex::from_vectors(pair.corpus);
  return ambiguity_score(pair.query, index, config.corpus_size, config.epsilon);
}

inline SimulationRun run_simulation(const ScenarioConfig& config, int scenario, std::size_t n_trials,
                                    std::size_t workers = default_worker_count()) {
  validate_scenario(scenario);
  config.validate();
  if (n_trials == 0) throw InvalidArgument("n_trials must be at least 1");
  SimulationRun run;
  run.scenario = scenario;
  run.trials = parallel_map<AmbiguityScore>(
      n_trials,
      [&](std::size_t t) {
        const auto pair = sample_scenario(config, scenario, trial_seed(config.seed, scenario, t));
        return score_pair(pair, config);
      },
      workers);
  run.summary = summarize_scores(run.trials);
  return run;
}

struct EpsilonPoint {
  double epsilon = 0.0;
  MetricSummaries summary;
};

inline std::vector<EpsilonPoint> epsilon_sweep(const ScenarioConfig& config, int scenario,
                                               std::span<const double> epsilon_grid, std::size_t n_trials,
                                               std::size_t workers = default_worker_count()) {
  validate_scenario(scenario);
  config.validate();
  if (epsilon_grid.empty()) throw InvalidArgument("epsilon grid is empty");
  if (!std::is_sorted(epsilon_grid.begin(), epsilon_grid.end()))
    throw InvalidArgument("epsilon grid must be sorted ascending");
  if (n_trials == 0) throw InvalidArgument("n_trials must be at least 1");
  const auto profiles = parallel_map<std::vector<AmbiguityScore>>(
      n_trials,
      [&](std::size_t t) {
        const auto pair = sample_scenario(config, scenario, trial_seed(config.seed, scenario, t));
        const auto index = VectorIndex::from_vectors(pair.corpus);
        return ambiguity_profile(pair.query, index, config.corpus_size, epsilon_grid);
      },
      workers);
  std::vector<EpsilonPoint> out;
  for (std::size_t g = 0; g < epsilon_grid.size(); ++g) {
    std::vector<AmbiguityScore> column;
    for (const auto& p : profiles) column.push_back(p[g]);
    out.push_back({epsilon_grid[g], summarize_scores(column)});
  }
  return out;
}

struct ProjectionPoint {
  std::size_t target_dimension = 0;  // 0 for the unprojected baseline
  std::vector<AmbiguityScore> trials;
  MetricSummaries summary;
};

/// Baseline plus one entry per target dimension. Every dimension sees the same
/// simulated pairs; query and corpus share one projection per trial.
inline std::vector<ProjectionPoint> projection_robustness(const ScenarioConfig& config, int scenario,
                                                          std::span<const std::size_t> target_dims,
                                                          std::size_t n_trials,
                                                          std::size_t workers = default_worker_count()) {
  validate_scenario(scenario);
  config.validate();
  if (n_trials == 0) throw InvalidArgument("n_trials must be at least 1");
  for (auto d : target_dims)
    if (d >= config.dimension || d < 2)
      throw InvalidArgument("projection target " + std::to_string(d) + " must be in [2, " +
                            std::to_string(config.dimension) + ")");
  std::vector<std::size_t> dims{0};
  dims.insert(dims.end(), target_dims.begin(), target_dims.end());

  const auto per_trial = parallel_map<std::vector<AmbiguityScore>>(
      n_trials,
      [&](std::size_t t) {
        const auto seed = trial_seed(config.seed, scenario, t);
        const auto pair = sample_scenario(config, scenario, seed);
        std::vector<AmbiguityScore> row;
        for (auto d : dims) {
          if (d == 0) {
            row.push_back(score_pair(pair, config));
            continue;
          }
          const RandomProjection project(config.dimension, d, derive_seed(seed, d));
          SimulatedPair projected;
          projected.query = project(pair.query);
          for (const auto& v : pair.corpus) projected.corpus.push_back(project(v));
          row.push_back(score_pair(projected, config));
        }
        return row;
      },
      workers);

  std::vector<ProjectionPoint> out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    ProjectionPoint p;
    p.target_dimension = dims[i];
    for (const auto& row : per_trial) p.trials.push_back(row[i]);
    p.summary = summarize_scores(p.trials);
    out.push_back(std::move(p));
  }
  return out;
}

struct DimensionRow {
  ScenarioConfig config;
  SimulationRun scenario1;
  SimulationRun scenario2;

  // Scenario 2 minus scenario 1.
  double w1_separation() const { return scenario2.summary.w1_h0.mean - scenario1.summary.w1_h0.mean; }
  double lt_separation() const { return scenario2.summary.lt_max_h1.mean - scenario1.summary.lt_max_h1.mean; }
  bool w1_iqr_disjoint() const { return iqr_disjoint(scenario1.summary.w1_h0, scenario2.summary.w1_h0); }
  bool lt_iqr_disjoint() const { return iqr_disjoint(scenario1.summary.lt_max_h1, scenario2.summary.lt_max_h1); }
};

/// (D, N, n_parent) in {(64,16,12), (128,32,16), (256,64,32)}, sigma 0.1,
/// epsilon 0.4.
inline std::vector<ScenarioConfig> default_dimension_grid(std::uint64_t seed = 0) {
  std::vector<ScenarioConfig> grid;
  for (auto [d, n, p] : {std::tuple{64, 16, 12}, std::tuple{128, 32, 16}, std::tuple{256, 64, 32}}) {
    ScenarioConfig c;
    c.dimension = static_cast<std::size_t>(d);
    c.topic_count = static_cast<std::size_t>(n);
    c.n_parent = static_cast<std::size_t>(p);
    c.sigma_noise = 0.1;
    c.epsilon = 0.4;
    c.seed = seed;
    grid.push_back(c);
  }
  return grid;
}

inline std::vector<DimensionRow> dimension_sweep(std::span<const ScenarioConfig> configs, std::size_t n_trials,
                                                 std::size_t workers = default_worker_count()) {
  std::vector<DimensionRow> rows;
  for (const auto& c : configs) {
    c.validate();
    rows.push_back({c, run_simulation(c, 1, n_trials, workers), run_simulation(c, 2, n_trials, workers)});
  }
  return rows;
}

}  // namespace semtopo
