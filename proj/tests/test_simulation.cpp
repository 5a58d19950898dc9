#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "semtopo/simulation.hpp"
#include "support.hpp"

using namespace semtopo;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.dimension = 64;
  c.topic_count = 16;
  c.n_parent = 8;
  c.seed = 17;
  return c;
}

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST(Vocabulary, SmallBinaryMask) {
  const auto v = generate_vocabulary(2, 4, 3);
  ASSERT_EQ(v.size(), 2u);
  for (const auto& t : v.topics) {
    EXPECT_NEAR(t.norm(), 1.0, 1e-12);
    int ones = 0;
    for (Eigen::Index i = 0; i < 4; ++i) {
      EXPECT_TRUE(t(i) == 0.0 || std::abs(t(i) - 1.0 / std::sqrt(2.0)) < 1e-12);
      ones += t(i) > 0;
    }
    EXPECT_EQ(ones, 2);
  }
}

TEST(Vocabulary, FullScaleAndDeterminism) {
  const auto v = generate_vocabulary(64, 256, 5);
  ASSERT_EQ(v.size(), 64u);
  for (const auto& t : v.topics) EXPECT_NEAR(t.norm(), 1.0, 1e-12);
  const auto w = generate_vocabulary(64, 256, 5);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(v.topics[i], w.topics[i]);
  EXPECT_THROW(generate_vocabulary(10, 8, 0), InvalidArgument);
}

TEST(Vocabulary, OrthonormalVariantIsOrthonormal) {
  const auto v = generate_vocabulary(16, 32, 2, TopicStyle::kOrthonormal);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(v.topics[i].dot(v.topics[j]), i == j ? 1.0 : 0.0, 1e-9);
}

TEST(Vocabulary, BinaryMasksAreFarFromOrthogonal) {
  // Two independent half-density masks overlap in about a quarter of the
  // coordinates, so their cosine concentrates near 0.5.
  const auto v = generate_vocabulary(64, 256, 9);
  double sum = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = i + 1; j < 64; ++j, ++pairs) sum += v.topics[i].dot(v.topics[j]);
  EXPECT_NEAR(sum / pairs, 0.5, 0.05);
}

TEST(Datapoints, SingleTopicIdentity) {
  const auto vocab = generate_vocabulary(8, 16, 1);
  auto rng = make_rng(0);
  const std::vector<std::size_t> pool{3};
  const auto d = generate_datapoints(1, pool, vocab, 5, 0.0, rng);
  for (const auto& p : d.points) EXPECT_LT((p - vocab.topics[3]).norm(), 1e-15);
}

TEST(Datapoints, TwoOrthonormalTopics) {
  const auto vocab = generate_vocabulary(8, 16, 1, TopicStyle::kOrthonormal);
  auto rng = make_rng(0);
  const std::vector<std::size_t> pool{2, 5};
  const auto d = generate_datapoints(2, pool, vocab, 3, 0.0, rng);
  const Vector expected = (vocab.topics[2] + vocab.topics[5]) / std::sqrt(2.0);
  for (const auto& p : d.points) EXPECT_LT((p - expected).norm(), 1e-12);
}

TEST(Datapoints, NoiseEnergyMatchesDimensionTimesVariance) {
  // p = normalize(f + n) with unit f. The ratio of p's component orthogonal
  // to f over its component along f is |n_perp| / (1 + n.f), whose square
  // averages to about (D - 1) sigma^2.
  const std::size_t dim = 256;
  const double sigma = 0.1;
  const auto vocab = generate_vocabulary(4, dim, 3, TopicStyle::kOrthonormal);
  auto rng = make_rng(42);
  const std::vector<std::size_t> pool{0};
  const auto d = generate_datapoints(1, pool, vocab, 4000, sigma, rng);
  const Vector& f = vocab.topics[0];
  double acc = 0;
  for (const auto& p : d.points) {
    const double along = p.dot(f);
    acc += (p - along * f).squaredNorm() / (along * along);
  }
  const double expected = (dim - 1) * sigma * sigma * (1 + sigma * sigma);
  EXPECT_NEAR(acc / 4000.0, expected, 0.05 * expected);
}

TEST(Datapoints, Errors) {
  const auto vocab = generate_vocabulary(8, 16, 1);
  auto rng = make_rng(0);
  const std::vector<std::size_t> pool{1, 2};
  EXPECT_THROW(generate_datapoints(3, pool, vocab, 1, 0.0, rng), InvalidArgument);
  EXPECT_THROW(generate_datapoints(0, pool, vocab, 1, 0.0, rng), InvalidArgument);
  EXPECT_THROW(generate_datapoints(1, pool, vocab, 1, -0.1, rng), InvalidArgument);
}

TEST(Config, Validation) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.child_topics(), 4u);
  c.n_child = 8;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config();
  c.n_parent = 17;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config();
  c.topic_count = 65;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config();
  c.corpus_size = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config();
  c.sigma_noise = -1;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Scenario, InvalidIdRejected) {
  EXPECT_THROW(sample_scenario(small_config(), 0, 1), InvalidArgument);
  EXPECT_THROW(sample_scenario(small_config(), 4, 1), InvalidArgument);
}

TEST(Scenario, ShapesAndNorms) {
  for (int s = 1; s <= 3; ++s) {
    const auto pair = sample_scenario(small_config(), s, 99);
    EXPECT_EQ(pair.corpus.size(), 50u);
    EXPECT_EQ(pair.corpus_topics.size(), 50u);
    EXPECT_NEAR(pair.query.norm(), 1.0, 1e-9);
    for (const auto& p : pair.corpus) EXPECT_NEAR(p.norm(), 1.0, 1e-9);
  }
}

TEST(Scenario, OneNoiselessChildrenLieInQuerySpan) {
  auto c = small_config();
  c.sigma_noise = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pair = sample_scenario(c, 1, seed);
    EXPECT_EQ(pair.query_topics.size(), c.n_parent);
    Matrix span(static_cast<Eigen::Index>(c.dimension), static_cast<Eigen::Index>(pair.query_topics.size()));
    for (std::size_t i = 0; i < pair.query_topics.size(); ++i)
      span.col(static_cast<Eigen::Index>(i)) = pair.vocabulary.topics[pair.query_topics[i]];
    const Eigen::ColPivHouseholderQR<Matrix> qr(span);
    for (std::size_t j = 0; j < pair.corpus.size(); ++j) {
      const Vector coeffs = qr.solve(pair.corpus[j]);
      EXPECT_LT((span * coeffs - pair.corpus[j]).norm(), 1e-9);
      EXPECT_EQ(pair.corpus_topics[j].size(), c.child_topics());
      EXPECT_TRUE(is_subset(pair.corpus_topics[j], pair.query_topics));
    }
  }
}

TEST(Scenario, TwoCorpusHasTopicsOutsideQuery) {
  const auto c = small_config();
  const auto pair = sample_scenario(c, 2, 4);
  EXPECT_EQ(pair.query_topics.size(), c.child_topics());
  std::size_t outside = 0, lineage_supersets = 0;
  for (const auto& t : pair.corpus_topics) {
    EXPECT_EQ(t.size(), c.n_parent);
    outside += !is_subset(t, pair.query_topics);
    lineage_supersets += is_subset(pair.query_topics, t);
  }
  EXPECT_EQ(outside, 50u);
  EXPECT_GE(lineage_supersets, 25u);  // the lineage half contains the query's topics
}

TEST(Scenario, ThreeMixRatioBoundaries) {
  auto c = small_config();
  c.mix_ratio = 1.0;
  for (const auto& t : sample_scenario(c, 3, 8).corpus_topics) EXPECT_EQ(t.size(), c.child_topics());
  const auto own = sample_scenario(c, 3, 8);
  for (const auto& t : own.corpus_topics) EXPECT_TRUE(is_subset(t, own.query_topics));

  c.mix_ratio = 0.0;
  const auto foreign = sample_scenario(c, 3, 8);
  std::size_t outside = 0;
  for (const auto& t : foreign.corpus_topics) outside += !is_subset(t, foreign.query_topics);
  EXPECT_GT(outside, 40u);
}

TEST(Scenario, ThreeWithFullMixIsScenarioOne) {
  auto c = small_config();
  c.mix_ratio = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s1 = sample_scenario(c, 1, seed), s3 = sample_scenario(c, 3, seed);
    EXPECT_EQ(s1.query, s3.query);
    ASSERT_EQ(s1.corpus.size(), s3.corpus.size());
    for (std::size_t j = 0; j < s1.corpus.size(); ++j) EXPECT_EQ(s1.corpus[j], s3.corpus[j]);
  }
}

TEST(Simulation, DeterministicAndWorkerIndependent) {
  const auto c = small_config();
  const auto a = run_simulation(c, 1, 12, 1);
  const auto b = run_simulation(c, 1, 12, 4);
  ASSERT_EQ(a.trials.size(), 12u);
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_EQ(a.trials[t].w1_h0, b.trials[t].w1_h0);
    EXPECT_EQ(a.trials[t].lt_max_h1, b.trials[t].lt_max_h1);
  }
  const auto one = run_simulation(c, 2, 1);
  EXPECT_EQ(one.trials.size(), 1u);
  EXPECT_EQ(one.trials[0].w1_h0, run_simulation(c, 2, 1).trials[0].w1_h0);
  EXPECT_THROW(run_simulation(c, 1, 0), InvalidArgument);
}

TEST(Simulation, TrialsAreIndependentDraws) {
  const auto run = run_simulation(small_config(), 1, 10);
  std::set<double> distinct;
  for (const auto& t : run.trials) distinct.insert(t.w1_h0);
  EXPECT_EQ(distinct.size(), 10u);
}

TEST(EpsilonSweep, GridValidation) {
  const auto c = small_config();
  EXPECT_THROW(epsilon_sweep(c, 1, std::vector<double>{}, 2), InvalidArgument);
  EXPECT_THROW(epsilon_sweep(c, 1, std::vector<double>{0.5, 0.2}, 2), InvalidArgument);
  const auto pts = epsilon_sweep(c, 1, std::vector<double>{0.2, 0.4}, 4);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_LE(pts[0].summary.points_used.mean, pts[1].summary.points_used.mean);
  // The 0.4 column equals a plain run at epsilon 0.4.
  const auto run = run_simulation(c, 1, 4);
  EXPECT_DOUBLE_EQ(pts[1].summary.w1_h0.mean, run.summary.w1_h0.mean);
}

TEST(Projection, BaselineOnlyAndNearIsometric) {
  const auto c = small_config();
  const auto base = projection_robustness(c, 1, std::vector<std::size_t>{}, 8);
  ASSERT_EQ(base.size(), 1u);
  EXPECT_EQ(base[0].target_dimension, 0u);
  EXPECT_DOUBLE_EQ(base[0].summary.w1_h0.mean, run_simulation(c, 1, 8).summary.w1_h0.mean);

  auto quiet = c;
  quiet.sigma_noise = 0.01;
  const auto near = projection_robustness(quiet, 1, std::vector<std::size_t>{63}, 20);
  EXPECT_LT(std::abs(near[1].summary.w1_h0.mean - near[0].summary.w1_h0.mean), 0.05);
  EXPECT_THROW(projection_robustness(c, 1, std::vector<std::size_t>{64}, 2), InvalidArgument);
}

TEST(DimensionSweep, OneConfigEqualsTwoRuns) {
  const std::vector<ScenarioConfig> configs{small_config()};
  const auto rows = dimension_sweep(configs, 6);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].scenario1.summary.w1_h0.mean, run_simulation(configs[0], 1, 6).summary.w1_h0.mean);
  EXPECT_DOUBLE_EQ(rows[0].scenario2.summary.w1_h0.mean, run_simulation(configs[0], 2, 6).summary.w1_h0.mean);
  const auto grid = default_dimension_grid();
  ASSERT_EQ(grid.size(), 3u);
  EXPECT_EQ(grid[0].dimension, 64u);
  EXPECT_EQ(grid[1].topic_count, 32u);
  EXPECT_EQ(grid[2].n_parent, 32u);
}
