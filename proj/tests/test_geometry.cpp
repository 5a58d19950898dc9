#include <gtest/gtest.h>

#include <cmath>

#include "semtopo/geometry.hpp"
#include "support.hpp"

using namespace semtopo;

TEST(Normalize, ThreeFourFive) {
  Vector v(2);
  v << 3, 4;
  const Vector u = normalize(v);
  EXPECT_NEAR(u(0), 0.6, 1e-15);
  EXPECT_NEAR(u(1), 0.8, 1e-15);
}

TEST(Normalize, ZeroVectorIsDegenerate) { EXPECT_THROW(normalize(Vector::Zero(2)), DegenerateInput); }

TEST(Normalize, UnitVectorUnchanged) {
  auto rng = testgen::rng_for(1);
  const Vector u = normalize(testgen::gaussian_vector(rng, 7));
  EXPECT_LT((normalize(u) - u).norm(), 1e-15);
}

TEST(PairwiseDistances, TwoPoints) {
  std::vector<Vector> pts(2, Vector::Zero(2));
  pts[1](0) = 1;
  const auto d = pairwise_distances(pts);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d(0, 1), 1.0);
  EXPECT_EQ(d(1, 0), 1.0);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(PairwiseDistances, SinglePoint) {
  std::vector<Vector> pts{Vector::Ones(3)};
  const auto d = pairwise_distances(pts);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(PairwiseDistances, UnitSquareValues) {
  const auto d = pairwise_distances(testgen::unit_square());
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j) continue;
      const bool side = std::abs(d(i, j) - 1.0) < 1e-15, diag = std::abs(d(i, j) - std::sqrt(2.0)) < 1e-15;
      EXPECT_TRUE(side || diag) << i << "," << j << " = " << d(i, j);
    }
}

TEST(PairwiseDistances, DimensionMismatch) {
  std::vector<Vector> pts{Vector::Zero(2), Vector::Zero(3)};
  EXPECT_THROW(pairwise_distances(pts), DimensionMismatch);
}

TEST(PairwiseDistances, TriangleInequalityOnRandomClouds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = testgen::rng_for(seed);
    const auto n = testgen::uniform_size(rng, 3, 15);
    const auto d = pairwise_distances(testgen::gaussian_cloud(rng, n, testgen::uniform_size(rng, 2, 10)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) ASSERT_LE(d(i, k), d(i, j) + d(j, k) + 1e-12);
  }
}

TEST(DistanceMatrix, RejectsInvalidInput) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1;
  m(1, 0) = 2;
  EXPECT_THROW(DistanceMatrix::from_matrix(m), InvalidArgument);
  m(1, 0) = 1;
  EXPECT_NO_THROW(DistanceMatrix::from_matrix(m));
  m(0, 1) = m(1, 0) = -1;
  EXPECT_THROW(DistanceMatrix::from_matrix(m), InvalidArgument);
  EXPECT_THROW(DistanceMatrix::from_matrix(Matrix::Zero(2, 3)), InvalidArgument);
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 0.5;
  EXPECT_THROW(DistanceMatrix::from_matrix(diag), InvalidArgument);
  Matrix nan = Matrix::Zero(2, 2);
  nan(0, 1) = nan(1, 0) = std::nan("");
  EXPECT_THROW(DistanceMatrix::from_matrix(nan), InvalidArgument);
}

TEST(DistanceMatrix, ToleratesTinyAsymmetryAndMirrors) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0 + 1e-13;
  const auto d = DistanceMatrix::from_matrix(m);
  EXPECT_EQ(d(0, 1), d(1, 0));
}

TEST(OrthonormalColumns, SmallCase) {
  const auto q = orthonormal_columns(4, 2, 7);
  EXPECT_EQ(q.dimension(), 4u);
  EXPECT_EQ(q.count(), 2u);
  EXPECT_LT(std::abs(q.column(0).dot(q.column(1))), 1e-9);
  EXPECT_NEAR(q.column(0).norm(), 1.0, 1e-9);
}

TEST(OrthonormalColumns, GramIdentityAt256x64) {
  const auto q = orthonormal_columns(256, 64, 0);
  const Matrix g = q.columns().transpose() * q.columns();
  EXPECT_LT((g - Matrix::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(OrthonormalColumns, GramIdentityOverRandomShapes) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = testgen::rng_for(seed);
    const auto d = testgen::uniform_size(rng, 1, 80);
    const auto n = testgen::uniform_size(rng, 1, d);
    const auto q = orthonormal_columns(d, n, seed);
    const Matrix g = q.columns().transpose() * q.columns();
    const auto nn = static_cast<Eigen::Index>(n);
    ASSERT_LT((g - Matrix::Identity(nn, nn)).cwiseAbs().maxCoeff(), 1e-9) << "D=" << d << " N=" << n;
  }
}

TEST(OrthonormalColumns, DeterministicPerSeed) {
  EXPECT_EQ(orthonormal_columns(16, 5, 3).columns(), orthonormal_columns(16, 5, 3).columns());
  EXPECT_NE(orthonormal_columns(16, 5, 3).columns(), orthonormal_columns(16, 5, 4).columns());
}

TEST(OrthonormalColumns, CountAboveDimensionFails) { EXPECT_THROW(orthonormal_columns(3, 4, 0), InvalidArgument); }

TEST(RandomProjection, Linear) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rng = testgen::rng_for(seed);
    const RandomProjection p(32, 8, seed);
    const Vector a = testgen::gaussian_vector(rng, 32), b = testgen::gaussian_vector(rng, 32);
    EXPECT_LT((p(a + b) - p(a) - p(b)).norm(), 1e-9);
    EXPECT_LT((p(2.5 * a) - 2.5 * p(a)).norm(), 1e-9);
  }
}

TEST(RandomProjection, DistancesWithinJlDistortion) {
  // k = 64 rows for n = 50 points: the JL bound sqrt(8 ln n / k) is about 0.7;
  // squared ratios average to 1 with spread about sqrt(2 / k).
  auto rng = testgen::rng_for(11);
  const auto pts = testgen::gaussian_cloud(rng, 50, 256);
  const auto projected = random_projection(pts, 64, 5);
  const auto before = pairwise_distances(pts), after = pairwise_distances(projected);
  double sq = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = i + 1; j < 50; ++j, ++pairs) {
      const double r = after(i, j) / before(i, j);
      EXPECT_LT(std::abs(r - 1.0), 0.5) << i << "," << j;
      sq += r * r;
    }
  EXPECT_NEAR(sq / pairs, 1.0, 0.1);
}

TEST(RandomProjection, OneDimensionDownIsNearIsometric) {
  auto rng = testgen::rng_for(12);
  const auto pts = testgen::gaussian_cloud(rng, 30, 256);
  const auto before = pairwise_distances(pts), after = pairwise_distances(random_projection(pts, 255, 2));
  double worst = 0.0;
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = i + 1; j < 30; ++j) worst = std::max(worst, std::abs(after(i, j) / before(i, j) - 1.0));
  EXPECT_LT(worst, 0.25);
}

TEST(RandomProjection, IdenticalInputsGiveIdenticalOutputs) {
  auto rng = testgen::rng_for(13);
  const Vector v = testgen::gaussian_vector(rng, 10);
  const std::vector<Vector> pts{v, v};
  const auto out = random_projection(pts, 4, 9);
  EXPECT_EQ(out[0], out[1]);
  EXPECT_EQ(random_projection(pts, 4, 9)[0], out[0]);
}

TEST(RandomProjection, TargetMustBeBelowSource) {
  EXPECT_THROW(RandomProjection(8, 8, 0), InvalidArgument);
  EXPECT_THROW(RandomProjection(8, 1, 0), InvalidArgument);
  const RandomProjection p(8, 4, 0);
  EXPECT_THROW(p(Vector::Zero(7)), DimensionMismatch);
}

TEST(Seeds, DerivedStreamsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}
