#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "semtopo/error.hpp"
#include "semtopo/random.hpp"

namespace semtopo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Symmetric, non-negative matrix of pairwise distances with a zero diagonal.
/// The only way to get one is through validation, so every consumer can rely
/// on the invariants.
class DistanceMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  DistanceMatrix() = default;

  static DistanceMatrix from_matrix(Matrix m) {
    if (m.rows() != m.cols()) throw InvalidArgument("distance matrix must be square");
    const Eigen::Index n = m.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (m(i, i) != 0.0) throw InvalidArgument("distance matrix must have a zero diagonal");
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = m(i, j);
        if (!std::isfinite(v)) throw InvalidArgument("distance matrix has non-finite entries");
        if (v < 0.0) throw InvalidArgument("distance matrix has negative entries");
        if (std::abs(v - m(j, i)) > kSymmetryTolerance)
          throw InvalidArgument("distance matrix is not symmetric");
      }
    }
    // Mirror the upper triangle so downstream code sees exact symmetry.
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) m(j, i) = m(i, j);
    DistanceMatrix d;
    d.m_ = std::move(m);
    return d;
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Matrix& matrix() const noexcept { return m_; }

  double max_entry() const { return m_.size() == 0 ? 0.0 : m_.maxCoeff(); }

  DistanceMatrix scaled(double s) const {
    if (!(s > 0.0)) throw InvalidArgument("scale factor must be positive");
    DistanceMatrix d;
    d.m_ = m_ * s;
    return d;
  }

  DistanceMatrix permuted(std::span<const std::size_t> order) const {
    const auto n = static_cast<Eigen::Index>(order.size());
    if (order.size() != size()) throw InvalidArgument("permutation size mismatch");
    Matrix p(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        p(i, j) = m_(static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)]),
                     static_cast<Eigen::Index>(order[static_cast<std::size_t>(j)]));
    DistanceMatrix d;
    d.m_ = std::move(p);
    return d;
  }

 private:
  Matrix m_;
};

/// N orthonormal columns in R^D.
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Matrix columns) : q_(std::move(columns)) {}

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(q_.rows()); }
  std::size_t count() const noexcept { return static_cast<std::size_t>(q_.cols()); }
  Vector column(std::size_t i) const { return q_.col(static_cast<Eigen::Index>(i)); }
  const Matrix& columns() const noexcept { return q_; }

 private:
  Matrix q_;
};

inline Vector normalize(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw DegenerateInput("cannot normalize a zero or non-finite vector");
  return v / norm;
}

inline DistanceMatrix pairwise_distances(std::span<const Vector> points) {
  if (points.empty()) throw InvalidArgument("pairwise_distances needs at least one point");
  const auto dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw DimensionMismatch("points have different dimensions");
  const auto n = static_cast<Eigen::Index>(points.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)]).norm();
      m(i, j) = d;
      m(j, i) = d;
    }
  return DistanceMatrix::from_matrix(std::move(m));
}

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  // Column-major fill keeps the draw order independent of Eigen's storage.
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = normal(rng);
  return m;
}

/// Thin Q factor of a Householder QR of a D x N standard-normal matrix.
inline OrthonormalBasis orthonormal_columns(std::size_t dimension, std::size_t count,
                                            std::uint64_t seed) {
  if (count > dimension)
    throw InvalidArgument("orthonormal_columns: count (" + std::to_string(count) +
                          ") exceeds dimension (" + std::to_string(dimension) + ")");
  if (count == 0) return OrthonormalBasis(Matrix(static_cast<Eigen::Index>(dimension), 0));
  auto rng = make_rng(seed);
  const Matrix m = gaussian_matrix(dimension, count, rng);
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  return OrthonormalBasis(std::move(q));
}

/// Johnson-Lindenstrauss projection: one shared matrix with N(0,1)/sqrt(k)
/// entries applied to every point.
class RandomProjection {
 public:
  RandomProjection(std::size_t source_dim, std::size_t target_dim, std::uint64_t seed) {
    if (target_dim < 2) throw InvalidArgument("random projection target dimension must be >= 2");
    if (target_dim >= source_dim)
      throw InvalidArgument("random projection target dimension must be below the source dimension");
    auto rng = make_rng(seed);
    r_ = gaussian_matrix(target_dim, source_dim, rng) / std::sqrt(static_cast<double>(target_dim));
  }

  std::size_t source_dimension() const noexcept { return static_cast<std::size_t>(r_.cols()); }
  std::size_t target_dimension() const noexcept { return static_cast<std::size_t>(r_.rows()); }

  Vector operator()(const Vector& v) const {
    if (v.size() != r_.cols()) throw DimensionMismatch("projection input has the wrong dimension");
    return r_ * v;
  }

 private:
  Matrix r_;
};

inline std::vector<Vector> random_projection(std::span<const Vector> points, std::size_t target_dim,
                                             std::uint64_t seed) {
  if (points.empty()) return {};
  const auto dim = static_cast<std::size_t>(points.front().size());
  const RandomProjection project(dim, target_dim, seed);
  std::vector<Vector> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(project(p));
  return out;
}

}  // namespace semtopo
