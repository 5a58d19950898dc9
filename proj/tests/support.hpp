#pragma once

// Small hand-rolled generators for property tests.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "semtopo/geometry.hpp"
#include "semtopo/random.hpp"

namespace testgen {

using semtopo::Rng;
using semtopo::Vector;

inline Rng rng_for(std::uint64_t seed) { return semtopo::make_rng(semtopo::derive_seed(0x7e57, seed)); }

inline std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vector gaussian_vector(Rng& rng, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n(rng);
  return v;
}

inline std::vector<Vector> gaussian_cloud(Rng& rng, std::size_t n, std::size_t dim, double scale = 1.0) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(gaussian_vector(rng, dim, scale));
  return pts;
}

/// Points on a coarse integer grid so that many pairwise distances tie.
inline std::vector<Vector> lattice_cloud(Rng& rng, std::size_t n, std::size_t dim, int extent = 2) {
  std::uniform_int_distribution<int> coord(0, extent);
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index c = 0; c < v.size(); ++c) v(c) = coord(rng);
    pts.push_back(v);
  }
  return pts;
}

inline std::vector<std::size_t> permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline std::vector<Vector> unit_square() {
  std::vector<Vector> pts(4, Vector(2));
  pts[0] << 0, 0;
  pts[1] << 1, 0;
  pts[2] << 1, 1;
  pts[3] << 0, 1;
  return pts;
}

}  // namespace testgen
