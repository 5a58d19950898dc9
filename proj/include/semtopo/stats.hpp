#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "semtopo/error.hpp"

namespace semtopo {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;

  double iqr() const noexcept { return q75 - q25; }
};

// Linear interpolation between closest ranks on sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / static_cast<double>(sorted.size());
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(sorted.size() - 1));
  }
  s.min = sorted.front();
  s.max = sorted.back();
  s.q25 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q75 = quantile_sorted(sorted, 0.75);
  return s;
}

inline bool iqr_disjoint(const Summary& a, const Summary& b) noexcept { return a.q75 < b.q25 || b.q75 < a.q25; }

inline constexpr double kBandwidthFloor = 1e-3;

/// Scott's rule, sigma * n^(-1/5), floored.
inline double scott_bandwidth(std::span<const double> values) {
  const auto s = summarize(values);
  const double h = s.stddev * std::pow(static_cast<double>(std::max<std::size_t>(s.count, 1)), -0.2);
  return std::max(h, kBandwidthFloor);
}

struct KdeCurve {
  double bandwidth = 0.0;
  std::vector<double> x;
  std::vector<double> density;
};

/// Gaussian KDE sampled on `samples` evenly spaced points spanning the data
/// padded by three bandwidths on each side.
inline KdeCurve gaussian_kde(std::span<const double> values, std::size_t samples = 128) {
  if (values.empty()) throw InvalidArgument("KDE of an empty sample");
  if (samples < 2) throw InvalidArgument("KDE needs at least two sample points");
  KdeCurve kde;
  kde.bandwidth = scott_bandwidth(values);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it - 3.0 * kde.bandwidth;
  const double hi = *hi_it + 3.0 * kde.bandwidth;
  const double norm = 1.0 / (static_cast<double>(values.size()) * kde.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    double acc = 0.0;
    for (double v : values) {
      const double z = (x - v) / kde.bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    kde.x.push_back(x);
    kde.density.push_back(acc * norm);
  }
  return kde;
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

inline Histogram histogram(std::span<const double> values, std::size_t bins = 20) {
  if (values.empty()) throw InvalidArgument("histogram of an empty sample");
  if (bins == 0) throw InvalidArgument("histogram needs at least one bin");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo < kBandwidthFloor) {
    lo -= kBandwidthFloor;
    hi += kBandwidthFloor;
  }
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
  for (double v : values) {
    auto bin = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    h.counts[std::min(bin, bins - 1)]++;
  }
  return h;
}

}  // namespace semtopo
