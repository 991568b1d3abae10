#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "srcsel/ensemble.hpp"
#include "srcsel/error.hpp"

namespace srcsel {

/// Mean absolute deviation of a weight vector from uniform. Zero means no
/// preference among subsets; the maximum 2(K-1)/K^2 is reached at a vertex.
struct SummaryStat {
  double value = 0.0;
  std::size_t k = 0;

  static double upper_bound(std::size_t k) {
    const double kd = static_cast<double>(k);
    return 2.0 * (kd - 1.0) / (kd * kd);
  }
};

inline SummaryStat summary_stat(const WeightVector& w) {
  const std::size_t k = w.size();
  const double kd = static_cast<double>(k);
  double total = 0.0;
  for (double v : w) total += std::abs(v - 1.0 / kd);
  return {total / kd, k};
}

/// Per-subset share of an accumulated training set.
inline WeightVector composition_weights(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw DataError("composition_weights: counts sum to zero");
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return WeightVector(std::move(w));
}

/// Number of iterations each arm was pulled.
inline std::vector<std::size_t> occurrence_table(std::span<const int> arms, int k) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int a : arms) {
    if (a < 0 || a >= k) throw DataError("occurrence_table: arm out of range");
    ++counts[static_cast<std::size_t>(a)];
  }
  return counts;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DataError("spearman: need two equal-length samples");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace srcsel
