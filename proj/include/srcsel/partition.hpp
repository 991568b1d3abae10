#pragma once

// Splitting a source dataset into K disjoint subsets.
//
// Subset labels are 0-based in memory (0..K-1). Files written by the tools use
// 1-based labels.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/error.hpp"
#include "srcsel/random.hpp"

namespace srcsel {

enum class PartitionMethod { metadata, kmeans, random };

inline std::string_view to_string(PartitionMethod m) {
  switch (m) {
    case PartitionMethod::metadata: return "metadata";
    case PartitionMethod::kmeans: return "kmeans";
    case PartitionMethod::random: return "random";
  }
  return "?";
}

class Partition {
 public:
  Partition() = default;

  /// Validates that labels form a surjection onto 0..k-1.
  Partition(std::vector<int> labels, int k, PartitionMethod method)
      : labels_(std::move(labels)), k_(k), method_(method) {
    if (k_ < 1) throw DataError("partition needs K >= 1");
    members_.assign(static_cast<std::size_t>(k_), {});
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const int l = labels_[i];
      if (l < 0 || l >= k_) throw DataError("partition label out of range");
      members_[static_cast<std::size_t>(l)].push_back(i);
    }
    for (int s = 0; s < k_; ++s) {
      if (members_[static_cast<std::size_t>(s)].empty()) {
        throw DataError("partition subset " + std::to_string(s + 1) + " is empty");
      }
    }
  }

  int k() const { return k_; }
  std::size_t size() const { return labels_.size(); }
  PartitionMethod method() const { return method_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t row) const { return labels_.at(row); }

  /// Source rows belonging to subset s, ascending.
  const std::vector<RowIndex>& members(int s) const {
    return members_.at(static_cast<std::size_t>(s));
  }

  std::vector<std::size_t> subset_sizes() const {
    std::vector<std::size_t> sizes;
    for (const auto& m : members_) sizes.push_back(m.size());
    return sizes;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.k_ == b.k_ && a.labels_ == b.labels_ && a.method_ == b.method_;
  }

 private:
  std::vector<int> labels_;
  int k_ = 0;
  PartitionMethod method_ = PartitionMethod::metadata;
  std::vector<std::vector<RowIndex>> members_;
};

/// Bins a numeric metadata column by sorted cut points. Bins are left-open,
/// right-closed: (-inf, b0], (b0, b1], ..., (b_last, inf).
inline Partition partition_by_metadata(const Dataset& source, std::string_view column,
                                       const std::vector<double>& boundaries) {
  const auto& values = source.meta_numeric(column);
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (!(boundaries[i - 1] < boundaries[i])) {
      throw DataError("partition boundaries must be strictly increasing");
    }
  }
  std::vector<int> labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), values[i]);
    labels[i] = static_cast<int>(it - boundaries.begin());
  }
  const int k = static_cast<int>(boundaries.size()) + 1;
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int s = 0; s < k; ++s) {
    if (counts[static_cast<std::size_t>(s)] == 0) {
      throw DataError("metadata bin " + std::to_string(s + 1) + " of '" + std::string(column) +
                      "' is empty");
    }
  }
  return Partition(std::move(labels), k, PartitionMethod::metadata);
}

/// One subset per distinct value of a metadata column (e.g. hospital id).
/// Subsets are ordered by numeric value when the column is numeric, else
/// lexicographically.
inline Partition partition_by_category(const Dataset& source, std::string_view column) {
  const auto& col = source.meta_column(column);
  std::vector<int> labels(col.size());
  if (col.is_numeric) {
    std::map<double, int> ids;
    for (double v : col.numeric) ids.emplace(v, 0);
    int next = 0;
    for (auto& [v, id] : ids) id = next++;
    for (std::size_t i = 0; i < col.size(); ++i) labels[i] = ids.at(col.numeric[i]);
    return Partition(std::move(labels), next, PartitionMethod::metadata);
  }
  std::map<std::string, int> ids;
  for (const auto& v : col.text) ids.emplace(v, 0);
  int next = 0;
  for (auto& [v, id] : ids) id = next++;
  for (std::size_t i = 0; i < col.size(); ++i) labels[i] = ids.at(col.text[i]);
  return Partition(std::move(labels), next, PartitionMethod::metadata);
}

/// Balanced random assignment: shuffle rows, then deal labels round-robin so
/// subset sizes differ by at most one.
inline Partition partition_random(std::size_t n_source, int k, std::uint64_t seed) {
  if (k < 1) throw DataError("partition needs K >= 1");
  if (static_cast<std::size_t>(k) > n_source) throw DataError("K exceeds the number of source rows");
  std::vector<std::size_t> order(n_source);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n_source; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  std::vector<int> labels(n_source);
  for (std::size_t i = 0; i < n_source; ++i) labels[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return Partition(std::move(labels), k, PartitionMethod::random);
}

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
  Vector mean;                 // p
  Matrix components;           // p x c, orthonormal columns
  Vector explained_variance;   // c, nonincreasing
  double total_variance = 0;   // sum of all column variances

  Matrix transform(const Matrix& x) const {
    return (x.rowwise() - mean.transpose()) * components;
  }
  Matrix inverse_transform(const Matrix& z) const {
    return (z * components.transpose()).rowwise() + mean.transpose();
  }
  Vector explained_variance_ratio() const { return explained_variance / total_variance; }
};

/// Principal components from the thin SVD of the column-centered matrix.
/// Each component's sign is fixed so its largest-magnitude entry is positive.
inline PcaModel fit_pca(const Matrix& x, int n_components) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n < 2) throw DataError("PCA needs at least two rows");
  if (n_components < 1 || n_components > std::min(n, p)) {
    throw DataError("PCA n_components must be in [1, min(n, p)]");
  }
  PcaModel model;
  model.mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - model.mean.transpose();
  model.total_variance = centered.squaredNorm() / static_cast<double>(n - 1);
  if (!(model.total_variance > 0.0)) throw DataError("PCA input is constant in every column");

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const auto c = static_cast<Eigen::Index>(n_components);
  model.components = svd.matrixV().leftCols(c);
  model.explained_variance =
      svd.singularValues().head(c).array().square() / static_cast<double>(n - 1);
  for (Eigen::Index j = 0; j < c; ++j) {
    Eigen::Index arg = 0;
    model.components.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.components(arg, j) < 0) model.components.col(j) *= -1.0;
  }
  return model;
}

// ---------------------------------------------------------------------------
// k-means

/// Column z-scoring with sample standard deviation. Constant columns are only
/// centered.
inline Matrix standardize_columns(const Matrix& x) {
  Matrix out = x.rowwise() - x.colwise().mean();
  if (x.rows() < 2) return out;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double sd = std::sqrt(out.col(j).squaredNorm() / static_cast<double>(x.rows() - 1));
    if (sd > 0.0) out.col(j) /= sd;
  }
  return out;
}

struct KMeansOptions {
  bool standardize = true;
  int max_iters = 300;
};

struct KMeansResult {
  Partition partition;
  Matrix centroids;  // K x p, in the (possibly standardized) clustering space
  /// Within-cluster sum of squares after each Lloyd iteration.
  std::vector<double> objective_history;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double within_cluster_ss(const Matrix& x, const Matrix& centroids, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    total += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are repaired by
/// moving the point farthest from its centroid into them. Stops when the
/// assignment no longer changes or after max_iters iterations.
inline KMeansResult kmeans(const Matrix& features, int k, std::uint64_t seed,
                           const KMeansOptions& opts = {}) {
  const auto n = features.rows();
  if (k < 1) throw DataError("k-means needs K >= 1");
  if (n < k) throw DataError("k-means needs at least K rows");
  if (opts.max_iters < 1) throw DataError("k-means needs max_iters >= 1");
  const Matrix x = opts.standardize ? standardize_columns(features) : features;
  const auto p = x.cols();
  Rng rng(seed);

  // k-means++ seeding
  Matrix centroids(k, p);
  centroids.row(0) = x.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
  Vector d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double u = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  KMeansResult result;
  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centroids.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      auto& l = labels[static_cast<std::size_t>(i)];
      if (l != static_cast<int>(best)) {
        l = static_cast<int>(best);
        changed = true;
      }
    }

    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] != 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(l)] < 2) continue;
        const double d = (x.row(i) - centroids.row(l)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
      changed = true;
    }

    centroids.setZero();
    for (Eigen::Index i = 0; i < n; ++i) centroids.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (int c = 0; c < k; ++c) centroids.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);

    const double objective = detail::within_cluster_ss(x, centroids, labels);
    if (objective > previous * (1.0 + 1e-12) + 1e-300) {
      throw std::logic_error("k-means objective increased between iterations");
    }
    previous = objective;
    result.objective_history.push_back(objective);
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  result.centroids = std::move(centroids);
  result.partition = Partition(std::move(labels), k, PartitionMethod::kmeans);
  return result;
}

}  // namespace srcsel
