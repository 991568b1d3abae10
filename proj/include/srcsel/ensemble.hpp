#pragma once

// Random search over Dirichlet(1_K) reweightings of the source subsets. Each
// trial draws a weight vector, builds a stratified subsample with those
// proportions, fits the learner on it and records the target loss. The best
// trial is the reweighting returned.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/error.hpp"
#include "srcsel/learner.hpp"
#include "srcsel/parallel.hpp"
#include "srcsel/partition.hpp"
#include "srcsel/random.hpp"

namespace srcsel {

/// A point on the probability simplex.
class WeightVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  WeightVector() = default;

  explicit WeightVector(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw DataError("weight vector must have at least one entry");
    double sum = 0.0;
    for (double v : w_) {
      if (!(v >= 0.0 && v <= 1.0)) throw DataError("weight outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) throw DataError("weights do not sum to 1");
  }

  static WeightVector uniform(std::size_t k) {
    return WeightVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const { return w_; }
  auto begin() const { return w_.begin(); }
  auto end() const { return w_.end(); }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> w_;
};

/// Dirichlet(1_K) draw: K unit exponentials normalized by their sum.
inline WeightVector sample_dirichlet(std::size_t k, Rng& rng) {
  if (k == 0) throw DataError("sample_dirichlet: K must be >= 1");
  std::vector<double> e(k);
  double total = 0.0;
  for (auto& v : e) {
    v = unit_exponential(rng);
    total += v;
  }
  for (auto& v : e) v /= total;
  return WeightVector(std::move(e));
}

/// Largest-remainder rounding of n * w_k. Counts sum to n exactly; leftover
/// units go to the largest fractional parts, ties to the lowest index.
inline std::vector<std::size_t> allocate_counts(const WeightVector& weights, std::size_t n_training) {
  const std::size_t k = weights.size();
  std::vector<std::size_t> counts(k);
  // Remainders are compared at 1e-9 resolution so products that are equal in
  // exact arithmetic (3 * 0.7 vs 3 * 0.3 + 1.2) tie and fall to the index rule.
  std::vector<std::int64_t> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double exact = static_cast<double>(n_training) * weights[i];
    const double nearest = std::round(exact);
    if (std::abs(exact - nearest) <= 1e-9 * std::max(1.0, nearest)) exact = nearest;
    const double whole = std::floor(exact);
    counts[i] = static_cast<std::size_t>(whole);
    remainder[i] = std::llround((exact - whole) * 1e9);
    assigned += counts[i];
  }
  // Rounding can push the floors past n when weights sum to 1 + O(eps).
  while (assigned > n_training) {
    const auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n_training; i = (i + 1) % k) {
    ++counts[order[i]];
    ++assigned;
  }
  return counts;
}

enum class Replacement {
  automatic,  // without replacement unless a subset is smaller than its count
  always,
};

/// Draws counts[s] rows uniformly from each subset s. A subset is sampled
/// without replacement when it holds enough rows (under the automatic
/// policy), otherwise with replacement. Indices are grouped by subset.
inline std::vector<RowIndex> stratified_subsample(const Partition& partition,
                                                  std::span<const std::size_t> counts, Rng& rng,
                                                  Replacement policy = Replacement::automatic) {
  if (counts.size() != static_cast<std::size_t>(partition.k())) {
    throw DataError("stratified_subsample: counts length differs from K");
  }
  std::vector<RowIndex> out;
  out.reserve(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  for (int s = 0; s < partition.k(); ++s) {
    const std::size_t want = counts[static_cast<std::size_t>(s)];
    if (want == 0) continue;
    const auto& members = partition.members(s);
    if (policy == Replacement::automatic && want <= members.size()) {
      std::vector<RowIndex> pool = members;
      for (std::size_t i = 0; i < want; ++i) {
        std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
        out.push_back(pool[i]);
      }
    } else {
      for (std::size_t i = 0; i < want; ++i) out.push_back(members[uniform_index(rng, members.size())]);
    }
  }
  return out;
}

struct EnsembleConfig {
  std::size_t repetitions = 1000;  // J
  std::size_t n_training = 1000;
  std::uint64_t seed = 0;
  Replacement replacement = Replacement::automatic;
  /// Fraction of target rows held out from selection and only scored.
  /// Zero (default) selects on the full target.
  double target_holdout_fraction = 0.0;
  unsigned threads = 1;
  bool keep_subsamples = false;

  void validate(int k) const {
    if (repetitions < 1) throw ConfigError("ensemble J must be >= 1");
    if (n_training < static_cast<std::size_t>(k)) throw ConfigError("ensemble n_training must be >= K");
    if (!(target_holdout_fraction >= 0.0 && target_holdout_fraction < 1.0)) {
      throw ConfigError("ensemble target_holdout_fraction must be in [0, 1)");
    }
  }
};

struct EnsembleTrial {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  WeightVector weights;
  std::vector<std::size_t> counts;
  std::optional<LossValue> loss;          // on the selection target
  std::optional<LossValue> holdout_loss;  // when a holdout is configured
  std::optional<FittedModel> model;
  std::string error;                      // non-empty when the trial failed
  std::vector<RowIndex> subsample;        // only with keep_subsamples

  bool ok() const { return loss.has_value(); }
};

struct EnsembleResult {
  std::vector<EnsembleTrial> trials;
  std::size_t best_index = 0;
  std::vector<RowIndex> holdout_rows;  // target rows excluded from selection

  const EnsembleTrial& best() const { return trials.at(best_index); }
  const WeightVector& best_weights() const { return best().weights; }
  const FittedModel& best_model() const { return *best().model; }
  std::size_t failed() const {
    return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(),
                                                  [](const auto& t) { return !t.ok(); }));
  }
};

/// Runs J independent trials. Trial j uses derive_seed(config.seed,
/// "ensemble-trial", j), so results do not depend on thread count or order.
inline EnsembleResult run_ensemble(const Dataset& target, const Dataset& source, const Partition& partition,
                                   const LearnerSpec& learner, const EnsembleConfig& config) {
  config.validate(partition.k());
  learner.validate();
  if (target.rows() == 0) throw DataError("ensemble: target is empty");
  if (partition.size() != source.rows()) throw DataError("ensemble: partition does not cover the source");

  EnsembleResult result;
  std::vector<RowIndex> selection_rows(target.rows());
  std::iota(selection_rows.begin(), selection_rows.end(), RowIndex{0});
  if (config.target_holdout_fraction > 0.0) {
    Rng rng(derive_seed(config.seed, "target-holdout"));
    for (std::size_t i = selection_rows.size(); i > 1; --i) {
      std::swap(selection_rows[i - 1], selection_rows[uniform_index(rng, i)]);
    }
    const auto n_hold = static_cast<std::size_t>(
        std::ceil(config.target_holdout_fraction * static_cast<double>(target.rows())));
    if (n_hold == 0 || n_hold >= target.rows()) {
      throw ConfigError("target holdout leaves an empty selection or holdout set");
    }
    result.holdout_rows.assign(selection_rows.begin(), selection_rows.begin() + static_cast<std::ptrdiff_t>(n_hold));
    selection_rows.erase(selection_rows.begin(), selection_rows.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::sort(result.holdout_rows.begin(), result.holdout_rows.end());
    std::sort(selection_rows.begin(), selection_rows.end());
  }
  const Dataset selection = result.holdout_rows.empty() ? target : target.select(selection_rows);
  const Dataset holdout = result.holdout_rows.empty() ? Dataset{} : target.select(result.holdout_rows);

  result.trials.resize(config.repetitions);
  parallel_for(config.repetitions, config.threads, [&](std::size_t j) {
    EnsembleTrial& trial = result.trials[j];
    trial.index = j;
    trial.seed = derive_seed(config.seed, "ensemble-trial", j);
    Rng rng(trial.seed);
    trial.weights = sample_dirichlet(static_cast<std::size_t>(partition.k()), rng);
    trial.counts = allocate_counts(trial.weights, config.n_training);
    auto rows = stratified_subsample(partition, trial.counts, rng, config.replacement);
    try {
      const Dataset train = source.select(rows);
      FittedModel model = fit(learner, train);
      trial.loss = evaluate(model, selection);
      if (!result.holdout_rows.empty()) trial.holdout_loss = evaluate(model, holdout);
      trial.model = std::move(model);
    } catch (const Error& e) {
      trial.error = e.what();
    }
    if (config.keep_subsamples) trial.subsample = std::move(rows);
  });

  bool any = false;
  for (const auto& t : result.trials) {
    if (!t.ok()) continue;
    if (!any || t.loss->value < result.trials[result.best_index].loss->value) {
      result.best_index = t.index;
      any = true;
    }
  }
  if (!any) {
    throw LearnerError("ensemble: every trial failed; first error: " + result.trials.front().error);
  }
  return result;
}

}  // namespace srcsel
