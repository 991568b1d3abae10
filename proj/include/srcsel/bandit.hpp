#pragma once

// Sequential source selection with a Beta-Bernoulli bandit. Each arm is a
// source subset; pulling it appends a batch of that subset's rows to the
// training set. The reward is 1 when the refit model strictly improves the
// target metric, else 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/diagnostics.hpp"
#include "srcsel/error.hpp"
#include "srcsel/learner.hpp"
#include "srcsel/partition.hpp"
#include "srcsel/random.hpp"

namespace srcsel {

enum class Policy { thompson, random };

inline std::string_view to_string(Policy p) { return p == Policy::thompson ? "thompson" : "random"; }

struct ArmPosterior {
  std::vector<double> alpha;
  std::vector<double> beta;
  double alpha0 = 1.0;
  double beta0 = 1.0;

  static ArmPosterior prior(int k, double alpha0 = 1.0, double beta0 = 1.0) {
    if (k < 1) throw ConfigError("bandit needs K >= 1");
    if (!(alpha0 > 0.0) || !(beta0 > 0.0)) throw ConfigError("bandit priors must be positive");
    ArmPosterior p;
    p.alpha.assign(static_cast<std::size_t>(k), alpha0);
    p.beta.assign(static_cast<std::size_t>(k), beta0);
    p.alpha0 = alpha0;
    p.beta0 = beta0;
    return p;
  }

  int k() const { return static_cast<int>(alpha.size()); }

  /// Number of updates applied to an arm.
  double pulls(int arm) const {
    const auto a = static_cast<std::size_t>(arm);
    return alpha[a] + beta[a] - alpha0 - beta0;
  }

  friend bool operator==(const ArmPosterior&, const ArmPosterior&) = default;
};

/// Beta(a, b) as X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b). The result is
/// clamped to the open unit interval.
inline double sample_beta(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("sample_beta: parameters must be positive");
  const double x = sample_gamma(a, rng);
  const double y = sample_gamma(b, rng);
  const double v = x / (x + y);
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  if (!(v > 0.0)) return lo;
  return std::min(v, hi);
}

/// Thompson: one posterior draw per arm, argmax with ties to the lowest
/// index. Random: uniform over arms.
inline int choose_arm(const ArmPosterior& posterior, Policy policy, Rng& rng) {
  const int k = posterior.k();
  if (k < 1) throw Error("choose_arm: no arms");
  if (policy == Policy::random) return static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
  int best = 0;
  double best_draw = -1.0;
  for (int arm = 0; arm < k; ++arm) {
    const auto i = static_cast<std::size_t>(arm);
    const double draw = sample_beta(posterior.alpha[i], posterior.beta[i], rng);
    if (draw > best_draw) {
      best_draw = draw;
      best = arm;
    }
  }
  return best;
}

/// 1 when the current loss is strictly below the previous one.
inline int compute_reward(const LossValue& previous, const LossValue& current) {
  if (previous.metric != current.metric) throw Error("compute_reward: metric kinds differ");
  return current.value < previous.value ? 1 : 0;
}

inline ArmPosterior update_posterior(ArmPosterior posterior, int arm, int reward) {
  if (arm < 0 || arm >= posterior.k()) throw Error("update_posterior: arm out of range");
  const auto i = static_cast<std::size_t>(arm);
  if (reward == 1) {
    posterior.alpha[i] += 1.0;
  } else {
    posterior.beta[i] += 1.0;
  }
  return posterior;
}

struct BanditConfig {
  int max_iterations = 30;  // H
  std::size_t batch_size = 10;  // b
  /// Stop once |a_h - a_{h-1}| <= epsilon. Zero disables the check so the
  /// loop always runs max_iterations.
  double epsilon = 0.0;
  double alpha0 = 1.0;
  double beta0 = 1.0;
  std::uint64_t seed = 0;
  Policy policy = Policy::thompson;

  void validate() const {
    if (max_iterations < 1) throw ConfigError("bandit H must be >= 1");
    if (batch_size < 1) throw ConfigError("bandit b must be >= 1");
    if (!(epsilon >= 0.0)) throw ConfigError("bandit epsilon must be >= 0");
    if (!(alpha0 > 0.0) || !(beta0 > 0.0)) throw ConfigError("bandit alpha0 and beta0 must be > 0");
  }
};

struct BanditStep {
  int h = 0;       // 1-based iteration
  int arm = 0;     // 0-based subset
  int reward = 0;
  LossValue metric;
  std::vector<std::size_t> counts;  // per-subset rows in the training set
  double summary = 0.0;             // summary_stat of the composition
};

struct Trajectory {
  int k = 0;
  Policy policy = Policy::thompson;
  LossValue initial_metric;
  std::vector<RowIndex> initial_rows;  // rows used only for the initial model
  std::vector<BanditStep> steps;
  std::vector<RowIndex> training_rows;  // accumulated multiset, in draw order
  ArmPosterior posterior;
  bool stopped_early = false;

  std::size_t iterations() const { return steps.size(); }

  std::vector<int> arms() const {
    std::vector<int> out;
    for (const auto& s : steps) out.push_back(s.arm);
    return out;
  }

  int cumulative_reward() const {
    int total = 0;
    for (const auto& s : steps) total += s.reward;
    return total;
  }

  const LossValue& final_metric() const { return steps.empty() ? initial_metric : steps.back().metric; }
};

inline std::vector<std::size_t> occurrence_table(const Trajectory& t) {
  const auto arms = t.arms();
  return occurrence_table(arms, t.k);
}

/// Raised when the learner fails mid-run. Carries the trajectory up to the
/// last completed iteration.
class BanditAborted : public Error {
 public:
  BanditAborted(const std::string& what, Trajectory partial)
      : Error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// The initial model is fit on b rows drawn uniformly (with replacement)
/// from the whole source; those rows are not part of the training set. Each
/// iteration then draws b rows with replacement from the chosen subset, refits
/// on the accumulated set and scores the target.
inline Trajectory run_bandit(const Dataset& target, const Dataset& source, const Partition& partition,
                             const LearnerSpec& learner, const BanditConfig& config) {
  config.validate();
  learner.validate();
  if (target.rows() == 0) throw DataError("bandit: target is empty");
  if (partition.size() != source.rows()) throw DataError("bandit: partition does not cover the source");

  const int k = partition.k();
  Rng rng(config.seed);
  Trajectory traj;
  traj.k = k;
  traj.policy = config.policy;
  traj.posterior = ArmPosterior::prior(k, config.alpha0, config.beta0);

  for (std::size_t i = 0; i < config.batch_size; ++i) {
    traj.initial_rows.push_back(uniform_index(rng, source.rows()));
  }
  try {
    traj.initial_metric = evaluate(fit(learner, source.select(traj.initial_rows)), target);
  } catch (const Error& e) {
    throw BanditAborted(std::string("bandit: initial model failed: ") + e.what(), traj);
  }

  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  LossValue previous = traj.initial_metric;
  for (int h = 1; h <= config.max_iterations; ++h) {
    const int arm = choose_arm(traj.posterior, config.policy, rng);
    const auto& members = partition.members(arm);
    for (std::size_t i = 0; i < config.batch_size; ++i) {
      traj.training_rows.push_back(members[uniform_index(rng, members.size())]);
    }
    counts[static_cast<std::size_t>(arm)] += config.batch_size;

    LossValue current;
    try {
      current = evaluate(fit(learner, source.select(traj.training_rows)), target);
    } catch (const Error& e) {
      traj.training_rows.resize(traj.training_rows.size() - config.batch_size);
      throw BanditAborted("bandit: iteration " + std::to_string(h) + " failed: " + e.what(), traj);
    }
    const int reward = compute_reward(previous, current);
    traj.posterior = update_posterior(std::move(traj.posterior), arm, reward);

    BanditStep step;
    step.h = h;
    step.arm = arm;
    step.reward = reward;
    step.metric = current;
    step.counts = counts;
    step.summary = summary_stat(composition_weights(counts)).value;
    traj.steps.push_back(std::move(step));

    const bool settled = config.epsilon > 0.0 && std::abs(current.value - previous.value) <= config.epsilon;
    previous = current;
    if (settled && h < config.max_iterations) {
      traj.stopped_early = true;
      break;
    }
  }
  return traj;
}

}  // namespace srcsel
