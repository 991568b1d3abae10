#pragma once

// CSV and JSON renderings of results. Column layouts:
//
//   ensemble trial table   trial,w_1..w_K,loss[,holdout_loss]
//   bandit trajectory      h,arm,reward,metric,count_1..count_K,D_h
//   partition labels       source_row,subset
//
// Subsets and arms are 1-based in every file.

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "srcsel/bandit.hpp"
#include "srcsel/csv.hpp"
#include "srcsel/diagnostics.hpp"
#include "srcsel/ensemble.hpp"
#include "srcsel/learner.hpp"
#include "srcsel/partition.hpp"

namespace srcsel {

using Json = nlohmann::ordered_json;

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

inline void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

inline Json to_json(const FittedModel& m) {
  Json j;
  j["family"] = std::string(to_string(m.family));
  j["intercept"] = m.intercept;
  j["coefficients"] = std::vector<double>(m.coefficients.begin(), m.coefficients.end());
  j["rank"] = m.rank;
  j["ridge_used"] = m.ridge_used;
  if (m.family == LearnerFamily::logistic) {
    j["converged"] = m.converged;
    j["iterations"] = m.iterations;
  }
  return j;
}

inline FittedModel model_from_json(const Json& j) {
  FittedModel m;
  const auto family = j.at("family").get<std::string>();
  if (family == "least-squares") {
    m.family = LearnerFamily::least_squares;
  } else if (family == "logistic") {
    m.family = LearnerFamily::logistic;
  } else {
    throw DataError("unknown model family '" + family + "'");
  }
  m.intercept = j.at("intercept").get<bool>();
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  m.coefficients = Eigen::Map<const Vector>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  m.rank = j.value("rank", 0);
  m.ridge_used = j.value("ridge_used", false);
  return m;
}

inline Json to_json(const LossValue& l) {
  return Json{{"metric", std::string(to_string(l.metric))}, {"value", l.value}};
}

inline std::vector<double> to_vector(const WeightVector& w) { return {w.begin(), w.end()}; }

inline void write_partition_labels(const std::string& path, const Dataset& source, const Partition& partition) {
  auto out = open_csv(path);
  csv::write_row(out, {"source_row", "subset"});
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const RowIndex row = source.origin.empty() ? i : source.origin[i];
    csv::write_row(out, {std::to_string(row), std::to_string(partition.label(i) + 1)});
  }
}

inline void write_trial_table(const std::string& path, const EnsembleResult& result) {
  auto out = open_csv(path);
  const std::size_t k = result.trials.front().weights.size();
  const bool holdout = !result.holdout_rows.empty();
  std::vector<std::string> header{"trial"};
  for (std::size_t s = 0; s < k; ++s) header.push_back("w_" + std::to_string(s + 1));
  header.push_back("loss");
  if (holdout) header.push_back("holdout_loss");
  csv::write_row(out, header);
  for (const auto& t : result.trials) {
    std::vector<std::string> row{std::to_string(t.index)};
    for (double w : t.weights) row.push_back(csv::format_double(w));
    row.push_back(t.ok() ? csv::format_double(t.loss->value) : "nan");
    if (holdout) row.push_back(t.holdout_loss ? csv::format_double(t.holdout_loss->value) : "nan");
    csv::write_row(out, row);
  }
}

inline Json ensemble_best_json(const EnsembleResult& result) {
  const auto& best = result.best();
  Json j;
  j["best_trial"] = best.index;
  j["weights"] = to_vector(best.weights);
  j["counts"] = best.counts;
  j["loss"] = to_json(*best.loss);
  if (best.holdout_loss) j["holdout_loss"] = to_json(*best.holdout_loss);
  j["summary_stat"] = summary_stat(best.weights).value;
  j["model"] = to_json(*best.model);
  Json failures = Json::array();
  for (const auto& t : result.trials) {
    if (!t.ok()) failures.push_back({{"trial", t.index}, {"error", t.error}});
  }
  j["failed_trials"] = failures;
  return j;
}

inline void write_trajectory(const std::string& path, const Trajectory& t) {
  auto out = open_csv(path);
  std::vector<std::string> header{"h", "arm", "reward", "metric"};
  for (int s = 0; s < t.k; ++s) header.push_back("count_" + std::to_string(s + 1));
  header.push_back("D_h");
  csv::write_row(out, header);
  for (const auto& step : t.steps) {
    std::vector<std::string> row{std::to_string(step.h), std::to_string(step.arm + 1),
                                 std::to_string(step.reward), csv::format_double(step.metric.value)};
    for (auto c : step.counts) row.push_back(std::to_string(c));
    row.push_back(csv::format_double(step.summary));
    csv::write_row(out, row);
  }
}

/// Final posterior plus one snapshot per iteration (state after its update).
inline Json posterior_json(const Trajectory& t) {
  Json j;
  j["policy"] = std::string(to_string(t.policy));
  j["alpha0"] = t.posterior.alpha0;
  j["beta0"] = t.posterior.beta0;
  j["alpha"] = t.posterior.alpha;
  j["beta"] = t.posterior.beta;
  Json snaps = Json::array();
  ArmPosterior p = ArmPosterior::prior(t.k, t.posterior.alpha0, t.posterior.beta0);
  for (const auto& s : t.steps) {
    p = update_posterior(std::move(p), s.arm, s.reward);
    snaps.push_back({{"h", s.h}, {"alpha", p.alpha}, {"beta", p.beta}});
  }
  j["snapshots"] = snaps;
  return j;
}

inline Json trajectory_summary_json(const Trajectory& t) {
  Json j;
  j["policy"] = std::string(to_string(t.policy));
  j["iterations"] = t.iterations();
  j["stopped_early"] = t.stopped_early;
  j["initial_metric"] = to_json(t.initial_metric);
  j["final_metric"] = to_json(t.final_metric());
  j["final_summary_stat"] = t.steps.empty() ? 0.0 : t.steps.back().summary;
  j["final_composition"] = t.steps.empty() ? std::vector<double>{}
                                           : to_vector(composition_weights(t.steps.back().counts));
  j["occurrence"] = occurrence_table(t);
  j["cumulative_reward"] = t.cumulative_reward();
  j["training_set_size"] = t.training_rows.size();
  return j;
}

}  // namespace srcsel
