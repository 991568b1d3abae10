#pragma once

// Experiment configuration: a single JSON document describing data source,
// target split, source partition, learner and selection methods. Unknown keys
// are rejected so typos fail loudly.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "srcsel/artifacts.hpp"
#include "srcsel/bandit.hpp"
#include "srcsel/dataset.hpp"
#include "srcsel/ensemble.hpp"
#include "srcsel/error.hpp"
#include "srcsel/learner.hpp"
#include "srcsel/simgen.hpp"

namespace srcsel {

struct DataSourceSpec {
  enum class Kind { csv, simulate };
  Kind kind = Kind::simulate;
  std::string path;
  CsvOptions csv;
  SimConfig sim;
  /// Simulation seed given explicitly; otherwise derived per repetition.
  std::optional<std::uint64_t> sim_seed;
};

struct PartitionSpec {
  enum class Kind { metadata_bins, metadata_categories, kmeans, random };
  Kind kind = Kind::metadata_bins;
  std::string column;
  std::vector<double> boundaries;
  std::vector<int> ks;  // kmeans / random; one run per value
  bool standardize = true;
  int pca_components = 0;  // 0 = cluster the raw columns
  /// Columns clustered by k-means: "features", "features+meta" or "all"
  /// (features, numeric metadata and the response).
  std::string cluster_on = "features";
  int max_iters = 300;
};

enum class MethodSelection { ensemble, bandit, both };

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;
  DataSourceSpec data;
  SplitSpec split;
  PartitionSpec partition;
  LearnerSpec learner;
  MethodSelection method = MethodSelection::both;
  EnsembleConfig ensemble;
  BanditConfig bandit;
  /// Also run the random-arm baseline and emit the policy comparison.
  bool compare = true;
  unsigned threads = 1;
  std::string output_dir;

  bool runs_ensemble() const { return method != MethodSelection::bandit; }
  bool runs_bandit() const { return method != MethodSelection::ensemble; }

  /// K values the experiment iterates over. Metadata partitions report {0}
  /// because K is only known once the data is loaded.
  std::vector<int> k_values() const {
    if (partition.kind == PartitionSpec::Kind::kmeans || partition.kind == PartitionSpec::Kind::random) {
      return partition.ks;
    }
    if (partition.kind == PartitionSpec::Kind::metadata_bins) {
      return {static_cast<int>(partition.boundaries.size()) + 1};
    }
    return {0};
  }

  void validate() const {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (data.kind == DataSourceSpec::Kind::csv) {
      if (data.path.empty()) throw ConfigError("data.csv.path is required");
      if (data.csv.response_column.empty()) throw ConfigError("data.csv.response is required");
    } else {
      data.sim.validate();
    }
    switch (partition.kind) {
      case PartitionSpec::Kind::metadata_bins:
        if (partition.column.empty()) throw ConfigError("partition.column is required");
        for (std::size_t i = 1; i < partition.boundaries.size(); ++i) {
          if (!(partition.boundaries[i - 1] < partition.boundaries[i])) {
            throw ConfigError("partition.boundaries must be strictly increasing");
          }
        }
        break;
      case PartitionSpec::Kind::metadata_categories:
        if (partition.column.empty()) throw ConfigError("partition.column is required");
        break;
      case PartitionSpec::Kind::kmeans:
      case PartitionSpec::Kind::random:
        if (partition.ks.empty()) throw ConfigError("partition.k is required");
        for (int k : partition.ks) {
          if (k < 1) throw ConfigError("partition.k must be >= 1 (got " + std::to_string(k) + ")");
        }
        if (partition.pca_components < 0) throw ConfigError("partition.pca_components must be >= 0");
        if (partition.cluster_on != "features" && partition.cluster_on != "features+meta" &&
            partition.cluster_on != "all") {
          throw ConfigError("partition.on must be one of features, features+meta, all");
        }
        if (partition.max_iters < 1) throw ConfigError("partition.max_iters must be >= 1");
        break;
    }
    learner.validate();
    if (runs_ensemble()) {
      for (int k : k_values()) ensemble.validate(std::max(k, 1));
    }
    if (runs_bandit()) bandit.validate();
  }
};

namespace detail {

/// Reads keys from a JSON object and reports any that were never consumed.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + "." + key + " is required");
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    try {
      return at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown key " + where_ + "." + it.key());
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

inline double bound_or(const Json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

}  // namespace detail

inline SimConfig parse_sim_config(const Json& j, std::optional<std::uint64_t>* seed_out = nullptr) {
  detail::ObjectReader r(j, "data.simulate");
  SimConfig c;
  c.n = r.get<std::size_t>("n", c.n);
  c.beta = r.get<std::vector<double>>("beta", c.beta);
  c.coef_noise_sd = r.get<std::vector<double>>("coef_noise_sd", c.coef_noise_sd);
  if (r.has("alpha_range")) {
    const auto a = r.get<std::vector<double>>("alpha_range");
    if (a.size() != 2) throw ConfigError("data.simulate.alpha_range needs two values");
    c.alpha_lo = a[0];
    c.alpha_hi = a[1];
  }
  c.noise_scale = r.get<double>("noise_scale", c.noise_scale);
  if (r.has("z_range")) {
    const auto z = r.get<std::vector<double>>("z_range");
    if (z.size() != 2) throw ConfigError("data.simulate.z_range needs two values");
    c.z_lo = z[0];
    c.z_hi = z[1];
  }
  c.breakpoints = r.get<std::vector<double>>("breakpoints", c.breakpoints);
  const auto variant = r.get<std::string>("variant", "time-varying");
  if (variant == "time-varying") {
    c.variant = SimVariant::time_varying;
  } else if (variant == "time-invariant") {
    c.variant = SimVariant::time_invariant;
  } else {
    throw ConfigError("data.simulate.variant must be time-varying or time-invariant");
  }
  c.integer_z = r.get<bool>("integer_z", false);
  if (r.has("seed")) {
    c.seed = r.get<std::uint64_t>("seed");
    if (seed_out) *seed_out = c.seed;
  }
  r.finish();
  return c;
}

inline Json sim_config_to_json(const SimConfig& c, std::optional<std::uint64_t> seed) {
  Json j;
  j["n"] = c.n;
  j["beta"] = c.beta;
  j["coef_noise_sd"] = c.coef_noise_sd;
  j["alpha_range"] = {c.alpha_lo, c.alpha_hi};
  j["noise_scale"] = c.noise_scale;
  j["z_range"] = {c.z_lo, c.z_hi};
  j["breakpoints"] = c.breakpoints;
  j["variant"] = std::string(to_string(c.variant));
  j["integer_z"] = c.integer_z;
  if (seed) j["seed"] = *seed;
  return j;
}

inline SplitSpec parse_split(const Json& j) {
  detail::ObjectReader r(j, "split");
  const auto kind = r.get<std::string>("kind");
  SplitSpec s;
  if (kind == "metadata-range") {
    s.kind = SplitKind::metadata_range;
    const Json& ranges = r.at("ranges");
    if (!ranges.is_array() || ranges.empty()) throw ConfigError("split.ranges must be a non-empty array");
    for (const auto& item : ranges) {
      detail::ObjectReader rr(item, "split.ranges[]");
      RangeCondition c;
      c.column = rr.get<std::string>("column");
      if (rr.has("lower")) c.lower = rr.get<double>("lower");
      if (rr.has("upper")) c.upper = rr.get<double>("upper");
      if (!(c.lower < c.upper)) throw ConfigError("split range on '" + c.column + "' needs lower < upper");
      rr.finish();
      s.ranges.push_back(c);
    }
  } else if (kind == "metadata-equality") {
    s.kind = SplitKind::metadata_equality;
    s.column = r.get<std::string>("column");
    const Json& v = r.at("value");
    s.value = v.is_string() ? v.get<std::string>() : v.dump();
  } else if (kind == "row-index-list") {
    s.kind = SplitKind::row_index_list;
    s.rows = r.get<std::vector<RowIndex>>("rows");
    if (s.rows.empty()) throw ConfigError("split.rows must be non-empty");
  } else {
    throw ConfigError("split.kind must be metadata-range, metadata-equality or row-index-list");
  }
  r.finish();
  return s;
}

inline Json split_to_json(const SplitSpec& s) {
  Json j;
  switch (s.kind) {
    case SplitKind::metadata_range: {
      j["kind"] = "metadata-range";
      Json ranges = Json::array();
      for (const auto& c : s.ranges) {
        Json r{{"column", c.column}};
        if (std::isfinite(c.lower)) r["lower"] = c.lower;
        if (std::isfinite(c.upper)) r["upper"] = c.upper;
        ranges.push_back(r);
      }
      j["ranges"] = ranges;
      break;
    }
    case SplitKind::metadata_equality:
      j["kind"] = "metadata-equality";
      j["column"] = s.column;
      j["value"] = s.value;
      break;
    case SplitKind::row_index_list:
      j["kind"] = "row-index-list";
      j["rows"] = s.rows;
      break;
  }
  return j;
}

inline PartitionSpec parse_partition(const Json& j) {
  detail::ObjectReader r(j, "partition");
  PartitionSpec p;
  const auto method = r.get<std::string>("method");
  auto read_ks = [&] {
    const Json& k = r.at("k");
    try {
      if (k.is_array()) {
        p.ks = k.get<std::vector<int>>();
      } else {
        p.ks = {k.get<int>()};
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("partition.k: ") + e.what());
    }
  };
  if (method == "metadata") {
    p.column = r.get<std::string>("column");
    if (r.has("boundaries")) {
      p.kind = PartitionSpec::Kind::metadata_bins;
      p.boundaries = r.get<std::vector<double>>("boundaries");
    } else {
      p.kind = PartitionSpec::Kind::metadata_categories;
    }
  } else if (method == "kmeans") {
    p.kind = PartitionSpec::Kind::kmeans;
    read_ks();
    p.standardize = r.get<bool>("standardize", true);
    p.pca_components = r.get<int>("pca_components", 0);
    p.cluster_on = r.get<std::string>("on", "features");
    p.max_iters = r.get<int>("max_iters", 300);
  } else if (method == "random") {
    p.kind = PartitionSpec::Kind::random;
    read_ks();
  } else {
    throw ConfigError("partition.method must be metadata, kmeans or random");
  }
  r.finish();
  return p;
}

inline Json partition_to_json(const PartitionSpec& p) {
  Json j;
  switch (p.kind) {
    case PartitionSpec::Kind::metadata_bins:
      j["method"] = "metadata";
      j["column"] = p.column;
      j["boundaries"] = p.boundaries;
      break;
    case PartitionSpec::Kind::metadata_categories:
      j["method"] = "metadata";
      j["column"] = p.column;
      break;
    case PartitionSpec::Kind::kmeans:
      j["method"] = "kmeans";
      j["k"] = p.ks;
      j["standardize"] = p.standardize;
      j["pca_components"] = p.pca_components;
      j["on"] = p.cluster_on;
      j["max_iters"] = p.max_iters;
      break;
    case PartitionSpec::Kind::random:
      j["method"] = "random";
      j["k"] = p.ks;
      break;
  }
  return j;
}

inline LearnerSpec parse_learner(const Json& j) {
  detail::ObjectReader r(j, "learner");
  LearnerSpec l;
  const auto family = r.get<std::string>("family", "least-squares");
  if (family == "least-squares") {
    l.family = LearnerFamily::least_squares;
  } else if (family == "logistic") {
    l.family = LearnerFamily::logistic;
  } else {
    throw ConfigError("learner.family must be least-squares or logistic");
  }
  l.intercept = r.get<bool>("intercept", true);
  l.ridge_epsilon = r.get<double>("ridge_epsilon", 0.0);
  l.max_iters = r.get<int>("max_iters", 100);
  l.tolerance = r.get<double>("tolerance", 1e-10);
  r.finish();
  return l;
}

inline Json learner_to_json(const LearnerSpec& l) {
  return Json{{"family", std::string(to_string(l.family))},
              {"intercept", l.intercept},
              {"ridge_epsilon", l.ridge_epsilon},
              {"max_iters", l.max_iters},
              {"tolerance", l.tolerance}};
}

inline ExperimentConfig parse_config(const Json& j) {
  detail::ObjectReader r(j, "config");
  ExperimentConfig c;
  c.name = r.get<std::string>("name", "experiment");
  c.seed = r.get<std::uint64_t>("seed", 0);
  {
    const auto reps = r.get<std::int64_t>("repetitions", 1);
    if (reps < 1) throw ConfigError("repetitions must be >= 1");
    c.repetitions = static_cast<std::size_t>(reps);
  }

  {
    detail::ObjectReader d(r.at("data"), "data");
    const bool has_csv = d.has("csv");
    const bool has_sim = d.has("simulate");
    if (has_csv == has_sim) throw ConfigError("data needs exactly one of csv or simulate");
    if (has_csv) {
      detail::ObjectReader cr(d.at("csv"), "data.csv");
      c.data.kind = DataSourceSpec::Kind::csv;
      c.data.path = cr.get<std::string>("path");
      c.data.csv.response_column = cr.get<std::string>("response");
      c.data.csv.meta_columns = cr.get<std::vector<std::string>>("meta", {});
      c.data.csv.ignore_columns = cr.get<std::vector<std::string>>("ignore", {});
      c.data.csv.drop_incomplete_rows = cr.get<bool>("drop_incomplete_rows", false);
      c.data.csv.meta_as_features = cr.get<bool>("meta_as_features", false);
      cr.finish();
    } else {
      c.data.kind = DataSourceSpec::Kind::simulate;
      c.data.sim = parse_sim_config(d.at("simulate"), &c.data.sim_seed);
    }
    d.finish();
  }

  c.split = parse_split(r.at("split"));
  c.partition = parse_partition(r.at("partition"));
  c.learner = r.has("learner") ? parse_learner(r.at("learner")) : LearnerSpec{};

  const auto method = r.get<std::string>("method", "both");
  if (method == "ensemble") {
    c.method = MethodSelection::ensemble;
  } else if (method == "bandit") {
    c.method = MethodSelection::bandit;
  } else if (method == "both") {
    c.method = MethodSelection::both;
  } else {
    throw ConfigError("method must be ensemble, bandit or both");
  }

  if (r.has("ensemble")) {
    detail::ObjectReader e(r.at("ensemble"), "ensemble");
    const auto jj = e.get<std::int64_t>("J", 1000);
    const auto nt = e.get<std::int64_t>("n_training", 1000);
    if (jj < 1) throw ConfigError("ensemble.J must be >= 1");
    if (nt < 1) throw ConfigError("ensemble.n_training must be >= 1");
    c.ensemble.repetitions = static_cast<std::size_t>(jj);
    c.ensemble.n_training = static_cast<std::size_t>(nt);
    const auto repl = e.get<std::string>("replacement", "auto");
    if (repl == "auto") {
      c.ensemble.replacement = Replacement::automatic;
    } else if (repl == "always") {
      c.ensemble.replacement = Replacement::always;
    } else {
      throw ConfigError("ensemble.replacement must be auto or always");
    }
    c.ensemble.target_holdout_fraction = e.get<double>("target_holdout_fraction", 0.0);
    e.finish();
  }
  if (r.has("bandit")) {
    detail::ObjectReader b(r.at("bandit"), "bandit");
    c.bandit.max_iterations = b.get<int>("H", 30);
    const auto batch = b.get<std::int64_t>("b", 10);
    if (batch < 1) throw ConfigError("bandit.b must be >= 1");
    c.bandit.batch_size = static_cast<std::size_t>(batch);
    c.bandit.epsilon = b.get<double>("epsilon", 0.0);
    c.bandit.alpha0 = b.get<double>("alpha0", 1.0);
    c.bandit.beta0 = b.get<double>("beta0", 1.0);
    const auto policy = b.get<std::string>("policy", "thompson");
    if (policy == "thompson") {
      c.bandit.policy = Policy::thompson;
    } else if (policy == "random") {
      c.bandit.policy = Policy::random;
    } else {
      throw ConfigError("bandit.policy must be thompson or random");
    }
    b.finish();
  }
  c.compare = r.get<bool>("compare", true);
  c.threads = r.get<unsigned>("threads", 1);
  c.output_dir = r.get<std::string>("output_dir", "");
  r.finish();
  c.validate();
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Resolved configuration, suitable for echoing into a run directory and for
/// parsing back.
inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["repetitions"] = c.repetitions;
  if (c.data.kind == DataSourceSpec::Kind::csv) {
    j["data"]["csv"] = Json{{"path", c.data.path},
                            {"response", c.data.csv.response_column},
                            {"meta", c.data.csv.meta_columns},
                            {"ignore", c.data.csv.ignore_columns},
                            {"drop_incomplete_rows", c.data.csv.drop_incomplete_rows},
                            {"meta_as_features", c.data.csv.meta_as_features}};
  } else {
    j["data"]["simulate"] = sim_config_to_json(c.data.sim, c.data.sim_seed);
  }
  j["split"] = split_to_json(c.split);
  j["partition"] = partition_to_json(c.partition);
  j["learner"] = learner_to_json(c.learner);
  j["method"] = c.method == MethodSelection::ensemble ? "ensemble"
                : c.method == MethodSelection::bandit ? "bandit"
                                                      : "both";
  j["ensemble"] = Json{{"J", c.ensemble.repetitions},
                       {"n_training", c.ensemble.n_training},
                       {"replacement", c.ensemble.replacement == Replacement::automatic ? "auto" : "always"},
                       {"target_holdout_fraction", c.ensemble.target_holdout_fraction}};
  j["bandit"] = Json{{"H", c.bandit.max_iterations},
                     {"b", c.bandit.batch_size},
                     {"epsilon", c.bandit.epsilon},
                     {"alpha0", c.bandit.alpha0},
                     {"beta0", c.bandit.beta0},
                     {"policy", std::string(to_string(c.bandit.policy))}};
  j["compare"] = c.compare;
  j["threads"] = c.threads;
  return j;
}

// ---------------------------------------------------------------------------
// Presets

inline const std::map<std::string, std::string>& preset_sources() {
  static const std::map<std::string, std::string> presets{
      {"sim-time-varying", R"({
  "name": "sim-time-varying",
  "seed": 20240,
  "repetitions": 20,
  "data": {"simulate": {"n": 1000, "variant": "time-varying"}},
  "split": {"kind": "metadata-range", "ranges": [{"column": "z", "lower": 9}]},
  "partition": {"method": "metadata", "column": "z", "boundaries": [3, 5]},
  "learner": {"family": "least-squares", "intercept": true},
  "method": "both",
  "ensemble": {"J": 1000, "n_training": 1000},
  "bandit": {"H": 30, "b": 10, "epsilon": 0, "alpha0": 1, "beta0": 1},
  "compare": true
})"},
      {"sim-time-invariant", R"({
  "name": "sim-time-invariant",
  "seed": 20241,
  "repetitions": 20,
  "data": {"simulate": {"n": 1000, "variant": "time-invariant"}},
  "split": {"kind": "metadata-range", "ranges": [{"column": "z", "lower": 9}]},
  "partition": {"method": "metadata", "column": "z", "boundaries": [3, 5]},
  "learner": {"family": "least-squares", "intercept": true},
  "method": "both",
  "ensemble": {"J": 1000, "n_training": 1000},
  "bandit": {"H": 30, "b": 10, "epsilon": 0, "alpha0": 1, "beta0": 1},
  "compare": true
})"},
      {"california", R"({
  "name": "california",
  "seed": 9,
  "repetitions": 10,
  "data": {"csv": {
    "path": "data/california_housing.csv",
    "response": "median_house_value",
    "meta": ["longitude", "latitude"],
    "ignore": ["ocean_proximity"],
    "drop_incomplete_rows": true
  }},
  "split": {"kind": "metadata-range", "ranges": [
    {"column": "longitude", "lower": -122.6, "upper": -121.8},
    {"column": "latitude", "lower": 37.2, "upper": 38.0}
  ]},
  "partition": {"method": "kmeans", "k": [2, 3, 4, 5], "standardize": true, "on": "all"},
  "learner": {"family": "least-squares", "intercept": true},
  "method": "both",
  "ensemble": {"J": 200, "n_training": 200},
  "bandit": {"H": 200, "b": 20, "epsilon": 0, "alpha0": 1, "beta0": 1},
  "compare": true
})"},
      {"features-classification", R"({
  "name": "features-classification",
  "seed": 17,
  "repetitions": 3,
  "data": {"csv": {"path": "data/features.csv", "response": "label", "meta": ["hospital"]}},
  "split": {"kind": "metadata-equality", "column": "hospital", "value": "5"},
  "partition": {"method": "kmeans", "k": [2, 3, 4, 5], "standardize": true, "pca_components": 50, "on": "features"},
  "learner": {"family": "logistic", "intercept": true, "ridge_epsilon": 1e-6, "max_iters": 100},
  "method": "bandit",
  "bandit": {"H": 100, "b": 30, "epsilon": 0, "alpha0": 1, "beta0": 1},
  "compare": true
})"},
  };
  return presets;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : preset_sources()) names.push_back(name);
  return names;
}

inline ExperimentConfig preset(const std::string& name) {
  const auto& all = preset_sources();
  const auto it = all.find(name);
  if (it == all.end()) throw ConfigError("unknown preset '" + name + "'");
  return parse_config_text(it->second);
}

}  // namespace srcsel
