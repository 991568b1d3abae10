#pragma once

// Experiment orchestration: load or simulate data, split target/source,
// partition the source, run the selection methods and persist every result.
//
// A run directory looks like
//
//   config.json            resolved configuration (thread count omitted)
//   units/k<K>-rep<R>/     one directory per (K, repetition)
//     partition.csv, ensemble_trials.csv, ensemble_best.json,
//     trajectory_<policy>.csv, posterior_<policy>.json, summary.json, done.json
//   comparison.csv         per-iteration mean metric per policy (when compared)
//   comparison_pairs.csv   final metrics of each paired repetition
//   comparison.json        win rates
//   summary.json           run-level summary
//   manifest.json          derived seeds and SHA-256 of every file above
//
// Seeds: every stream is derive_seed(master, name, repetition) with names
// "data", "partition", "ensemble", "bandit-thompson" and "bandit-random".
// The same seeds are reused for every K so K values share random numbers.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "srcsel/artifacts.hpp"
#include "srcsel/bandit.hpp"
#include "srcsel/config.hpp"
#include "srcsel/dataset.hpp"
#include "srcsel/diagnostics.hpp"
#include "srcsel/ensemble.hpp"
#include "srcsel/error.hpp"
#include "srcsel/hash.hpp"
#include "srcsel/partition.hpp"
#include "srcsel/random.hpp"
#include "srcsel/simgen.hpp"

namespace srcsel {

namespace fs = std::filesystem;

/// A failure after validation, while the pipeline was running.
class PipelineError : public Error {
 public:
  using Error::Error;
};

struct UnitSeeds {
  std::uint64_t data = 0;
  std::uint64_t partition = 0;
  std::uint64_t ensemble = 0;
  std::uint64_t thompson = 0;
  std::uint64_t random = 0;
};

inline UnitSeeds unit_seeds(const ExperimentConfig& config, std::size_t rep) {
  UnitSeeds s;
  s.data = config.data.sim_seed ? *config.data.sim_seed : derive_seed(config.seed, "data", rep);
  s.partition = derive_seed(config.seed, "partition", rep);
  s.ensemble = derive_seed(config.seed, "ensemble", rep);
  s.thompson = derive_seed(config.seed, "bandit-thompson", rep);
  s.random = derive_seed(config.seed, "bandit-random", rep);
  return s;
}

/// Loads (or simulates) the data for one repetition and splits it.
inline SplitResult prepare_data(const ExperimentConfig& config, std::size_t rep,
                                const Dataset* cached = nullptr) {
  Dataset full;
  if (config.data.kind == DataSourceSpec::Kind::csv) {
    full = cached ? *cached : load_csv(config.data.path, config.data.csv);
  } else {
    SimConfig sim = config.data.sim;
    sim.seed = unit_seeds(config, rep).data;
    full = generate(sim);
  }
  return split_target_source(full, config.split);
}

/// Matrix handed to k-means for the configured column set.
inline Matrix clustering_matrix(const Dataset& source, const PartitionSpec& spec) {
  std::vector<Vector> extra;
  if (spec.cluster_on == "features+meta" || spec.cluster_on == "all") {
    for (const auto& m : source.meta) {
      if (!m.is_numeric) continue;
      if (std::find(source.feature_names.begin(), source.feature_names.end(), m.name) !=
          source.feature_names.end()) {
        continue;
      }
      extra.push_back(Eigen::Map<const Vector>(m.numeric.data(), static_cast<Eigen::Index>(m.numeric.size())));
    }
  }
  if (spec.cluster_on == "all") extra.push_back(source.response);
  Matrix x(source.features.rows(), source.features.cols() + static_cast<Eigen::Index>(extra.size()));
  x.leftCols(source.features.cols()) = source.features;
  for (std::size_t e = 0; e < extra.size(); ++e) {
    x.col(source.features.cols() + static_cast<Eigen::Index>(e)) = extra[e];
  }
  return x;
}

/// Partitions the source per the spec. `k` is ignored for metadata methods.
inline Partition build_partition(const Dataset& source, const PartitionSpec& spec, int k, std::uint64_t seed) {
  switch (spec.kind) {
    case PartitionSpec::Kind::metadata_bins:
      return partition_by_metadata(source, spec.column, spec.boundaries);
    case PartitionSpec::Kind::metadata_categories:
      return partition_by_category(source, spec.column);
    case PartitionSpec::Kind::random:
      return partition_random(source.rows(), k, seed);
    case PartitionSpec::Kind::kmeans: {
      Matrix x = clustering_matrix(source, spec);
      KMeansOptions opts;
      opts.max_iters = spec.max_iters;
      opts.standardize = spec.standardize;
      if (spec.pca_components > 0) {
        if (spec.standardize) x = standardize_columns(x);
        x = fit_pca(x, spec.pca_components).transform(x);
        opts.standardize = false;
      }
      return kmeans(x, k, seed, opts).partition;
    }
  }
  throw ConfigError("unknown partition kind");
}

// ---------------------------------------------------------------------------
// Per-unit outcomes

struct PolicyOutcome {
  Policy policy = Policy::thompson;
  std::vector<double> metrics;  // a_1..a_H
  double initial_metric = 0.0;
  double final_metric = 0.0;
  double final_summary = 0.0;
  std::vector<double> final_composition;
  int cumulative_reward = 0;
};

inline PolicyOutcome outcome_of(const Trajectory& t) {
  PolicyOutcome o;
  o.policy = t.policy;
  for (const auto& s : t.steps) o.metrics.push_back(s.metric.value);
  o.initial_metric = t.initial_metric.value;
  o.final_metric = t.final_metric().value;
  o.final_summary = t.steps.empty() ? 0.0 : t.steps.back().summary;
  if (!t.steps.empty()) o.final_composition = to_vector(composition_weights(t.steps.back().counts));
  o.cumulative_reward = t.cumulative_reward();
  return o;
}

struct EnsembleOutcome {
  std::vector<double> best_weights;
  double best_loss = 0.0;
  double summary = 0.0;
  /// Spearman correlation between the last subset's weight and trial loss.
  double last_weight_loss_spearman = 0.0;
};

struct UnitOutcome {
  int k = 0;
  std::size_t rep = 0;
  UnitSeeds seeds;
  std::string dir;  // relative to the run directory
  std::size_t target_rows = 0;
  std::size_t source_rows = 0;
  std::vector<std::size_t> subset_sizes;
  Metric metric = Metric::mse;
  std::optional<EnsembleOutcome> ensemble;
  std::optional<PolicyOutcome> thompson;
  std::optional<PolicyOutcome> random;

  const std::optional<PolicyOutcome>& outcome(Policy p) const { return p == Policy::thompson ? thompson : random; }
};

inline EnsembleOutcome outcome_of(const EnsembleResult& r) {
  EnsembleOutcome o;
  o.best_weights = to_vector(r.best_weights());
  o.best_loss = r.best().loss->value;
  o.summary = summary_stat(r.best_weights()).value;
  std::vector<double> w_last;
  std::vector<double> loss;
  for (const auto& t : r.trials) {
    if (!t.ok()) continue;
    w_last.push_back(t.weights[t.weights.size() - 1]);
    loss.push_back(t.loss->value);
  }
  o.last_weight_loss_spearman = w_last.size() >= 2 ? spearman(w_last, loss) : 0.0;
  return o;
}

inline std::string unit_name(int k, std::size_t rep) {
  std::ostringstream s;
  s << "k" << k << "-rep" << std::setw(3) << std::setfill('0') << rep;
  return s.str();
}

inline std::vector<Policy> policies_to_run(const ExperimentConfig& config) {
  if (!config.runs_bandit()) return {};
  if (config.compare) return {Policy::thompson, Policy::random};
  return {config.bandit.policy};
}

inline Json unit_summary_json(const UnitOutcome& u) {
  Json j;
  j["unit"] = u.dir;
  j["k"] = u.k;
  j["repetition"] = u.rep;
  j["target_rows"] = u.target_rows;
  j["source_rows"] = u.source_rows;
  j["subset_sizes"] = u.subset_sizes;
  j["metric"] = std::string(to_string(u.metric));
  if (u.ensemble) {
    j["ensemble"] = Json{{"best_weights", u.ensemble->best_weights},
                         {"best_loss", u.ensemble->best_loss},
                         {"summary_stat", u.ensemble->summary},
                         {"last_subset_weight_loss_spearman", u.ensemble->last_weight_loss_spearman}};
  }
  for (const auto* o : {&u.thompson, &u.random}) {
    if (!*o) continue;
    const auto& p = **o;
    j["bandit"][std::string(to_string(p.policy))] = Json{{"initial_metric", p.initial_metric},
                                                         {"final_metric", p.final_metric},
                                                         {"final_summary_stat", p.final_summary},
                                                         {"final_composition", p.final_composition},
                                                         {"cumulative_reward", p.cumulative_reward},
                                                         {"iterations", p.metrics.size()}};
  }
  return j;
}

inline UnitOutcome unit_from_summary(const Json& j, const UnitSeeds& seeds,
                                     const std::map<Policy, std::vector<double>>& curves) {
  UnitOutcome u;
  u.dir = j.at("unit").get<std::string>();
  u.k = j.at("k").get<int>();
  u.rep = j.at("repetition").get<std::size_t>();
  u.seeds = seeds;
  u.target_rows = j.at("target_rows").get<std::size_t>();
  u.source_rows = j.at("source_rows").get<std::size_t>();
  u.subset_sizes = j.at("subset_sizes").get<std::vector<std::size_t>>();
  u.metric = j.at("metric").get<std::string>() == "mse" ? Metric::mse : Metric::error_rate;
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    u.ensemble = EnsembleOutcome{e.at("best_weights").get<std::vector<double>>(), e.at("best_loss").get<double>(),
                                 e.at("summary_stat").get<double>(),
                                 e.at("last_subset_weight_loss_spearman").get<double>()};
  }
  if (j.contains("bandit")) {
    for (const auto& [name, p] : j.at("bandit").items()) {
      PolicyOutcome o;
      o.policy = name == "thompson" ? Policy::thompson : Policy::random;
      o.initial_metric = p.at("initial_metric").get<double>();
      o.final_metric = p.at("final_metric").get<double>();
      o.final_summary = p.at("final_summary_stat").get<double>();
      o.final_composition = p.at("final_composition").get<std::vector<double>>();
      o.cumulative_reward = p.at("cumulative_reward").get<int>();
      o.metrics = curves.at(o.policy);
      (o.policy == Policy::thompson ? u.thompson : u.random) = std::move(o);
    }
  }
  return u;
}

inline Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline std::vector<double> read_metric_column(const std::string& path) {
  const auto table = csv::read_file(path);
  const auto it = std::find(table.header.begin(), table.header.end(), "metric");
  if (it == table.header.end()) throw PipelineError("trajectory file '" + path + "' has no metric column");
  const auto col = static_cast<std::size_t>(it - table.header.begin());
  std::vector<double> out;
  for (const auto& r : table.rows) out.push_back(csv::parse_double(r.fields.at(col)).value_or(0.0));
  return out;
}

/// Runs every configured method for one (K, repetition). When `dir` is
/// non-empty all artifacts are written below it.
inline UnitOutcome execute_unit(const ExperimentConfig& config, const SplitResult& split, int k_requested,
                                std::size_t rep, const fs::path& run_dir, std::ostream* log) {
  const UnitSeeds seeds = unit_seeds(config, rep);
  const Partition partition = build_partition(split.source, config.partition, k_requested, seeds.partition);
  const int k = partition.k();
  if (config.runs_ensemble()) config.ensemble.validate(k);

  UnitOutcome u;
  u.k = k;
  u.rep = rep;
  u.seeds = seeds;
  u.dir = "units/" + unit_name(k, rep);
  u.target_rows = split.target.rows();
  u.source_rows = split.source.rows();
  u.subset_sizes = partition.subset_sizes();
  u.metric = config.learner.family == LearnerFamily::least_squares ? Metric::mse : Metric::error_rate;

  const bool persist = !run_dir.empty();
  const fs::path dir = run_dir / u.dir;
  if (persist) {
    fs::create_directories(dir);
    write_partition_labels((dir / "partition.csv").string(), split.source, partition);
  }

  if (config.runs_ensemble()) {
    EnsembleConfig ec = config.ensemble;
    ec.seed = seeds.ensemble;
    ec.threads = config.threads;
    const EnsembleResult result = run_ensemble(split.target, split.source, partition, config.learner, ec);
    u.ensemble = outcome_of(result);
    if (persist) {
      write_trial_table((dir / "ensemble_trials.csv").string(), result);
      write_json((dir / "ensemble_best.json").string(), ensemble_best_json(result));
    }
    if (log) *log << "  " << u.dir << " ensemble best loss " << u.ensemble->best_loss << "\n";
  }

  for (Policy policy : policies_to_run(config)) {
    BanditConfig bc = config.bandit;
    bc.policy = policy;
    bc.seed = policy == Policy::thompson ? seeds.thompson : seeds.random;
    const std::string tag(to_string(policy));
    try {
      const Trajectory t = run_bandit(split.target, split.source, partition, config.learner, bc);
      (policy == Policy::thompson ? u.thompson : u.random) = outcome_of(t);
      if (persist) {
        write_trajectory((dir / ("trajectory_" + tag + ".csv")).string(), t);
        write_json((dir / ("posterior_" + tag + ".json")).string(), posterior_json(t));
      }
      if (log) *log << "  " << u.dir << " bandit " << tag << " final metric " << t.final_metric().value << "\n";
    } catch (const BanditAborted& e) {
      if (persist) {
        write_trajectory((dir / ("trajectory_" + tag + ".csv")).string(), e.partial());
        write_json((dir / ("posterior_" + tag + ".json")).string(), posterior_json(e.partial()));
      }
      throw;
    }
  }
  if (persist) write_json((dir / "summary.json").string(), unit_summary_json(u));
  return u;
}

// ---------------------------------------------------------------------------
// Policy comparison

struct PairRecord {
  std::size_t rep = 0;
  double thompson_final = 0.0;
  double random_final = 0.0;
  double thompson_summary = 0.0;
  double random_summary = 0.0;
  bool thompson_wins = false;  // strictly lower final loss
  bool tie = false;
};

struct ComparisonTable {
  int k = 0;
  Metric metric = Metric::mse;
  /// Mean metric at iterations 1..H. Runs that stopped early contribute their
  /// last value to later iterations.
  std::vector<double> mean_thompson;
  std::vector<double> mean_random;
  std::vector<PairRecord> pairs;
  double win_rate = 0.0;
  std::size_t ties = 0;
};

inline std::vector<double> mean_curve(const std::vector<const std::vector<double>*>& curves) {
  std::size_t len = 0;
  for (const auto* c : curves) len = std::max(len, c->size());
  std::vector<double> out(len, 0.0);
  for (std::size_t h = 0; h < len; ++h) {
    double total = 0.0;
    for (const auto* c : curves) total += c->empty() ? 0.0 : (*c)[std::min(h, c->size() - 1)];
    out[h] = total / static_cast<double>(curves.size());
  }
  return out;
}

/// Summarises paired thompson/random runs of one K.
inline ComparisonTable summarize_comparison(const std::vector<UnitOutcome>& units, int k) {
  ComparisonTable table;
  table.k = k;
  std::vector<const std::vector<double>*> ct;
  std::vector<const std::vector<double>*> cr;
  std::size_t wins = 0;
  for (const auto& u : units) {
    if (u.k != k || !u.thompson || !u.random) continue;
    table.metric = u.metric;
    ct.push_back(&u.thompson->metrics);
    cr.push_back(&u.random->metrics);
    PairRecord p;
    p.rep = u.rep;
    p.thompson_final = u.thompson->final_metric;
    p.random_final = u.random->final_metric;
    p.thompson_summary = u.thompson->final_summary;
    p.random_summary = u.random->final_summary;
    p.thompson_wins = p.thompson_final < p.random_final;
    p.tie = p.thompson_final == p.random_final;
    wins += p.thompson_wins ? 1 : 0;
    table.ties += p.tie ? 1 : 0;
    table.pairs.push_back(p);
  }
  if (table.pairs.empty()) throw PipelineError("comparison needs paired thompson and random runs");
  table.mean_thompson = mean_curve(ct);
  table.mean_random = mean_curve(cr);
  table.win_rate = static_cast<double>(wins) / static_cast<double>(table.pairs.size());
  return table;
}

inline void write_comparison(const fs::path& run_dir, const std::vector<ComparisonTable>& tables) {
  {
    auto out = open_csv((run_dir / "comparison.csv").string());
    csv::write_row(out, {"k", "h", "mean_metric_thompson", "mean_metric_random"});
    for (const auto& t : tables) {
      for (std::size_t h = 0; h < t.mean_thompson.size(); ++h) {
        csv::write_row(out, {std::to_string(t.k), std::to_string(h + 1), csv::format_double(t.mean_thompson[h]),
                             csv::format_double(h < t.mean_random.size() ? t.mean_random[h] : t.mean_random.back())});
      }
    }
  }
  {
    auto out = open_csv((run_dir / "comparison_pairs.csv").string());
    csv::write_row(out, {"k", "rep", "thompson_final", "random_final", "thompson_D", "random_D", "thompson_wins"});
    for (const auto& t : tables) {
      for (const auto& p : t.pairs) {
        csv::write_row(out, {std::to_string(t.k), std::to_string(p.rep), csv::format_double(p.thompson_final),
                             csv::format_double(p.random_final), csv::format_double(p.thompson_summary),
                             csv::format_double(p.random_summary), p.thompson_wins ? "1" : "0"});
      }
    }
  }
  Json j = Json::array();
  for (const auto& t : tables) {
    j.push_back(Json{{"k", t.k},
                     {"metric", std::string(to_string(t.metric))},
                     {"pairs", t.pairs.size()},
                     {"win_rate", t.win_rate},
                     {"ties", t.ties}});
  }
  write_json((run_dir / "comparison.json").string(), j);
}

// ---------------------------------------------------------------------------
// Runs

struct RunOptions {
  bool resume = false;
  std::ostream* log = nullptr;
};

struct RunResult {
  fs::path dir;
  std::vector<UnitOutcome> units;
  std::vector<ComparisonTable> comparisons;
};

/// Digest of everything that determines results (threads excluded).
inline std::string config_digest(const ExperimentConfig& config) {
  Json j = config_to_json(config);
  j.erase("threads");
  return sha256_hex(j.dump());
}

inline Json seeds_json(const UnitSeeds& s) {
  return Json{{"data", s.data},
              {"partition", s.partition},
              {"ensemble", s.ensemble},
              {"bandit-thompson", s.thompson},
              {"bandit-random", s.random}};
}

/// Hashes every regular file under the run directory except the manifest.
inline Json build_manifest(const ExperimentConfig& config, const fs::path& dir,
                           const std::vector<UnitOutcome>& units, const std::string& status) {
  Json m;
  m["name"] = config.name;
  m["status"] = status;
  m["master_seed"] = config.seed;
  m["config_sha256"] = config_digest(config);
  Json seeds = Json::object();
  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    seeds["rep" + std::to_string(rep)] = seeds_json(unit_seeds(config, rep));
  }
  m["seeds"] = seeds;
  Json unit_list = Json::array();
  for (const auto& u : units) unit_list.push_back(u.dir);
  m["units"] = unit_list;
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  Json list = Json::array();
  for (const auto& f : files) {
    list.push_back(Json{{"path", f},
                        {"sha256", sha256_file((dir / f).string())},
                        {"bytes", fs::file_size(dir / f)}});
  }
  m["files"] = list;
  return m;
}

inline std::vector<ComparisonTable> comparisons_for(const ExperimentConfig& config,
                                                    const std::vector<UnitOutcome>& units) {
  std::vector<ComparisonTable> tables;
  if (!config.runs_bandit() || !config.compare) return tables;
  std::vector<int> ks;
  for (const auto& u : units) {
    if (std::find(ks.begin(), ks.end(), u.k) == ks.end()) ks.push_back(u.k);
  }
  for (int k : ks) tables.push_back(summarize_comparison(units, k));
  return tables;
}

inline Json run_summary_json(const ExperimentConfig& config, const std::vector<UnitOutcome>& units,
                             const std::vector<ComparisonTable>& tables) {
  Json j;
  j["name"] = config.name;
  Json list = Json::array();
  for (const auto& u : units) list.push_back(unit_summary_json(u));
  j["units"] = list;
  Json cmp = Json::array();
  for (const auto& t : tables) cmp.push_back(Json{{"k", t.k}, {"win_rate", t.win_rate}, {"pairs", t.pairs.size()}});
  j["comparison"] = cmp;
  return j;
}

inline std::optional<UnitOutcome> try_resume_unit(const fs::path& run_dir, const std::string& digest,
                                                  const ExperimentConfig& config, int k_requested, std::size_t rep) {
  // Metadata partitions learn K from the data, so match on the repetition.
  const fs::path units_dir = run_dir / "units";
  if (!fs::exists(units_dir)) return std::nullopt;
  std::ostringstream suffix;
  suffix << "-rep" << std::setw(3) << std::setfill('0') << rep;
  for (const auto& entry : fs::directory_iterator(units_dir)) {
    const auto name = entry.path().filename().string();
    if (!name.ends_with(suffix.str())) continue;
    if (k_requested > 0 && name != unit_name(k_requested, rep)) continue;
    const fs::path done = entry.path() / "done.json";
    if (!fs::exists(done)) continue;
    if (read_json_file(done).value("config_sha256", "") != digest) continue;
    const Json summary = read_json_file(entry.path() / "summary.json");
    std::map<Policy, std::vector<double>> curves;
    for (Policy p : policies_to_run(config)) {
      curves[p] = read_metric_column((entry.path() / ("trajectory_" + std::string(to_string(p)) + ".csv")).string());
    }
    return unit_from_summary(summary, unit_seeds(config, rep), curves);
  }
  return std::nullopt;
}

/// Executes the whole pipeline and writes the run directory. Configuration
/// problems raise ConfigError before anything is written; later failures
/// leave partial artifacts, an error.json and a manifest, then raise
/// PipelineError.
inline RunResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                                const RunOptions& options = {}) {
  config.validate();
  if (out_dir.empty()) throw ConfigError("no output directory given");

  RunResult result;
  result.dir = out_dir;
  const std::string digest = config_digest(config);
  std::string current_unit;
  try {
    fs::create_directories(out_dir);
    fs::remove(out_dir / "error.json");
    Json echo = config_to_json(config);
    echo.erase("threads");
    write_json((out_dir / "config.json").string(), echo);

    std::optional<Dataset> cached;
    if (config.data.kind == DataSourceSpec::Kind::csv) cached = load_csv(config.data.path, config.data.csv);

    for (int k : config.k_values()) {
      for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        current_unit = unit_name(k, rep);
        if (options.resume) {
          if (auto resumed = try_resume_unit(out_dir, digest, config, k, rep)) {
            if (options.log) *options.log << "  " << resumed->dir << " resumed\n";
            result.units.push_back(std::move(*resumed));
            continue;
          }
        }
        const SplitResult split = prepare_data(config, rep, cached ? &*cached : nullptr);
        UnitOutcome u = execute_unit(config, split, k, rep, out_dir, options.log);
        current_unit = u.dir;
        write_json((out_dir / u.dir / "done.json").string(), Json{{"config_sha256", digest}});
        result.units.push_back(std::move(u));
      }
    }
    current_unit.clear();
    result.comparisons = comparisons_for(config, result.units);
    if (!result.comparisons.empty()) write_comparison(out_dir, result.comparisons);
    write_json((out_dir / "summary.json").string(), run_summary_json(config, result.units, result.comparisons));
    write_json((out_dir / "manifest.json").string(), build_manifest(config, out_dir, result.units, "complete"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    try {
      fs::create_directories(out_dir);
      write_json((out_dir / "error.json").string(), Json{{"unit", current_unit}, {"message", e.what()}});
      write_json((out_dir / "manifest.json").string(), build_manifest(config, out_dir, result.units, "failed"));
    } catch (...) {
    }
    throw PipelineError(std::string("pipeline failed") + (current_unit.empty() ? "" : " in " + current_unit) +
                        ": " + e.what());
  }
  return result;
}

/// Runs thompson and random policies over `repetitions` paired seeds without
/// writing files and returns one comparison table per K.
inline std::vector<ComparisonTable> compare_policies(const ExperimentConfig& base) {
  ExperimentConfig config = base;
  config.method = MethodSelection::bandit;
  config.compare = true;
  config.validate();
  std::optional<Dataset> cached;
  if (config.data.kind == DataSourceSpec::Kind::csv) cached = load_csv(config.data.path, config.data.csv);
  std::vector<UnitOutcome> units;
  for (int k : config.k_values()) {
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      const SplitResult split = prepare_data(config, rep, cached ? &*cached : nullptr);
      units.push_back(execute_unit(config, split, k, rep, {}, nullptr));
    }
  }
  return comparisons_for(config, units);
}

/// Result of re-hashing a run directory against its manifest.
struct ManifestCheck {
  std::size_t files = 0;
  std::vector<std::string> mismatched;
  std::vector<std::string> missing;
  bool ok() const { return mismatched.empty() && missing.empty(); }
};

inline ManifestCheck verify_manifest(const fs::path& run_dir) {
  const Json m = read_json_file(run_dir / "manifest.json");
  ManifestCheck check;
  for (const auto& f : m.at("files")) {
    ++check.files;
    const auto rel = f.at("path").get<std::string>();
    const fs::path p = run_dir / rel;
    if (!fs::exists(p)) {
      check.missing.push_back(rel);
    } else if (sha256_file(p.string()) != f.at("sha256").get<std::string>()) {
      check.mismatched.push_back(rel);
    }
  }
  return check;
}

}  // namespace srcsel
