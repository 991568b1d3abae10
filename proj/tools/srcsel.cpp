// Command-line front end for the source-selection toolkit.
//
// Exit codes: 0 success, 2 configuration error, 3 pipeline error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "srcsel/srcsel.hpp"

namespace {

namespace fs = std::filesystem;
using namespace srcsel;

constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::string data_path;
  std::optional<std::size_t> repetitions;
  std::optional<unsigned> threads;
  bool resume = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "Experiment config (JSON)");
  cmd->add_option("-p,--preset", o.preset_name, "Built-in preset name (see `srcsel presets`)");
  cmd->add_option("-o,--output-dir", o.output_dir,
                  "Output directory (default: $SRCSEL_OUTPUT_ROOT/<name> or runs/<name>)");
  cmd->add_option("-s,--seed", o.seed, "Override the master seed");
  cmd->add_option("--data", o.data_path, "Override the CSV path of a csv data source");
  cmd->add_option("--repetitions", o.repetitions, "Override the number of repetitions");
  cmd->add_option("--threads", o.threads, "Worker threads for ensemble trials");
  cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress output");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig load_config(const CommonOptions& o) {
  if (o.config_path.empty() == o.preset_name.empty()) {
    throw ConfigError("give exactly one of --config or --preset");
  }
  std::string text;
  if (o.preset_name.empty()) {
    text = read_text(o.config_path);
  } else {
    const auto it = preset_sources().find(o.preset_name);
    if (it == preset_sources().end()) throw ConfigError("unknown preset '" + o.preset_name + "'");
    text = it->second;
  }
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  if (o.seed) j["seed"] = *o.seed;
  if (o.repetitions) j["repetitions"] = *o.repetitions;
  if (o.threads) j["threads"] = *o.threads;
  if (!o.data_path.empty()) {
    if (!j.contains("data") || !j["data"].contains("csv")) throw ConfigError("--data needs a csv data source");
    j["data"]["csv"]["path"] = o.data_path;
  }
  if (!o.output_dir.empty()) j["output_dir"] = o.output_dir;
  return parse_config(j);
}

fs::path output_dir_for(const ExperimentConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* root = std::getenv("SRCSEL_OUTPUT_ROOT"); root && *root) return fs::path(root) / c.name;
  return fs::path("runs") / c.name;
}

int run_pipeline(ExperimentConfig config, const CommonOptions& o) {
  const fs::path out = output_dir_for(config);
  RunOptions ro;
  ro.resume = o.resume;
  ro.log = o.quiet ? nullptr : &std::cerr;
  if (!o.quiet) std::cerr << "srcsel: " << config.name << " -> " << out.string() << "\n";
  const RunResult r = run_experiment(config, out, ro);
  for (const auto& t : r.comparisons) {
    std::cout << "K=" << t.k << " thompson win rate " << t.win_rate << " over " << t.pairs.size() << " pairs\n";
  }
  std::cout << out.string() << "\n";
  return 0;
}

int cmd_simulate(const CommonOptions& o) {
  const ExperimentConfig c = load_config(o);
  if (c.data.kind != DataSourceSpec::Kind::simulate) throw ConfigError("simulate needs a data.simulate section");
  const fs::path out = output_dir_for(c);
  fs::create_directories(out);
  for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
    SimConfig sim = c.data.sim;
    sim.seed = unit_seeds(c, rep).data;
    SimDraws draws;
    const Dataset ds = generate(sim, &draws);
    const std::string suffix = c.repetitions > 1 ? "_rep" + std::to_string(rep) : "";
    write_csv((out / ("data" + suffix + ".csv")).string(), ds);
    write_json((out / ("draws" + suffix + ".json")).string(),
               Json{{"seed", sim.seed}, {"alpha", draws.alpha}, {"eps", draws.eps},
                    {"config", sim_config_to_json(sim, sim.seed)}});
  }
  std::cout << out.string() << "\n";
  return 0;
}

std::vector<std::pair<std::string, std::vector<std::string>>> origin_column(const Dataset& d) {
  std::vector<std::string> rows;
  for (auto r : d.origin) rows.push_back(std::to_string(r));
  return {{"row", rows}};
}

int cmd_split(const CommonOptions& o) {
  const ExperimentConfig c = load_config(o);
  const fs::path out = output_dir_for(c);
  const SplitResult s = prepare_data(c, 0);
  fs::create_directories(out);
  write_csv((out / "target.csv").string(), s.target, origin_column(s.target));
  write_csv((out / "source.csv").string(), s.source, origin_column(s.source));
  std::cout << "target " << s.target.rows() << " rows, source " << s.source.rows() << " rows\n" << out.string() << "\n";
  return 0;
}

int cmd_partition(const CommonOptions& o) {
  const ExperimentConfig c = load_config(o);
  const fs::path out = output_dir_for(c);
  const SplitResult s = prepare_data(c, 0);
  fs::create_directories(out);
  for (int k : c.k_values()) {
    const Partition p = build_partition(s.source, c.partition, k, unit_seeds(c, 0).partition);
    std::vector<std::string> labels;
    for (int l : p.labels()) labels.push_back(std::to_string(l + 1));
    auto extra = origin_column(s.source);
    extra.emplace_back("subset", std::move(labels));
    write_csv((out / ("partition_k" + std::to_string(p.k()) + ".csv")).string(), s.source, extra);
    std::cout << "K=" << p.k() << " subset sizes:";
    for (auto n : p.subset_sizes()) std::cout << " " << n;
    std::cout << "\n";
  }
  std::cout << out.string() << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir) {
  const ManifestCheck check = verify_manifest(run_dir);
  const Json summary = read_json_file(fs::path(run_dir) / "summary.json");
  std::cout << "run " << summary.value("name", "?") << ": " << check.files << " files, "
            << (check.ok() ? "all hashes match" : "HASH MISMATCH") << "\n";
  for (const auto& f : check.mismatched) std::cout << "  changed: " << f << "\n";
  for (const auto& f : check.missing) std::cout << "  missing: " << f << "\n";
  for (const auto& u : summary.at("units")) {
    std::cout << u.at("unit").get<std::string>() << " (" << u.at("metric").get<std::string>() << ")";
    if (u.contains("ensemble")) {
      std::cout << "  ensemble best " << u["ensemble"]["best_loss"].get<double>() << " D "
                << u["ensemble"]["summary_stat"].get<double>();
    }
    if (u.contains("bandit")) {
      for (const auto& [policy, b] : u["bandit"].items()) {
        std::cout << "  " << policy << " final " << b["final_metric"].get<double>() << " D "
                  << b["final_summary_stat"].get<double>();
      }
    }
    std::cout << "\n";
  }
  for (const auto& t : summary.at("comparison")) {
    std::cout << "K=" << t["k"].get<int>() << " thompson win rate " << t["win_rate"].get<double>() << "\n";
  }
  return check.ok() ? 0 : kExitPipeline;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source subset selection and reweighting for a target task"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto* simulate = app.add_subcommand("simulate", "Generate the drifting-coefficient simulation as CSV");
  auto* split = app.add_subcommand("split", "Split data into target.csv and source.csv");
  auto* partition = app.add_subcommand("partition", "Write the source with a subset label column");
  auto* ensemble = app.add_subcommand("ensemble", "Dirichlet random search over subset weights");
  auto* bandit = app.add_subcommand("bandit", "Thompson-sampling subset selection");
  auto* compare = app.add_subcommand("compare", "Thompson vs random-arm policy over paired seeds");
  auto* run = app.add_subcommand("run", "Run every method the config enables");
  for (auto* cmd : {simulate, split, partition, ensemble, bandit, compare, run}) add_common(cmd, opts);
  for (auto* cmd : {ensemble, bandit, compare, run}) {
    cmd->add_flag("--resume", opts.resume, "Reuse finished units of an earlier run with the same config");
  }
  bool no_compare = false;
  bandit->add_flag("--no-compare", no_compare, "Run only the configured policy");

  std::string run_dir;
  auto* report = app.add_subcommand("report", "Verify a run directory's manifest and print its summary");
  report->add_option("run_dir", run_dir, "Run directory")->required();

  std::string show;
  auto* presets = app.add_subcommand("presets", "List built-in presets or print one");
  presets->add_option("--show", show, "Print the named preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(opts);
    if (*split) return cmd_split(opts);
    if (*partition) return cmd_partition(opts);
    if (*report) return cmd_report(run_dir);
    if (*presets) {
      if (show.empty()) {
        for (const auto& name : preset_names()) std::cout << name << "\n";
      } else {
        if (!preset_sources().count(show)) throw ConfigError("unknown preset '" + show + "'");
        std::cout << preset_sources().at(show) << "\n";
      }
      return 0;
    }
    ExperimentConfig c = load_config(opts);
    if (*ensemble) {
      c.method = MethodSelection::ensemble;
    } else if (*bandit) {
      c.method = MethodSelection::bandit;
      if (no_compare) c.compare = false;
    } else if (*compare) {
      c.method = MethodSelection::bandit;
      c.compare = true;
    }
    c.validate();
    return run_pipeline(c, opts);
  } catch (const ConfigError& e) {
    std::cerr << "srcsel: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "srcsel: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "srcsel: error: " << e.what() << "\n";
    return kExitPipeline;
  }
}
