#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "srcsel/experiment.hpp"
#include "support.hpp"

namespace {

int run_cli(const std::string& args, const test::fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" SRCSEL_CLI_PATH "' " + args + " >cli.out 2>cli.err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmall = R"({
  "name": "cli-small",
  "seed": 5,
  "repetitions": 2,
  "data": {"simulate": {"n": 250}},
  "split": {"kind": "metadata-range", "ranges": [{"column": "z", "lower": 9}]},
  "partition": {"method": "metadata", "column": "z", "boundaries": [3, 5]},
  "ensemble": {"J": 10, "n_training": 60},
  "bandit": {"H": 4, "b": 5}
})";

}  // namespace

TEST(Cli, PresetsListed) {
  test::TempDir dir("cli");
  EXPECT_EQ(run_cli("presets", dir.path()), 0);
  const auto out = test::read_file(dir / "cli.out");
  EXPECT_NE(out.find("sim-time-varying"), std::string::npos);
  EXPECT_NE(out.find("california"), std::string::npos);
}

TEST(Cli, FullPipeline) {
  test::TempDir dir("cli");
  test::write_file(dir / "c.json", kSmall);
  EXPECT_EQ(run_cli("simulate -c c.json -o sim -q", dir.path()), 0);
  EXPECT_TRUE(test::fs::exists(dir.path() / "sim" / "data_rep0.csv"));
  EXPECT_TRUE(test::fs::exists(dir.path() / "sim" / "draws_rep1.json"));
  EXPECT_EQ(run_cli("split -c c.json -o split -q", dir.path()), 0);
  EXPECT_TRUE(test::fs::exists(dir.path() / "split" / "target.csv"));
  EXPECT_EQ(run_cli("partition -c c.json -o part -q", dir.path()), 0);
  EXPECT_TRUE(test::fs::exists(dir.path() / "part" / "partition_k3.csv"));
  EXPECT_EQ(run_cli("ensemble -c c.json -o ens -q", dir.path()), 0);
  EXPECT_TRUE(test::fs::exists(dir.path() / "ens" / "units" / "k3-rep000" / "ensemble_trials.csv"));
  EXPECT_FALSE(test::fs::exists(dir.path() / "ens" / "units" / "k3-rep000" / "trajectory_thompson.csv"));
  EXPECT_EQ(run_cli("bandit -c c.json -o ban -q --no-compare", dir.path()), 0);
  EXPECT_TRUE(test::fs::exists(dir.path() / "ban" / "units" / "k3-rep000" / "trajectory_thompson.csv"));
  EXPECT_FALSE(test::fs::exists(dir.path() / "ban" / "units" / "k3-rep000" / "trajectory_random.csv"));
  EXPECT_EQ(run_cli("compare -c c.json -o cmp -q", dir.path()), 0);
  EXPECT_NE(test::read_file(dir / "cli.out").find("win rate"), std::string::npos);
  EXPECT_TRUE(test::fs::exists(dir.path() / "cmp" / "comparison.csv"));
  EXPECT_EQ(run_cli("report cmp", dir.path()), 0);
  test::write_file(dir.path() / "cmp" / "comparison.csv", "tampered\n");
  EXPECT_EQ(run_cli("report cmp", dir.path()), 3);
}

TEST(Cli, SeedOverrideAndOutputRoot) {
  test::TempDir dir("cli");
  test::write_file(dir / "c.json", kSmall);
  const std::string env = "SRCSEL_OUTPUT_ROOT='" + (dir.path() / "root").string() + "' ";
  const std::string cmd = "cd '" + dir.path().string() + "' && " + env + "'" SRCSEL_CLI_PATH
                          "' run -c c.json --seed 77 -q >cli.out 2>cli.err";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const auto cfg = srcsel::read_json_file(dir.path() / "root" / "cli-small" / "config.json");
  EXPECT_EQ(cfg.at("seed").get<std::uint64_t>(), 77u);
}

TEST(Cli, ConfigErrorsExitTwoAndWriteNothing) {
  test::TempDir dir("cli");
  srcsel::Json bad = srcsel::Json::parse(kSmall);
  bad["partition"] = srcsel::Json::parse(R"({"method": "kmeans", "k": 0})");
  test::write_file(dir / "bad.json", bad.dump());
  EXPECT_EQ(run_cli("run -c bad.json -o out", dir.path()), 2);
  EXPECT_FALSE(test::fs::exists(dir.path() / "out"));
  EXPECT_EQ(run_cli("run -c missing.json -o out", dir.path()), 2);
  EXPECT_EQ(run_cli("run -p no-such-preset -o out", dir.path()), 2);
  EXPECT_EQ(run_cli("run --bogus-flag", dir.path()), 2);
  EXPECT_EQ(run_cli("", dir.path()), 2);
  test::write_file(dir / "broken.json", "{");
  EXPECT_EQ(run_cli("run -c broken.json -o out", dir.path()), 2);
}

TEST(Cli, PipelineErrorsExitThree) {
  test::TempDir dir("cli");
  EXPECT_EQ(run_cli("run -p california --data nowhere.csv -o out -q", dir.path()), 3);
  EXPECT_TRUE(test::fs::exists(dir.path() / "out" / "error.json"));
}
