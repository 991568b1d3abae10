#include <gtest/gtest.h>

#include "srcsel/bandit.hpp"
#include "srcsel/simgen.hpp"
#include "support.hpp"

using namespace srcsel;

namespace {

struct Problem {
  Dataset target;
  Dataset source;
  Partition partition;
};

Problem sim_problem(std::uint64_t seed, SimVariant variant = SimVariant::time_varying) {
  SimConfig sim;
  sim.seed = seed;
  sim.variant = variant;
  const Dataset d = generate(sim);
  auto split = split_target_source(d, SplitSpec::range("z", 9.0, 10.0));
  Partition p = partition_by_metadata(split.source, "z", {3.0, 5.0});
  return {std::move(split.target), std::move(split.source), std::move(p)};
}

LossValue mse(double v) { return {v, Metric::mse}; }

}  // namespace

TEST(SampleBeta, UniformMean) {
  // Beta(1,1) has sd 0.2887; 10,000 draws give a standard error of 0.0029.
  Rng rng(1);
  double s = 0.0;
  for (int i = 0; i < 10000; ++i) s += sample_beta(1.0, 1.0, rng);
  EXPECT_GE(s / 10000, 0.49);
  EXPECT_LE(s / 10000, 0.51);
}

TEST(SampleBeta, ConcentratedNearOne) {
  Rng rng(2);
  double s = 0.0;
  for (int i = 0; i < 1000; ++i) s += sample_beta(100.0, 1.0, rng);
  EXPECT_GT(s / 1000, 0.95);
}

TEST(SampleBeta, StrictlyInsideUnitInterval) {
  Rng rng(3);
  for (double a : {0.01, 0.5, 1.0, 1e4}) {
    for (double b : {0.01, 0.5, 1.0, 1e4}) {
      for (int i = 0; i < 500; ++i) {
        const double v = sample_beta(a, b, rng);
        ASSERT_GT(v, 0.0);
        ASSERT_LT(v, 1.0);
      }
    }
  }
  EXPECT_THROW(sample_beta(0.0, 1.0, rng), Error);
  EXPECT_THROW(sample_beta(1.0, -1.0, rng), Error);
}

TEST(ChooseArm, SingleArm) {
  Rng rng(4);
  const auto p = ArmPosterior::prior(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(choose_arm(p, Policy::thompson, rng), 0);
    EXPECT_EQ(choose_arm(p, Policy::random, rng), 0);
  }
}

TEST(ChooseArm, DominantPosteriorWins) {
  Rng rng(5);
  ArmPosterior p = ArmPosterior::prior(2);
  p.alpha = {1000.0, 1.0};
  p.beta = {1.0, 1000.0};
  int first = 0;
  for (int i = 0; i < 1000; ++i) first += choose_arm(p, Policy::thompson, rng) == 0 ? 1 : 0;
  EXPECT_GE(first, 990);
}

TEST(ChooseArm, RandomPolicyIsUniform) {
  // Each frequency has sd sqrt(0.25 * 0.75 / 10000) = 0.0043; the band is
  // about 4.6 of them.
  Rng rng(6);
  const auto p = ArmPosterior::prior(4);
  std::vector<int> hits(4, 0);
  for (int i = 0; i < 10000; ++i) ++hits[static_cast<std::size_t>(choose_arm(p, Policy::random, rng))];
  for (int h : hits) {
    EXPECT_GE(h / 10000.0, 0.23);
    EXPECT_LE(h / 10000.0, 0.27);
  }
}

TEST(Reward, StrictImprovementOnly) {
  EXPECT_EQ(compute_reward(mse(0.5), mse(0.4)), 1);
  EXPECT_EQ(compute_reward(mse(0.4), mse(0.4)), 0);
  EXPECT_EQ(compute_reward(mse(0.4), mse(0.5)), 0);
  // Accuracy 0.8 -> 0.7 is error rate 0.2 -> 0.3.
  const LossValue acc08{0.2, Metric::error_rate};
  const LossValue acc07{0.3, Metric::error_rate};
  EXPECT_NEAR(acc08.accuracy(), 0.8, 1e-15);
  EXPECT_EQ(compute_reward(acc08, acc07), 0);
  EXPECT_EQ(compute_reward(acc07, acc08), 1);
  EXPECT_THROW(compute_reward(mse(0.1), acc07), Error);
}

TEST(Posterior, ConjugateUpdates) {
  auto p = ArmPosterior::prior(2);
  p = update_posterior(p, 0, 1);
  EXPECT_EQ(p.alpha, (std::vector<double>{2, 1}));
  EXPECT_EQ(p.beta, (std::vector<double>{1, 1}));
  auto q = ArmPosterior::prior(2);
  for (int r : {1, 0, 1, 0, 1}) q = update_posterior(q, 0, r);
  EXPECT_EQ(q.alpha[0], 4.0);
  EXPECT_EQ(q.beta[0], 3.0);
  const auto untouched = update_posterior(ArmPosterior::prior(2), 1, 1);
  EXPECT_EQ(untouched.alpha[0], 1.0);
  EXPECT_EQ(untouched.beta[0], 1.0);
  EXPECT_THROW(update_posterior(q, 2, 1), Error);
  EXPECT_THROW(ArmPosterior::prior(0), ConfigError);
  EXPECT_THROW(ArmPosterior::prior(2, 0.0, 1.0), ConfigError);
}

TEST(Posterior, CountsMatchRewardSequences) {
  Rng rng(7);
  for (int seq = 0; seq < 1000; ++seq) {
    const int k = 1 + static_cast<int>(uniform_index(rng, 6));
    const double a0 = 0.5 + static_cast<double>(uniform_index(rng, 4));
    const double b0 = 0.5 + static_cast<double>(uniform_index(rng, 4));
    auto p = ArmPosterior::prior(k, a0, b0);
    std::vector<int> wins(static_cast<std::size_t>(k), 0);
    std::vector<int> losses(static_cast<std::size_t>(k), 0);
    const auto len = uniform_index(rng, 60);
    for (std::uint64_t i = 0; i < len; ++i) {
      const int arm = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
      const int r = static_cast<int>(uniform_index(rng, 2));
      ++(r ? wins : losses)[static_cast<std::size_t>(arm)];
      p = update_posterior(p, arm, r);
    }
    double pulls = 0.0;
    for (int arm = 0; arm < k; ++arm) {
      const auto a = static_cast<std::size_t>(arm);
      ASSERT_EQ(p.alpha[a], a0 + wins[a]);
      ASSERT_EQ(p.beta[a], b0 + losses[a]);
      pulls += p.pulls(arm);
    }
    ASSERT_EQ(pulls, static_cast<double>(len));
  }
}

TEST(RunBandit, SingleSubset) {
  const auto pr = sim_problem(1);
  const Partition one(std::vector<int>(pr.source.rows(), 0), 1, PartitionMethod::metadata);
  const auto t = run_bandit(pr.target, pr.source, one, LearnerSpec{}, BanditConfig{});
  ASSERT_EQ(t.iterations(), 30u);
  for (const auto& s : t.steps) {
    EXPECT_EQ(s.arm, 0);
    EXPECT_EQ(s.counts[0], static_cast<std::size_t>(s.h) * 10);
    EXPECT_EQ(s.summary, 0.0);
  }
  EXPECT_EQ(occurrence_table(t), (std::vector<std::size_t>{30}));
}

TEST(RunBandit, TrajectoryInvariants) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pr = sim_problem(seed);
    for (Policy policy : {Policy::thompson, Policy::random}) {
      BanditConfig c;
      c.seed = seed;
      c.policy = policy;
      c.max_iterations = 25;
      c.batch_size = 7;
      const auto t = run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c);
      ASSERT_EQ(t.iterations(), 25u);  // epsilon = 0 runs all H iterations
      EXPECT_EQ(t.training_rows.size(), 7u * t.iterations());
      double pulls = 0.0;
      for (int arm = 0; arm < t.k; ++arm) pulls += t.posterior.pulls(arm);
      EXPECT_EQ(pulls, static_cast<double>(t.iterations()));
      LossValue prev = t.initial_metric;
      for (const auto& s : t.steps) {
        EXPECT_EQ(std::accumulate(s.counts.begin(), s.counts.end(), std::size_t{0}), 7u * s.h);
        EXPECT_EQ(s.reward, s.metric.value < prev.value ? 1 : 0);
        EXPECT_EQ(s.summary, summary_stat(composition_weights(s.counts)).value);
        prev = s.metric;
      }
      std::vector<std::size_t> per_subset(3, 0);
      for (auto row : t.training_rows) ++per_subset[static_cast<std::size_t>(pr.partition.label(row))];
      EXPECT_EQ(per_subset, t.steps.back().counts);
      const auto occ = occurrence_table(t);
      EXPECT_EQ(std::accumulate(occ.begin(), occ.end(), std::size_t{0}), t.iterations());
    }
  }
}

TEST(RunBandit, Reproducible) {
  const auto pr = sim_problem(3);
  BanditConfig c;
  c.seed = 99;
  const auto a = run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c);
  const auto b = run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c);
  ASSERT_EQ(a.iterations(), b.iterations());
  for (std::size_t i = 0; i < a.iterations(); ++i) {
    EXPECT_EQ(a.steps[i].arm, b.steps[i].arm);
    EXPECT_EQ(a.steps[i].reward, b.steps[i].reward);
    EXPECT_EQ(a.steps[i].metric.value, b.steps[i].metric.value);
  }
  EXPECT_EQ(a.training_rows, b.training_rows);
}

TEST(RunBandit, EpsilonStopsEarly) {
  const auto pr = sim_problem(4);
  BanditConfig c;
  c.epsilon = 1e12;
  const auto t = run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c);
  EXPECT_EQ(t.iterations(), 1u);
  EXPECT_TRUE(t.stopped_early);
  c.max_iterations = 1;
  EXPECT_FALSE(run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c).stopped_early);
}

TEST(RunBandit, LearnerFailureKeepsPartialTrajectory) {
  Dataset target = test::with_z({1, 2, 3, 4});
  target.response << 0, 1, 0, 1;
  Dataset source = test::with_z({1, 2, 3, 4, 5, 6});
  source.response << 0, 1, 0, 1, 2, 2;
  const Partition p({0, 0, 0, 0, 1, 1}, 2, PartitionMethod::metadata);
  LearnerSpec spec;
  spec.family = LearnerFamily::logistic;
  spec.max_iters = 5;
  BanditConfig c;
  c.batch_size = 1;
  c.max_iterations = 200;
  bool aborted = false;
  try {
    run_bandit(target, source, p, spec, c);
  } catch (const BanditAborted& e) {
    aborted = true;
    EXPECT_LT(e.partial().iterations(), 200u);
    EXPECT_EQ(e.partial().training_rows.size(), e.partial().iterations());
  }
  EXPECT_TRUE(aborted);
}

TEST(RunBandit, ConfigValidation) {
  BanditConfig c;
  c.max_iterations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.epsilon = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.beta0 = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunBandit, TimeVaryingPrefersLatestSubset) {
  // Majority over 20 seeds: plurality of the final composition on the latest
  // subset and thompson beating the random policy.
  int plurality = 0;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pr = sim_problem(1000 + seed);
    BanditConfig c;
    c.seed = seed;
    const auto t = run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c);
    c.policy = Policy::random;
    c.seed = seed + 500;
    const auto r = run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c);
    const auto& counts = t.steps.back().counts;
    plurality += std::max_element(counts.begin(), counts.end()) - counts.begin() == 2 ? 1 : 0;
    wins += t.final_metric().value < r.final_metric().value ? 1 : 0;
  }
  EXPECT_GT(plurality, 10);
  EXPECT_GT(wins, 10);
}

TEST(RunBandit, TimeInvariantPoliciesIndistinguishable) {
  // Mean final loss of the two policies differs by less than the across-seed
  // standard deviation of the random policy.
  std::vector<double> t_final, r_final;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pr = sim_problem(2000 + seed, SimVariant::time_invariant);
    BanditConfig c;
    c.seed = seed;
    t_final.push_back(run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c).final_metric().value);
    c.policy = Policy::random;
    c.seed = seed + 500;
    r_final.push_back(run_bandit(pr.target, pr.source, pr.partition, LearnerSpec{}, c).final_metric().value);
  }
  const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double mr = mean(r_final);
  double var = 0.0;
  for (double v : r_final) var += (v - mr) * (v - mr);
  const double sd = std::sqrt(var / (r_final.size() - 1));
  EXPECT_LT(std::abs(mean(t_final) - mr), sd);
}
