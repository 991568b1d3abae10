// Small end-to-end walk through the library on simulated data:
// split by z, partition the source into the three coefficient regimes,
// search weights with the Dirichlet ensemble and select subsets with the bandit.

#include <iomanip>
#include <iostream>

#include "srcsel/srcsel.hpp"

int main(int argc, char** argv) {
  using namespace srcsel;
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 7;

  SimConfig sim;
  sim.seed = derive_seed(seed, "data", 0);
  const Dataset data = generate(sim);

  const SplitResult split = split_target_source(data, SplitSpec::range("z", 9.0, 10.0));
  const Partition partition = partition_by_metadata(split.source, "z", {3.0, 5.0});
  std::cout << "target " << split.target.rows() << " rows, source " << split.source.rows() << " rows in "
            << partition.k() << " subsets\n";

  LearnerSpec learner;
  EnsembleConfig ec;
  ec.repetitions = 200;
  ec.n_training = 600;
  ec.seed = derive_seed(seed, "ensemble", 0);
  const EnsembleResult ens = run_ensemble(split.target, split.source, partition, learner, ec);
  std::cout << std::fixed << std::setprecision(4) << "ensemble best mse " << ens.best().loss->value << " weights";
  for (double w : ens.best_weights()) std::cout << " " << w;
  std::cout << "  D " << summary_stat(ens.best_weights()).value << "\n";

  for (Policy policy : {Policy::thompson, Policy::random}) {
    BanditConfig bc;
    bc.policy = policy;
    bc.seed = derive_seed(seed, policy == Policy::thompson ? "bandit-thompson" : "bandit-random", 0);
    const Trajectory t = run_bandit(split.target, split.source, partition, learner, bc);
    std::cout << to_string(policy) << ": final mse " << t.final_metric().value << ", arm counts";
    for (auto c : occurrence_table(t)) std::cout << " " << c;
    std::cout << "\n";
  }
}
