// Build a DMN on synthetic data, fine-tune it briefly and report metrics.

#include <iostream>
#include <numeric>

#include "dmn/dmn.hpp"

int main() {
  using namespace dmn;

  SyntheticSpec spec;
  spec.n = 200;
  spec.seed = 42;
  const LabeledDataset data = generate_synthetic(spec);

  std::vector<Eigen::Index> rows(60);
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  const AnchorSet anchors = AnchorSet::from_samples(data.subset(rows).features);
  const DknArchitecture arch = default_architecture(anchors.samples, spec.seed);
  const BuildResult built = build_dmn(arch, anchors);

  const Eigen::VectorXd C = cross_validate_C(data, built.model, 3, {0.1, 1.0, 10.0});
  ClassifierHead head{svm_solve(dmn_map(built.model, data.features), data.labels, C), C};
  const EvalReport before = evaluate(classify_batch(built.model, head, data.features), data.labels);

  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_iters = 50;
  cfg.halve_on_increase = true;
  cfg.trade_offs.assign(C.data(), C.data() + C.size());
  const TrainResult trained = train(built.model, head, data, cfg);
  const EvalReport after = evaluate(classify_batch(trained.model, trained.head, data.features), data.labels);

  std::cout << "objective  " << trained.log.front().objective.total << " -> "
            << trained.final_objective << '\n'
            << "MF-S       " << before.mf_s << " -> " << after.mf_s << '\n'
            << "MF-C       " << before.mf_c << " -> " << after.mf_c << '\n'
            << "mAP        " << before.map << " -> " << after.map << '\n';
}
