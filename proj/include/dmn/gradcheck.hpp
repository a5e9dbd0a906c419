#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmn/dataset.hpp"
#include "dmn/model.hpp"
#include "dmn/training.hpp"

namespace dmn {

enum class ParamGroup { projection, anchors, weights };

inline std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::projection: return "U";
    case ParamGroup::anchors: return "anchors";
    case ParamGroup::weights: return "w";
  }
  return "?";
}

struct GradCheckEntry {
  int layer = 0;  // 1-based
  int unit = 0;   // 1-based
  ParamGroup group = ParamGroup::projection;
  Eigen::Index index = 0;  // row-major position inside the parameter
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  bool skipped = false;    // mixing weight too close to the clip boundary
};

struct GradCheckOptions {
  double step = 1e-5;
  double boundary = 1e-6;      // skip w below max(boundary, step)
  /// Relative errors divide by max(|analytic|, |numeric|, floor) with
  /// floor = max(denominator_floor, objective_floor * |E|); the second term
  /// tracks the round-off of differencing a large objective.
  double denominator_floor = 1e-6;
  double objective_floor = 1e-6;
  /// Coordinates probed per parameter matrix; 0 probes all of them, otherwise
  /// a seeded subset.
  Eigen::Index max_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& e : entries)
      if (!e.skipped) m = std::max(m, e.rel_error);
    return m;
  }
  std::size_t checked() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.skipped; }));
  }
};

/// |a - n| / max(|a|, |n|, floor).
inline double relative_gap(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Compares backprop against central differences of the objective with the
/// classifier head held fixed, for every coordinate of every U, anchor
/// matrix and mixing weight.
inline GradCheckReport gradient_check(const DmnModel& model, const ClassifierHead& head,
                                      const LabeledDataset& data, const GradCheckOptions& opt = {}) {
  model.validate();
  check_head_compatible(model, head);
  const ForwardTrace trace = dmn_forward_batch(model, data.features);
  const Eigen::MatrixXd dPhi = grad_output(head.normals, trace.output(), data.labels, head.trade_offs);
  const GradientBundle g = backprop(model, trace, dPhi);

  DmnModel work = model;
  auto energy = [&]() {
    return objective_from_maps(dmn_map(work, data.features), data.labels, head.normals,
                               head.trade_offs).total;
  };

  const double floor = std::max(opt.denominator_floor, opt.objective_floor * std::abs(energy()));
  GradCheckReport rep;
  auto probe = [&](double& param, int l, int p, ParamGroup grp, Eigen::Index idx, double analytic) {
    GradCheckEntry e{l, p, grp, idx, analytic, 0.0, 0.0, false};
    if (grp == ParamGroup::weights && param < std::max(opt.boundary, opt.step)) {
      e.skipped = true;
      rep.entries.push_back(e);
      return;
    }
    const double saved = param;
    param = saved + opt.step;
    const double up = energy();
    param = saved - opt.step;
    const double down = energy();
    param = saved;
    e.numeric = (up - down) / (2.0 * opt.step);
    e.rel_error = relative_gap(e.analytic, e.numeric, floor);
    rep.entries.push_back(e);
  };
  std::mt19937_64 rng(opt.seed);
  auto sweep = [&](Eigen::MatrixXd& m, const Eigen::MatrixXd& grad, int l, int p, ParamGroup grp) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    if (opt.max_per_param > 0 && opt.max_per_param < m.size()) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(opt.max_per_param));
      std::sort(idx.begin(), idx.end());
    }
    for (Eigen::Index k : idx) {
      const Eigen::Index i = k / m.cols(), j = k % m.cols();
      probe(m(i, j), l, p, grp, k, grad(i, j));
    }
  };

  for (std::size_t li = 0; li < work.layers.size(); ++li)
    for (std::size_t p = 0; p < work.layers[li].size(); ++p) {
      DmnUnit& u = work.layers[li][p];
      const UnitGradient& ug = g.layers[li][p];
      const int l = static_cast<int>(li) + 1, up = static_cast<int>(p) + 1;
      sweep(u.projection, ug.projection, l, up, ParamGroup::projection);
      if (li == 0) continue;
      sweep(u.anchors, ug.anchors, l, up, ParamGroup::anchors);
      for (Eigen::Index q = 0; q < u.weights.size(); ++q)
        probe(u.weights(q), l, up, ParamGroup::weights, q, ug.weights(q));
    }
  return rep;
}

}  // namespace dmn
