#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "dmn/error.hpp"

namespace dmn {

/// F-measure from counts: 2 TP / (|predicted| + |truth|), which equals
/// 2PR / (P + R). Two empty sets score 1; otherwise P + R = 0 scores 0.
inline double f_measure_counts(long true_positive, long predicted, long truth) {
  if (predicted == 0 && truth == 0) return 1.0;
  if (true_positive == 0) return 0.0;
  return 2.0 * static_cast<double>(true_positive) / static_cast<double>(predicted + truth);
}

inline double f_measure(const std::set<int>& predicted, const std::set<int>& truth) {
  long tp = 0;
  for (int c : predicted) tp += static_cast<long>(truth.count(c));
  return f_measure_counts(tp, static_cast<long>(predicted.size()), static_cast<long>(truth.size()));
}

/// Non-interpolated average precision of one score column: items ranked by
/// descending score (ties by ascending index), precision averaged over the
/// ranks of the positives. NaN when there are no positives.
inline double average_precision(const Eigen::VectorXd& scores, const Eigen::VectorXi& truth) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores(a) > scores(b); });
  long hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (truth(order[r]) > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return hits == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(hits);
}

struct EvalReport {
  double mf_s = 0.0;
  double mf_c = 0.0;
  double map = 0.0;
  std::vector<double> per_concept_f;   // NaN for excluded concepts
  std::vector<double> per_concept_ap;  // NaN for excluded concepts
  std::vector<int> excluded_concepts;  // concepts without a positive test item
};

/// Multi-label evaluation of an n x K score matrix against {-1, +1} truth.
/// A concept is predicted present iff its score is > 0.
inline EvalReport evaluate(const Eigen::MatrixXd& scores, const Eigen::MatrixXi& truth) {
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols())
    throw InputError("evaluate: score and truth matrices differ in shape");
  if (scores.rows() == 0 || scores.cols() == 0) throw InputError("evaluate: empty score matrix");
  if (((truth.array() != 1) && (truth.array() != -1)).any())
    throw InputError("evaluate: truth labels must be -1 or +1");
  if (!scores.allFinite()) throw InputError("evaluate: non-finite scores");

  const Eigen::Index n = scores.rows(), K = scores.cols();
  const Eigen::ArrayXXi pred = (scores.array() > 0.0).cast<int>();
  const Eigen::ArrayXXi pos = (truth.array() > 0).cast<int>();

  EvalReport r;
  double fs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    fs += f_measure_counts((pred.row(i) * pos.row(i)).sum(), pred.row(i).sum(), pos.row(i).sum());
  r.mf_s = fs / static_cast<double>(n);

  double fc = 0.0, ap = 0.0;
  int used = 0;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (pos.col(k).sum() == 0) {
      r.excluded_concepts.push_back(static_cast<int>(k));
      r.per_concept_f.push_back(std::numeric_limits<double>::quiet_NaN());
      r.per_concept_ap.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double f =
        f_measure_counts((pred.col(k) * pos.col(k)).sum(), pred.col(k).sum(), pos.col(k).sum());
    const double a = average_precision(scores.col(k), truth.col(k));
    r.per_concept_f.push_back(f);
    r.per_concept_ap.push_back(a);
    fc += f;
    ap += a;
    ++used;
  }
  if (used > 0) {
    r.mf_c = fc / used;
    r.map = ap / used;
  }
  return r;
}

}  // namespace dmn
