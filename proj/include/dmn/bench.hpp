#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmn/builder.hpp"
#include "dmn/dataset.hpp"
#include "dmn/dkn.hpp"
#include "dmn/error.hpp"
#include "dmn/model.hpp"
#include "dmn/parallel.hpp"

namespace dmn {

enum class Framework { dkn, dmn };

inline std::string_view to_string(Framework f) { return f == Framework::dkn ? "dkn" : "dmn"; }

struct BenchRow {
  Framework framework = Framework::dmn;
  Eigen::Index sample_size = 0;  // |T|, the number of dual-form supports
  double mean_seconds = 0.0;     // per classified sample
  double std_seconds = 0.0;
  double median_seconds = 0.0;
  int repetitions = 0;
  bool unreliable = false;       // timer resolution coarser than 1% of a rep's duration
};

struct BenchReport {
  std::vector<BenchRow> rows;
  int threads = 1;
  Eigen::Index anchors = 0;
  Eigen::Index queries = 0;
  std::string note =
      "dmn times include first-layer kernel evaluation against the anchor set";

  const BenchRow& row(Framework f, Eigen::Index size) const {
    for (const auto& r : rows)
      if (r.framework == f && r.sample_size == size) return r;
    throw InputError("no bench row for " + std::string(to_string(f)) + " at size " +
                     std::to_string(size));
  }
};

struct BenchConfig {
  std::vector<Eigen::Index> sizes{500, 1000, 2000, 5000};
  int reps = 5;
  Eigen::Index queries = 20;  // classified samples per repetition
  Eigen::Index classes = 5;
  bool parallel = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (sizes.empty()) throw ConfigError("bench needs at least one size");
    if (!std::is_sorted(sizes.begin(), sizes.end()) || sizes.front() < 1)
      throw ConfigError("bench sizes must be positive and ascending");
    if (reps < 5) throw ConfigError("bench needs at least 5 repetitions");
    if (queries < 1 || classes < 1) throw ConfigError("bench needs queries >= 1 and classes >= 1");
  }
};

namespace detail {

inline BenchRow summarize(Framework f, Eigen::Index size, const std::vector<double>& per_sample,
                          const std::vector<double>& rep_seconds) {
  BenchRow r;
  r.framework = f;
  r.sample_size = size;
  r.repetitions = static_cast<int>(per_sample.size());
  const double n = static_cast<double>(per_sample.size());
  r.mean_seconds = std::accumulate(per_sample.begin(), per_sample.end(), 0.0) / n;
  double ss = 0.0;
  for (double t : per_sample) ss += (t - r.mean_seconds) * (t - r.mean_seconds);
  r.std_seconds = per_sample.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> sorted = per_sample;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  r.median_seconds = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  using period = std::chrono::steady_clock::period;
  const double tick = static_cast<double>(period::num) / static_cast<double>(period::den);
  const double shortest = *std::min_element(rep_seconds.begin(), rep_seconds.end());
  r.unreliable = !(shortest > 0.0) || tick > 0.01 * shortest;
  return r;
}

template <class Fn>
BenchRow time_reps(Framework f, Eigen::Index size, int reps, Eigen::Index queries, Fn&& body) {
  using clock = std::chrono::steady_clock;
  body();  // warm-up, not recorded
  std::vector<double> per_sample, rep_seconds;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock::now();
    body();
    const double s = std::chrono::duration<double>(clock::now() - t0).count();
    rep_seconds.push_back(s);
    per_sample.push_back(s / static_cast<double>(queries));
  }
  return summarize(f, size, per_sample, rep_seconds);
}

}  // namespace detail

/// Times dual-form DKN classification over |T| supports against primal DMN
/// classification for every size. Supports, queries, dual coefficients and
/// hyperplanes are seeded random; only timing is measured.
inline BenchReport run_bench(const DknArchitecture& arch, const AnchorSet& S, const BenchConfig& cfg,
                             double clip_ratio = kDefaultClipRatio) {
  cfg.validate();
  arch.validate();
  S.validate();
  const BuildResult built = build_dmn(arch, S, clip_ratio);
  const DmnModel& model = built.model;
  const Eigen::Index d = S.samples.cols();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::MatrixXd queries = random_histograms(cfg.queries, d, rng());

  BenchReport report;
  report.threads = cfg.parallel ? max_threads() : 1;
  report.anchors = S.size();
  report.queries = cfg.queries;

  ClassifierHead head;
  head.normals = Eigen::MatrixXd::NullaryExpr(cfg.classes, model.output_dim(), [&]() { return gauss(rng); });
  head.trade_offs = Eigen::VectorXd::Ones(cfg.classes);

  volatile double sink = 0.0;
  for (Eigen::Index size : cfg.sizes) {
    const Eigen::MatrixXd support = random_histograms(size, d, rng());
    const Eigen::MatrixXd coef =
        Eigen::MatrixXd::NullaryExpr(cfg.classes, size, [&]() { return gauss(rng); });
    const Eigen::VectorXd bias = Eigen::VectorXd::NullaryExpr(cfg.classes, [&]() { return gauss(rng); });

    report.rows.push_back(detail::time_reps(Framework::dkn, size, cfg.reps, cfg.queries, [&]() {
      for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        const Eigen::VectorXd scores = dkn_classify(arch, support, coef, bias, queries.row(q), cfg.parallel);
        sink = sink + scores(0);
      }
    }));

    report.rows.push_back(detail::time_reps(Framework::dmn, size, cfg.reps, cfg.queries, [&]() {
      for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        const Classification c = classify(model, head, queries.row(q));
        sink = sink + c.scores(0);
      }
    }));
  }
  return report;
}

/// Tab-separated report with a commented header.
inline void write_bench_tsv(std::ostream& os, const BenchReport& r) {
  os << "# " << r.note << "\n# anchors=" << r.anchors << " queries=" << r.queries
     << " threads=" << r.threads << "\n";
  os << "framework\tsample_size\tmean_s\tstd_s\tmedian_s\treps\tunreliable\n";
  os.precision(9);
  for (const auto& row : r.rows)
    os << to_string(row.framework) << '\t' << row.sample_size << '\t' << row.mean_seconds << '\t'
       << row.std_seconds << '\t' << row.median_seconds << '\t' << row.repetitions << '\t'
       << (row.unreliable ? 1 : 0) << '\n';
}

}  // namespace dmn
