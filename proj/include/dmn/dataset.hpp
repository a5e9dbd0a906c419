#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "dmn/atomic_file.hpp"
#include "dmn/error.hpp"

namespace dmn {

/// Feature rows with a {-1, +1} membership matrix over K concepts.
struct LabeledDataset {
  Eigen::MatrixXd features;  // n x d
  Eigen::MatrixXi labels;    // n x K
  std::vector<std::string> ids;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  Eigen::Index classes() const { return labels.cols(); }

  /// Labels must be exactly +-1; with `require_both_signs` every concept also
  /// needs at least one positive and one negative example.
  void validate(bool require_both_signs = true) const {
    if (features.rows() != labels.rows())
      throw InputError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                       std::to_string(labels.rows()) + " label rows");
    if (static_cast<Eigen::Index>(ids.size()) != features.rows())
      throw InputError("dataset needs one id per sample");
    if (features.rows() == 0 || labels.cols() == 0) throw InputError("dataset is empty");
    if (!features.allFinite()) throw InputError("dataset has non-finite features");
    if (((labels.array() != 1) && (labels.array() != -1)).any())
      throw InputError("dataset labels must be -1 or +1");
    if (!require_both_signs) return;
    for (Eigen::Index k = 0; k < labels.cols(); ++k) {
      const auto positives = (labels.col(k).array() > 0).count();
      if (positives == 0 || positives == labels.rows())
        throw InputError("concept " + std::to_string(k + 1) +
                         " needs at least one positive and one negative example");
    }
  }

  /// Rows selected by index, in the given order.
  LabeledDataset subset(const std::vector<Eigen::Index>& rows) const {
    LabeledDataset s;
    s.features.resize(static_cast<Eigen::Index>(rows.size()), dim());
    s.labels.resize(static_cast<Eigen::Index>(rows.size()), classes());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      s.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
      s.labels.row(static_cast<Eigen::Index>(i)) = labels.row(rows[i]);
      s.ids.push_back(ids[static_cast<std::size_t>(rows[i])]);
    }
    return s;
  }

  friend bool operator==(const LabeledDataset& a, const LabeledDataset& b) {
    return a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
           a.labels.cols() == b.labels.cols() && a.features == b.features &&
           a.labels == b.labels && a.ids == b.ids;
  }
};

// Text format: one header line "d<TAB>K<TAB>n", then one line per sample:
// id, d features (17 significant digits), K labels in {-1, 1}.

inline void write_dataset(std::ostream& os, const LabeledDataset& data) {
  data.validate(false);
  os << data.dim() << '\t' << data.classes() << '\t' << data.size() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    os << data.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, data.features(i, j),
                               std::chars_format::general, 17);
      os << '\t' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    for (Eigen::Index k = 0; k < data.classes(); ++k) os << '\t' << data.labels(i, k);
    os << '\n';
  }
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

inline FormatError line_error(std::size_t line, const std::string& msg) {
  return FormatError(FormatError::Kind::malformed, "line " + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw line_error(line, std::string("cannot parse ") + what + " '" + std::string(field) + "'");
  return value;
}

}  // namespace detail

inline LabeledDataset read_dataset(std::istream& is, bool require_both_signs = true) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next()) throw FormatError(FormatError::Kind::truncated, "dataset file is empty");
  auto head = detail::split_tabs(line);
  if (head.size() != 3) throw detail::line_error(lineno, "header must be 'd<TAB>K<TAB>n'");
  const long d = detail::parse_number<long>(head[0], lineno, "dimension");
  const long K = detail::parse_number<long>(head[1], lineno, "class count");
  const long n = detail::parse_number<long>(head[2], lineno, "sample count");
  if (d < 1 || K < 1 || n < 1) throw detail::line_error(lineno, "counts must be positive");

  LabeledDataset data;
  data.features.resize(n, d);
  data.labels.resize(n, K);
  long row = 0;
  while (next()) {
    if (line.empty()) continue;
    if (row == n)
      throw FormatError(FormatError::Kind::malformed,
                        "line " + std::to_string(lineno) + ": more samples than the declared " +
                            std::to_string(n));
    auto fields = detail::split_tabs(line);
    if (static_cast<long>(fields.size()) != 1 + d + K)
      throw detail::line_error(lineno, "expected " + std::to_string(1 + d + K) + " fields, found " +
                                           std::to_string(fields.size()));
    if (fields[0].empty()) throw detail::line_error(lineno, "empty sample id");
    data.ids.emplace_back(fields[0]);
    for (long j = 0; j < d; ++j)
      data.features(row, j) = detail::parse_number<double>(fields[1 + j], lineno, "feature");
    for (long k = 0; k < K; ++k) {
      const int y = detail::parse_number<int>(fields[1 + d + k], lineno, "label");
      if (y != 1 && y != -1)
        throw detail::line_error(lineno, "label must be -1 or 1, found " + std::to_string(y));
      data.labels(row, k) = y;
    }
    ++row;
  }
  if (row != n)
    throw FormatError(FormatError::Kind::truncated, "header declares " + std::to_string(n) +
                                                        " samples, file has " + std::to_string(row));
  if (!data.features.allFinite()) throw InputError("dataset has non-finite features");
  data.validate(require_both_signs);
  return data;
}

inline LabeledDataset load_dataset(const std::filesystem::path& path, bool require_both_signs = true) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open dataset '" + path.string() + "'");
  return read_dataset(is, require_both_signs);
}

inline void save_dataset(const LabeledDataset& data, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ostream& os) { write_dataset(os, data); });
}

/// Parameters of the synthetic multi-label generator.
struct SyntheticSpec {
  Eigen::Index n = 300;
  Eigen::Index d = 10;
  Eigen::Index K = 5;
  int clusters_per_class = 1;
  double label_noise = 0.1;    // probability of flipping each label
  double feature_noise = 0.1;  // standard deviation around the cluster sum
  bool histogram = true;       // rectify and L1-normalize each row
  std::uint64_t seed = 0;
  int max_retries = 100;

  void validate() const {
    if (n < 1 || d < 1 || K < 1 || clusters_per_class < 1)
      throw ConfigError("synthetic spec needs positive n, d, K and clusters per class");
    if (!(label_noise >= 0.0 && label_noise < 0.5))
      throw ConfigError("label noise must lie in [0, 0.5)");
    if (!(feature_noise >= 0.0)) throw ConfigError("feature noise must be >= 0");
    if (max_retries < 1) throw ConfigError("max_retries must be >= 1");
  }
};

/// Multi-label Gaussian clusters. Every concept owns `clusters_per_class`
/// centers in [0, 1]^d; a sample draws its concept set (each concept with
/// probability min(0.5, 1.5 / K), at least one when K > 1), sums one random
/// center of each present concept and adds Gaussian noise. Labels are then
/// flipped independently at `label_noise`. Draws repeat until every concept
/// has both a positive and a negative example.
inline LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Eigen::Index centers_per_class = spec.clusters_per_class;
  Eigen::MatrixXd centers(spec.K * centers_per_class, spec.d);
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = 0; j < spec.d; ++j) centers(i, j) = unif(rng);
  const double present_prob = std::min(0.5, 1.5 / static_cast<double>(spec.K));

  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    LabeledDataset data;
    data.features.setZero(spec.n, spec.d);
    data.labels.setConstant(spec.n, spec.K, -1);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
      data.ids.push_back("s" + std::to_string(i));
      bool any = false;
      while (!any) {
        for (Eigen::Index k = 0; k < spec.K; ++k) {
          data.labels(i, k) = unif(rng) < present_prob ? 1 : -1;
          any = any || data.labels(i, k) > 0;
        }
        if (spec.K == 1) any = true;
      }
      for (Eigen::Index k = 0; k < spec.K; ++k) {
        if (data.labels(i, k) < 0) continue;
        const auto c = static_cast<Eigen::Index>(unif(rng) * static_cast<double>(centers_per_class));
        data.features.row(i) += centers.row(k * centers_per_class + std::min(c, centers_per_class - 1));
      }
      for (Eigen::Index j = 0; j < spec.d; ++j) data.features(i, j) += spec.feature_noise * gauss(rng);
      if (spec.histogram) {
        data.features.row(i) = data.features.row(i).cwiseMax(0.0);
        const double mass = data.features.row(i).sum();
        if (mass > 0.0)
          data.features.row(i) /= mass;
        else
          data.features.row(i).setConstant(1.0 / static_cast<double>(spec.d));
      }
      for (Eigen::Index k = 0; k < spec.K; ++k)
        if (unif(rng) < spec.label_noise) data.labels(i, k) = -data.labels(i, k);
    }
    bool ok = true;
    for (Eigen::Index k = 0; k < spec.K && ok; ++k) {
      const auto positives = (data.labels.col(k).array() > 0).count();
      ok = positives > 0 && positives < spec.n;
    }
    if (ok) return data;
  }
  throw InputError("could not generate a dataset with both label signs for every concept after " +
                   std::to_string(spec.max_retries) + " attempts (n = " + std::to_string(spec.n) + ")");
}

/// Random L1-normalized nonnegative histograms (rows), e.g. for anchor sets.
inline Eigen::MatrixXd random_histograms(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = unif(rng);
    X.row(i) /= X.row(i).sum();
  }
  return X;
}

}  // namespace dmn
