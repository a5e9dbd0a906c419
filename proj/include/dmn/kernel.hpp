#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dmn/error.hpp"
#include "dmn/parallel.hpp"

namespace dmn {

enum class KernelKind { linear, polynomial, rbf, histogram_intersection };

inline std::string_view to_string(KernelKind k) {
  switch (k) {
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial: return "polynomial";
    case KernelKind::rbf: return "rbf";
    case KernelKind::histogram_intersection: return "histogram_intersection";
  }
  return "?";
}

inline KernelKind kernel_kind_from_string(std::string_view s) {
  if (s == "linear") return KernelKind::linear;
  if (s == "polynomial") return KernelKind::polynomial;
  if (s == "rbf") return KernelKind::rbf;
  if (s == "histogram_intersection" || s == "hik") return KernelKind::histogram_intersection;
  throw ConfigError("unknown kernel kind '" + std::string(s) + "'");
}

/// A parametric base kernel of the input layer.
///
/// linear:      <x, y>
/// polynomial:  (<x, y> + offset)^degree
/// rbf:         exp(-gamma * |x - y|^2)
/// histogram_intersection: sum_d min(x_d, y_d), nonnegative inputs only
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  int degree = 2;
  double offset = 0.0;
  double gamma = 1.0;

  static KernelSpec linear() { return {KernelKind::linear}; }
  static KernelSpec polynomial(int degree, double offset) {
    return {KernelKind::polynomial, degree, offset};
  }
  static KernelSpec rbf(double gamma) { return {KernelKind::rbf, 2, 0.0, gamma}; }
  static KernelSpec histogram_intersection() { return {KernelKind::histogram_intersection}; }

  void validate() const {
    if (kind == KernelKind::polynomial) {
      if (degree < 1) throw ConfigError("polynomial kernel needs degree >= 1");
      if (!(offset >= 0.0) || !std::isfinite(offset))
        throw ConfigError("polynomial kernel needs a finite offset >= 0");
    }
    if (kind == KernelKind::rbf && (!(gamma > 0.0) || !std::isfinite(gamma)))
      throw ConfigError("rbf kernel needs a finite gamma > 0");
  }

  friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case KernelKind::polynomial: return a.degree == b.degree && a.offset == b.offset;
      case KernelKind::rbf: return a.gamma == b.gamma;
      default: return true;
    }
  }
};

namespace detail {

// Every reduction runs index-ascending in plain scalar code so that
// eval(x, y) == eval(y, x) holds bit-for-bit.
template <class A, class B>
double dot(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += x(i) * y(i);
  return s;
}

inline double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace detail

/// Evaluates one base kernel on a pair of feature vectors (any Eigen vector
/// expression, rows of a sample matrix included).
template <class A, class B>
double eval_kernel(const KernelSpec& spec, const Eigen::MatrixBase<A>& x,
                   const Eigen::MatrixBase<B>& y) {
  if (x.size() != y.size())
    throw InputError("kernel arguments differ in dimension (" + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()) + ")");
  switch (spec.kind) {
    case KernelKind::linear:
      return detail::dot(x, y);
    case KernelKind::polynomial:
      return detail::ipow(detail::dot(x, y) + spec.offset, spec.degree);
    case KernelKind::rbf: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        double d = x(i) - y(i);
        s += d * d;
      }
      return std::exp(-spec.gamma * s);
    }
    case KernelKind::histogram_intersection: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) < 0.0 || y(i) < 0.0)
          throw InputError("histogram intersection kernel requires nonnegative features");
        s += std::min(x(i), y(i));
      }
      return s;
    }
  }
  throw ConfigError("invalid kernel kind");
}

/// Kernel values between sample lists; entry (i, j) = k(X[i], X'[j]).
struct GramMatrix {
  Eigen::MatrixXd values;
  std::vector<std::size_t> row_ids;
  std::vector<std::size_t> col_ids;

  Eigen::Index size() const { return values.rows(); }
  bool is_square() const { return values.rows() == values.cols(); }
};

namespace detail {
inline std::vector<std::size_t> iota_ids(Eigen::Index n) {
  std::vector<std::size_t> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

inline void check_samples(const Eigen::MatrixXd& X, const char* what) {
  if (X.rows() == 0) throw InputError(std::string(what) + ": empty sample list");
  if (!X.allFinite()) throw InputError(std::string(what) + ": non-finite feature value");
}
}  // namespace detail

/// Samples are the rows of X and Xp. Row blocks are spread over
/// max_threads() workers when `parallel` is set; every entry is still one
/// eval_kernel call, so the result does not depend on the thread count.
inline GramMatrix gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& Xp, bool parallel = false) {
  spec.validate();
  detail::check_samples(X, "gram_matrix");
  detail::check_samples(Xp, "gram_matrix");
  if (X.cols() != Xp.cols())
    throw InputError("gram_matrix: sample lists differ in dimension");
  if (spec.kind == KernelKind::histogram_intersection &&
      ((X.array() < 0.0).any() || (Xp.array() < 0.0).any()))
    throw InputError("histogram intersection kernel requires nonnegative features");

  const Eigen::Index n = X.rows(), m = Xp.rows();
  GramMatrix g{Eigen::MatrixXd(n, m), detail::iota_ids(n), detail::iota_ids(m)};

  auto fill_row = [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < m; ++j) g.values(i, j) = eval_kernel(spec, X.row(i), Xp.row(j));
  };
  if (parallel && max_threads() > 1) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
    for (Eigen::Index i = 0; i < n; ++i) fill_row(i);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) fill_row(i);
  }
  return g;
}

inline GramMatrix gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              bool parallel = false) {
  return gram_matrix(spec, X, X, parallel);
}

/// Kernel values between one vector and every row of S (a Nystroem row).
template <class A>
Eigen::RowVectorXd kernel_row(const KernelSpec& spec, const Eigen::MatrixBase<A>& x,
                              const Eigen::MatrixXd& S) {
  Eigen::RowVectorXd r(S.rows());
  for (Eigen::Index j = 0; j < S.rows(); ++j) r(j) = eval_kernel(spec, x, S.row(j));
  return r;
}

/// Median of pairwise squared Euclidean distances over distinct rows.
inline double median_sq_distance(const Eigen::MatrixXd& X) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(X.rows() * (X.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) d.push_back((X.row(i) - X.row(j)).squaredNorm());
  if (d.empty()) throw InputError("median_sq_distance needs at least two samples");
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

}  // namespace dmn
