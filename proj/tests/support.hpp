#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.
// Oracles use plain loops and different algorithms from the library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "dmn/dmn.hpp"

namespace dmn::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dmn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed,
                                       double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  return Eigen::MatrixXd::NullaryExpr(r, c, [&]() { return g(rng); });
}

// ---------------------------------------------------------------------------
// Kernel and deep-kernel oracles
// ---------------------------------------------------------------------------

inline double kernel_oracle(const KernelSpec& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  switch (k.kind) {
    case KernelKind::linear: return x.dot(y);
    case KernelKind::polynomial: return std::pow(x.dot(y) + k.offset, k.degree);
    case KernelKind::rbf: return std::exp(-k.gamma * (x - y).squaredNorm());
    case KernelKind::histogram_intersection: return x.cwiseMin(y).sum();
  }
  return NAN;
}

inline double activation_oracle(Activation a, double z) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::tanh: return std::tanh(z);
    case Activation::exp: return std::exp(z);
  }
  return NAN;
}

/// Deep-kernel gram of every unit by direct recursion over sample pairs.
inline std::vector<std::vector<Eigen::MatrixXd>> dkn_gram_oracle(const DknArchitecture& arch,
                                                                 const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  std::vector<std::vector<Eigen::MatrixXd>> grams(1);
  for (const auto& k : arch.input_kernels) {
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        G(i, j) = kernel_oracle(k, X.row(i).transpose(), X.row(j).transpose());
    grams[0].push_back(G);
  }
  for (const auto& layer : arch.layers) {
    std::vector<Eigen::MatrixXd> next;
    for (Eigen::Index p = 0; p < layer.width(); ++p) {
      Eigen::MatrixXd G(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          double s = 0.0;
          for (Eigen::Index q = 0; q < layer.weights.cols(); ++q)
            s += layer.weights(p, q) * grams.back()[static_cast<std::size_t>(q)](i, j);
          G(i, j) = activation_oracle(layer.activation, s);
        }
      next.push_back(G);
    }
    grams.push_back(next);
  }
  return grams;
}

/// Eigenvalues of a symmetric matrix, descending, by cyclic Jacobi rotations.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd A) {
  const Eigen::Index n = A.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off < 1e-30 * std::max(1.0, A.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (A(p, q) == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
      }
  }
  Eigen::VectorXd ev = A.diagonal();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  return ev;
}

inline double spectral_norm_oracle(const Eigen::MatrixXd& sym) {
  return jacobi_eigenvalues(sym).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Toy models
// ---------------------------------------------------------------------------

/// Two layers: three base kernels feeding one unit with activation `top`.
inline BuildResult toy_two_layer(Eigen::Index N, Eigen::Index d, std::uint64_t seed,
                                 Activation top = Activation::tanh) {
  AnchorSet S = AnchorSet::from_samples(random_histograms(N, d, seed));
  DknArchitecture arch;
  arch.input_kernels = {KernelSpec::linear(), KernelSpec::rbf(2.0), KernelSpec::histogram_intersection()};
  std::mt19937_64 rng(seed + 1);
  arch.layers.push_back({top, random_mixing_weights(1, 3, rng)});
  return build_dmn(arch, S);
}

/// Three layers: two base kernels, two tanh units, one exp unit.
inline BuildResult toy_three_layer(Eigen::Index N, Eigen::Index d, std::uint64_t seed) {
  AnchorSet S = AnchorSet::from_samples(random_histograms(N, d, seed));
  DknArchitecture arch;
  arch.input_kernels = {KernelSpec::polynomial(2, 0.0), KernelSpec::rbf(1.5)};
  std::mt19937_64 rng(seed + 1);
  arch.layers.push_back({Activation::tanh, random_mixing_weights(2, 2, rng)});
  arch.layers.push_back({Activation::exp, random_mixing_weights(1, 2, rng)});
  return build_dmn(arch, S);
}

inline LabeledDataset toy_data(Eigen::Index n, Eigen::Index d, Eigen::Index K, std::uint64_t seed) {
  SyntheticSpec s;
  s.n = n;
  s.d = d;
  s.K = K;
  s.seed = seed;
  return generate_synthetic(s);
}

// ---------------------------------------------------------------------------
// Objective and gradient oracles
// ---------------------------------------------------------------------------

/// Objective by explicit loops over classes and samples.
inline double objective_oracle(const Eigen::MatrixXd& maps, const Eigen::MatrixXi& Y,
                               const Eigen::MatrixXd& W, const Eigen::VectorXd& C) {
  double e = 0.0;
  for (Eigen::Index k = 0; k < Y.cols(); ++k) {
    double reg = 0.0;
    for (Eigen::Index j = 0; j < W.cols(); ++j) reg += W(k, j) * W(k, j);
    e += 0.5 * reg;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      double f = 0.0;
      for (Eigen::Index j = 0; j < W.cols(); ++j) f += W(k, j) * maps(i, j);
      const double slack = std::max(0.0, 1.0 - Y(i, k) * f);
      e += C(k) * slack * slack;
    }
  }
  return e;
}

/// Central difference of the objective (head fixed) w.r.t. one scalar
/// parameter of `model`, reached through `select`.
template <class Select>
double central_difference(DmnModel model, const ClassifierHead& head, const LabeledDataset& data,
                          Select&& select, double h) {
  double& p = select(model);
  const double saved = p;
  p = saved + h;
  const double up = objective_oracle(dmn_map(model, data.features), data.labels, head.normals, head.trade_offs);
  p = saved - h;
  const double down = objective_oracle(dmn_map(model, data.features), data.labels, head.normals, head.trade_offs);
  return (up - down) / (2.0 * h);
}

/// Per-class squared-hinge primal minimized by plain gradient descent with a
/// fixed 1/L step; run long enough to serve as a reference optimum.
inline Eigen::VectorXd gd_squared_hinge(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double C,
                                        int iters) {
  const double L = 1.0 + 2.0 * C * jacobi_eigenvalues(Phi.transpose() * Phi).maxCoeff();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(Phi.cols());
  for (int t = 0; t < iters; ++t) {
    Eigen::VectorXd g = w;
    for (Eigen::Index i = 0; i < Phi.rows(); ++i) {
      const double slack = std::max(0.0, 1.0 - y(i) * Phi.row(i).dot(w));
      g -= 2.0 * C * y(i) * slack * Phi.row(i).transpose();
    }
    w -= g / L;
  }
  return w;
}

inline double squared_hinge_value(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double C,
                                  const Eigen::VectorXd& w) {
  double e = 0.5 * w.squaredNorm();
  for (Eigen::Index i = 0; i < Phi.rows(); ++i) {
    const double slack = std::max(0.0, 1.0 - y(i) * Phi.row(i).dot(w));
    e += C * slack * slack;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Metric oracle
// ---------------------------------------------------------------------------

struct NaiveMetrics {
  double mf_s, mf_c, map;
};

inline double naive_f(int tp, int pred, int truth) {
  if (pred == 0 && truth == 0) return 1.0;
  if (tp == 0) return 0.0;
  const double P = static_cast<double>(tp) / pred, R = static_cast<double>(tp) / truth;
  return 2.0 * P * R / (P + R);
}

/// Naive metrics: ranks by repeated selection of the best remaining item.
inline NaiveMetrics naive_metrics(const Eigen::MatrixXd& S, const Eigen::MatrixXi& Y) {
  const Eigen::Index n = S.rows(), K = S.cols();
  double fs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int tp = 0, pred = 0, truth = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const bool p = S(i, k) > 0.0, t = Y(i, k) == 1;
      pred += p;
      truth += t;
      tp += p && t;
    }
    fs += naive_f(tp, pred, truth);
  }
  double fc = 0.0, ap = 0.0;
  int used = 0;
  for (Eigen::Index k = 0; k < K; ++k) {
    int tp = 0, pred = 0, truth = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool p = S(i, k) > 0.0, t = Y(i, k) == 1;
      pred += p;
      truth += t;
      tp += p && t;
    }
    if (truth == 0) continue;
    ++used;
    fc += naive_f(tp, pred, truth);
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    int hits = 0;
    double sum = 0.0;
    for (Eigen::Index rank = 1; rank <= n; ++rank) {
      Eigen::Index best = -1;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!taken[static_cast<std::size_t>(i)] && (best < 0 || S(i, k) > S(best, k))) best = i;
      taken[static_cast<std::size_t>(best)] = true;
      if (Y(best, k) == 1) sum += static_cast<double>(++hits) / static_cast<double>(rank);
    }
    ap += sum / truth;
  }
  return {fs / static_cast<double>(n), used ? fc / used : 0.0, used ? ap / used : 0.0};
}

}  // namespace dmn::testing
