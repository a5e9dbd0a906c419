#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dmn/error.hpp"
#include "dmn/kernel.hpp"
#include "dmn/parallel.hpp"

namespace dmn {

enum class Activation { identity, tanh, exp };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::exp: return "exp";
  }
  return "?";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "exp") return Activation::exp;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::tanh: return std::tanh(z);
    case Activation::exp: return std::exp(z);
  }
  return z;
}

/// g'(z) expressed through the activation output h = g(z).
inline double activation_derivative(Activation a, double h) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::tanh: return 1.0 - h * h;
    case Activation::exp: return h;
  }
  return 1.0;
}

/// Entrywise activation. Uses the scalar std:: functions (not Eigen's
/// vectorized approximations) so every evaluation path agrees bit-for-bit.
template <class Derived>
Eigen::MatrixXd activate(Activation a, const Eigen::MatrixBase<Derived>& Z) {
  return Z.unaryExpr([a](double z) { return activate(a, z); });
}

/// One layer above the input: unit p computes g(sum_q w(p, q) k_q) over the
/// units q of the layer below.
struct DknLayer {
  Activation activation = Activation::tanh;
  Eigen::MatrixXd weights;  // width x (width of the layer below)

  Eigen::Index width() const { return weights.rows(); }
};

/// Deep kernel network. Layer 1 is `input_kernels`; `layers` holds 2..L.
struct DknArchitecture {
  std::vector<KernelSpec> input_kernels;
  std::vector<DknLayer> layers;

  int num_layers() const { return 1 + static_cast<int>(layers.size()); }

  /// Width n_l of layer l, 1-based as in the usual layer numbering.
  Eigen::Index width(int l) const {
    return l == 1 ? static_cast<Eigen::Index>(input_kernels.size()) : layers.at(l - 2).width();
  }

  Eigen::Index max_width() const {
    Eigen::Index m = width(1);
    for (const auto& layer : layers) m = std::max(m, layer.width());
    return m;
  }

  void validate() const {
    if (input_kernels.empty()) throw ConfigError("architecture has no input kernels");
    if (layers.empty()) throw ConfigError("architecture needs at least 2 layers");
    for (const auto& k : input_kernels) k.validate();
    Eigen::Index below = width(1);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& layer = layers[i];
      const std::string where = "layer " + std::to_string(i + 2);
      if (layer.width() < 1) throw ConfigError(where + " has no units");
      if (layer.weights.cols() != below)
        throw ConfigError(where + ": weight matrix has " + std::to_string(layer.weights.cols()) +
                          " columns, layer below has " + std::to_string(below) + " units");
      if (!layer.weights.allFinite() || (layer.weights.array() < 0.0).any())
        throw ConfigError(where + ": mixing weights must be finite and nonnegative");
      below = layer.width();
    }
  }
};

/// Uniform random nonnegative weights, each row normalized to sum to 1.
inline Eigen::MatrixXd random_mixing_weights(Eigen::Index rows, Eigen::Index cols,
                                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index p = 0; p < rows; ++p) {
    for (Eigen::Index q = 0; q < cols; ++q) w(p, q) = u(rng);
    w.row(p) /= w.row(p).sum();
  }
  return w;
}

/// Three-layer network over the four base kernels: hidden width 2 * n_1
/// with tanh, one exp output unit. The RBF bandwidth is 4 / median squared
/// distance of `anchors`.
inline DknArchitecture default_architecture(const Eigen::MatrixXd& anchors, std::uint64_t seed) {
  DknArchitecture arch;
  arch.input_kernels = {KernelSpec::linear(), KernelSpec::polynomial(2, 0.0),
                        KernelSpec::rbf(4.0 / median_sq_distance(anchors)),
                        KernelSpec::histogram_intersection()};
  if (!(arch.input_kernels[2].gamma > 0.0) || !std::isfinite(arch.input_kernels[2].gamma))
    throw InputError("anchor samples are all identical; cannot choose an RBF bandwidth");
  std::mt19937_64 rng(seed);
  const Eigen::Index n1 = 4;
  arch.layers.push_back({Activation::tanh, random_mixing_weights(2 * n1, n1, rng)});
  arch.layers.push_back({Activation::exp, random_mixing_weights(1, 2 * n1, rng)});
  return arch;
}

/// Gram matrices of every unit; grams[l - 1][p] for layer l.
using LayeredGrams = std::vector<std::vector<Eigen::MatrixXd>>;

inline LayeredGrams dkn_forward_grams(const DknArchitecture& arch,
                                      const std::vector<GramMatrix>& input_grams) {
  arch.validate();
  if (static_cast<Eigen::Index>(input_grams.size()) != arch.width(1))
    throw ConfigError("expected " + std::to_string(arch.width(1)) + " input grams, got " +
                      std::to_string(input_grams.size()));
  const Eigen::Index rows = input_grams.front().values.rows();
  const Eigen::Index cols = input_grams.front().values.cols();
  LayeredGrams out(1);
  for (const auto& g : input_grams) {
    if (g.values.rows() != rows || g.values.cols() != cols)
      throw ConfigError("input grams differ in shape");
    out[0].push_back(g.values);
  }
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& layer = arch.layers[i];
    const auto& below = out.back();
    std::vector<Eigen::MatrixXd> units;
    for (Eigen::Index p = 0; p < layer.width(); ++p) {
      Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(rows, cols);
      for (Eigen::Index q = 0; q < layer.weights.cols(); ++q)
        mix += layer.weights(p, q) * below[static_cast<std::size_t>(q)];
      units.push_back(activate(layer.activation, mix));
      if (!units.back().allFinite())
        throw NumericError("DKN gram of layer " + std::to_string(i + 2) + " unit " +
                           std::to_string(p + 1) + " is not finite");
    }
    out.push_back(std::move(units));
  }
  return out;
}

/// Input-layer grams of every base kernel on the rows of X.
inline std::vector<GramMatrix> dkn_input_grams(const DknArchitecture& arch,
                                               const Eigen::MatrixXd& X, bool parallel = false) {
  std::vector<GramMatrix> grams;
  for (const auto& spec : arch.input_kernels) grams.push_back(gram_matrix(spec, X, parallel));
  return grams;
}

/// Deep kernel value of one pair: O(M^2 L) with M the widest layer.
/// Reads unit 1 of the last layer.
template <class A, class B>
double dkn_pair(const DknArchitecture& arch, const Eigen::MatrixBase<A>& x,
                const Eigen::MatrixBase<B>& y) {
  const std::size_t n1 = arch.input_kernels.size();
  // two ping-pong buffers sized for the widest layer
  Eigen::VectorXd cur(arch.max_width()), next(arch.max_width());
  for (std::size_t p = 0; p < n1; ++p) cur(static_cast<Eigen::Index>(p)) = eval_kernel(arch.input_kernels[p], x, y);
  Eigen::Index below = static_cast<Eigen::Index>(n1);
  for (const auto& layer : arch.layers) {
    for (Eigen::Index p = 0; p < layer.width(); ++p) {
      double s = 0.0;
      for (Eigen::Index q = 0; q < below; ++q) s += layer.weights(p, q) * cur(q);
      next(p) = activate(layer.activation, s);
    }
    below = layer.width();
    std::swap(cur, next);
  }
  return cur(0);
}

/// Dual-form classifier over the DKN: score_k = sum_i a(k, i) k(x, s_i) + b_k.
/// Cost grows linearly with the number of support samples.
template <class A>
Eigen::VectorXd dkn_classify(const DknArchitecture& arch, const Eigen::MatrixXd& support,
                             const Eigen::MatrixXd& dual_coef, const Eigen::VectorXd& bias,
                             const Eigen::MatrixBase<A>& x, bool parallel = false) {
  if (dual_coef.cols() != support.rows())
    throw InputError("dual coefficients have " + std::to_string(dual_coef.cols()) +
                     " columns for " + std::to_string(support.rows()) + " support samples");
  if (bias.size() != dual_coef.rows()) throw InputError("bias length differs from class count");
  if (support.rows() > 0 && x.size() != support.cols())
    throw InputError("query dimension differs from support dimension");
  Eigen::VectorXd kv(support.rows());
  [[maybe_unused]] const int threads = parallel ? max_threads() : 1;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
#endif
  for (Eigen::Index i = 0; i < support.rows(); ++i) kv(i) = dkn_pair(arch, x, support.row(i));
  return dual_coef * kv + bias;
}

}  // namespace dmn
