#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmn/dkn.hpp"
#include "dmn/error.hpp"
#include "dmn/kernel.hpp"

namespace dmn {

/// One unit of the explicit map network.
///
/// Input-layer units map x to k(x, S) * U with their base kernel. Upper units
/// concatenate the sqrt(w)-scaled maps of the layer below into c(x), take
/// inner products against their anchor rows, apply g and project:
///   phi(x)^T = g(A c(x))^T U.
struct DmnUnit {
  KernelSpec kernel;                           // input layer only
  Activation activation = Activation::identity;
  Eigen::VectorXd weights;                     // incoming mixing weights, upper layers only
  Eigen::MatrixXd anchors;                     // N x D; for input units the build-time maps of S
  Eigen::MatrixXd projection;                  // U, N x r

  Eigen::Index output_dim() const { return projection.cols(); }
};

struct DmnModel {
  Eigen::MatrixXd anchor_samples;              // S, N x d
  std::vector<std::vector<DmnUnit>> layers;    // layers[0] is the input layer

  Eigen::Index anchor_count() const { return anchor_samples.rows(); }
  Eigen::Index input_dim() const { return anchor_samples.cols(); }
  int num_layers() const { return static_cast<int>(layers.size()); }
  Eigen::Index output_dim() const { return layers.back().front().output_dim(); }

  /// Width of the concatenated input of a unit in layer index `li` (>= 1).
  Eigen::Index concat_width(std::size_t li) const {
    Eigen::Index d = 0;
    for (const auto& u : layers.at(li - 1)) d += u.output_dim();
    return d;
  }

  void validate() const {
    const Eigen::Index n = anchor_count();
    if (n < 1) throw ConfigError("model has no anchor samples");
    if (layers.size() < 2) throw ConfigError("model needs at least 2 layers");
    for (std::size_t li = 0; li < layers.size(); ++li) {
      if (layers[li].empty())
        throw ConfigError("model layer " + std::to_string(li + 1) + " has no units");
      for (std::size_t p = 0; p < layers[li].size(); ++p) {
        const auto& u = layers[li][p];
        const std::string where =
            "model layer " + std::to_string(li + 1) + " unit " + std::to_string(p + 1);
        if (u.projection.rows() != n || u.projection.cols() < 1)
          throw ConfigError(where + ": projection must have N rows and at least one column");
        if (li == 0) {
          u.kernel.validate();
          continue;
        }
        if (u.anchors.rows() != n || u.anchors.cols() != concat_width(li))
          throw ConfigError(where + ": anchor matrix shape does not match the layer below");
        if (u.weights.size() != static_cast<Eigen::Index>(layers[li - 1].size()))
          throw ConfigError(where + ": one mixing weight per lower unit expected");
        if (!u.weights.allFinite() || (u.weights.array() < 0.0).any())
          throw ConfigError(where + ": mixing weights must be finite and nonnegative");
      }
    }
  }

  /// The deep kernel network this model currently approximates.
  DknArchitecture architecture() const {
    DknArchitecture arch;
    for (const auto& u : layers.front()) arch.input_kernels.push_back(u.kernel);
    for (std::size_t li = 1; li < layers.size(); ++li) {
      DknLayer layer;
      layer.activation = layers[li].front().activation;
      layer.weights.resize(static_cast<Eigen::Index>(layers[li].size()),
                           static_cast<Eigen::Index>(layers[li - 1].size()));
      for (std::size_t p = 0; p < layers[li].size(); ++p)
        layer.weights.row(static_cast<Eigen::Index>(p)) = layers[li][p].weights.transpose();
      arch.layers.push_back(std::move(layer));
    }
    return arch;
  }
};

/// Horizontal concatenation [sqrt(w_1) M_1, ..., sqrt(w_Q) M_Q].
inline Eigen::MatrixXd concat_maps(std::span<const Eigen::MatrixXd> lower,
                                   const Eigen::VectorXd& weights) {
  if (lower.empty()) throw ConfigError("concat_maps: no lower maps");
  if (weights.size() != static_cast<Eigen::Index>(lower.size()))
    throw ConfigError("concat_maps: one weight per lower unit expected");
  const Eigen::Index rows = lower.front().rows();
  Eigen::Index cols = 0;
  for (std::size_t q = 0; q < lower.size(); ++q) {
    if (lower[q].rows() != rows) throw InputError("concat_maps: lower maps differ in row count");
    if (!(weights(static_cast<Eigen::Index>(q)) >= 0.0))
      throw ConfigError("concat_maps: negative mixing weight");
    cols += lower[q].cols();
  }
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index at = 0;
  for (std::size_t q = 0; q < lower.size(); ++q) {
    out.middleCols(at, lower[q].cols()) =
        std::sqrt(weights(static_cast<Eigen::Index>(q))) * lower[q];
    at += lower[q].cols();
  }
  return out;
}

/// Cached intermediate values of one unit for a batch of inputs (rows).
struct UnitTrace {
  Eigen::MatrixXd concat;      // c(x), upper units only
  Eigen::MatrixXd pre;         // kernel row k(x, S) or pre-activation A c(x), n x N
  Eigen::MatrixXd activated;   // g(pre), upper units only
  Eigen::MatrixXd out;         // phi(x), n x r
};

struct ForwardTrace {
  std::vector<std::vector<UnitTrace>> layers;

  const Eigen::MatrixXd& output() const { return layers.back().front().out; }
  Eigen::Index samples() const { return output().rows(); }
};

namespace detail {

inline void check_finite(const Eigen::MatrixXd& m, std::size_t li, std::size_t p) {
  if (!m.allFinite())
    throw NumericError("non-finite map value at layer " + std::to_string(li + 1) + " unit " +
                       std::to_string(p + 1));
}

// Shared by the traced and untraced forward passes.
inline Eigen::MatrixXd forward_impl(const DmnModel& model, const Eigen::MatrixXd& X,
                                    ForwardTrace* trace) {
  if (X.cols() != model.input_dim())
    throw InputError("input has dimension " + std::to_string(X.cols()) + ", model expects " +
                     std::to_string(model.input_dim()));
  const Eigen::MatrixXd& S = model.anchor_samples;
  if (trace) trace->layers.assign(model.layers.size(), {});

  std::vector<Eigen::MatrixXd> below;
  for (std::size_t p = 0; p < model.layers[0].size(); ++p) {
    const DmnUnit& u = model.layers[0][p];
    Eigen::MatrixXd K(X.rows(), S.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) K.row(i) = kernel_row(u.kernel, X.row(i), S);
    Eigen::MatrixXd out = K * u.projection;
    check_finite(out, 0, p);
    if (trace) trace->layers[0].push_back({Eigen::MatrixXd(), K, Eigen::MatrixXd(), out});
    below.push_back(std::move(out));
  }

  for (std::size_t li = 1; li < model.layers.size(); ++li) {
    std::vector<Eigen::MatrixXd> current;
    for (std::size_t p = 0; p < model.layers[li].size(); ++p) {
      const DmnUnit& u = model.layers[li][p];
      Eigen::MatrixXd C = concat_maps(below, u.weights);
      Eigen::MatrixXd Z = C * u.anchors.transpose();
      Eigen::MatrixXd H = activate(u.activation, Z);
      Eigen::MatrixXd out = H * u.projection;
      check_finite(out, li, p);
      if (trace)
        trace->layers[li].push_back({std::move(C), std::move(Z), std::move(H), out});
      current.push_back(std::move(out));
    }
    below = std::move(current);
  }
  return std::move(below.front());
}

}  // namespace detail

/// Final-layer maps (unit 1 of layer L) of every row of X. Cost per input is
/// independent of any training-set size.
inline Eigen::MatrixXd dmn_map(const DmnModel& model, const Eigen::MatrixXd& X) {
  return detail::forward_impl(model, X, nullptr);
}

/// Batched forward pass keeping every intermediate value for backprop.
inline ForwardTrace dmn_forward_batch(const DmnModel& model, const Eigen::MatrixXd& X) {
  ForwardTrace trace;
  detail::forward_impl(model, X, &trace);
  return trace;
}

/// Single input: returns the final map vector and its trace.
template <class A>
std::pair<Eigen::VectorXd, ForwardTrace> dmn_forward(const DmnModel& model,
                                                     const Eigen::MatrixBase<A>& x) {
  Eigen::MatrixXd X = x.derived().eval().reshaped(1, x.size());
  ForwardTrace trace = dmn_forward_batch(model, X);
  Eigen::VectorXd phi = trace.output().row(0).transpose();
  return {std::move(phi), std::move(trace)};
}

/// One hyperplane per concept on the final map, plus its trade-off C_k.
struct ClassifierHead {
  Eigen::MatrixXd normals;      // K x d_L
  Eigen::VectorXd trade_offs;   // K

  Eigen::Index classes() const { return normals.rows(); }

  void validate(Eigen::Index map_dim) const {
    if (normals.cols() != map_dim)
      throw InputError("classifier head has dimension " + std::to_string(normals.cols()) +
                       ", model maps to " + std::to_string(map_dim));
    if (trade_offs.size() != normals.rows())
      throw InputError("classifier head needs one trade-off per class");
    if ((trade_offs.array() <= 0.0).any() || !trade_offs.allFinite())
      throw ConfigError("trade-offs C_k must be finite and positive");
  }
};

struct Classification {
  Eigen::VectorXd scores;
  Eigen::VectorXi labels;  // +1 iff score > 0, else -1
};

inline Eigen::VectorXi sign_labels(const Eigen::VectorXd& scores) {
  return scores.unaryExpr([](double s) { return s > 0.0 ? 1 : -1; }).cast<int>();
}

inline void check_head_compatible(const DmnModel& model, const ClassifierHead& head) {
  if (model.layers.back().size() != 1)
    throw ConfigError("classification reads a single final unit; the last layer has " +
                      std::to_string(model.layers.back().size()));
  head.validate(model.output_dim());
}

/// Scores f_k = w_k^T phi(x) for every row of X (n x K).
inline Eigen::MatrixXd classify_batch(const DmnModel& model, const ClassifierHead& head,
                                      const Eigen::MatrixXd& X) {
  check_head_compatible(model, head);
  return dmn_map(model, X) * head.normals.transpose();
}

template <class A>
Classification classify(const DmnModel& model, const ClassifierHead& head,
                        const Eigen::MatrixBase<A>& x) {
  check_head_compatible(model, head);
  Eigen::MatrixXd X = x.derived().eval().reshaped(1, x.size());
  Eigen::VectorXd phi = dmn_map(model, X).row(0).transpose();
  Classification c;
  c.scores = head.normals * phi;
  c.labels = sign_labels(c.scores);
  return c;
}

}  // namespace dmn
