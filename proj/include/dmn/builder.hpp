#pragma once

#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmn/dkn.hpp"
#include "dmn/eigen_projection.hpp"
#include "dmn/error.hpp"
#include "dmn/kernel.hpp"
#include "dmn/model.hpp"

namespace dmn {

/// Samples whose gram matrices get eigendecomposed; rows of `samples`.
struct AnchorSet {
  Eigen::MatrixXd samples;
  std::vector<std::string> ids;

  Eigen::Index size() const { return samples.rows(); }

  static AnchorSet from_samples(Eigen::MatrixXd samples) {
    AnchorSet s{std::move(samples), {}};
    for (Eigen::Index i = 0; i < s.samples.rows(); ++i) s.ids.push_back(std::to_string(i));
    return s;
  }

  void validate() const {
    if (samples.rows() < 2) throw InputError("anchor set needs at least 2 samples");
    if (static_cast<Eigen::Index>(ids.size()) != samples.rows())
      throw InputError("anchor set needs one id per sample");
    if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
      throw InputError("anchor ids must be unique");
    if (!samples.allFinite()) throw InputError("anchor samples contain non-finite values");
  }
};

struct UnitBuildReport {
  int layer = 0;  // 1-based
  int unit = 0;   // 1-based
  ClipReport clip;
};

struct BuildResult {
  DmnModel model;
  /// Maps of the anchor samples for every unit, anchor_maps[l - 1][p].
  std::vector<std::vector<Eigen::MatrixXd>> anchor_maps;
  std::vector<UnitBuildReport> units;
};

/// Guard against exp overflow; the argument scale of the final activation is
/// not normalized anywhere.
inline constexpr double kMaxExpArgument = 700.0;

namespace detail {

inline EigenFactor factor_unit(const Eigen::MatrixXd& G, double clip_ratio, int layer, int unit) {
  try {
    return eigen_projection(G, clip_ratio);
  } catch (const NumericError& e) {
    throw NumericError("build failed at layer " + std::to_string(layer) + " unit " +
                       std::to_string(unit) + ": " + e.what());
  }
}

}  // namespace detail

/// Nystroem maps of every base kernel over S: U = V Lambda^(-1/2) from the
/// kernel gram K, anchors = K U (the maps of S themselves).
inline std::vector<DmnUnit> build_input_layer(const std::vector<KernelSpec>& specs,
                                              const AnchorSet& S, double clip_ratio,
                                              std::vector<UnitBuildReport>* report = nullptr) {
  if (specs.empty()) throw ConfigError("build_input_layer: no input kernels");
  S.validate();
  std::vector<DmnUnit> units;
  for (std::size_t p = 0; p < specs.size(); ++p) {
    const GramMatrix K = gram_matrix(specs[p], S.samples);
    const EigenFactor f = detail::factor_unit(K.values, clip_ratio, 1, static_cast<int>(p + 1));
    DmnUnit u;
    u.kernel = specs[p];
    u.activation = Activation::identity;
    u.projection = f.projection();
    u.anchors = K.values * u.projection;
    if (report) report->push_back({1, static_cast<int>(p + 1), f.clip});
    units.push_back(std::move(u));
  }
  return units;
}

/// Greedy layerwise construction. Each upper unit stacks the sqrt(w)-scaled
/// maps of S from the layer below into its anchor matrix A, forms
/// G = g(A A^T), and stores U = V Lambda^(-1/2) from G's eigenpairs; on S the
/// resulting maps reproduce G up to the clipped eigenvalues.
inline BuildResult build_dmn(const DknArchitecture& arch, const AnchorSet& S,
                             double clip_ratio = kDefaultClipRatio) {
  arch.validate();
  S.validate();
  if (S.samples.cols() < 1) throw InputError("anchor samples have no features");

  BuildResult out;
  out.model.anchor_samples = S.samples;
  out.model.layers.push_back(build_input_layer(arch.input_kernels, S, clip_ratio, &out.units));

  std::vector<Eigen::MatrixXd> below;
  for (const auto& u : out.model.layers[0]) below.push_back(u.anchors);
  out.anchor_maps.push_back(below);

  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const DknLayer& layer = arch.layers[i];
    const int l = static_cast<int>(i) + 2;
    std::vector<DmnUnit> units;
    std::vector<Eigen::MatrixXd> maps;
    for (Eigen::Index p = 0; p < layer.width(); ++p) {
      const int unit = static_cast<int>(p) + 1;
      DmnUnit u;
      u.activation = layer.activation;
      u.weights = layer.weights.row(p).transpose();
      u.anchors = concat_maps(below, u.weights);

      Eigen::MatrixXd G = u.anchors * u.anchors.transpose();
      G = (0.5 * (G + G.transpose())).eval();
      if (layer.activation == Activation::exp && G.cwiseAbs().maxCoeff() > kMaxExpArgument)
        throw NumericError("exp activation argument exceeds " + std::to_string(kMaxExpArgument) +
                           " at layer " + std::to_string(l) + " unit " + std::to_string(unit));
      G = activate(layer.activation, G);
      if (!G.allFinite())
        throw NumericError("non-finite gram at layer " + std::to_string(l) + " unit " +
                           std::to_string(unit));

      const EigenFactor f = detail::factor_unit(G, clip_ratio, l, unit);
      u.projection = f.projection();
      out.units.push_back({l, unit, f.clip});
      maps.push_back(G * u.projection);
      units.push_back(std::move(u));
    }
    out.model.layers.push_back(std::move(units));
    out.anchor_maps.push_back(maps);
    below = std::move(maps);
  }
  return out;
}

/// Relative spectral error ||Phi Phi^T - K||_2 / ||K||_2 per unit, with K the
/// deep-kernel gram on S and Phi the built maps of S; err[l - 1][p].
inline std::vector<std::vector<double>> reconstruction_errors(
    const DknArchitecture& arch, const AnchorSet& S,
    const std::vector<std::vector<Eigen::MatrixXd>>& anchor_maps) {
  const LayeredGrams dkn = dkn_forward_grams(arch, dkn_input_grams(arch, S.samples));
  if (dkn.size() != anchor_maps.size()) throw ConfigError("layer count mismatch");
  std::vector<std::vector<double>> err(dkn.size());
  for (std::size_t l = 0; l < dkn.size(); ++l) {
    if (dkn[l].size() != anchor_maps[l].size()) throw ConfigError("unit count mismatch");
    for (std::size_t p = 0; p < dkn[l].size(); ++p) {
      const Eigen::MatrixXd& K = dkn[l][p];
      const Eigen::MatrixXd Khat = anchor_maps[l][p] * anchor_maps[l][p].transpose();
      const Eigen::MatrixXd diff = 0.5 * ((Khat - K) + (Khat - K).transpose());
      err[l].push_back(symmetric_spectral_norm(diff) / symmetric_spectral_norm(K));
    }
  }
  return err;
}

}  // namespace dmn
