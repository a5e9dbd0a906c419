#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmn/error.hpp"

namespace dmn {

inline constexpr double kDefaultClipRatio = 1e-10;

/// What eigenvalue clipping threw away.
struct ClipReport {
  Eigen::Index retained = 0;
  Eigen::Index discarded = 0;
  double discarded_mass = 0.0;  // sum of |lambda| over discarded pairs
  double max_discarded = 0.0;   // spectral-norm bound on the reconstruction error
  double lambda_max = 0.0;
};

/// Retained eigenpairs of a symmetric gram, eigenvalues strictly positive
/// and sorted descending; V * diag(values) * V^T rebuilds the gram up to
/// clip.max_discarded in spectral norm.
struct EigenFactor {
  Eigen::MatrixXd vectors;  // N x r, orthonormal columns
  Eigen::VectorXd values;   // r
  ClipReport clip;

  Eigen::Index rank() const { return values.size(); }

  /// U = V * Lambda^(-1/2), N x r.
  Eigen::MatrixXd projection() const {
    return vectors * values.cwiseSqrt().cwiseInverse().asDiagonal();
  }

  Eigen::MatrixXd reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
  }
};

/// Symmetric eigendecomposition with clipping: pairs with
/// lambda <= clip_ratio * lambda_max are dropped, which removes every
/// nonpositive eigenvalue as well. Equal eigenvalues keep the solver's
/// column order; each eigenvector is signed so its largest-magnitude entry
/// is positive.
inline EigenFactor eigen_projection(const Eigen::MatrixXd& K, double clip_ratio = kDefaultClipRatio) {
  if (!(clip_ratio > 0.0) || !std::isfinite(clip_ratio))
    throw ConfigError("clip ratio must be a finite positive number");
  if (K.rows() != K.cols() || K.rows() == 0)
    throw InputError("eigen_projection needs a nonempty square matrix");
  if (!K.allFinite()) throw NumericError("eigen_projection: gram has non-finite entries");
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw InputError("eigen_projection: gram is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver did not converge");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXd& vec = es.eigenvectors();

  ClipReport clip;
  clip.lambda_max = lam.maxCoeff();
  if (!(clip.lambda_max > 0.0))
    throw NumericError("degenerate gram: no positive eigenvalue (lambda_max = " +
                       std::to_string(clip.lambda_max) + ")");
  const double threshold = clip_ratio * clip.lambda_max;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > threshold) {
      keep.push_back(i);
    } else {
      ++clip.discarded;
      clip.discarded_mass += std::abs(lam(i));
      clip.max_discarded = std::max(clip.max_discarded, std::abs(lam(i)));
    }
  }
  std::stable_sort(keep.begin(), keep.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return lam(a) > lam(b); });

  EigenFactor f;
  f.vectors.resize(K.rows(), static_cast<Eigen::Index>(keep.size()));
  f.values.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    Eigen::VectorXd v = vec.col(keep[c]);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    f.vectors.col(col) = v;
    f.values(col) = lam(keep[c]);
  }
  clip.retained = f.rank();
  f.clip = clip;
  return f;
}

/// Largest singular value of a symmetric matrix (its spectral norm).
inline double symmetric_spectral_norm(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace dmn
