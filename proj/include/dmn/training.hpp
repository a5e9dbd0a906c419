#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmn/dataset.hpp"
#include "dmn/error.hpp"
#include "dmn/metrics.hpp"
#include "dmn/model.hpp"

namespace dmn {

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

/// E = sum_k [ 1/2 |w_k|^2 + C_k sum_i max(0, 1 - y_ik f_ik)^2 ].
struct ObjectiveTerms {
  double total = 0.0;
  double hinge = 0.0;
  double regularizer = 0.0;
};

/// Per-class trade-offs: a single value is broadcast to every class.
inline Eigen::VectorXd resolve_trade_offs(const std::vector<double>& c, Eigen::Index classes) {
  if (c.empty()) throw ConfigError("no trade-off C given");
  if (c.size() != 1 && static_cast<Eigen::Index>(c.size()) != classes)
    throw ConfigError("expected 1 or " + std::to_string(classes) + " trade-off values, got " +
                      std::to_string(c.size()));
  Eigen::VectorXd out(classes);
  for (Eigen::Index k = 0; k < classes; ++k) {
    out(k) = c.size() == 1 ? c.front() : c[static_cast<std::size_t>(k)];
    if (!(out(k) >= 0.0) || !std::isfinite(out(k)))
      throw ConfigError("trade-off values must be finite and >= 0");
  }
  return out;
}

namespace detail {
inline void check_objective_shapes(const Eigen::MatrixXd& maps, const Eigen::MatrixXi& Y,
                                   const Eigen::MatrixXd& normals, const Eigen::VectorXd& C) {
  if (maps.rows() != Y.rows()) throw InputError("maps and labels differ in sample count");
  if (normals.rows() != Y.cols() || C.size() != Y.cols())
    throw InputError("normals, trade-offs and labels differ in class count");
  if (normals.cols() != maps.cols()) throw InputError("normals and maps differ in dimension");
}
}  // namespace detail

inline ObjectiveTerms objective_from_maps(const Eigen::MatrixXd& maps, const Eigen::MatrixXi& Y,
                                          const Eigen::MatrixXd& normals,
                                          const Eigen::VectorXd& C) {
  detail::check_objective_shapes(maps, Y, normals, C);
  const Eigen::MatrixXd F = maps * normals.transpose();
  ObjectiveTerms t;
  for (Eigen::Index k = 0; k < Y.cols(); ++k) {
    t.regularizer += 0.5 * normals.row(k).squaredNorm();
    double h = 0.0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      const double slack = std::max(0.0, 1.0 - Y(i, k) * F(i, k));
      h += slack * slack;
    }
    t.hinge += C(k) * h;
  }
  t.total = t.regularizer + t.hinge;
  return t;
}

inline ObjectiveTerms objective(const DmnModel& model, const ClassifierHead& head,
                                const LabeledDataset& data) {
  return objective_from_maps(dmn_map(model, data.features), data.labels, head.normals,
                             head.trade_offs);
}

// ---------------------------------------------------------------------------
// Squared-hinge linear SVM (no bias), one class at a time
// ---------------------------------------------------------------------------

struct SvmOptions {
  double gradient_tol = 1e-6;  // relative to max(1, |grad at 0|_inf)
  int max_newton_iters = 200;
};

/// Minimizes 1/2 |w|^2 + C sum_i max(0, 1 - y_i w^T phi_i)^2 with a
/// generalized-Hessian Newton method and backtracking line search. Stops
/// once |grad|_inf <= tol * max(1, |grad(0)|_inf).
inline Eigen::VectorXd solve_squared_hinge(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                           double C, const Eigen::VectorXd* warm = nullptr,
                                           const SvmOptions& opt = {}) {
  const Eigen::Index d = Phi.cols();
  if (Phi.rows() != y.size()) throw InputError("svm: feature and label counts differ");
  if (!Phi.allFinite()) throw InputError("svm: non-finite features");
  if (!(C >= 0.0)) throw ConfigError("svm: C must be >= 0");
  if (C == 0.0 || Phi.rows() == 0) return Eigen::VectorXd::Zero(d);

  auto value = [&](const Eigen::VectorXd& w) {
    const Eigen::ArrayXd slack = (1.0 - y.array() * (Phi * w).array()).max(0.0);
    return 0.5 * w.squaredNorm() + C * slack.square().sum();
  };
  auto gradient = [&](const Eigen::VectorXd& w, Eigen::ArrayXd& slack) {
    slack = (1.0 - y.array() * (Phi * w).array()).max(0.0);
    return Eigen::VectorXd(w - 2.0 * C * Phi.transpose() * (y.array() * slack).matrix());
  };

  Eigen::ArrayXd slack;
  const double g0 = gradient(Eigen::VectorXd::Zero(d), slack).cwiseAbs().maxCoeff();
  const double tol = opt.gradient_tol * std::max(1.0, g0);

  Eigen::VectorXd w = (warm && warm->size() == d && warm->allFinite()) ? *warm
                                                                       : Eigen::VectorXd::Zero(d);
  for (int it = 0; it < opt.max_newton_iters; ++it) {
    const Eigen::VectorXd g = gradient(w, slack);
    if (g.cwiseAbs().maxCoeff() <= tol) return w;

    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < slack.size(); ++i)
      if (slack(i) > 0.0) active.push_back(i);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);
    if (!active.empty()) {
      Eigen::MatrixXd Pa(static_cast<Eigen::Index>(active.size()), d);
      for (std::size_t a = 0; a < active.size(); ++a)
        Pa.row(static_cast<Eigen::Index>(a)) = Phi.row(active[a]);
      H.selfadjointView<Eigen::Lower>().rankUpdate(Pa.transpose(), 2.0 * C);
    }
    const Eigen::VectorXd step = -H.selfadjointView<Eigen::Lower>().llt().solve(g);

    const double f0 = value(w);
    const double slope = g.dot(step);
    double t = 1.0;
    Eigen::VectorXd trial = w + step;
    for (int ls = 0; ls < 60 && value(trial) > f0 + 1e-4 * t * slope; ++ls) {
      t *= 0.5;
      trial = w + t * step;
    }
    if ((trial - w).cwiseAbs().maxCoeff() == 0.0) return w;  // no representable progress
    w = std::move(trial);
  }
  const Eigen::VectorXd g = gradient(w, slack);
  if (g.cwiseAbs().maxCoeff() <= tol) return w;
  throw NumericError("squared-hinge solver did not reach its gradient tolerance");
}

/// One hyperplane per class on fixed maps; rows of the result are the w_k.
inline Eigen::MatrixXd svm_solve(const Eigen::MatrixXd& maps, const Eigen::MatrixXi& Y,
                                 const Eigen::VectorXd& C, const Eigen::MatrixXd* warm = nullptr,
                                 const SvmOptions& opt = {}) {
  if (maps.rows() != Y.rows()) throw InputError("svm_solve: maps and labels differ in sample count");
  if (C.size() != Y.cols()) throw ConfigError("svm_solve: one trade-off per class expected");
  if (!maps.allFinite()) throw InputError("svm_solve: non-finite features");
  Eigen::MatrixXd normals(Y.cols(), maps.cols());
  for (Eigen::Index k = 0; k < Y.cols(); ++k) {
    const Eigen::VectorXd y = Y.col(k).cast<double>();
    std::optional<Eigen::VectorXd> w0;
    if (warm && warm->rows() == Y.cols() && warm->cols() == maps.cols())
      w0 = warm->row(k).transpose();
    normals.row(k) = solve_squared_hinge(maps, y, C(k), w0 ? &*w0 : nullptr, opt).transpose();
  }
  return normals;
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/// dE/dphi(x_i) = -2 sum_k C_k y_ik w_k max(0, 1 - y_ik f_ik), one row per sample.
inline Eigen::MatrixXd grad_output(const Eigen::MatrixXd& normals, const Eigen::MatrixXd& maps,
                                   const Eigen::MatrixXi& Y, const Eigen::VectorXd& C) {
  detail::check_objective_shapes(maps, Y, normals, C);
  const Eigen::MatrixXd F = maps * normals.transpose();
  Eigen::MatrixXd M(Y.rows(), Y.cols());
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    for (Eigen::Index k = 0; k < Y.cols(); ++k)
      M(i, k) = C(k) * Y(i, k) * std::max(0.0, 1.0 - Y(i, k) * F(i, k));
  return -2.0 * M * normals;
}

/// Gradient of one unit's parameters; shapes follow the unit.
struct UnitGradient {
  Eigen::MatrixXd projection;  // dE/dU
  Eigen::MatrixXd anchors;     // dE/dA, upper units only
  Eigen::VectorXd weights;     // dE/dw(p, .), upper units only
};

struct GradientBundle {
  std::vector<std::vector<UnitGradient>> layers;

  static GradientBundle zeros_like(const DmnModel& model) {
    GradientBundle b;
    for (const auto& layer : model.layers) {
      std::vector<UnitGradient> units;
      for (const auto& u : layer)
        units.push_back({Eigen::MatrixXd::Zero(u.projection.rows(), u.projection.cols()),
                         Eigen::MatrixXd::Zero(u.anchors.rows(), u.weights.size() ? u.anchors.cols() : 0),
                         Eigen::VectorXd::Zero(u.weights.size())});
      b.layers.push_back(std::move(units));
    }
    return b;
  }

  bool all_finite() const {
    for (const auto& layer : layers)
      for (const auto& g : layer)
        if (!g.projection.allFinite() || !g.anchors.allFinite() || !g.weights.allFinite())
          return false;
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& layer : layers)
      for (const auto& g : layer) {
        if (g.projection.size()) m = std::max(m, g.projection.cwiseAbs().maxCoeff());
        if (g.anchors.size()) m = std::max(m, g.anchors.cwiseAbs().maxCoeff());
        if (g.weights.size()) m = std::max(m, g.weights.cwiseAbs().maxCoeff());
      }
    return m;
  }
};

/// Reverse pass through phi = g(A c) U and c = [sqrt(w_q) phi_q]_q, summed
/// over the batch in `trace`. At w = 0 the sqrt(w) derivative is taken as 0.
inline GradientBundle backprop(const DmnModel& model, const ForwardTrace& trace,
                               const Eigen::MatrixXd& output_grads) {
  if (trace.layers.size() != model.layers.size())
    throw InputError("backprop: trace does not match the model's layers");
  const Eigen::Index n = trace.samples();
  if (output_grads.rows() != n || output_grads.cols() != model.output_dim())
    throw InputError("backprop: output gradient must be samples x final map width");

  GradientBundle bundle = GradientBundle::zeros_like(model);
  std::vector<Eigen::MatrixXd> upstream;
  for (const auto& u : model.layers.back())
    upstream.push_back(Eigen::MatrixXd::Zero(n, u.output_dim()));
  upstream.front() = output_grads;

  for (std::size_t li = model.layers.size() - 1; li >= 1; --li) {
    const auto& lower = model.layers[li - 1];
    std::vector<Eigen::MatrixXd> downstream;
    for (const auto& u : lower) downstream.push_back(Eigen::MatrixXd::Zero(n, u.output_dim()));

    for (std::size_t p = 0; p < model.layers[li].size(); ++p) {
      const DmnUnit& u = model.layers[li][p];
      const UnitTrace& t = trace.layers[li][p];
      const Eigen::MatrixXd& dPhi = upstream[p];
      UnitGradient& g = bundle.layers[li][p];

      g.projection = t.activated.transpose() * dPhi;
      Eigen::MatrixXd dZ = dPhi * u.projection.transpose();
      const Activation act = u.activation;
      dZ = dZ.cwiseProduct(t.activated.unaryExpr([act](double h) { return activation_derivative(act, h); }));
      g.anchors = dZ.transpose() * t.concat;
      const Eigen::MatrixXd dC = dZ * u.anchors;

      Eigen::Index at = 0;
      for (std::size_t q = 0; q < lower.size(); ++q) {
        const Eigen::Index r = lower[q].output_dim();
        const auto block = dC.middleCols(at, r);
        const double w = u.weights(static_cast<Eigen::Index>(q));
        if (w > 0.0) {
          const double s = std::sqrt(w);
          downstream[q] += s * block;
          g.weights(static_cast<Eigen::Index>(q)) =
              block.cwiseProduct(trace.layers[li - 1][q].out).sum() / (2.0 * s);
        }
        at += r;
      }
    }
    upstream = std::move(downstream);
  }

  for (std::size_t p = 0; p < model.layers[0].size(); ++p)
    bundle.layers[0][p].projection = trace.layers[0][p].pre.transpose() * upstream[p];
  return bundle;
}

/// Gradient step U -= eta dU, A -= eta dA, w <- max(0, w - eta dw).
inline void apply_gradient_step(DmnModel& model, const GradientBundle& g, double eta) {
  for (std::size_t li = 0; li < model.layers.size(); ++li)
    for (std::size_t p = 0; p < model.layers[li].size(); ++p) {
      DmnUnit& u = model.layers[li][p];
      const UnitGradient& d = g.layers[li][p];
      u.projection -= eta * d.projection;
      if (li == 0) continue;
      u.anchors -= eta * d.anchors;
      u.weights = (u.weights - eta * d.weights).cwiseMax(0.0);
    }
}

// ---------------------------------------------------------------------------
// Alternating optimization
// ---------------------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 1e-6;
  int max_iters = 500;
  std::vector<double> trade_offs{1.0};  // scalar or one per class
  double convergence_tol = 1e-6;        // relative objective change
  int convergence_window = 10;          // consecutive iterations below tol
  std::uint64_t seed = 0;
  /// Reject a step that raised the objective, restore the previous iterate
  /// and halve the learning rate.
  bool halve_on_increase = false;
  double min_learning_rate = 1e-300;
  SvmOptions svm;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning rate must be finite and >= 0");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(convergence_tol >= 0.0)) throw ConfigError("convergence tolerance must be >= 0");
    if (convergence_window < 1) throw ConfigError("convergence window must be >= 1");
  }
};

struct IterationLog {
  int iteration = 0;
  ObjectiveTerms objective;
  double learning_rate = 0.0;
  double wall_ms = 0.0;
};

enum class TrainStatus { converged, max_iters, numeric_failure };

struct TrainResult {
  DmnModel model;
  ClassifierHead head;
  std::vector<IterationLog> log;
  TrainStatus status = TrainStatus::max_iters;
  std::string message;
  int svm_solves = 0;
  int gradient_steps = 0;
  int rejected_steps = 0;
  double final_learning_rate = 0.0;
  /// Objective of the returned pair; only evaluated under halve_on_increase,
  /// NaN otherwise.
  double final_objective = std::numeric_limits<double>::quiet_NaN();
};

/// Alternating optimization: each iteration solves the classifier on the
/// current maps, logs the objective, backpropagates the squared-hinge
/// gradient and takes one descent step on U, anchors and mixing weights.
/// Stops after `max_iters` iterations or once the relative objective change
/// stays below `convergence_tol` for `convergence_window` iterations.
///
/// On a non-finite objective the last good model and head are returned with
/// status numeric_failure. With `halve_on_increase` a step that raises the
/// objective (or produces non-finite values) is undone and retried at half
/// the learning rate, and a final evaluation keeps whichever of the last two
/// iterates scores lower.
inline TrainResult train(DmnModel model, ClassifierHead head, const LabeledDataset& data,
                         const TrainConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  data.validate();
  model.validate();
  if (model.layers.back().size() != 1) throw ConfigError("training reads a single final unit");
  if (data.dim() != model.input_dim()) throw InputError("dataset and model differ in dimension");
  const Eigen::VectorXd C = resolve_trade_offs(cfg.trade_offs, data.classes());
  const Eigen::Index K = data.classes(), dL = model.output_dim();

  Eigen::MatrixXd normals;
  if (head.normals.rows() == K && head.normals.cols() == dL && head.normals.allFinite()) {
    normals = head.normals;
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 0.01);
    normals = Eigen::MatrixXd::NullaryExpr(K, dL, [&]() { return gauss(rng); });
  }

  struct Snapshot {
    DmnModel model;
    Eigen::MatrixXd normals;
    GradientBundle grad;
    double objective;
  };
  std::optional<Snapshot> prev;

  TrainResult res;
  double eta = cfg.learning_rate;
  int stable = 0;
  auto finish = [&](TrainStatus status, std::string msg) {
    res.status = status;
    res.message = std::move(msg);
    res.model = std::move(model);
    res.head = ClassifierHead{std::move(normals), C};
    res.final_learning_rate = eta;
    return res;
  };

  // Forward pass plus classifier solve; false on non-finite values.
  auto evaluate_state = [&](ForwardTrace& trace, ObjectiveTerms& terms) {
    try {
      trace = dmn_forward_batch(model, data.features);
      normals = svm_solve(trace.output(), data.labels, C, &normals, cfg.svm);
      ++res.svm_solves;
      terms = objective_from_maps(trace.output(), data.labels, normals, C);
      return std::isfinite(terms.total);
    } catch (const NumericError&) {
      return false;
    } catch (const InputError&) {  // non-finite maps reach the solver as bad input
      return false;
    }
  };

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const auto t0 = clock::now();
    ForwardTrace trace;
    ObjectiveTerms terms;
    const bool ok = evaluate_state(trace, terms);
    const bool worse = ok && prev && terms.total > prev->objective;

    if (!ok && !cfg.halve_on_increase) {
      if (prev) {
        model = prev->model;
        normals = prev->normals;
      }
      return finish(TrainStatus::numeric_failure,
                    "objective became non-finite at iteration " + std::to_string(it));
    }
    if ((!ok || worse) && cfg.halve_on_increase && prev) {
      ++res.rejected_steps;
      eta *= 0.5;
      model = prev->model;
      normals = prev->normals;
      if (eta < cfg.min_learning_rate) {
        res.final_objective = prev->objective;
        return finish(TrainStatus::converged, "learning rate fell below its minimum");
      }
      apply_gradient_step(model, prev->grad, eta);
      ++res.gradient_steps;
      continue;
    }
    if (!ok)  // guard enabled but nothing to fall back to
      return finish(TrainStatus::numeric_failure, "objective is non-finite for the initial model");

    if (!res.log.empty()) {
      const double last = res.log.back().objective.total;
      const double rel = std::abs(terms.total - last) / std::max(std::abs(last), 1e-300);
      stable = rel < cfg.convergence_tol ? stable + 1 : 0;
    }
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    res.log.push_back({it, terms, eta, ms});
    if (stable >= cfg.convergence_window) {
      res.final_objective = terms.total;
      return finish(TrainStatus::converged, "relative objective change below tolerance");
    }

    const Eigen::MatrixXd dPhi = grad_output(normals, trace.output(), data.labels, C);
    GradientBundle grad = backprop(model, trace, dPhi);
    if (!grad.all_finite()) {
      if (cfg.halve_on_increase && prev) {
        ++res.rejected_steps;
        eta *= 0.5;
        model = prev->model;
        normals = prev->normals;
        apply_gradient_step(model, prev->grad, eta);
        ++res.gradient_steps;
        continue;
      }
      return finish(TrainStatus::numeric_failure, "non-finite gradient at iteration " + std::to_string(it));
    }
    prev = Snapshot{model, normals, std::move(grad), terms.total};
    apply_gradient_step(model, prev->grad, eta);
    ++res.gradient_steps;
  }

  if (cfg.halve_on_increase && prev) {
    ForwardTrace trace;
    ObjectiveTerms terms;
    if (!evaluate_state(trace, terms) || terms.total > prev->objective) {
      model = prev->model;
      normals = prev->normals;
      res.final_objective = prev->objective;
    } else {
      res.final_objective = terms.total;
    }
  }
  return finish(TrainStatus::max_iters, "reached the iteration limit");
}

// ---------------------------------------------------------------------------
// Trade-off selection
// ---------------------------------------------------------------------------

/// Per-class C by k-fold cross-validation on frozen maps: sample i belongs to
/// fold i mod folds; a fold without a positive validation example is skipped
/// for that class. Picks the C with the highest mean validation F-measure,
/// ties going to the smaller C. A class with no usable fold gets the smallest C.
inline Eigen::VectorXd cross_validate_C(const LabeledDataset& data, const DmnModel& model,
                                        int folds, std::vector<double> grid,
                                        const SvmOptions& opt = {}) {
  if (grid.empty()) throw ConfigError("cross-validation grid is empty");
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  for (double c : grid)
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("grid values must be finite and > 0");
  std::sort(grid.begin(), grid.end());
  data.validate(false);

  const Eigen::MatrixXd maps = dmn_map(model, data.features);
  const Eigen::Index n = data.size();
  Eigen::VectorXd best_c(data.classes());

  for (Eigen::Index k = 0; k < data.classes(); ++k) {
    double best_f = -1.0;
    best_c(k) = grid.front();
    for (double c : grid) {
      double fsum = 0.0;
      int used = 0;
      for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> tr, va;
        for (Eigen::Index i = 0; i < n; ++i) (i % folds == f ? va : tr).push_back(i);
        long val_pos = 0;
        for (auto i : va) val_pos += data.labels(i, k) > 0;
        if (va.empty() || val_pos == 0 || tr.empty()) continue;

        Eigen::MatrixXd Phi(static_cast<Eigen::Index>(tr.size()), maps.cols());
        Eigen::VectorXd y(static_cast<Eigen::Index>(tr.size()));
        for (std::size_t a = 0; a < tr.size(); ++a) {
          Phi.row(static_cast<Eigen::Index>(a)) = maps.row(tr[a]);
          y(static_cast<Eigen::Index>(a)) = data.labels(tr[a], k);
        }
        const Eigen::VectorXd w = solve_squared_hinge(Phi, y, c, nullptr, opt);
        long tp = 0, predicted = 0;
        for (auto i : va) {
          const bool pos = maps.row(i).dot(w) > 0.0;
          predicted += pos;
          tp += pos && data.labels(i, k) > 0;
        }
        fsum += f_measure_counts(tp, predicted, val_pos);
        ++used;
      }
      if (used == 0) continue;
      const double mean = fsum / used;
      if (mean > best_f) {
        best_f = mean;
        best_c(k) = c;
      }
    }
  }
  return best_c;
}

}  // namespace dmn
