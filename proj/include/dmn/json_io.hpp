#pragma once

// JSON configs and reports; needs nlohmann/json (link dmn::json).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dmn/bench.hpp"
#include "dmn/dataset.hpp"
#include "dmn/dkn.hpp"
#include "dmn/error.hpp"
#include "dmn/kernel.hpp"
#include "dmn/metrics.hpp"
#include "dmn/training.hpp"

namespace dmn {

using json = nlohmann::json;

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

namespace detail {

// NaN has no JSON spelling; write it as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
T get_field(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Kernels and architectures
// ---------------------------------------------------------------------------
//
// {"input_kernels": [{"kind": "rbf", "gamma": 2.0}, ...],
//  "layers": [{"activation": "tanh", "width": 8, "weights": [[...], ...]}, ...],
//  "seed": 0}
// `layers` lists layers 2..L; a layer without "weights" gets random
// row-normalized weights drawn from "seed".

inline json to_json(const KernelSpec& k) {
  json j{{"kind", std::string(to_string(k.kind))}};
  if (k.kind == KernelKind::polynomial) {
    j["degree"] = k.degree;
    j["offset"] = k.offset;
  }
  if (k.kind == KernelKind::rbf) j["gamma"] = k.gamma;
  return j;
}

inline KernelSpec kernel_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("kernel entry needs a \"kind\"");
  KernelSpec k;
  try {
    k.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("kernel kind: ") + e.what());
  }
  k.degree = detail::get_field(j, "degree", k.degree);
  k.offset = detail::get_field(j, "offset", k.offset);
  k.gamma = detail::get_field(j, "gamma", k.gamma);
  k.validate();
  return k;
}

inline json to_json(const DknArchitecture& arch) {
  json j;
  j["input_kernels"] = json::array();
  for (const auto& k : arch.input_kernels) j["input_kernels"].push_back(to_json(k));
  j["layers"] = json::array();
  for (const auto& layer : arch.layers) {
    json w = json::array();
    for (Eigen::Index p = 0; p < layer.weights.rows(); ++p) {
      json row = json::array();
      for (Eigen::Index q = 0; q < layer.weights.cols(); ++q) row.push_back(layer.weights(p, q));
      w.push_back(row);
    }
    j["layers"].push_back({{"activation", std::string(to_string(layer.activation))},
                           {"width", layer.width()},
                           {"weights", w}});
  }
  return j;
}

inline DknArchitecture architecture_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("architecture must be a JSON object");
  if (!j.contains("input_kernels") || !j.at("input_kernels").is_array())
    throw ConfigError("architecture needs an \"input_kernels\" array");
  if (!j.contains("layers") || !j.at("layers").is_array())
    throw ConfigError("architecture needs a \"layers\" array");
  DknArchitecture arch;
  for (const auto& k : j.at("input_kernels")) arch.input_kernels.push_back(kernel_from_json(k));
  std::mt19937_64 rng(detail::get_field<std::uint64_t>(j, "seed", 0));
  Eigen::Index below = static_cast<Eigen::Index>(arch.input_kernels.size());
  for (const auto& lj : j.at("layers")) {
    DknLayer layer;
    try {
      layer.activation = activation_from_string(detail::get_field<std::string>(lj, "activation", "tanh"));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    if (lj.contains("weights")) {
      const json& w = lj.at("weights");
      if (!w.is_array() || w.empty()) throw ConfigError("layer weights must be a nonempty array of rows");
      layer.weights.resize(static_cast<Eigen::Index>(w.size()), below);
      for (std::size_t p = 0; p < w.size(); ++p) {
        if (!w[p].is_array() || static_cast<Eigen::Index>(w[p].size()) != below)
          throw ConfigError("every weight row needs " + std::to_string(below) + " entries");
        for (std::size_t q = 0; q < w[p].size(); ++q)
          layer.weights(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
              w[p][q].get<double>();
      }
      if (lj.contains("width") && lj.at("width").get<Eigen::Index>() != layer.width())
        throw ConfigError("layer width disagrees with its weight rows");
    } else {
      const auto width = detail::get_field<Eigen::Index>(lj, "width", 0);
      if (width < 1) throw ConfigError("layer needs \"weights\" or a positive \"width\"");
      layer.weights = random_mixing_weights(width, below, rng);
    }
    below = layer.width();
    arch.layers.push_back(std::move(layer));
  }
  arch.validate();
  return arch;
}

// ---------------------------------------------------------------------------
// Data, training and bench settings
// ---------------------------------------------------------------------------

inline SyntheticSpec synthetic_from_json(const json& j, SyntheticSpec s = {}) {
  s.n = detail::get_field(j, "n", s.n);
  s.d = detail::get_field(j, "d", s.d);
  s.K = detail::get_field(j, "K", s.K);
  s.clusters_per_class = detail::get_field(j, "clusters_per_class", s.clusters_per_class);
  s.label_noise = detail::get_field(j, "label_noise", s.label_noise);
  s.feature_noise = detail::get_field(j, "feature_noise", s.feature_noise);
  s.histogram = detail::get_field(j, "histogram", s.histogram);
  s.seed = detail::get_field(j, "seed", s.seed);
  s.max_retries = detail::get_field(j, "max_retries", s.max_retries);
  s.validate();
  return s;
}

inline TrainConfig train_config_from_json(const json& j, TrainConfig c = {}) {
  c.learning_rate = detail::get_field(j, "learning_rate", c.learning_rate);
  c.max_iters = detail::get_field(j, "max_iters", c.max_iters);
  c.convergence_tol = detail::get_field(j, "convergence_tol", c.convergence_tol);
  c.convergence_window = detail::get_field(j, "convergence_window", c.convergence_window);
  c.seed = detail::get_field(j, "seed", c.seed);
  c.halve_on_increase = detail::get_field(j, "halve_on_increase", c.halve_on_increase);
  if (j.contains("C")) {
    const json& cj = j.at("C");
    if (cj.is_number())
      c.trade_offs = {cj.get<double>()};
    else if (cj.is_array())
      c.trade_offs = cj.get<std::vector<double>>();
    else
      throw ConfigError("\"C\" must be a number or an array of numbers");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const EvalReport& r) {
  json j{{"mf_s", detail::number_or_null(r.mf_s)},
         {"mf_c", detail::number_or_null(r.mf_c)},
         {"map", detail::number_or_null(r.map)},
         {"per_concept_f", json::array()},
         {"per_concept_ap", json::array()},
         {"excluded_concepts", r.excluded_concepts}};
  for (double f : r.per_concept_f) j["per_concept_f"].push_back(detail::number_or_null(f));
  for (double a : r.per_concept_ap) j["per_concept_ap"].push_back(detail::number_or_null(a));
  return j;
}

inline json to_json(const BenchReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"framework", std::string(to_string(row.framework))},
                    {"sample_size", row.sample_size},
                    {"mean_seconds", row.mean_seconds},
                    {"std_seconds", row.std_seconds},
                    {"median_seconds", row.median_seconds},
                    {"repetitions", row.repetitions},
                    {"unreliable", row.unreliable}});
  return {{"note", r.note},
          {"anchors", r.anchors},
          {"queries", r.queries},
          {"threads", r.threads},
          {"rows", rows}};
}

}  // namespace dmn
