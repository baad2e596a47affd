// Copyright (c) 2026 The fdrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0.txt
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file config.hpp
 * @brief Experiment configuration documents (JSON).
 *
 * Matrices are nested row arrays whose entries are either real numbers or
 * [re, im] pairs, or {"diagonal": [...]}. Wherever an operator is expected a
 * string naming an entry of "operators" may be used instead.
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fdrlab/equilibrium.hpp"
#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"
#include "fdrlab/model.hpp"
#include "fdrlab/propagator.hpp"
#include "fdrlab/response.hpp"

namespace fdrlab::io {

using json = nlohmann::json;

struct BathConfig {
  BathProfile profile = BathProfile::impulse;
  std::optional<double> epsilon;  // unset: 1e-3 / ||B||
  double t_prime = 0.0;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
};

enum class InitialStateKind { adjusted_equilibrium, gibbs, maximally_mixed, explicit_matrix };

class ExperimentConfig {
 public:
  std::string name;
  Eigen::Index dim = 0;
  double beta = 1.0;
  HermitianOperator h0;
  std::map<std::string, HermitianOperator> operators;
  std::string family;  // finite | deterministic | coupling | fourier | piecewise_constant
  TimeGrid grid;
  std::optional<BathConfig> bath;
  std::size_t n_configs = 1;
  std::uint64_t master_seed = 0;
  OutputConfig outputs;
  InitialStateKind initial_kind = InitialStateKind::adjusted_equilibrium;
  Matrix initial_matrix;
  json document;  // parsed input, for hashing

  bool has_operator(const std::string& key) const { return operators.count(key) != 0; }

  const HermitianOperator& op(const std::string& key) const {
    const auto it = operators.find(key);
    if (it == operators.end()) throw ConfigError("operators." + key + " is required for this command");
    return it->second;
  }

  /// The ensemble, with sampled families seeded from master_seed.
  ConfigurationEnsemble ensemble() const {
    if (finite_) return declared_mean_ ? ConfigurationEnsemble::finite(*finite_, *declared_mean_)
                                       : ConfigurationEnsemble::finite(*finite_);
    SampledEnsemble s{*sampler_, master_seed};
    return declared_mean_ ? ConfigurationEnsemble::sampled(std::move(s), *declared_mean_)
                          : ConfigurationEnsemble::sampled(std::move(s));
  }

  bool is_finite() const { return finite_.has_value(); }

  /// Requires beta > 0.
  SystemSpec system() const {
    if (!(beta > 0.0)) throw ConfigError("beta must be positive for dynamical commands");
    return SystemSpec(h0, ensemble(), beta);
  }

  HermitianOperator mean_hamiltonian() const { return h0 + ensemble().declared_mean(); }

  DensityMatrix initial_state() const {
    switch (initial_kind) {
      case InitialStateKind::adjusted_equilibrium:
        return gibbs_state(mean_hamiltonian(), beta);
      case InitialStateKind::gibbs:
        return gibbs_state(h0, beta);
      case InitialStateKind::maximally_mixed:
        return DensityMatrix::maximally_mixed(dim);
      case InitialStateKind::explicit_matrix:
        return DensityMatrix(initial_matrix);
    }
    throw ConfigError("initial_state: unknown kind");
  }

  std::size_t effective_configs() const {
    return finite_ ? finite_->items.size() : n_configs;
  }

  std::optional<FiniteEnsemble> finite_;
  std::optional<SamplerFamily> sampler_;
  std::optional<HermitianOperator> declared_mean_;
};

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

/// Non-negative integer at least `min`; accepts both signed and unsigned JSON integers.
inline std::uint64_t as_count(const json& j, std::uint64_t min, const std::string& what) {
  const bool ok = j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
  if (!ok || j.get<std::uint64_t>() < min) {
    throw ConfigError(what + " must be an integer >= " + std::to_string(min));
  }
  return j.get<std::uint64_t>();
}

inline double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": non-finite number");
  return v;
}

inline Complex as_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {as_number(j, where), 0.0};
  if (j.is_array() && j.size() == 2) return {as_number(j[0], where), as_number(j[1], where)};
  throw ConfigError(where + ": expected a number or an [re, im] pair");
}

inline Matrix parse_matrix(const json& j, Eigen::Index dim, const std::string& where) {
  if (j.is_object() && j.contains("diagonal")) {
    const json& diag = j.at("diagonal");
    if (!diag.is_array() || static_cast<Eigen::Index>(diag.size()) != dim) {
      throw ConfigError(where + ".diagonal: expected " + std::to_string(dim) + " entries");
    }
    Matrix m = Matrix::Zero(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) m(k, k) = as_complex(diag[static_cast<std::size_t>(k)], where);
    return m;
  }
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim) {
    throw ConfigError(where + ": expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  }
  Matrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim) {
      throw ConfigError(where + ": row " + std::to_string(r) + " has the wrong length");
    }
    for (Eigen::Index c = 0; c < dim; ++c) {
      m(r, c) = as_complex(row[static_cast<std::size_t>(c)], where + "[" + std::to_string(r) + "]");
    }
  }
  return m;
}

inline HermitianOperator parse_hermitian(const json& j, Eigen::Index dim, const std::string& where) {
  try {
    return HermitianOperator(parse_matrix(j, dim, where));
  } catch (const HermiticityError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace detail

/// Resolves an operator reference: a name from "operators" or an inline literal.
inline HermitianOperator resolve_operator(const ExperimentConfig& cfg, const json& j, const std::string& where) {
  if (j.is_string()) {
    const auto key = j.get<std::string>();
    const auto it = cfg.operators.find(key);
    if (it == cfg.operators.end()) throw ConfigError(where + ": unknown operator '" + key + "'");
    return it->second;
  }
  return detail::parse_hermitian(j, cfg.dim, where);
}

namespace detail {

inline ScalarLaw parse_law(const json& j, const std::string& where) {
  const std::string law = j.value("law", "normal");
  if (law == "normal") {
    const double sd = as_number(require(j, "stddev", where), where + ".stddev");
    if (!(sd >= 0.0)) throw ConfigError(where + ".stddev must be non-negative");
    return NormalLaw{j.contains("mean") ? as_number(j.at("mean"), where + ".mean") : 0.0, sd};
  }
  if (law == "uniform") {
    const double lo = as_number(require(j, "low", where), where + ".low");
    const double hi = as_number(require(j, "high", where), where + ".high");
    if (!(hi >= lo)) throw ConfigError(where + ": high < low");
    return UniformLaw{lo, hi};
  }
  throw ConfigError(where + ".law: expected 'normal' or 'uniform'");
}

inline PotentialTrajectory parse_potential(const ExperimentConfig& cfg, const json& j, const std::string& where) {
  const std::string kind = require(j, "kind", where).get<std::string>();
  const auto zero = HermitianOperator::zero(cfg.dim);
  if (kind == "coupling") {
    return PotentialTrajectory::coupling(as_number(require(j, "lambda", where), where + ".lambda"),
                                         resolve_operator(cfg, require(j, "operator", where), where + ".operator"));
  }
  if (kind == "constant") {
    return PotentialTrajectory::constant(resolve_operator(cfg, require(j, "matrix", where), where + ".matrix"));
  }
  if (kind == "fourier") {
    FourierPotential p{j.contains("mean") ? resolve_operator(cfg, j.at("mean"), where + ".mean") : zero, {}};
    for (const auto& m : require(j, "modes", where)) {
      p.modes.push_back(FourierMode{as_number(require(m, "amplitude", where), where + ".amplitude"),
                                    as_number(require(m, "frequency", where), where + ".frequency"),
                                    m.contains("phase") ? as_number(m.at("phase"), where + ".phase") : 0.0,
                                    resolve_operator(cfg, require(m, "operator", where), where + ".operator")});
    }
    return PotentialTrajectory(std::move(p));
  }
  if (kind == "piecewise_constant") {
    PiecewiseConstantPotential p{j.contains("mean") ? resolve_operator(cfg, j.at("mean"), where + ".mean") : zero,
                                 {}, {}};
    for (const auto& b : require(j, "breakpoints", where)) p.breakpoints.push_back(as_number(b, where + ".breakpoints"));
    for (const auto& o : require(j, "offsets", where)) p.offsets.push_back(resolve_operator(cfg, o, where + ".offsets"));
    try {
      return PotentialTrajectory(std::move(p));
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  throw ConfigError(where + ".kind: unknown potential kind '" + kind + "'");
}

inline void parse_ensemble(ExperimentConfig& cfg, const json& j) {
  const std::string where = "ensemble";
  cfg.family = require(j, "family", where).get<std::string>();
  if (j.contains("declared_mean")) {
    cfg.declared_mean_ = resolve_operator(cfg, j.at("declared_mean"), where + ".declared_mean");
  }
  const auto zero = HermitianOperator::zero(cfg.dim);
  if (cfg.family == "finite") {
    FiniteEnsemble fin;
    std::size_t i = 0;
    for (const auto& item : require(j, "items", where)) {
      const std::string w = where + ".items[" + std::to_string(i++) + "]";
      fin.items.push_back(WeightedPotential{as_number(require(item, "weight", w), w + ".weight"),
                                            parse_potential(cfg, require(item, "potential", w), w + ".potential")});
    }
    cfg.finite_ = std::move(fin);
  } else if (cfg.family == "deterministic") {
    const auto vbar = j.contains("vbar") ? resolve_operator(cfg, j.at("vbar"), where + ".vbar") : zero;
    cfg.finite_ = FiniteEnsemble{{WeightedPotential{1.0, PotentialTrajectory::constant(vbar)}}};
    if (!cfg.declared_mean_) cfg.declared_mean_ = vbar;
  } else if (cfg.family == "coupling") {
    cfg.sampler_ = CouplingFamily{resolve_operator(cfg, require(j, "operator", where), where + ".operator"),
                                  parse_law(require(j, "lambda", where), where + ".lambda")};
  } else if (cfg.family == "fourier") {
    FourierFamily f{j.contains("vbar") ? resolve_operator(cfg, j.at("vbar"), where + ".vbar") : zero, {}};
    for (const auto& m : require(j, "modes", where)) {
      f.modes.push_back(FourierModeSpec{as_number(require(m, "amplitude", where), where + ".amplitude"),
                                        as_number(require(m, "frequency", where), where + ".frequency"),
                                        resolve_operator(cfg, require(m, "operator", where), where + ".operator")});
    }
    cfg.sampler_ = std::move(f);
  } else if (cfg.family == "piecewise_constant") {
    PiecewiseConstantFamily f{j.contains("vbar") ? resolve_operator(cfg, j.at("vbar"), where + ".vbar") : zero,
                              resolve_operator(cfg, require(j, "operator", where), where + ".operator"),
                              as_number(require(j, "interval", where), where + ".interval"),
                              as_number(require(j, "stddev", where), where + ".stddev"),
                              require(j, "n_intervals", where).get<std::size_t>()};
    if (!(f.interval > 0.0) || f.n_intervals < 1 || !(f.stddev >= 0.0)) {
      throw ConfigError(where + ": interval > 0, n_intervals >= 1 and stddev >= 0 required");
    }
    cfg.sampler_ = std::move(f);
  } else {
    throw ConfigError(where + ".family: unknown family '" + cfg.family + "'");
  }
}

inline void parse_initial_state(ExperimentConfig& cfg, const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "adjusted_equilibrium") cfg.initial_kind = InitialStateKind::adjusted_equilibrium;
    else if (s == "gibbs") cfg.initial_kind = InitialStateKind::gibbs;
    else if (s == "maximally_mixed") cfg.initial_kind = InitialStateKind::maximally_mixed;
    else throw ConfigError("initial_state: unknown state '" + s + "'");
    return;
  }
  cfg.initial_kind = InitialStateKind::explicit_matrix;
  try {
    if (j.contains("pure")) {
      const json& v = j.at("pure");
      if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != cfg.dim) {
        throw ConfigError("initial_state.pure: expected " + std::to_string(cfg.dim) + " amplitudes");
      }
      Eigen::Matrix<Complex, Eigen::Dynamic, 1> psi(cfg.dim);
      for (Eigen::Index k = 0; k < cfg.dim; ++k) psi(k) = as_complex(v[static_cast<std::size_t>(k)], "initial_state.pure");
      cfg.initial_matrix = DensityMatrix::pure(psi).matrix();
    } else {
      cfg.initial_matrix = DensityMatrix(parse_matrix(require(j, "matrix", "initial_state"), cfg.dim,
                                                      "initial_state.matrix"))
                               .matrix();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("initial_state: ") + e.what());
  }
}

}  // namespace detail

/// Parses and validates a configuration document.
inline ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  cfg.document = doc;
  try {
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    cfg.name = doc.value("name", "experiment");
    const json& d = detail::require(doc, "dim", "config");
    if (!d.is_number_integer() || d.get<long long>() < 1) throw ConfigError("dim must be a positive integer");
    cfg.dim = d.get<Eigen::Index>();
    cfg.beta = detail::as_number(detail::require(doc, "beta", "config"), "beta");
    if (!(cfg.beta >= 0.0)) throw ConfigError("beta must be non-negative");
    cfg.h0 = detail::parse_hermitian(detail::require(doc, "h0", "config"), cfg.dim, "h0");
    if (doc.contains("operators")) {
      for (const auto& [key, value] : doc.at("operators").items()) {
        cfg.operators.emplace(key, detail::parse_hermitian(value, cfg.dim, "operators." + key));
      }
    }
    if (doc.contains("sampling")) {
      const json& s = doc.at("sampling");
      if (s.contains("n_configs")) {
        cfg.n_configs = detail::as_count(s.at("n_configs"), 1, "sampling.n_configs");
      }
      if (s.contains("master_seed")) {
        cfg.master_seed = detail::as_count(s.at("master_seed"), 0, "sampling.master_seed");
      }
    }
    detail::parse_ensemble(cfg, detail::require(doc, "ensemble", "config"));
    const json& g = detail::require(doc, "grid", "config");
    const double dt = detail::as_number(detail::require(g, "dt", "grid"), "grid.dt");
    const json& n = detail::require(g, "n_steps", "grid");
    if (!(dt > 0.0)) throw ConfigError("grid.dt must be positive");
    cfg.grid = TimeGrid(dt, detail::as_count(n, 2, "grid.n_steps"));
    if (doc.contains("bath")) {
      const json& b = doc.at("bath");
      BathConfig bath;
      const std::string profile = b.value("profile", "impulse");
      if (profile == "impulse") bath.profile = BathProfile::impulse;
      else if (profile == "step") bath.profile = BathProfile::step;
      else if (profile == "zero") bath.profile = BathProfile::zero;
      else throw ConfigError("bath.profile: expected impulse, step or zero");
      if (b.contains("epsilon")) bath.epsilon = detail::as_number(b.at("epsilon"), "bath.epsilon");
      if (b.contains("t_prime")) bath.t_prime = detail::as_number(b.at("t_prime"), "bath.t_prime");
      if (bath.t_prime < 0.0) throw ConfigError("bath.t_prime must be non-negative");
      cfg.bath = bath;
    }
    if (doc.contains("initial_state")) detail::parse_initial_state(cfg, doc.at("initial_state"));
    if (doc.contains("outputs")) {
      const json& o = doc.at("outputs");
      cfg.outputs.directory = o.value("directory", cfg.outputs.directory);
      if (o.contains("formats")) cfg.outputs.formats = o.at("formats").get<std::vector<std::string>>();
    }
    // Cross-field validation: builds the ensemble, which checks weights and dimensions.
    const auto ens = cfg.ensemble();
    if (ens.dim() != cfg.dim) throw ConfigError("ensemble dimension differs from dim");
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace fdrlab::io
