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
 * @file model.hpp
 * @brief Base Hamiltonian, random potential trajectories and configuration ensembles.
 *
 * A configuration omega carries a potential trajectory t -> V_omega(t), a
 * Hermitian matrix on the d-level system. The ensemble declares its mean
 * potential; the mean Hamiltonian is H0 + declared mean and must be constant
 * in time, which check_mean_constancy verifies.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"

namespace fdrlab {

/// V(t) = lambda Q, constant in time.
struct CouplingPotential {
  double lambda = 0.0;
  HermitianOperator q;
};

struct FourierMode {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  HermitianOperator q;
};

/// V(t) = mean + sum_m c_m sin(nu_m t + phi_m) Q_m.
struct FourierPotential {
  HermitianOperator mean;
  std::vector<FourierMode> modes;
};

/**
 * V(t) = mean + offsets[i] on [breakpoints[i-1], breakpoints[i]) with an
 * implicit breakpoint at 0. Right-continuous; the last offset persists after
 * the last breakpoint.
 */
struct PiecewiseConstantPotential {
  HermitianOperator mean;
  std::vector<double> breakpoints;
  std::vector<HermitianOperator> offsets;  // breakpoints.size() + 1 entries
};

/// Arbitrary callable, for programmatic experiments and tests. Not serializable.
struct CustomPotential {
  Eigen::Index dim = 0;
  std::function<HermitianOperator(double)> fn;
};

class PotentialTrajectory {
 public:
  using Variant = std::variant<CouplingPotential, FourierPotential, PiecewiseConstantPotential, CustomPotential>;

  PotentialTrajectory() = default;

  explicit PotentialTrajectory(CouplingPotential p) : v_(std::move(p)) {}
  explicit PotentialTrajectory(FourierPotential p) : v_(std::move(p)) {
    const auto& f = std::get<FourierPotential>(v_);
    for (const auto& m : f.modes) {
      if (m.q.dim() != f.mean.dim()) throw DimensionError("FourierPotential: mode operator dimension mismatch");
    }
  }
  explicit PotentialTrajectory(PiecewiseConstantPotential p) : v_(std::move(p)) {
    const auto& pc = std::get<PiecewiseConstantPotential>(v_);
    if (pc.offsets.size() != pc.breakpoints.size() + 1) {
      throw DomainError("PiecewiseConstantPotential: need breakpoints.size() + 1 offsets");
    }
    double prev = 0.0;
    for (double b : pc.breakpoints) {
      if (!(b > prev)) throw DomainError("PiecewiseConstantPotential: breakpoints must be positive and increasing");
      prev = b;
    }
    for (const auto& o : pc.offsets) {
      if (o.dim() != pc.mean.dim()) throw DimensionError("PiecewiseConstantPotential: offset dimension mismatch");
    }
  }
  explicit PotentialTrajectory(CustomPotential p) : v_(std::move(p)) {}

  static PotentialTrajectory coupling(double lambda, HermitianOperator q) {
    return PotentialTrajectory(CouplingPotential{lambda, std::move(q)});
  }
  static PotentialTrajectory constant(const HermitianOperator& v) { return coupling(1.0, v); }

  const Variant& variant() const { return v_; }

  std::string kind() const {
    return std::visit(
        [](const auto& p) -> std::string {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, CouplingPotential>) return "coupling";
          else if constexpr (std::is_same_v<T, FourierPotential>) return "fourier";
          else if constexpr (std::is_same_v<T, PiecewiseConstantPotential>) return "piecewise_constant";
          else return "custom";
        },
        v_);
  }

  Eigen::Index dim() const {
    return std::visit(
        [](const auto& p) -> Eigen::Index {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, CouplingPotential>) return p.q.dim();
          else if constexpr (std::is_same_v<T, CustomPotential>) return p.dim;
          else return p.mean.dim();
        },
        v_);
  }

  /// Discontinuities in time; empty for smooth kinds.
  std::span<const double> breakpoints() const {
    if (const auto* pc = std::get_if<PiecewiseConstantPotential>(&v_)) return pc->breakpoints;
    return {};
  }

  HermitianOperator operator()(double t) const {
    return std::visit(
        [t](const auto& p) -> HermitianOperator {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, CouplingPotential>) {
            return p.lambda * p.q;
          } else if constexpr (std::is_same_v<T, FourierPotential>) {
            HermitianOperator v = p.mean;
            for (const auto& m : p.modes) v = v + (m.amplitude * std::sin(m.frequency * t + m.phase)) * m.q;
            return v;
          } else if constexpr (std::is_same_v<T, PiecewiseConstantPotential>) {
            const auto it = std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), t);
            return p.mean + p.offsets[static_cast<std::size_t>(it - p.breakpoints.begin())];
          } else {
            return p.fn(t);
          }
        },
        v_);
  }

 private:
  Variant v_;
};

struct WeightedPotential {
  double weight = 0.0;
  PotentialTrajectory potential;
};

struct FiniteEnsemble {
  std::vector<WeightedPotential> items;
};

struct NormalLaw {
  double mean = 0.0;
  double stddev = 1.0;
};

struct UniformLaw {
  double low = 0.0;
  double high = 1.0;
};

using ScalarLaw = std::variant<NormalLaw, UniformLaw>;

inline double law_mean(const ScalarLaw& law) {
  return std::visit(
      [](const auto& l) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, NormalLaw>) return l.mean;
        else return 0.5 * (l.low + l.high);
      },
      law);
}

inline double draw(const ScalarLaw& law, std::mt19937_64& rng) {
  return std::visit(
      [&rng](const auto& l) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, NormalLaw>) {
          return std::normal_distribution<double>(l.mean, l.stddev)(rng);
        } else {
          return std::uniform_real_distribution<double>(l.low, l.high)(rng);
        }
      },
      law);
}

/// lambda_omega Q with lambda drawn from a scalar law.
struct CouplingFamily {
  HermitianOperator q;
  ScalarLaw lambda;
};

struct FourierModeSpec {
  double amplitude = 0.0;
  double frequency = 0.0;
  HermitianOperator q;
};

/// Fixed amplitudes and frequencies, independent phases uniform on [0, 2 pi).
struct FourierFamily {
  HermitianOperator mean;
  std::vector<FourierModeSpec> modes;
};

/// Independent N(0, stddev^2) multiples of Q on consecutive intervals of equal length.
struct PiecewiseConstantFamily {
  HermitianOperator mean;
  HermitianOperator q;
  double interval = 1.0;
  double stddev = 0.0;
  std::size_t n_intervals = 1;
};

using SamplerFamily = std::variant<CouplingFamily, FourierFamily, PiecewiseConstantFamily>;

struct SampledEnsemble {
  SamplerFamily family;
  std::uint64_t master_seed = 0;
};

inline HermitianOperator analytic_mean(const SamplerFamily& family) {
  return std::visit(
      [](const auto& f) -> HermitianOperator {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, CouplingFamily>) return law_mean(f.lambda) * f.q;
        else return f.mean;
      },
      family);
}

inline Eigen::Index family_dim(const SamplerFamily& family) {
  return std::visit(
      [](const auto& f) -> Eigen::Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(f)>, CouplingFamily>) return f.q.dim();
        else return f.mean.dim();
      },
      family);
}

/// Weights of a finite ensemble must sum to one within this tolerance.
inline constexpr double kWeightSumTol = 1e-12;

/// (Omega, mu) together with the declared mean potential.
class ConfigurationEnsemble {
 public:
  using Variant = std::variant<FiniteEnsemble, SampledEnsemble>;

  static ConfigurationEnsemble finite(FiniteEnsemble items, HermitianOperator declared_mean) {
    if (items.items.empty()) throw DomainError("finite ensemble needs at least one item");
    double sum = 0.0;
    for (const auto& it : items.items) {
      if (!(it.weight >= 0.0) || !std::isfinite(it.weight)) throw DomainError("finite ensemble: negative weight");
      if (it.potential.dim() != declared_mean.dim()) throw DimensionError("finite ensemble: item dimension mismatch");
      sum += it.weight;
    }
    if (std::abs(sum - 1.0) > kWeightSumTol) {
      throw DomainError("finite ensemble: weights sum to " + std::to_string(sum) + ", expected 1");
    }
    return ConfigurationEnsemble(std::move(items), std::move(declared_mean));
  }

  /// Finite ensemble whose declared mean is the exact weighted mean at t = 0.
  static ConfigurationEnsemble finite(FiniteEnsemble items) {
    if (items.items.empty()) throw DomainError("finite ensemble needs at least one item");
    const auto dim = items.items.front().potential.dim();
    Matrix mean = Matrix::Zero(dim, dim);
    for (const auto& it : items.items) {
      if (it.potential.dim() != dim) throw DimensionError("finite ensemble: item dimension mismatch");
      mean += it.weight * it.potential(0.0).matrix();
    }
    HermitianOperator m(mean);
    return finite(std::move(items), std::move(m));
  }

  /// One configuration with V(t) = declared mean.
  static ConfigurationEnsemble deterministic(const HermitianOperator& vbar) {
    return finite(FiniteEnsemble{{WeightedPotential{1.0, PotentialTrajectory::constant(vbar)}}}, vbar);
  }

  static ConfigurationEnsemble sampled(SampledEnsemble s) {
    auto mean = analytic_mean(s.family);
    return ConfigurationEnsemble(std::move(s), std::move(mean));
  }

  /// Sampled ensemble with an explicitly declared mean (possibly wrong; see check_mean_constancy).
  static ConfigurationEnsemble sampled(SampledEnsemble s, HermitianOperator declared_mean) {
    if (declared_mean.dim() != family_dim(s.family)) throw DimensionError("sampled ensemble: declared mean dimension");
    return ConfigurationEnsemble(std::move(s), std::move(declared_mean));
  }

  const Variant& variant() const { return v_; }
  bool is_finite() const { return std::holds_alternative<FiniteEnsemble>(v_); }
  const HermitianOperator& declared_mean() const { return mean_; }
  Eigen::Index dim() const { return mean_.dim(); }

 private:
  ConfigurationEnsemble(Variant v, HermitianOperator mean) : v_(std::move(v)), mean_(std::move(mean)) {}

  Variant v_;
  HermitianOperator mean_;
};

/// A drawn (or enumerated) configuration omega with its probability weight.
struct Configuration {
  std::size_t index = 0;
  double weight = 0.0;
  PotentialTrajectory potential;
};

struct ConfigurationSet {
  std::vector<Configuration> items;
  std::uint64_t master_seed = 0;
  bool exact_weights = true;  // false for Monte Carlo draws with weights 1/n

  std::size_t size() const { return items.size(); }

  /// Cheap identity used to detect quantities computed from different sets.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull ^ master_seed;
    auto mix = [&h](std::uint64_t x) {
      h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    mix(items.size());
    for (const auto& c : items) {
      mix(std::hash<double>{}(c.weight));
      mix(std::hash<double>{}(c.potential(0.0).matrix().norm()));
      mix(std::hash<double>{}(c.potential(1.0).matrix().norm()));
    }
    return h;
  }
};

namespace detail {

/// Child stream for configuration k of a master seed.
inline std::mt19937_64 child_stream(std::uint64_t master_seed, std::uint64_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return std::mt19937_64(seq);
}

inline PotentialTrajectory draw_trajectory(const SamplerFamily& family, std::mt19937_64& rng) {
  return std::visit(
      [&rng](const auto& f) -> PotentialTrajectory {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, CouplingFamily>) {
          return PotentialTrajectory::coupling(draw(f.lambda, rng), f.q);
        } else if constexpr (std::is_same_v<T, FourierFamily>) {
          FourierPotential p{f.mean, {}};
          std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
          for (const auto& m : f.modes) p.modes.push_back(FourierMode{m.amplitude, m.frequency, phase(rng), m.q});
          return PotentialTrajectory(std::move(p));
        } else {
          if (!(f.interval > 0.0) || f.n_intervals < 1) throw DomainError("piecewise family: bad interval spec");
          PiecewiseConstantPotential p{f.mean, {}, {}};
          std::normal_distribution<double> xi(0.0, f.stddev);
          for (std::size_t i = 0; i < f.n_intervals; ++i) {
            if (i > 0) p.breakpoints.push_back(static_cast<double>(i) * f.interval);
            p.offsets.push_back(xi(rng) * f.q);
          }
          return PotentialTrajectory(std::move(p));
        }
      },
      family);
}

}  // namespace detail

/**
 * Enumerate or draw configurations.
 *
 * Finite ensembles return their items with exact weights regardless of n.
 * Sampled ensembles return n draws of weight 1/n; draw k uses a child
 * stream seeded from (master_seed, k), so results do not depend on the
 * order in which draws are made.
 */
inline ConfigurationSet sample_configurations(const ConfigurationEnsemble& ensemble, std::size_t n,
                                              std::uint64_t master_seed) {
  if (n < 1) throw DomainError("sample_configurations: n must be >= 1");
  ConfigurationSet out;
  out.master_seed = master_seed;
  if (const auto* fin = std::get_if<FiniteEnsemble>(&ensemble.variant())) {
    out.exact_weights = true;
    for (std::size_t i = 0; i < fin->items.size(); ++i) {
      out.items.push_back(Configuration{i, fin->items[i].weight, fin->items[i].potential});
    }
    return out;
  }
  const auto& sampled = std::get<SampledEnsemble>(ensemble.variant());
  out.exact_weights = false;
  out.items.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto rng = detail::child_stream(master_seed, k);
    out.items.push_back(Configuration{k, 1.0 / static_cast<double>(n), detail::draw_trajectory(sampled.family, rng)});
  }
  return out;
}

inline ConfigurationSet sample_configurations(const ConfigurationEnsemble& ensemble, std::size_t n) {
  const auto* s = std::get_if<SampledEnsemble>(&ensemble.variant());
  return sample_configurations(ensemble, n, s ? s->master_seed : 0);
}

/// H_omega(t) = H0 + V_omega(t) together with the inverse temperature.
class SystemSpec {
 public:
  SystemSpec(HermitianOperator h0, ConfigurationEnsemble ensemble, double beta)
      : h0_(std::move(h0)), ensemble_(std::move(ensemble)), beta_(beta) {
    if (ensemble_.dim() != h0_.dim()) throw DimensionError("SystemSpec: ensemble dimension differs from H0");
    if (!(beta_ > 0.0) || !std::isfinite(beta_)) throw DomainError("SystemSpec: beta must be positive and finite");
  }

  Eigen::Index dim() const { return h0_.dim(); }
  const HermitianOperator& h0() const { return h0_; }
  const ConfigurationEnsemble& ensemble() const { return ensemble_; }
  double beta() const { return beta_; }

 private:
  HermitianOperator h0_;
  ConfigurationEnsemble ensemble_;
  double beta_;
};

inline HermitianOperator hamiltonian_at(const SystemSpec& spec, const Configuration& config, double t) {
  if (const auto* fin = std::get_if<FiniteEnsemble>(&spec.ensemble().variant())) {
    if (config.index >= fin->items.size()) {
      throw DomainError("hamiltonian_at: configuration index " + std::to_string(config.index) + " out of range");
    }
  }
  if (config.potential.dim() != spec.dim()) throw DimensionError("hamiltonian_at: potential dimension");
  return spec.h0() + config.potential(t);
}

/// Finite ensembles only: configuration by index.
inline HermitianOperator hamiltonian_at(const SystemSpec& spec, std::size_t index, double t) {
  const auto* fin = std::get_if<FiniteEnsemble>(&spec.ensemble().variant());
  if (fin == nullptr) throw DomainError("hamiltonian_at: index lookup needs a finite ensemble");
  if (index >= fin->items.size()) {
    throw DomainError("hamiltonian_at: configuration index " + std::to_string(index) + " out of range");
  }
  return spec.h0() + fin->items[index].potential(t);
}

/// H-bar = H0 + declared mean potential.
inline HermitianOperator mean_hamiltonian(const SystemSpec& spec) {
  return spec.h0() + spec.ensemble().declared_mean();
}

struct MeanConstancyReport {
  double max_deviation = 0.0;       // max_t ||E[V(t)] - Vbar||_F
  double max_standard_error = 0.0;  // Frobenius standard error (0 for finite ensembles)
  bool pass = false;
};

/**
 * Verify that the ensemble average of V_omega(t) equals the declared mean at
 * every time in the grid. Finite ensembles are summed exactly; sampled
 * ensembles pass when the deviation at each time is at most tol + 3 SE.
 */
inline MeanConstancyReport check_mean_constancy(const SystemSpec& spec, std::span<const double> times,
                                                std::size_t n_samples, double tol, std::uint64_t master_seed) {
  if (!(tol > 0.0)) throw DomainError("check_mean_constancy: tol must be positive");
  const auto set = sample_configurations(spec.ensemble(), n_samples, master_seed);
  const Matrix& vbar = spec.ensemble().declared_mean().matrix();
  const auto d = spec.dim();
  MeanConstancyReport report;
  report.pass = true;
  for (double t : times) {
    Matrix mean = Matrix::Zero(d, d);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
    for (const auto& c : set.items) {
      const Matrix v = c.potential(t).matrix();
      mean += c.weight * v;
      if (!set.exact_weights) second += c.weight * v.cwiseAbs2();
    }
    double se = 0.0;
    if (!set.exact_weights && set.size() > 1) {
      const double n = static_cast<double>(set.size());
      const Eigen::MatrixXd var = ((second - mean.cwiseAbs2()) * (n / (n - 1.0))).cwiseMax(0.0);
      se = std::sqrt(var.sum() / n);
    }
    const double dev = (mean - vbar).norm();
    report.max_deviation = std::max(report.max_deviation, dev);
    report.max_standard_error = std::max(report.max_standard_error, se);
    if (dev > tol + 3.0 * se) report.pass = false;
  }
  return report;
}

inline MeanConstancyReport check_mean_constancy(const SystemSpec& spec, std::span<const double> times,
                                                std::size_t n_samples, double tol) {
  const auto* s = std::get_if<SampledEnsemble>(&spec.ensemble().variant());
  return check_mean_constancy(spec, times, n_samples, tol, s ? s->master_seed : 0);
}

}  // namespace fdrlab
