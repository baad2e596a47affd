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
 * @file mean_dynamics.hpp
 * @brief Configuration-averaged dynamics.
 *
 * Averaging the per-configuration von Neumann equation over omega gives
 *
 *     d rho/dt = -i [Hbar, rho] - i C_t[rho0],
 *     C_t[X]   = E[ [H_omega(t) - Hbar, U_omega(t) X U_omega(t)^dagger] ],
 *
 * with the formal solution rho(t) = exp(-itL) rho0 + eta(t) and
 *
 *     eta(t) = -i Int_0^t exp(-i(t-s)L) C_s ds,   exp(-itL) X = e^{-itHbar} X e^{itHbar}.
 *
 * All ensemble sums run over configurations in ascending index order,
 * independently of how many threads propagate them.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdrlab/equilibrium.hpp"
#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"
#include "fdrlab/model.hpp"
#include "fdrlab/parallel.hpp"
#include "fdrlab/propagator.hpp"

namespace fdrlab {

/// Unitaries are kept in memory when n_configs * (n_steps + 1) * d^2 is at most this many entries.
inline constexpr std::size_t kRetentionBudget = 10'000'000;

struct PropagationOptions {
  unsigned threads = 1;
  std::optional<bool> retain;  // unset: decide from kRetentionBudget
};

/**
 * Per-configuration unitary trajectories of an ensemble on a shared grid.
 *
 * Either stores every U_omega(t_k) or re-propagates on each visit, depending
 * on the retention policy. Visitors see configurations in ascending order.
 */
class EnsemblePropagation {
 public:
  EnsemblePropagation(SystemSpec spec, ConfigurationSet configs, TimeGrid grid, PropagationOptions options = {})
      : spec_(std::move(spec)), configs_(std::move(configs)), grid_(grid), options_(options) {
    if (configs_.size() == 0) throw DomainError("EnsemblePropagation: empty configuration set");
    for (const auto& c : configs_.items) require_breakpoints_on_grid(c.potential, grid_);
    const auto d = static_cast<std::size_t>(spec_.dim());
    const std::size_t entries = configs_.size() * grid_.size() * d * d;
    retained_ = options_.retain.value_or(entries <= kRetentionBudget);
    if (retained_) {
      stored_.resize(configs_.size());
      for_each_ordered(
          configs_.size(), options_.threads,
          [this](std::size_t i) { return evolve_configuration(spec_, configs_.items[i], grid_); },
          [this](std::size_t i, UnitaryTrajectory&& u) {
            max_step_norm_ = std::max(max_step_norm_, u.max_step_norm);
            stored_[i] = std::move(u);
          });
    }
  }

  const SystemSpec& spec() const { return spec_; }
  const ConfigurationSet& configs() const { return configs_; }
  const TimeGrid& grid() const { return grid_; }
  bool retained() const { return retained_; }
  unsigned threads() const { return options_.threads; }
  std::uint64_t fingerprint() const { return configs_.fingerprint(); }

  /// max dt ||H_omega|| over retained trajectories (0 when not retained).
  double max_step_norm() const { return max_step_norm_; }

  /**
   * Visit every configuration: `compute(config, unitaries)` may run
   * concurrently, `consume(i, result)` runs in ascending i.
   */
  template <typename Compute, typename Consume>
  void visit(Compute&& compute, Consume&& consume) const {
    for_each_ordered(
        configs_.size(), options_.threads,
        [&](std::size_t i) {
          const Configuration& c = configs_.items[i];
          if (retained_) return compute(c, stored_[i]);
          const UnitaryTrajectory u = evolve_configuration(spec_, c, grid_);
          return compute(c, u);
        },
        consume);
  }

 private:
  SystemSpec spec_;
  ConfigurationSet configs_;
  TimeGrid grid_;
  PropagationOptions options_;
  bool retained_ = false;
  double max_step_norm_ = 0.0;
  std::vector<UnitaryTrajectory> stored_;
};

/// Configuration-averaged state rho-bar(t_k) with Monte Carlo error bars.
struct MeanTrajectory {
  TimeGrid grid;
  std::vector<Matrix> states;
  std::vector<double> standard_error;  // Frobenius standard error per time; zeros for exact weights
  std::optional<std::vector<std::vector<Matrix>>> per_config_states;
  std::size_t n_configs = 0;
  bool exact_weights = true;
  std::uint64_t master_seed = 0;
  std::uint64_t fingerprint = 0;

  DensityMatrix state(std::size_t k) const { return DensityMatrix(states.at(k), 1e-10); }
};

namespace detail {

/// Weighted ensemble mean of a per-configuration series, with entrywise variance for equal-weight draws.
struct SeriesAccumulator {
  std::vector<Matrix> mean;
  std::vector<Eigen::MatrixXd> second;
  bool track_variance = false;

  SeriesAccumulator(std::size_t n, Eigen::Index d, bool variance) : track_variance(variance) {
    mean.assign(n, Matrix::Zero(d, d));
    if (track_variance) second.assign(n, Eigen::MatrixXd::Zero(d, d));
  }

  void add(double w, const std::vector<Matrix>& series) {
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] += w * series[k];
      if (track_variance) second[k] += w * series[k].cwiseAbs2();
    }
  }

  std::vector<double> standard_error(std::size_t n_configs) const {
    std::vector<double> se(mean.size(), 0.0);
    if (!track_variance || n_configs < 2) return se;
    const double n = static_cast<double>(n_configs);
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const Eigen::MatrixXd var = ((second[k] - mean[k].cwiseAbs2()) * (n / (n - 1.0))).cwiseMax(0.0);
      se[k] = std::sqrt(var.sum() / n);
    }
    return se;
  }
};

}  // namespace detail

/**
 * rho-bar(t_k) = sum_omega w_omega U_omega(t_k) rho0 U_omega(t_k)^dagger.
 *
 * @param keep_per_config also return every rho_omega(t_k) (memory n_configs * n_steps * d^2).
 */
inline MeanTrajectory mean_state(const EnsemblePropagation& prop, const Matrix& rho0, bool keep_per_config = false) {
  if (rho0.rows() != prop.spec().dim()) throw DimensionError("mean_state: rho0 dimension");
  const auto& configs = prop.configs();
  detail::SeriesAccumulator acc(prop.grid().size(), prop.spec().dim(), !configs.exact_weights);
  MeanTrajectory out;
  if (keep_per_config) out.per_config_states.emplace();
  prop.visit([&rho0](const Configuration&, const UnitaryTrajectory& u) { return evolve_state(rho0, u); },
             [&](std::size_t i, std::vector<Matrix>&& states) {
               acc.add(configs.items[i].weight, states);
               if (keep_per_config) out.per_config_states->push_back(std::move(states));
             });
  out.grid = prop.grid();
  out.standard_error = acc.standard_error(configs.size());
  out.states = std::move(acc.mean);
  out.n_configs = configs.size();
  out.exact_weights = configs.exact_weights;
  out.master_seed = configs.master_seed;
  out.fingerprint = prop.fingerprint();
  return out;
}

inline MeanTrajectory mean_state(const EnsemblePropagation& prop, const DensityMatrix& rho0,
                                 bool keep_per_config = false) {
  return mean_state(prop, rho0.matrix(), keep_per_config);
}

/// Samples (or enumerates) the configurations, propagates them and averages.
inline MeanTrajectory mean_state(const SystemSpec& spec, const DensityMatrix& rho0, const TimeGrid& grid,
                                 std::size_t n_configs, std::uint64_t master_seed, PropagationOptions options = {}) {
  EnsemblePropagation prop(spec, sample_configurations(spec.ensemble(), n_configs, master_seed), grid, options);
  return mean_state(prop, rho0);
}

/// C_{t_k}[X] on the grid, together with the mean Hamiltonian it refers to.
struct DeviationSeries {
  TimeGrid grid;
  std::vector<Matrix> values;
  HermitianOperator hbar;
  std::uint64_t fingerprint = 0;
};

/// C_k = sum_omega w_omega [H_omega(t_k) - Hbar, U_omega(t_k) X U_omega(t_k)^dagger].
inline DeviationSeries deviation_term(const EnsemblePropagation& prop, const Matrix& x) {
  const SystemSpec& spec = prop.spec();
  if (x.rows() != spec.dim() || x.cols() != spec.dim()) throw DimensionError("deviation_term: X dimension");
  const HermitianOperator hbar = mean_hamiltonian(spec);
  const TimeGrid& grid = prop.grid();
  const auto& configs = prop.configs();
  detail::SeriesAccumulator acc(grid.size(), spec.dim(), false);
  prop.visit(
      [&](const Configuration& c, const UnitaryTrajectory& u) {
        std::vector<Matrix> series(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
          const Matrix dh = (hamiltonian_at(spec, c, grid.time(k)) - hbar).matrix();
          const Matrix xt = u.unitaries[k] * x * u.unitaries[k].adjoint();
          series[k] = dh * xt - xt * dh;
        }
        return series;
      },
      [&](std::size_t i, std::vector<Matrix>&& series) { acc.add(configs.items[i].weight, series); });
  return DeviationSeries{grid, std::move(acc.mean), hbar, prop.fingerprint()};
}

/// Checks that a deviation series belongs to the same configurations and grid as `prop`.
inline void require_paired(const EnsemblePropagation& prop, const DeviationSeries& dev) {
  if (dev.fingerprint != prop.fingerprint() || !(dev.grid == prop.grid())) {
    throw DomainError("deviation series was computed from a different configuration set or grid");
  }
}

namespace detail {

/// exp(-i tau L) applied in the eigenbasis of Hbar: X_ab -> X_ab exp(-i tau (E_a - E_b)).
inline Matrix mean_evolve_eigenbasis(const SpectralDecomposition& eig, const Matrix& xe, double tau) {
  Matrix out = xe;
  for (Eigen::Index a = 0; a < out.rows(); ++a) {
    for (Eigen::Index b = 0; b < out.cols(); ++b) {
      out(a, b) *= std::exp(Complex(0.0, -tau * (eig.eigenvalues(a) - eig.eigenvalues(b))));
    }
  }
  return out;
}

}  // namespace detail

/// exp(-i tau L) X = exp(-i tau Hbar) X exp(i tau Hbar).
inline Matrix mean_evolve(const HermitianOperator& hbar, const Matrix& x, double tau) {
  const auto eig = hermitian_eig(hbar);
  return eig.from_eigenbasis(detail::mean_evolve_eigenbasis(eig, eig.to_eigenbasis(x), tau));
}

/**
 * eta(t_k) = -i Int_0^{t_k} exp(-i(t_k - s)L) C_s ds by the composite
 * trapezoid rule on the grid, evaluated with the exact recurrence
 * J_{k+1} = P J_k + dt/2 (P C_k + C_{k+1}), P = exp(-i dt L).
 */
inline std::vector<Matrix> eta(const DeviationSeries& dev) {
  const auto eig = hermitian_eig(dev.hbar);
  const double dt = dev.grid.dt;
  std::vector<Matrix> out(dev.values.size());
  const auto d = dev.hbar.dim();
  Matrix j = Matrix::Zero(d, d);  // eigenbasis accumulator
  out[0] = Matrix::Zero(d, d);
  Matrix prev = eig.to_eigenbasis(dev.values[0]);
  for (std::size_t k = 0; k + 1 < dev.values.size(); ++k) {
    const Matrix next = eig.to_eigenbasis(dev.values[k + 1]);
    j = detail::mean_evolve_eigenbasis(eig, j + 0.5 * dt * prev, dt) + 0.5 * dt * next;
    out[k + 1] = Complex(0.0, -1.0) * eig.from_eigenbasis(j);
    prev = next;
  }
  return out;
}

/// ||rho-bar(t_k) - exp(-i t_k L) rho0 - eta(t_k)||_F for every grid point.
inline std::vector<double> eta_decomposition_error(const MeanTrajectory& mean, const DeviationSeries& dev,
                                                   const Matrix& rho0) {
  if (!(mean.grid == dev.grid) || mean.fingerprint != dev.fingerprint) {
    throw DomainError("eta_decomposition_error: mean state and deviation are not paired");
  }
  const auto eig = hermitian_eig(dev.hbar);
  const Matrix rho0_e = eig.to_eigenbasis(rho0);
  const auto e = eta(dev);
  std::vector<double> out(mean.states.size());
  for (std::size_t k = 0; k < mean.states.size(); ++k) {
    const Matrix free = eig.from_eigenbasis(detail::mean_evolve_eigenbasis(eig, rho0_e, mean.grid.time(k)));
    out[k] = (mean.states[k] - free - e[k]).norm();
  }
  return out;
}

/// max over configurations and grid points of ||H_omega(t_k) - Hbar||_2.
inline double max_fluctuation_norm(const EnsemblePropagation& prop) {
  const HermitianOperator hbar = mean_hamiltonian(prop.spec());
  double worst = 0.0;
  for (const auto& c : prop.configs().items) {
    for (std::size_t k = 0; k < prop.grid().size(); ++k) {
      const Matrix dh = (hamiltonian_at(prop.spec(), c, prop.grid().time(k)) - hbar).matrix();
      worst = std::max(worst, spectral_norm(dh));
      if (c.potential.kind() == "coupling") break;  // constant in time
    }
  }
  return worst;
}

/**
 * Central-difference residual of the mean equation at interior grid points,
 *
 *     r_k = || (rho_{k+1} - rho_{k-1}) / (2 dt) + i [Hbar, rho_k] + i C_k ||_F,
 *
 * returned for k = 1 .. n_steps - 1 (element k-1 holds r_k).
 */
inline std::vector<double> mean_dynamics_residual(const MeanTrajectory& mean, const DeviationSeries& dev) {
  if (!(mean.grid == dev.grid)) throw DomainError("mean_dynamics_residual: grids differ");
  if (mean.fingerprint != dev.fingerprint) {
    throw DomainError("mean_dynamics_residual: mean state and deviation come from different configuration sets");
  }
  if (mean.states.size() < 3) throw DomainError("mean_dynamics_residual: need at least 3 grid points");
  const Matrix& h = dev.hbar.matrix();
  const Complex i(0.0, 1.0);
  std::vector<double> r;
  r.reserve(mean.states.size() - 2);
  for (std::size_t k = 1; k + 1 < mean.states.size(); ++k) {
    const Matrix& rho = mean.states[k];
    const Matrix lhs = (mean.states[k + 1] - mean.states[k - 1]) / (2.0 * mean.grid.dt);
    r.push_back((lhs + i * (h * rho - rho * h) + i * dev.values[k]).norm());
  }
  return r;
}

/// m_k = S(rho-bar(t_k)) - S(rho-bar(0)); non-negative by concavity of the entropy.
inline std::vector<double> entropy_margin(const MeanTrajectory& mean) {
  std::vector<double> m;
  m.reserve(mean.states.size());
  const double s0 = von_neumann_entropy(mean.states.front());
  for (const auto& rho : mean.states) m.push_back(von_neumann_entropy(rho) - s0);
  return m;
}

/**
 * Ent_B(t) = -i beta h_B(t) Tr(rho(t) [Hbar, B]).
 *
 * Meaningful only while the deviation term vanishes; the caller is
 * responsible for that precondition.
 */
inline double bath_entropy_production(const Matrix& rho_t, const HermitianOperator& hbar, const HermitianOperator& b,
                                      double h_b, double beta) {
  const Complex value = Complex(0.0, -beta * h_b) * (rho_t * commutator(hbar.matrix(), b.matrix())).trace();
  const double scale = std::max(1.0, std::abs(beta * h_b) * hbar.matrix().norm() * b.matrix().norm());
  if (std::abs(value.imag()) > 1e-12 * scale) {
    throw DomainError("bath_entropy_production: imaginary residue " + std::to_string(value.imag()));
  }
  return value.real();
}

/// |(rho, [dH, rho])|_HS, which vanishes by cyclicity of the trace.
inline double dissipativity_identity_check(const Matrix& rho, const Matrix& dh) {
  return std::abs(hs_inner(rho, commutator(dh, rho)));
}

}  // namespace fdrlab
