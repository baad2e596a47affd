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
 * @file propagator.hpp
 * @brief Time-ordered unitary evolution on a uniform grid.
 *
 * The time-ordered exponential is discretized with the exponential midpoint
 * rule
 *
 *     U(t_{k+1}) = exp(-i dt H(t_k + dt/2)) U(t_k),   U(0) = I,
 *
 * which is unitary at every step and second order for smooth H(t). For a
 * piecewise-constant H(t) whose breakpoints lie on the grid it is exact up
 * to rounding.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fdrlab/equilibrium.hpp"
#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"
#include "fdrlab/model.hpp"

namespace fdrlab {

/// t_k = k dt for k = 0..n_steps.
struct TimeGrid {
  double dt = 0.0;
  std::size_t n_steps = 0;

  TimeGrid() = default;
  TimeGrid(double dt_, std::size_t n) : dt(dt_), n_steps(n) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("TimeGrid: dt must be positive");
    if (n_steps < 1) throw DomainError("TimeGrid: n_steps must be >= 1");
  }

  std::size_t size() const { return n_steps + 1; }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  double horizon() const { return time(n_steps); }

  std::vector<double> times() const {
    std::vector<double> t(size());
    for (std::size_t k = 0; k < size(); ++k) t[k] = time(k);
    return t;
  }

  /// Index of the grid point nearest to t; throws when t is not within dt/2 of one.
  std::size_t snap(double t) const {
    if (t < -0.5 * dt || t > horizon() + 0.5 * dt) throw DomainError("TimeGrid::snap: time outside grid");
    const double k = std::round(t / dt);
    if (std::abs(t - k * dt) >= 0.5 * dt) throw DomainError("TimeGrid::snap: time is off-grid");
    return static_cast<std::size_t>(k);
  }

  /// True when t coincides with a grid point up to 1e-9 dt.
  bool on_grid(double t) const {
    const double k = std::round(t / dt);
    return std::abs(t - k * dt) <= 1e-9 * dt;
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) { return a.dt == b.dt && a.n_steps == b.n_steps; }
};

struct UnitaryTrajectory {
  TimeGrid grid;
  std::vector<Matrix> unitaries;  // U(t_k), unitaries[0] = I
  double max_step_norm = 0.0;     // max_k dt ||H(t_k + dt/2)||_2; above 1 the step is coarse

  const Matrix& at(std::size_t k) const { return unitaries.at(k); }
  bool step_guard_exceeded() const { return max_step_norm > 1.0; }
};

/**
 * Propagate U(t) on `grid` for a time-dependent Hamiltonian.
 *
 * @param hamiltonian callable double -> HermitianOperator, evaluated at step midpoints.
 */
template <typename HamiltonianFn>
UnitaryTrajectory evolve_unitary(HamiltonianFn&& hamiltonian, const TimeGrid& grid) {
  UnitaryTrajectory traj;
  traj.grid = grid;
  traj.unitaries.reserve(grid.size());
  const double dt = grid.dt;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const HermitianOperator h = hamiltonian(grid.time(k) + 0.5 * dt);
    if (traj.unitaries.empty()) traj.unitaries.push_back(identity(h.dim()));
    const auto eig = hermitian_eig(h);
    const double step_norm = dt * eig.eigenvalues.cwiseAbs().maxCoeff();
    traj.max_step_norm = std::max(traj.max_step_norm, step_norm);
    traj.unitaries.push_back(expm_hermitian(eig, Complex(0.0, -dt)) * traj.unitaries.back());
  }
  return traj;
}

/// Grid must contain every breakpoint of a piecewise-constant potential.
inline void require_breakpoints_on_grid(const PotentialTrajectory& v, const TimeGrid& grid) {
  for (double b : v.breakpoints()) {
    if (b <= grid.horizon() && !grid.on_grid(b)) {
      throw DomainError("piecewise-constant potential: breakpoint " + std::to_string(b) +
                        " is not aligned with the time grid");
    }
  }
}

/// Propagate one configuration of a system.
inline UnitaryTrajectory evolve_configuration(const SystemSpec& spec, const Configuration& config,
                                              const TimeGrid& grid) {
  require_breakpoints_on_grid(config.potential, grid);
  const HermitianOperator& h0 = spec.h0();
  if (config.potential.dim() != spec.dim()) throw DimensionError("evolve_configuration: potential dimension");
  return evolve_unitary([&](double t) { return h0 + config.potential(t); }, grid);
}

/// rho(t_k) = U(t_k) rho0 U(t_k)^dagger.
inline std::vector<Matrix> evolve_state(const Matrix& rho0, const UnitaryTrajectory& traj) {
  std::vector<Matrix> out;
  out.reserve(traj.unitaries.size());
  for (const auto& u : traj.unitaries) {
    if (u.rows() != rho0.rows()) throw DimensionError("evolve_state: dimension mismatch");
    out.push_back(u * rho0 * u.adjoint());
  }
  return out;
}

inline std::vector<Matrix> evolve_state(const DensityMatrix& rho0, const UnitaryTrajectory& traj) {
  return evolve_state(rho0.matrix(), traj);
}

/// A(t_k) = U(t_k)^dagger A U(t_k).
inline std::vector<Matrix> evolve_observable(const Matrix& a, const UnitaryTrajectory& traj) {
  std::vector<Matrix> out;
  out.reserve(traj.unitaries.size());
  for (const auto& u : traj.unitaries) {
    if (u.rows() != a.rows()) throw DimensionError("evolve_observable: dimension mismatch");
    out.push_back(u.adjoint() * a * u);
  }
  return out;
}

inline std::vector<Matrix> evolve_observable(const HermitianOperator& a, const UnitaryTrajectory& traj) {
  return evolve_observable(a.matrix(), traj);
}

/// max_k ||U(t_k)^dagger U(t_k) - I||_F.
inline double unitarity_drift(const UnitaryTrajectory& traj) {
  double worst = 0.0;
  for (const auto& u : traj.unitaries) {
    worst = std::max(worst, (u.adjoint() * u - identity(u.rows())).norm());
  }
  return worst;
}

}  // namespace fdrlab
