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
 * @file response.hpp
 * @brief Bath-perturbed mean dynamics, finite-difference linear response and
 * the modified Kubo comparison.
 *
 * The probe enters every configuration as H_omega(t) - h_B(t) B. Averaging
 * the perturbed von Neumann equations over omega reproduces the perturbed
 * mean equation term by term, deviation term included.
 *
 * An impulse h_B(t) = eps delta(t - t') is applied as the exact kick
 * exp(i eps B) at the grid point t'. A finite rectangle of area eps placed on
 * one grid step would shift the effective kick time by dt/2.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "fdrlab/correlation.hpp"
#include "fdrlab/equilibrium.hpp"
#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"
#include "fdrlab/mean_dynamics.hpp"
#include "fdrlab/model.hpp"
#include "fdrlab/propagator.hpp"

namespace fdrlab {

enum class BathProfile { impulse, step, zero };

inline const char* to_string(BathProfile p) {
  switch (p) {
    case BathProfile::impulse:
      return "impulse";
    case BathProfile::step:
      return "step";
    case BathProfile::zero:
      return "zero";
  }
  return "?";
}

/// Weak probe h_B(t) B. For `step`, h_B = eps for t >= t'.
struct BathCoupling {
  HermitianOperator b;
  BathProfile profile = BathProfile::impulse;
  double t_prime = 0.0;
  double epsilon = 0.0;

  /// Grid index of t'; throws for non-finite eps or t' outside the grid.
  std::size_t validate(const TimeGrid& grid) const {
    if (!std::isfinite(epsilon)) throw DomainError("BathCoupling: epsilon must be finite");
    if (!(t_prime >= 0.0)) throw DomainError("BathCoupling: t_prime must be non-negative");
    return grid.snap(t_prime);
  }
};

/// Default probe strength eps = 1e-3 / ||B||_2.
inline double default_epsilon(const HermitianOperator& b) {
  const double n = spectral_norm(b.matrix());
  return n > 0.0 ? 1e-3 / n : 1e-3;
}

namespace detail {

/// U'(t_k) for one configuration under the probe.
inline std::vector<Matrix> perturbed_unitaries(const SystemSpec& spec, const Configuration& c,
                                               const UnitaryTrajectory& u, const BathCoupling& coupling,
                                               std::size_t k_prime) {
  const TimeGrid& grid = u.grid;
  switch (coupling.profile) {
    case BathProfile::zero:
      return u.unitaries;
    case BathProfile::impulse: {
      std::vector<Matrix> out = u.unitaries;
      const Matrix kick = expm_hermitian(coupling.b, Complex(0.0, coupling.epsilon));
      const Matrix& uk = u.unitaries[k_prime];
      const Matrix tail = kick * uk;
      for (std::size_t k = k_prime; k < grid.size(); ++k) out[k] = u.unitaries[k] * uk.adjoint() * tail;
      return out;
    }
    case BathProfile::step: {
      const double tp = grid.time(k_prime);
      const HermitianOperator shift = coupling.epsilon * coupling.b;
      auto traj = evolve_unitary(
          [&](double t) {
            const HermitianOperator h = hamiltonian_at(spec, c, t);
            return t > tp ? h - shift : h;
          },
          grid);
      return std::move(traj.unitaries);
    }
  }
  throw DomainError("unknown bath profile");
}

/// Tr(X A) without forming the product.
inline Complex trace_product(const Matrix& x, const Matrix& a) { return x.cwiseProduct(a.transpose()).sum(); }

}  // namespace detail

/// Mean state of the ensemble propagated under H_omega(t) - h_B(t) B.
inline MeanTrajectory perturbed_mean_state(const EnsemblePropagation& prop, const Matrix& rho0,
                                           const BathCoupling& coupling) {
  if (rho0.rows() != prop.spec().dim()) throw DimensionError("perturbed_mean_state: rho0 dimension");
  if (coupling.b.dim() != prop.spec().dim()) throw DimensionError("perturbed_mean_state: B dimension");
  const std::size_t k_prime = coupling.validate(prop.grid());
  const auto& configs = prop.configs();
  detail::SeriesAccumulator acc(prop.grid().size(), prop.spec().dim(), !configs.exact_weights);
  prop.visit(
      [&](const Configuration& c, const UnitaryTrajectory& u) {
        const auto up = detail::perturbed_unitaries(prop.spec(), c, u, coupling, k_prime);
        std::vector<Matrix> states;
        states.reserve(up.size());
        for (const auto& w : up) states.push_back(w * rho0 * w.adjoint());
        return states;
      },
      [&](std::size_t i, std::vector<Matrix>&& states) { acc.add(configs.items[i].weight, states); });
  MeanTrajectory out;
  out.grid = prop.grid();
  out.standard_error = acc.standard_error(configs.size());
  out.states = std::move(acc.mean);
  out.n_configs = configs.size();
  out.exact_weights = configs.exact_weights;
  out.master_seed = configs.master_seed;
  out.fingerprint = prop.fingerprint();
  return out;
}

/// R(t_k, t') by central differences, with a second evaluation at eps/2.
struct ResponseSeries {
  TimeGrid grid;
  std::size_t k_prime = 0;
  double epsilon = 0.0;
  std::vector<Complex> values;       // central difference at eps
  std::vector<Complex> values_half;  // central difference at eps/2
  std::vector<double> richardson_error;  // 4/3 |R_eps - R_eps/2|

  double t_prime() const { return grid.time(k_prime); }
};

/**
 * [<A>_{+eps} - <A>_{-eps}] / (2 eps) for an impulse of strength eps at t',
 * using the full (non-linearised) perturbed propagation.
 */
inline ResponseSeries response_function(const EnsemblePropagation& prop, const Matrix& rho0, const Matrix& a,
                                        const HermitianOperator& b, double t_prime, double epsilon) {
  if (epsilon == 0.0 || !std::isfinite(epsilon)) throw DomainError("response_function: epsilon must be nonzero");
  const auto d = prop.spec().dim();
  if (rho0.rows() != d || a.rows() != d || b.dim() != d) throw DimensionError("response_function: dimension mismatch");
  const TimeGrid& grid = prop.grid();
  const std::size_t k_prime = BathCoupling{b, BathProfile::impulse, t_prime, epsilon}.validate(grid);

  const std::array<double, 4> eps{epsilon, -epsilon, 0.5 * epsilon, -0.5 * epsilon};
  std::array<Matrix, 4> kicks;
  for (std::size_t m = 0; m < 4; ++m) kicks[m] = expm_hermitian(b, Complex(0.0, eps[m]));

  using Pair = std::array<std::vector<Complex>, 2>;
  Pair total{std::vector<Complex>(grid.size()), std::vector<Complex>(grid.size())};
  const auto& configs = prop.configs();
  prop.visit(
      [&](const Configuration&, const UnitaryTrajectory& u) {
        Pair r{std::vector<Complex>(grid.size()), std::vector<Complex>(grid.size())};
        const Matrix& uk = u.unitaries[k_prime];
        const Matrix rho_k = uk * rho0 * uk.adjoint();
        std::array<Matrix, 4> kicked;
        for (std::size_t m = 0; m < 4; ++m) kicked[m] = kicks[m] * rho_k * kicks[m].adjoint();
        for (std::size_t k = k_prime; k < grid.size(); ++k) {
          const Matrix w = u.unitaries[k] * uk.adjoint();
          const Matrix ak = w.adjoint() * a * w;
          std::array<Complex, 4> e;
          for (std::size_t m = 0; m < 4; ++m) e[m] = detail::trace_product(kicked[m], ak);
          r[0][k] = (e[0] - e[1]) / (2.0 * epsilon);
          r[1][k] = (e[2] - e[3]) / epsilon;
        }
        return r;
      },
      [&](std::size_t i, Pair&& r) {
        const double wgt = configs.items[i].weight;
        for (std::size_t k = 0; k < grid.size(); ++k) {
          total[0][k] += wgt * r[0][k];
          total[1][k] += wgt * r[1][k];
        }
      });

  ResponseSeries out;
  out.grid = grid;
  out.k_prime = k_prime;
  out.epsilon = epsilon;
  out.values = std::move(total[0]);
  out.values_half = std::move(total[1]);
  out.richardson_error.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.richardson_error[k] = (4.0 / 3.0) * std::abs(out.values[k] - out.values_half[k]);
  }
  return out;
}

/**
 * Y(t') = Int_0^{t'} exp(-i(t' - s)L) C_s ds by the trapezoid rule, written
 * as an explicit weighted sum (no recurrence).
 */
inline Matrix delta_history(const DeviationSeries& dev, std::size_t k_prime) {
  if (k_prime >= dev.values.size()) throw DomainError("delta_history: t' beyond the deviation series");
  const auto eig = hermitian_eig(dev.hbar);
  const auto d = dev.hbar.dim();
  Matrix y = Matrix::Zero(d, d);
  if (k_prime == 0) return y;
  const double dt = dev.grid.dt;
  for (std::size_t j = 0; j <= k_prime; ++j) {
    const double w = (j == 0 || j == k_prime) ? 0.5 * dt : dt;
    const double tau = static_cast<double>(k_prime - j) * dt;
    y += w * detail::mean_evolve_eigenbasis(eig, eig.to_eigenbasis(dev.values[j]), tau);
  }
  return eig.from_eigenbasis(y);
}

/**
 * Delta(t, t') = 1/2 Tr[ (exp(-i(t - t')L) [B, Y(t')]) A ].
 *
 * `dev` must be the deviation series of the adjusted equilibrium state.
 */
inline Complex delta_term(const DeviationSeries& dev, const Matrix& a, const HermitianOperator& b, double t,
                          double t_prime) {
  if (t_prime > t) throw DomainError("delta_term: t' > t");
  const std::size_t k = dev.grid.snap(t);
  const std::size_t kp = dev.grid.snap(t_prime);
  const Matrix z = commutator(b.matrix(), delta_history(dev, kp));
  const Matrix w = mean_evolve(dev.hbar, z, dev.grid.time(k) - dev.grid.time(kp));
  return 0.5 * (w * a).trace();
}

/// Delta(t_k, t') for every k >= k'; entries with k < k' are zero.
inline std::vector<Complex> delta_series(const DeviationSeries& dev, const Matrix& a, const HermitianOperator& b,
                                         double t_prime) {
  const std::size_t kp = dev.grid.snap(t_prime);
  const auto eig = hermitian_eig(dev.hbar);
  const Matrix ze = eig.to_eigenbasis(commutator(b.matrix(), delta_history(dev, kp)));
  const Matrix ae = eig.to_eigenbasis(a);
  std::vector<Complex> out(dev.grid.size(), Complex(0.0, 0.0));
  for (std::size_t k = kp; k < dev.grid.size(); ++k) {
    const Matrix we = detail::mean_evolve_eigenbasis(eig, ze, dev.grid.time(k) - dev.grid.time(kp));
    out[k] = 0.5 * detail::trace_product(we, ae);
  }
  return out;
}

/// theta(t - t') with theta(0) = 1.
inline double heaviside(double x) { return x >= 0.0 ? 1.0 : 0.0; }

struct KuboRow {
  double t = 0.0;
  Complex lhs;          // finite-difference response
  Complex rhs;          // 2i theta(t - t') [C-(t, t') + Delta(t, t')]
  double abs_error = 0.0;
  double error_bound = 0.0;  // estimated O(eps^2) + O(dt^2) discretisation error of lhs
  Complex c_minus;
  Complex delta;
  Complex first_order;  // i theta(t - t') [C-(t, t') - 2i Delta(t, t')]
};

struct KuboReport {
  double t_prime = 0.0;
  double epsilon = 0.0;
  std::vector<KuboRow> rows;
  /// Least-squares c in lhs ~ c theta C- over all rows.
  Complex fitted_factor;
  double max_abs_error = 0.0;

  const KuboRow& at(double t) const {
    for (const auto& r : rows) {
      if (std::abs(r.t - t) < 1e-9 * std::max(1.0, std::abs(t)) + 1e-12) return r;
    }
    throw DomainError("KuboReport: no row at requested time");
  }
};

/**
 * Response, correlation and extra term side by side for all t on the grid,
 * starting from rho0 = adjusted equilibrium state of the system.
 */
inline KuboReport kubo_series(const EnsemblePropagation& prop, const Matrix& a, const HermitianOperator& b,
                              double t_prime, double epsilon) {
  const SystemSpec& spec = prop.spec();
  const HermitianOperator hbar = mean_hamiltonian(spec);
  const Matrix sigma = gibbs_state(hbar, spec.beta()).matrix();
  const ResponseSeries resp = response_function(prop, sigma, a, b, t_prime, epsilon);
  const DeviationSeries dev = deviation_term(prop, sigma);
  const std::vector<Complex> delta = delta_series(dev, a, b, t_prime);
  const TimeGrid& grid = prop.grid();
  const double tp = grid.time(resp.k_prime);

  double hmax = 0.0;
  for (const auto& c : prop.configs().items) {
    for (std::size_t k = 0; k < grid.size(); k += std::max<std::size_t>(1, grid.size() / 16)) {
      hmax = std::max(hmax, spectral_norm(hamiltonian_at(spec, c, grid.time(k)).matrix()));
    }
  }
  const double ab = spectral_norm(a) * spectral_norm(b.matrix());

  KuboReport rep;
  rep.t_prime = tp;
  rep.epsilon = epsilon;
  const Complex i(0.0, 1.0);
  Complex num(0.0, 0.0);
  double den = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    KuboRow r;
    r.t = grid.time(k);
    const double th = k >= resp.k_prime ? 1.0 : 0.0;
    r.lhs = resp.values[k];
    r.c_minus = th != 0.0 ? correlation_antisym(a, b.matrix(), hbar, sigma, r.t, tp) : Complex(0.0, 0.0);
    r.delta = delta[k];
    r.rhs = 2.0 * i * th * (r.c_minus + r.delta);
    r.first_order = i * th * (r.c_minus - 2.0 * i * r.delta);
    r.abs_error = std::abs(r.lhs - r.rhs);
    const double dt = grid.dt;
    r.error_bound = resp.richardson_error[k] + dt * dt * (1.0 + (r.t - tp) * hmax) * hmax * hmax * ab;
    rep.max_abs_error = std::max(rep.max_abs_error, r.abs_error);
    num += std::conj(th * r.c_minus) * r.lhs;
    den += std::norm(th * r.c_minus);
    rep.rows.push_back(r);
  }
  rep.fitted_factor = den > 0.0 ? num / den : Complex(0.0, 0.0);
  return rep;
}

/// Single-time Kubo comparison.
inline KuboRow kubo_check(const EnsemblePropagation& prop, const Matrix& a, const HermitianOperator& b, double t,
                          double t_prime, double epsilon) {
  const std::size_t k = prop.grid().snap(t);
  return kubo_series(prop, a, b, t_prime, epsilon).rows.at(k);
}

}  // namespace fdrlab
