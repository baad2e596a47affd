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

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"

namespace fdrlab {

inline constexpr double kTraceTol = 1e-12;
inline constexpr double kPositivityTol = 1e-12;

/// Hermitian, unit-trace, positive semidefinite matrix.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  /// Validates trace and positivity; `trace_tol` is loosened for long Monte Carlo sums.
  explicit DensityMatrix(const Matrix& m, double trace_tol = kTraceTol) : h_(m) {
    const Complex tr = h_.matrix().trace();
    if (std::abs(tr - 1.0) > trace_tol) {
      throw DomainError("DensityMatrix: trace " + std::to_string(tr.real()) + " differs from 1");
    }
    const double lowest = hermitian_eig(h_).eigenvalues.minCoeff();
    if (lowest < -kPositivityTol) {
      throw DomainError("DensityMatrix: negative eigenvalue " + std::to_string(lowest));
    }
  }

  /// |psi><psi| for a (not necessarily normalized) state vector.
  static DensityMatrix pure(const Eigen::Matrix<Complex, Eigen::Dynamic, 1>& psi) {
    const double n = psi.norm();
    if (n == 0.0) throw DomainError("DensityMatrix::pure: zero vector");
    const auto v = psi / n;
    return DensityMatrix(v * v.adjoint());
  }

  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  const Matrix& matrix() const { return h_.matrix(); }
  const HermitianOperator& op() const { return h_; }
  Eigen::Index dim() const { return h_.dim(); }

 private:
  HermitianOperator h_;
};

/// Boltzmann populations exp(-beta E_k) / Z with the lowest level shifted to zero.
inline RealVector boltzmann_weights(const RealVector& energies, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and non-negative");
  const double e0 = energies.minCoeff();
  RealVector p = (-(beta) * (energies.array() - e0)).exp().matrix();
  return p / p.sum();
}

/// Gibbs state exp(-beta H) / Tr exp(-beta H), diagonal in H's eigenbasis.
inline DensityMatrix gibbs_state(const HermitianOperator& h, double beta) {
  const auto eig = hermitian_eig(h);
  const RealVector p = boltzmann_weights(eig.eigenvalues, beta);
  return DensityMatrix(eig.eigenvectors * p.cast<Complex>().asDiagonal() * eig.eigenvectors.adjoint());
}

/// Gibbs state of the mean Hamiltonian H0 + Vbar (Lagrange multiplier of Vbar fixed to 1).
inline DensityMatrix adjusted_equilibrium(const HermitianOperator& h0, const HermitianOperator& vbar, double beta) {
  if (h0.dim() != vbar.dim()) throw DimensionError("adjusted_equilibrium: dimension mismatch");
  return gibbs_state(h0 + vbar, beta);
}

/// Re Tr(rho H); the imaginary part must vanish to 1e-12 relative.
inline double energy(const DensityMatrix& rho, const HermitianOperator& h) {
  if (rho.dim() != h.dim()) throw DimensionError("energy: dimension mismatch");
  const Complex e = (rho.matrix() * h.matrix()).trace();
  if (std::abs(e.imag()) > 1e-12 * std::max(1.0, h.matrix().norm())) {
    throw DomainError("energy: non-negligible imaginary part");
  }
  return e.real();
}

/**
 * -Tr rho ln rho in nats, with 0 ln 0 = 0.
 *
 * Eigenvalues in [-1e-10, 0) are clipped to zero; anything more negative is
 * reported as an error rather than hidden.
 */
inline double von_neumann_entropy(const Matrix& rho) {
  const auto eig = hermitian_eig(HermitianOperator(rho, 1e-10));
  double s = 0.0;
  for (Eigen::Index k = 0; k < eig.dim(); ++k) {
    const double p = eig.eigenvalues(k);
    if (p < -1e-10) throw DomainError("von_neumann_entropy: eigenvalue " + std::to_string(p) + " below -1e-10");
    const double q = std::clamp(p, 0.0, 1.0);
    if (q > 0.0) s -= q * std::log(q);
  }
  return s;
}

inline double von_neumann_entropy(const DensityMatrix& rho) { return von_neumann_entropy(rho.matrix()); }

}  // namespace fdrlab
