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
 * @file correlation.hpp
 * @brief Two-time correlations under the mean Hamiltonian and the KMS check.
 *
 * Heisenberg operators are X(z) = exp(izH) X exp(-izH) for complex z,
 * evaluated exactly in the eigenbasis of the mean Hamiltonian, so there is
 * no time-step error anywhere in this file.
 */

#pragma once

#include <algorithm>
#include <cmath>

#include "fdrlab/equilibrium.hpp"
#include "fdrlab/linalg.hpp"

namespace fdrlab {

/// C_AB(t, t') = Tr(sigma A(t) B(t')).
inline Complex correlation(const Matrix& a, const Matrix& b, const HermitianOperator& hbar, const Matrix& sigma,
                           double t, double t_prime) {
  detail::require_same_dim(a, b, "correlation");
  detail::require_same_dim(a, hbar.matrix(), "correlation");
  detail::require_same_dim(a, sigma, "correlation");
  const auto eig = hermitian_eig(hbar);
  return (sigma * heisenberg(eig, a, t) * heisenberg(eig, b, t_prime)).trace();
}

/// C-_AB(t, t') = Tr(sigma [A(t), B(t')]).
inline Complex correlation_antisym(const Matrix& a, const Matrix& b, const HermitianOperator& hbar,
                                   const Matrix& sigma, double t, double t_prime) {
  const auto eig = hermitian_eig(hbar);
  const Matrix at = heisenberg(eig, a, t);
  const Matrix bt = heisenberg(eig, b, t_prime);
  return (sigma * commutator(at, bt)).trace();
}

/// C+_AB(t, t') = Tr(sigma {A(t), B(t')}).
inline Complex correlation_sym(const Matrix& a, const Matrix& b, const HermitianOperator& hbar, const Matrix& sigma,
                               double t, double t_prime) {
  const auto eig = hermitian_eig(hbar);
  const Matrix at = heisenberg(eig, a, t);
  const Matrix bt = heisenberg(eig, b, t_prime);
  return (sigma * anticommutator(at, bt)).trace();
}

/**
 * Correlations in the Gibbs state of a fixed Hamiltonian at complex times.
 *
 * Everything is kept in the eigenbasis, where sigma = diag(p). Each term
 * p_j exp(iz(E_j - E_k)) exp(iz'(E_k - E_j)) is formed from a single
 * exponent with ln p_j folded in, which stays finite for beta ||H|| in
 * the hundreds.
 */
class ThermalCorrelator {
 public:
  ThermalCorrelator(const HermitianOperator& hbar, double beta)
      : eig_(hermitian_eig(hbar)), p_(boltzmann_weights(eig_.eigenvalues, beta)), beta_(beta) {
    const double e0 = eig_.eigenvalues.minCoeff();
    const RealVector shifted = -beta * (eig_.eigenvalues.array() - e0).matrix();
    const double log_z = std::log(shifted.array().exp().sum());
    log_p_ = shifted.array() - log_z;
  }

  const SpectralDecomposition& eig() const { return eig_; }
  const RealVector& populations() const { return p_; }
  double beta() const { return beta_; }

  Matrix sigma() const { return eig_.eigenvectors * p_.cast<Complex>().asDiagonal() * eig_.eigenvectors.adjoint(); }

  /// Tr(sigma A(z) B(z')) for complex times.
  Complex operator()(const Matrix& a, const Matrix& b, Complex z, Complex z_prime = 0.0) const {
    detail::require_same_dim(a, b, "ThermalCorrelator");
    detail::require_same_dim(a, eig_.eigenvectors, "ThermalCorrelator");
    const Matrix ae = eig_.to_eigenbasis(a);
    const Matrix be = eig_.to_eigenbasis(b);
    const Complex iz = Complex(0.0, 1.0) * (z - z_prime);
    Complex sum(0.0, 0.0);
    for (Eigen::Index j = 0; j < ae.rows(); ++j) {
      for (Eigen::Index k = 0; k < ae.cols(); ++k) {
        const Complex x = ae(j, k) * be(k, j);
        if (x == Complex(0.0, 0.0)) continue;
        sum += std::exp(log_p_(j) + iz * (eig_.eigenvalues(j) - eig_.eigenvalues(k))) * x;
      }
    }
    return sum;
  }

 private:
  SpectralDecomposition eig_;
  RealVector p_;
  RealVector log_p_;
  double beta_;
};

struct KmsReport {
  Complex lhs;  // C_AB(t)
  Complex rhs;  // C_BA(-t - i beta)
  double abs_error = 0.0;
  double scale = 1.0;  // ||A||_F ||B||_F
};

/// Compares C_AB(t) with C_BA(-t - i beta) in the Gibbs state of hbar.
inline KmsReport kms_check(const Matrix& a, const Matrix& b, const HermitianOperator& hbar, double beta, double t) {
  const ThermalCorrelator corr(hbar, beta);
  KmsReport r;
  r.lhs = corr(a, b, t);
  r.rhs = corr(b, a, Complex(-t, -beta));
  r.abs_error = std::abs(r.lhs - r.rhs);
  r.scale = std::max(1e-300, a.norm() * b.norm());
  return r;
}

}  // namespace fdrlab
