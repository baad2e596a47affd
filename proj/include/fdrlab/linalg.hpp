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
 * @file linalg.hpp
 * @brief Dense complex linear algebra for small Hilbert spaces.
 *
 * Every matrix function in the library goes through the spectral
 * decomposition of a Hermitian operator: f(H) = U diag(f(E)) U^dagger.
 * That gives real-time propagators, imaginary-time Boltzmann factors and
 * general complex-time continuations from one code path.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "fdrlab/errors.hpp"

namespace fdrlab {

using Complex = std::complex<double>;
using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;

/// Relative tolerance on ||M - M^dagger||_F / ||M||_F accepted as Hermitian.
inline constexpr double kHermiticityTol = 1e-12;

namespace detail {

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionError(std::string(what) + ": matrix must be square and non-empty");
  }
}

inline void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  require_square(a, what);
  require_square(b, what);
  if (a.rows() != b.rows()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                         " vs " + std::to_string(b.rows()) + ")");
  }
}

inline bool all_finite(const Matrix& m) {
  return m.unaryExpr([](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); })
      .all();
}

}  // namespace detail

inline Matrix identity(Eigen::Index dim) { return Matrix::Identity(dim, dim); }

inline Matrix commutator(const Matrix& a, const Matrix& b) {
  detail::require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

inline Matrix anticommutator(const Matrix& a, const Matrix& b) {
  detail::require_same_dim(a, b, "anticommutator");
  return a * b + b * a;
}

inline Complex trace(const Matrix& m) {
  detail::require_square(m, "trace");
  return m.trace();
}

/// Hilbert-Schmidt inner product Tr(A^dagger B).
inline Complex hs_inner(const Matrix& a, const Matrix& b) {
  detail::require_same_dim(a, b, "hs_inner");
  // Tr(A^dagger B) = sum_ij conj(A_ij) B_ij
  return (a.conjugate().cwiseProduct(b)).sum();
}

inline double frobenius_norm(const Matrix& m) { return m.norm(); }

/// Largest singular value; exact enough for the step-size guard and scale factors.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Relative anti-Hermitian residue ||M - M^dagger||_F / ||M||_F (0 for the zero matrix).
inline double hermiticity_defect(const Matrix& m) {
  const double scale = m.norm();
  if (scale == 0.0) return 0.0;
  return (m - m.adjoint()).norm() / scale;
}

/**
 * A dense matrix known to be Hermitian within kHermiticityTol.
 *
 * Construction symmetrizes the input, so downstream eigensolvers see an
 * exactly self-adjoint matrix.
 */
class HermitianOperator {
 public:
  HermitianOperator() = default;

  explicit HermitianOperator(const Matrix& m, double tol = kHermiticityTol) {
    detail::require_square(m, "HermitianOperator");
    if (!detail::all_finite(m)) throw HermiticityError("HermitianOperator: non-finite entries");
    const double defect = hermiticity_defect(m);
    if (defect > tol) {
      throw HermiticityError("HermitianOperator: relative hermiticity defect " + std::to_string(defect) +
                             " exceeds tolerance");
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  static HermitianOperator zero(Eigen::Index dim) { return HermitianOperator(Matrix::Zero(dim, dim)); }
  static HermitianOperator identity(Eigen::Index dim) { return HermitianOperator(Matrix::Identity(dim, dim)); }
  static HermitianOperator diagonal(const RealVector& d) {
    return HermitianOperator(d.cast<Complex>().asDiagonal().toDenseMatrix());
  }

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  HermitianOperator operator+(const HermitianOperator& o) const {
    detail::require_same_dim(m_, o.m_, "HermitianOperator +");
    return HermitianOperator(m_ + o.m_, 0.0, Trusted{});
  }
  HermitianOperator operator-(const HermitianOperator& o) const {
    detail::require_same_dim(m_, o.m_, "HermitianOperator -");
    return HermitianOperator(m_ - o.m_, 0.0, Trusted{});
  }
  HermitianOperator operator*(double s) const { return HermitianOperator(s * m_, 0.0, Trusted{}); }
  friend HermitianOperator operator*(double s, const HermitianOperator& h) { return h * s; }

 private:
  struct Trusted {};
  HermitianOperator(Matrix m, double, Trusted) : m_(std::move(m)) {}

  Matrix m_;
};

/// Eigen-decomposition M = U diag(E) U^dagger with ascending E.
struct SpectralDecomposition {
  RealVector eigenvalues;
  Matrix eigenvectors;  // column k belongs to eigenvalues(k)

  Eigen::Index dim() const { return eigenvalues.size(); }

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
  }

  /// U diag(f(E_k)) U^dagger for a scalar function f: double -> Complex.
  template <typename F>
  Matrix apply(F&& f) const {
    Eigen::Matrix<Complex, Eigen::Dynamic, 1> values(dim());
    for (Eigen::Index k = 0; k < dim(); ++k) values(k) = f(eigenvalues(k));
    return eigenvectors * values.asDiagonal() * eigenvectors.adjoint();
  }

  Matrix to_eigenbasis(const Matrix& x) const { return eigenvectors.adjoint() * x * eigenvectors; }
  Matrix from_eigenbasis(const Matrix& x) const { return eigenvectors * x * eigenvectors.adjoint(); }
};

/**
 * Hermitian eigensolver.
 *
 * Eigenvector phases are fixed so the largest-magnitude component of every
 * column is real and positive (first such index when magnitudes tie within
 * 1e-10 relative), which makes the output deterministic for a given input.
 */
inline SpectralDecomposition hermitian_eig(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(Eigen::MatrixXcd(h.matrix()),
                                                         Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("hermitian_eig: eigensolver did not converge");
  }
  SpectralDecomposition out{solver.eigenvalues(), Matrix(solver.eigenvectors())};
  for (Eigen::Index k = 0; k < out.dim(); ++k) {
    auto col = out.eigenvectors.col(k);
    const double biggest = col.cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    while (std::abs(col(pivot)) < biggest * (1.0 - 1e-10)) ++pivot;
    const Complex phase = col(pivot) / std::abs(col(pivot));
    col *= std::conj(phase);
    col(pivot) = Complex(col(pivot).real(), 0.0);
  }
  return out;
}

inline SpectralDecomposition hermitian_eig(const Matrix& m) { return hermitian_eig(HermitianOperator(m)); }

/// exp(z H) = U diag(exp(z E_k)) U^dagger.
inline Matrix expm_hermitian(const SpectralDecomposition& eig, Complex z) {
  return eig.apply([z](double e) { return std::exp(z * e); });
}

inline Matrix expm_hermitian(const HermitianOperator& h, Complex z) { return expm_hermitian(hermitian_eig(h), z); }

/**
 * Heisenberg picture at complex time: X(z) = exp(izH) X exp(-izH).
 *
 * Evaluated entrywise in the eigenbasis, X_jk exp(iz(E_j - E_k)), so the
 * continuation to imaginary time never forms exp(beta H) on its own.
 */
inline Matrix heisenberg(const SpectralDecomposition& eig, const Matrix& x, Complex z) {
  detail::require_same_dim(eig.eigenvectors, x, "heisenberg");
  Matrix xe = eig.to_eigenbasis(x);
  const Complex iz = Complex(0.0, 1.0) * z;
  for (Eigen::Index j = 0; j < xe.rows(); ++j) {
    for (Eigen::Index k = 0; k < xe.cols(); ++k) {
      xe(j, k) *= std::exp(iz * (eig.eigenvalues(j) - eig.eigenvalues(k)));
    }
  }
  return eig.from_eigenbasis(xe);
}

}  // namespace fdrlab
