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
 * @file spectrum.hpp
 * @brief Exact Bohr-line spectra of thermal correlations and damped
 * finite-window Fourier transforms.
 *
 * In the eigenbasis of Hbar,
 *
 *     C_AB(t) = sum_jk p_j A_jk B_kj exp(-i t lambda_jk),  lambda_jk = E_k - E_j.
 *
 * A line is labelled by lambda_jk and carries weight sqrt(2 pi) p_j A_jk B_kj.
 * With the kernel exp(-i t w) the transform of such a term peaks at
 * w = -lambda; the label is chosen so that antisym = (1 - exp(-beta lambda)) plain.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "fdrlab/correlation.hpp"
#include "fdrlab/equilibrium.hpp"
#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"

namespace fdrlab {

inline constexpr double kLineMergeTol = 1e-9;

enum class SpectrumKind { plain, sym, antisym, response };

inline const char* to_string(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::plain:
      return "plain";
    case SpectrumKind::sym:
      return "sym";
    case SpectrumKind::antisym:
      return "antisym";
    case SpectrumKind::response:
      return "response";
  }
  return "?";
}

struct SpectralLine {
  double lambda = 0.0;
  Complex weight;
};

struct SpectralLineSeries {
  std::vector<SpectralLine> lines;  // ascending lambda, merged within kLineMergeTol
  double beta = 0.0;
  SpectrumKind kind = SpectrumKind::plain;

  std::optional<Complex> weight_at(double lambda, double tol = kLineMergeTol) const {
    for (const auto& l : lines) {
      if (std::abs(l.lambda - lambda) <= tol) return l.weight;
    }
    return std::nullopt;
  }
};

namespace detail {

/// Sort by frequency and merge runs whose spread from the run's first member is within tol.
inline std::vector<SpectralLine> merge_lines(std::vector<SpectralLine> raw, double tol = kLineMergeTol) {
  std::stable_sort(raw.begin(), raw.end(), [](const auto& x, const auto& y) { return x.lambda < y.lambda; });
  std::vector<SpectralLine> out;
  double start = 0.0;
  double sum_lambda = 0.0;
  std::size_t count = 0;
  for (const auto& l : raw) {
    if (out.empty() || l.lambda - start > tol) {
      if (!out.empty()) out.back().lambda = sum_lambda / static_cast<double>(count);
      out.push_back({l.lambda, Complex(0.0, 0.0)});
      start = l.lambda;
      sum_lambda = 0.0;
      count = 0;
    }
    out.back().weight += l.weight;
    sum_lambda += l.lambda;
    ++count;
  }
  if (!out.empty()) out.back().lambda = sum_lambda / static_cast<double>(count);
  return out;
}

/// Unmerged plain lines of C_XY: (E_k - E_j, sqrt(2 pi) p_j X_jk Y_kj).
inline std::vector<SpectralLine> raw_plain_lines(const ThermalCorrelator& corr, const Matrix& x, const Matrix& y) {
  const auto& eig = corr.eig();
  const auto& p = corr.populations();
  const Matrix xe = eig.to_eigenbasis(x);
  const Matrix ye = eig.to_eigenbasis(y);
  const double norm = std::sqrt(2.0 * std::numbers::pi);
  std::vector<SpectralLine> out;
  out.reserve(static_cast<std::size_t>(xe.size()));
  for (Eigen::Index j = 0; j < xe.rows(); ++j) {
    for (Eigen::Index k = 0; k < xe.cols(); ++k) {
      out.push_back({eig.eigenvalues(k) - eig.eigenvalues(j), norm * p(j) * xe(j, k) * ye(k, j)});
    }
  }
  return out;
}

}  // namespace detail

/**
 * Line spectrum of C_AB (plain), C+ (sym), C- (antisym) or the response.
 *
 * sym and antisym are assembled from the plain lines of C_AB and the
 * reflected plain lines of C_BA (C_BA(-t) = Tr(sigma B A(t))). The response
 * spectrum has the lines of C-, since R(t) is proportional to theta(t) C-(t).
 * Every kind reports the same set of frequencies, including zero weights.
 */
inline SpectralLineSeries line_spectrum(const Matrix& a, const Matrix& b, const HermitianOperator& hbar, double beta,
                                        SpectrumKind kind) {
  detail::require_same_dim(a, b, "line_spectrum");
  detail::require_same_dim(a, hbar.matrix(), "line_spectrum");
  const ThermalCorrelator corr(hbar, beta);
  std::vector<SpectralLine> raw = detail::raw_plain_lines(corr, a, b);
  if (kind == SpectrumKind::plain) {
    const auto reflected = detail::raw_plain_lines(corr, b, a);
    for (const auto& l : reflected) raw.push_back({-l.lambda, Complex(0.0, 0.0)});
  } else {
    const double sign = kind == SpectrumKind::sym ? 1.0 : -1.0;
    for (const auto& l : detail::raw_plain_lines(corr, b, a)) raw.push_back({-l.lambda, sign * l.weight});
  }
  return SpectralLineSeries{detail::merge_lines(std::move(raw)), beta, kind};
}

/// One row of the per-line identity table.
struct LineIdentityRow {
  double lambda = 0.0;
  Complex plain, sym, antisym, response;
  double ratio_antisym_plain = std::nan("");  // NaN where the denominator vanishes
  double expected_antisym_plain = 0.0;        // 1 - exp(-beta lambda)
  double ratio_response_sym = std::nan("");
  double expected_response_sym = 0.0;         // tanh(beta lambda / 2)
  double antisym_error = 0.0;  // relative defect of antisym = (1 - e^{-beta lambda}) plain
  double fdr_error = 0.0;      // relative defect of response = tanh(beta lambda / 2) sym; |response| / max weight at lambda = 0
  bool zero_frequency = false;
  bool pass_antisym = false;
  bool pass_fdr = false;
};

struct LineIdentityTable {
  std::vector<LineIdentityRow> rows;
  double rel_tol = 1e-10;
  bool pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass_antisym && r.pass_fdr; });
  }
};

/**
 * Checks antisym = (1 - e^{-beta lambda}) plain and response = tanh(beta lambda/2) sym
 * line by line, in multiplied-out form with a relative tolerance. At lambda = 0
 * the response weight itself must vanish (to 1e-12 of the largest weight).
 */
inline LineIdentityTable line_identities(const Matrix& a, const Matrix& b, const HermitianOperator& hbar, double beta,
                                         double rel_tol = 1e-10) {
  const auto plain = line_spectrum(a, b, hbar, beta, SpectrumKind::plain);
  const auto sym = line_spectrum(a, b, hbar, beta, SpectrumKind::sym);
  const auto anti = line_spectrum(a, b, hbar, beta, SpectrumKind::antisym);
  const auto resp = line_spectrum(a, b, hbar, beta, SpectrumKind::response);
  const std::size_t n = plain.lines.size();
  if (sym.lines.size() != n || anti.lines.size() != n || resp.lines.size() != n) {
    throw DomainError("line_identities: spectra disagree on the set of frequencies");
  }
  double wmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wmax = std::max({wmax, std::abs(plain.lines[i].weight), std::abs(sym.lines[i].weight)});
  }
  // Lines weaker than 1e-3 of the strongest are judged against that level instead of their own size.
  const double significant = 1e-3 * wmax;
  auto rel = [&](Complex x, Complex pred) {
    const double den = std::max(std::abs(x) + std::abs(pred), significant);
    return den > 0.0 ? std::abs(x - pred) / den : 0.0;
  };

  LineIdentityTable table;
  table.rel_tol = rel_tol;
  for (std::size_t i = 0; i < n; ++i) {
    LineIdentityRow r;
    r.lambda = plain.lines[i].lambda;
    r.plain = plain.lines[i].weight;
    r.sym = sym.lines[i].weight;
    r.antisym = anti.lines[i].weight;
    r.response = resp.lines[i].weight;
    r.expected_antisym_plain = -std::expm1(-beta * r.lambda);
    r.expected_response_sym = std::tanh(0.5 * beta * r.lambda);
    if (std::abs(r.plain) > 1e-15 * wmax) r.ratio_antisym_plain = (r.antisym / r.plain).real();
    if (std::abs(r.sym) > 1e-15 * wmax) r.ratio_response_sym = (r.response / r.sym).real();

    r.antisym_error = rel(r.antisym, r.expected_antisym_plain * r.plain);
    r.pass_antisym = r.antisym_error <= rel_tol;
    r.zero_frequency = std::abs(r.lambda) <= kLineMergeTol;
    if (r.zero_frequency) {
      r.fdr_error = wmax > 0.0 ? std::abs(r.response) / wmax : 0.0;
      r.pass_fdr = r.fdr_error <= 1e-12;
    } else {
      r.fdr_error = rel(r.response, r.expected_response_sym * r.sym);
      r.pass_fdr = r.fdr_error <= rel_tol;
    }
    table.rows.push_back(r);
  }
  return table;
}

/**
 * (1/sqrt(2 pi)) Int_0^T exp(-i t w) exp(-gamma t) g(t) dt by the trapezoid
 * rule over samples g(k dt), k = 0..n-1, for every w in `omegas`.
 */
inline std::vector<Complex> windowed_fourier(const std::vector<Complex>& samples, double dt,
                                             const std::vector<double>& omegas, double gamma) {
  if (!(dt > 0.0)) throw DomainError("windowed_fourier: dt must be positive");
  if (!(gamma >= 0.0)) throw DomainError("windowed_fourier: gamma must be non-negative");
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<Complex> out(omegas.size(), Complex(0.0, 0.0));
  const std::size_t n = samples.size();
  if (n < 2) return out;
  for (std::size_t m = 0; m < omegas.size(); ++m) {
    Complex acc(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) * dt;
      const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
      acc += w * std::exp(Complex(-gamma * t, -t * omegas[m])) * samples[k];
    }
    out[m] = norm * dt * acc;
  }
  return out;
}

/**
 * Damped transform over the whole line, (1/sqrt(2 pi)) Int exp(-i t w - gamma |t|) g(t) dt,
 * from samples g(k dt) and g(-k dt).
 */
inline std::vector<Complex> windowed_fourier_two_sided(const std::vector<Complex>& forward,
                                                       const std::vector<Complex>& backward, double dt,
                                                       const std::vector<double>& omegas, double gamma) {
  std::vector<double> negated(omegas.size());
  std::transform(omegas.begin(), omegas.end(), negated.begin(), [](double w) { return -w; });
  auto out = windowed_fourier(forward, dt, omegas, gamma);
  const auto back = windowed_fourier(backward, dt, negated, gamma);
  for (std::size_t m = 0; m < out.size(); ++m) out[m] += back[m];
  return out;
}

/// Sampled correlations of the three kinds on t = +-k dt.
struct CorrelationSamples {
  double dt = 0.0;
  std::vector<Complex> plain_fwd, plain_bwd, sym_fwd, sym_bwd, anti_fwd, anti_bwd;
};

inline CorrelationSamples sample_correlations(const ThermalCorrelator& corr, const Matrix& a, const Matrix& b,
                                              double dt, std::size_t n) {
  CorrelationSamples s;
  s.dt = dt;
  for (std::size_t k = 0; k < n; ++k) {
    for (const double sign : {1.0, -1.0}) {
      const double t = sign * static_cast<double>(k) * dt;
      const Complex ab = corr(a, b, t);
      const Complex ba = corr(b, a, 0.0, t);
      auto& plain = sign > 0 ? s.plain_fwd : s.plain_bwd;
      auto& sym = sign > 0 ? s.sym_fwd : s.sym_bwd;
      auto& anti = sign > 0 ? s.anti_fwd : s.anti_bwd;
      plain.push_back(ab);
      sym.push_back(ab + ba);
      anti.push_back(ab - ba);
    }
  }
  return s;
}

struct WindowedLineRow {
  double lambda = 0.0;
  Complex plain_exact, sym_exact, antisym_exact;
  Complex plain_windowed, sym_windowed, antisym_windowed;
  double weight_error = 0.0;  // max over kinds of |windowed - exact| / max line weight
  std::optional<double> tanh_ratio_error;  // relative, on lines carrying at least 10% of the largest sym weight
};

struct WindowedLineCheck {
  double gamma = 0.0;
  double horizon = 0.0;
  double sample_dt = 0.0;
  std::vector<WindowedLineRow> rows;
  double max_weight_error = 0.0;
  double max_tanh_error = 0.0;
  double tol = 0.05;
  bool pass() const { return max_weight_error <= tol && max_tanh_error <= tol; }
};

/// Smallest gap between distinct eigenvalues of Hbar (0 for a multiple of the identity).
inline double minimum_level_gap(const HermitianOperator& hbar) {
  const auto e = hermitian_eig(hbar).eigenvalues;
  double gap = 0.0;
  for (Eigen::Index k = 1; k < e.size(); ++k) {
    const double g = e(k) - e(k - 1);
    if (g > kLineMergeTol && (gap == 0.0 || g < gap)) gap = g;
  }
  return gap;
}

/**
 * Smallest distance between distinct Bohr frequencies E_j - E_k (0 included).
 * Never larger than the level gap; for d >= 3 it can be much smaller.
 */
inline double minimum_line_spacing(const HermitianOperator& hbar) {
  const auto e = hermitian_eig(hbar).eigenvalues;
  std::vector<double> f;
  for (Eigen::Index j = 0; j < e.size(); ++j)
    for (Eigen::Index k = 0; k < e.size(); ++k) f.push_back(e(j) - e(k));
  std::sort(f.begin(), f.end());
  double spacing = 0.0;
  double last = f.front();
  for (double x : f) {
    if (x - last <= kLineMergeTol) continue;
    if (spacing == 0.0 || x - last < spacing) spacing = x - last;
    last = x;
  }
  return spacing;
}

/**
 * Recovers the line weights from damped two-sided transforms of the sampled
 * correlations. An isolated line of weight W gives pi gamma ghat(-lambda) = W
 * up to O(gamma^2 / spacing^2) leakage from its neighbours.
 *
 * @param gamma damping; default 0.05 times the minimum Bohr-frequency spacing.
 */
inline WindowedLineCheck windowed_line_check(const Matrix& a, const Matrix& b, const HermitianOperator& hbar,
                                             double beta, std::optional<double> gamma = std::nullopt,
                                             double tol = 0.05) {
  const ThermalCorrelator corr(hbar, beta);
  const double gap = minimum_line_spacing(hbar);
  WindowedLineCheck out;
  out.tol = tol;
  if (gap == 0.0 && !gamma) return out;  // single line at zero frequency; nothing to resolve
  out.gamma = gamma.value_or(0.05 * gap);
  out.horizon = 20.0 / out.gamma;
  const auto& e = corr.eig().eigenvalues;
  const double omega_max = std::max(e.maxCoeff() - e.minCoeff(), 1e-12);
  out.sample_dt = std::min(0.02, std::numbers::pi / (16.0 * omega_max));
  const auto n = static_cast<std::size_t>(std::ceil(out.horizon / out.sample_dt)) + 1;
  const auto s = sample_correlations(corr, a, b, out.sample_dt, n);

  const auto plain = line_spectrum(a, b, hbar, beta, SpectrumKind::plain);
  const auto sym = line_spectrum(a, b, hbar, beta, SpectrumKind::sym);
  const auto anti = line_spectrum(a, b, hbar, beta, SpectrumKind::antisym);
  std::vector<double> omegas;
  for (const auto& l : plain.lines) omegas.push_back(-l.lambda);
  const double scale = std::numbers::pi * out.gamma;
  const auto wp = windowed_fourier_two_sided(s.plain_fwd, s.plain_bwd, s.dt, omegas, out.gamma);
  const auto ws = windowed_fourier_two_sided(s.sym_fwd, s.sym_bwd, s.dt, omegas, out.gamma);
  const auto wa = windowed_fourier_two_sided(s.anti_fwd, s.anti_bwd, s.dt, omegas, out.gamma);

  double wmax = 0.0, smax = 0.0;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    wmax = std::max({wmax, std::abs(plain.lines[i].weight), std::abs(sym.lines[i].weight),
                     std::abs(anti.lines[i].weight)});
    smax = std::max(smax, std::abs(sym.lines[i].weight));
  }
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    WindowedLineRow r;
    r.lambda = plain.lines[i].lambda;
    r.plain_exact = plain.lines[i].weight;
    r.sym_exact = sym.lines[i].weight;
    r.antisym_exact = anti.lines[i].weight;
    r.plain_windowed = scale * wp[i];
    r.sym_windowed = scale * ws[i];
    r.antisym_windowed = scale * wa[i];
    if (wmax > 0.0) {
      r.weight_error = std::max({std::abs(r.plain_windowed - r.plain_exact), std::abs(r.sym_windowed - r.sym_exact),
                                 std::abs(r.antisym_windowed - r.antisym_exact)}) /
                       wmax;
    }
    if (std::abs(r.lambda) > kLineMergeTol && std::abs(r.sym_exact) >= 0.1 * smax && smax > 0.0) {
      const Complex ratio = r.antisym_windowed / r.sym_windowed;
      const double expected = std::tanh(0.5 * beta * r.lambda);
      r.tanh_ratio_error = std::abs(ratio - expected) / std::abs(expected);
      out.max_tanh_error = std::max(out.max_tanh_error, *r.tanh_ratio_error);
    }
    out.max_weight_error = std::max(out.max_weight_error, r.weight_error);
    out.rows.push_back(r);
  }
  return out;
}

}  // namespace fdrlab
