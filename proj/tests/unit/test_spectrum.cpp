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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fdrlab/correlation.hpp"
#include "fdrlab/spectrum.hpp"
#include "testing.hpp"

using namespace fdrlab;
using namespace fdrlab::testing;

namespace {

HermitianOperator H(const Matrix& m) { return HermitianOperator(m); }

const double kRoot2Pi = std::sqrt(2.0 * std::numbers::pi);

// Sum of lines w exp(-i lambda t) / sqrt(2 pi).
Complex resum(const SpectralLineSeries& s, double t) {
  Complex c = 0.0;
  for (const auto& l : s.lines) c += l.weight * std::exp(Complex(0.0, -l.lambda * t)) / kRoot2Pi;
  return c;
}

}  // namespace

TEST(LineSpectrum, DiagonalOperatorsHaveOnlyZeroFrequency) {
  const auto s = line_spectrum(sz(), sz(), H(sz()), 1.0, SpectrumKind::plain);
  int nonzero = 0;
  for (const auto& l : s.lines) {
    if (std::abs(l.weight) > 1e-15) {
      ++nonzero;
      EXPECT_EQ(l.lambda, 0.0);
      EXPECT_NEAR(l.weight.real(), kRoot2Pi, 1e-14);
    }
  }
  EXPECT_EQ(nonzero, 1);
}

TEST(LineSpectrum, ResumsToTimeDomainCorrelations) {
  std::mt19937_64 rng(1);
  const Matrix h = random_hermitian(4, rng);
  const Matrix a = random_hermitian(4, rng);
  const Matrix b = random_hermitian(4, rng);
  const double beta = 0.9;
  const ThermalCorrelator corr(H(h), beta);
  const auto plain = line_spectrum(a, b, H(h), beta, SpectrumKind::plain);
  const auto sym = line_spectrum(a, b, H(h), beta, SpectrumKind::sym);
  const auto anti = line_spectrum(a, b, H(h), beta, SpectrumKind::antisym);
  const auto resp = line_spectrum(a, b, H(h), beta, SpectrumKind::response);
  for (double t : {0.0, 0.7, -1.9, 5.0}) {
    const Complex ab = corr(a, b, t);
    const Complex ba = corr(b, a, 0.0, t);
    EXPECT_LT(std::abs(resum(plain, t) - ab), 1e-12);
    EXPECT_LT(std::abs(resum(sym, t) - (ab + ba)), 1e-12);
    EXPECT_LT(std::abs(resum(anti, t) - (ab - ba)), 1e-12);
    EXPECT_LT(std::abs(resum(resp, t) - (ab - ba)), 1e-12);
  }
  ASSERT_EQ(plain.lines.size(), sym.lines.size());
  for (std::size_t i = 1; i < plain.lines.size(); ++i) EXPECT_LT(plain.lines[i - 1].lambda, plain.lines[i].lambda);
}

TEST(LineSpectrum, DegenerateFrequenciesAreMerged) {
  // Equally spaced levels: lambda = 1 occurs twice.
  const Matrix h = diag({0.0, 1.0, 2.0});
  Matrix a = Matrix::Ones(3, 3);
  const auto s = line_spectrum(a, a, H(h), 0.5, SpectrumKind::plain);
  EXPECT_EQ(s.lines.size(), 5u);
  const auto w = s.weight_at(1.0);
  ASSERT_TRUE(w.has_value());
  const Eigen::VectorXd p = boltzmann_weights(Eigen::Vector3d(0.0, 1.0, 2.0), 0.5);
  EXPECT_NEAR(w->real(), kRoot2Pi * (p(0) + p(1)), 1e-14);
}

TEST(LineSpectrum, MergeToleranceIsRespected) {
  const auto merged = detail::merge_lines({{1.0, 1.0}, {1.0 + 5e-10, 2.0}, {1.0 + 5e-9, 4.0}});
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0].weight, Complex(3.0));
  EXPECT_EQ(merged[1].weight, Complex(4.0));
}

TEST(LineIdentities, DetailedBalanceAndFdrPerLine) {
  std::mt19937_64 rng(2);
  for (int d = 2; d <= 5; ++d) {
    const Matrix h = random_hermitian(d, rng);
    const Matrix a = random_hermitian(d, rng);
    const Matrix b = random_hermitian(d, rng);
    for (double beta : {0.3, 1.0, 4.0}) {
      const auto table = line_identities(a, b, H(h), beta);
      EXPECT_TRUE(table.pass()) << "d=" << d << " beta=" << beta;
      for (const auto& r : table.rows) {
        EXPECT_LT(std::abs(r.antisym - (1.0 - std::exp(-beta * r.lambda)) * r.plain), 1e-10 * (1.0 + std::abs(r.plain)));
        if (!r.zero_frequency) {
          EXPECT_LT(std::abs(r.response - std::tanh(0.5 * beta * r.lambda) * r.sym), 1e-10 * (1.0 + std::abs(r.sym)));
        }
      }
    }
  }
}

TEST(LineIdentities, RatioColumns) {
  const auto table = line_identities(sy(), sx(), H(sz()), 1.0);
  int checked = 0;
  for (const auto& r : table.rows) {
    if (std::isnan(r.ratio_antisym_plain)) continue;
    EXPECT_NEAR(r.ratio_antisym_plain, 1.0 - std::exp(-r.lambda), 1e-10);
    if (!r.zero_frequency && !std::isnan(r.ratio_response_sym)) {
      EXPECT_NEAR(r.ratio_response_sym, std::tanh(0.5 * r.lambda), 1e-10);
    }
    ++checked;
  }
  EXPECT_EQ(checked, 2);
}

TEST(WindowedFourier, ZeroSignal) {
  const std::vector<Complex> zero(100, Complex(0.0, 0.0));
  for (const auto& v : windowed_fourier(zero, 0.1, {-1.0, 0.0, 2.0}, 0.3)) EXPECT_EQ(v, Complex(0.0, 0.0));
  EXPECT_THROW(windowed_fourier(zero, 0.0, {0.0}, 0.3), DomainError);
  EXPECT_THROW(windowed_fourier(zero, 0.1, {0.0}, -1.0), DomainError);
}

TEST(WindowedFourier, ExponentialGivesLorentzian) {
  const double gamma = 0.1;
  const double lambda0 = 1.3;
  const double horizon = 20.0 / gamma;
  const double dt = 0.01;
  const auto n = static_cast<std::size_t>(horizon / dt) + 1;
  std::vector<Complex> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = std::exp(Complex(0.0, lambda0 * static_cast<double>(k) * dt));
  const std::vector<double> omegas{lambda0 - 0.5, lambda0 - 0.05, lambda0, lambda0 + 0.2, -2.0};
  const auto f = windowed_fourier(g, dt, omegas, gamma);
  for (std::size_t m = 0; m < omegas.size(); ++m) {
    const Complex expected = (1.0 / kRoot2Pi) / Complex(gamma, omegas[m] - lambda0);
    EXPECT_LT(std::abs(f[m] - expected), 0.02 * std::abs(expected)) << omegas[m];
  }
}

TEST(WindowedFourier, TwoSidedIsTwiceTheRealPartForHermitianSignals) {
  // For g(-t) = conj g(t) the two-sided transform is real: 2 Re of the one-sided one.
  std::vector<Complex> fwd, bwd;
  for (int k = 0; k < 400; ++k) {
    const double t = 0.05 * k;
    fwd.push_back(std::exp(Complex(0.0, 0.8 * t)) + 0.5 * std::exp(Complex(0.0, -2.0 * t)));
    bwd.push_back(std::conj(fwd.back()));
  }
  const std::vector<double> omegas{-0.8, 0.0, 2.0};
  const auto two = windowed_fourier_two_sided(fwd, bwd, 0.05, omegas, 0.2);
  const auto one = windowed_fourier(fwd, 0.05, omegas, 0.2);
  for (std::size_t m = 0; m < omegas.size(); ++m) {
    EXPECT_LT(std::abs(two[m].imag()), 1e-12);
    EXPECT_NEAR(two[m].real(), 2.0 * one[m].real(), 1e-12);
  }
}

TEST(WindowedLineCheck, RecoversLineWeightsAndTanhRatio) {
  const auto check = windowed_line_check(sy(), sx(), H(sz()), 1.0);
  EXPECT_NEAR(check.gamma, 0.1, 1e-12);
  EXPECT_NEAR(check.horizon, 200.0, 1e-9);
  EXPECT_TRUE(check.pass());
  EXPECT_LE(check.max_tanh_error, 0.05);
  std::mt19937_64 rng(3);
  const Matrix h = random_hermitian(3, rng);
  const auto c3 = windowed_line_check(random_hermitian(3, rng), random_hermitian(3, rng), H(h), 0.7);
  EXPECT_TRUE(c3.pass()) << c3.max_weight_error << " " << c3.max_tanh_error;
  EXPECT_NEAR(minimum_level_gap(H(diag({0.0, 0.0, 1.5, 2.0}))), 0.5, 1e-14);
}

TEST(WindowedLineCheck, ResolvesNearlyCoincidentBohrFrequencies) {
  // Levels 0, 1, 2.05: the lines at 1 and 1.05 are much closer than any level gap.
  const HermitianOperator h = H(diag({0.0, 1.0, 2.05}));
  EXPECT_NEAR(minimum_level_gap(h), 1.0, 1e-14);
  EXPECT_NEAR(minimum_line_spacing(h), 0.05, 1e-12);
  EXPECT_NEAR(minimum_line_spacing(H(diag({0.0, 1.0}))), 1.0, 1e-14);
  EXPECT_EQ(minimum_line_spacing(H(diag({2.0, 2.0}))), 0.0);
  std::mt19937_64 rng(5);
  const auto check = windowed_line_check(random_hermitian(3, rng), random_hermitian(3, rng), h, 1.2);
  EXPECT_NEAR(check.gamma, 0.05 * 0.05, 1e-12);
  EXPECT_TRUE(check.pass()) << check.max_weight_error << " " << check.max_tanh_error;
}
