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

#include "fdrlab/equilibrium.hpp"
#include "fdrlab/mean_dynamics.hpp"
#include "testing.hpp"

using namespace fdrlab;
using namespace fdrlab::testing;

namespace {

HermitianOperator H(const Matrix& m) { return HermitianOperator(m); }

ConfigurationEnsemble pm(double lambda, const Matrix& q) {
  return ConfigurationEnsemble::finite(FiniteEnsemble{{WeightedPotential{0.5, PotentialTrajectory::coupling(lambda, H(q))},
                                                       WeightedPotential{0.5, PotentialTrajectory::coupling(-lambda, H(q))}}});
}

EnsemblePropagation propagate(const SystemSpec& spec, const TimeGrid& grid, PropagationOptions opt = {}) {
  return EnsemblePropagation(spec, sample_configurations(spec.ensemble(), 1, 0), grid, opt);
}

Matrix plus_state() {
  Eigen::VectorXcd v(2);
  v << 1.0, 1.0;
  return DensityMatrix::pure(v).matrix();
}

Matrix up_state() { return diag({1.0, 0.0}); }

double binary_entropy(double c) {
  double s = 0.0;
  for (double p : {0.5 * (1 + c), 0.5 * (1 - c)})
    if (p > 0) s -= p * std::log(p);
  return s;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST(MeanState, SingleConfigurationEqualsUnitaryEvolution) {
  std::mt19937_64 rng(1);
  const Matrix v = random_hermitian(3, rng);
  const SystemSpec spec(H(random_hermitian(3, rng)), ConfigurationEnsemble::deterministic(H(v)), 1.0);
  const TimeGrid grid(0.01, 100);
  const Matrix rho0 = random_density(3, rng);
  const auto mean = mean_state(propagate(spec, grid), rho0);
  const auto direct = evolve_state(rho0, evolve_unitary([&](double) { return mean_hamiltonian(spec); }, grid));
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_LT((mean.states[k] - direct[k]).norm(), 1e-13);
}

TEST(MeanState, TwoPrecessionsDephase) {
  const double lambda = 0.3;
  const SystemSpec spec(H(sz()), pm(lambda, sz()), 1.0);
  const TimeGrid grid(0.01, 500);
  const auto mean = mean_state(propagate(spec, grid), plus_state());
  for (std::size_t k = 0; k < grid.size(); k += 25) {
    const double t = grid.time(k);
    const Complex expected = 0.5 * std::exp(Complex(0.0, -2.0 * t)) * std::cos(2.0 * lambda * t);
    EXPECT_LT(std::abs(mean.states[k](0, 1) - expected), 1e-12) << t;
    EXPECT_NEAR(mean.states[k].trace().real(), 1.0, 1e-12);
    EXPECT_LT((mean.states[k] - mean.states[k].adjoint()).norm(), 1e-12);
  }
}

TEST(MeanState, AdjustedEquilibriumIsStationaryForDeterministicPotential) {
  std::mt19937_64 rng(2);
  const auto vbar = H(random_hermitian(3, rng));
  const auto h0 = H(random_hermitian(3, rng));
  const SystemSpec spec(h0, ConfigurationEnsemble::deterministic(vbar), 0.9);
  const auto sigma = adjusted_equilibrium(h0, vbar, 0.9);
  const auto mean = mean_state(spec, sigma, TimeGrid(0.02, 200), 1, 0);
  for (const auto& r : mean.states) EXPECT_LT((r - sigma.matrix()).norm(), 1e-12);
}

TEST(MeanState, DeterministicAcrossThreadsAndRetention) {
  const SystemSpec spec(H(sz()), ConfigurationEnsemble::sampled({CouplingFamily{H(sx()), NormalLaw{0.0, 0.4}}, 3}), 1.0);
  const TimeGrid grid(0.02, 50);
  const auto set = sample_configurations(spec.ensemble(), 37, 3);
  const auto a = mean_state(EnsemblePropagation(spec, set, grid, {1, std::nullopt}), up_state());
  const auto b = mean_state(EnsemblePropagation(spec, set, grid, {4, false}), up_state());
  const auto c = mean_state(EnsemblePropagation(spec, set, grid, {3, true}), up_state());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_EQ(a.states[k], b.states[k]);
    EXPECT_EQ(a.states[k], c.states[k]);
  }
  EXPECT_GT(a.standard_error.back(), 0.0);
}

TEST(Deviation, VanishesForDeterministicEnsemble) {
  std::mt19937_64 rng(3);
  const SystemSpec spec(H(random_hermitian(3, rng)), ConfigurationEnsemble::deterministic(H(random_hermitian(3, rng))),
                        1.0);
  const auto dev = deviation_term(propagate(spec, TimeGrid(0.05, 40)), random_density(3, rng));
  for (const auto& c : dev.values) EXPECT_LT(c.norm(), 1e-14);
}

TEST(Deviation, VanishesWhenFluctuationCommutes) {
  const SystemSpec spec(H(diag({0.5, -0.5})), pm(0.4, sz()), 1.0);
  const auto dev = deviation_term(propagate(spec, TimeGrid(0.05, 40)), diag({0.7, 0.3}));
  for (const auto& c : dev.values) EXPECT_LT(c.norm(), 1e-15);
}

TEST(Deviation, MatchesTwoConfigurationEnumeration) {
  const double lambda = 0.25;
  const double beta = 1.0;
  const SystemSpec spec(H(sz()), pm(lambda, sx()), beta);
  const TimeGrid grid(0.01, 50);
  const Matrix x = gibbs_state(H(sz()), beta).matrix();
  const auto dev = deviation_term(propagate(spec, grid), x);
  bool nonzero = false;
  for (std::size_t k = 0; k < grid.size(); k += 5) {
    Matrix expected = Matrix::Zero(2, 2);
    for (double s : {1.0, -1.0}) {
      const Matrix h = sz() + s * lambda * sx();
      const Matrix u = taylor_expm(-I1 * grid.time(k) * h);
      const Matrix xt = u * x * u.adjoint();
      const Matrix dh = s * lambda * sx();
      expected += 0.5 * (dh * xt - xt * dh);
    }
    EXPECT_LT((dev.values[k] - expected).norm(), 1e-12) << k;
    nonzero = nonzero || expected.norm() > 1e-3;
    // Anti-Hermitian for Hermitian X.
    EXPECT_LT((dev.values[k] + dev.values[k].adjoint()).norm(), 1e-10);
  }
  EXPECT_TRUE(nonzero);
}

TEST(Eta, ZeroForZeroDeviationAndAtOrigin) {
  const SystemSpec det(H(sz()), ConfigurationEnsemble::deterministic(H(0.2 * sx())), 1.0);
  for (const auto& e : eta(deviation_term(propagate(det, TimeGrid(0.05, 20)), up_state()))) EXPECT_LT(e.norm(), 1e-15);
  const SystemSpec spec(H(sz()), pm(0.5, sx()), 1.0);
  const auto e = eta(deviation_term(propagate(spec, TimeGrid(0.05, 20)), plus_state()));
  EXPECT_EQ(e.front().norm(), 0.0);
  EXPECT_GT(e.back().norm(), 1e-3);
}

TEST(Eta, DecomposesMeanStateToSecondOrder) {
  const SystemSpec spec(H(sz()), pm(0.5, sx()), 1.0);
  auto worst = [&](double dt) {
    const auto prop = propagate(spec, TimeGrid(dt, static_cast<std::size_t>(std::lround(2.0 / dt))));
    const auto mean = mean_state(prop, up_state());
    const auto dev = deviation_term(prop, up_state());
    return max_of(eta_decomposition_error(mean, dev, up_state()));
  };
  const double e1 = worst(0.02);
  const double e2 = worst(0.01);
  EXPECT_LT(e2, 1e-4);
  EXPECT_NEAR(e1 / e2, 4.0, 0.3);
}

TEST(Residual, SecondOrderForDeterministicAndFiniteEnsembles) {
  std::mt19937_64 rng(4);
  const Matrix rho0 = random_density(3, rng);
  const SystemSpec det(H(random_hermitian(3, rng)), ConfigurationEnsemble::deterministic(H(random_hermitian(3, rng))),
                       1.0);
  const SystemSpec two(H(sz()), pm(0.5, sx()), 1.0);
  auto worst = [](const SystemSpec& spec, const Matrix& r0, double dt) {
    const auto prop = propagate(spec, TimeGrid(dt, static_cast<std::size_t>(std::lround(1.0 / dt))));
    return max_of(mean_dynamics_residual(mean_state(prop, r0), deviation_term(prop, r0)));
  };
  const double d1 = worst(det, rho0, 0.02);
  const double d2 = worst(det, rho0, 0.01);
  EXPECT_NEAR(d1 / d2, 4.0, 0.3);
  const double f1 = worst(two, up_state(), 0.02);
  const double f2 = worst(two, up_state(), 0.01);
  EXPECT_NEAR(f1 / f2, 4.0, 0.3);
  EXPECT_LT(f2, 1e-3);
}

TEST(Residual, StaticProblemIsExact) {
  const SystemSpec spec(H(Matrix::Zero(2, 2)), ConfigurationEnsemble::deterministic(H(Matrix::Zero(2, 2))), 1.0);
  const auto prop = propagate(spec, TimeGrid(0.1, 30));
  const auto r = mean_dynamics_residual(mean_state(prop, plus_state()), deviation_term(prop, plus_state()));
  EXPECT_EQ(r.size(), 29u);
  EXPECT_LE(max_of(r), 1e-12);
}

TEST(Residual, RejectsUnpairedInputs) {
  const SystemSpec spec(H(sz()), ConfigurationEnsemble::sampled({CouplingFamily{H(sx()), NormalLaw{0.0, 0.4}}, 3}), 1.0);
  const TimeGrid grid(0.05, 20);
  const EnsemblePropagation a(spec, sample_configurations(spec.ensemble(), 8, 1), grid);
  const EnsemblePropagation b(spec, sample_configurations(spec.ensemble(), 8, 2), grid);
  EXPECT_THROW(mean_dynamics_residual(mean_state(a, up_state()), deviation_term(b, up_state())), DomainError);
  EXPECT_THROW(require_paired(a, deviation_term(b, up_state())), DomainError);
}

TEST(EntropyMargin, SingleConfigurationAndMaximallyMixed) {
  std::mt19937_64 rng(5);
  const SystemSpec det(H(random_hermitian(3, rng)), ConfigurationEnsemble::deterministic(H(random_hermitian(3, rng))),
                       1.0);
  for (double m : entropy_margin(mean_state(propagate(det, TimeGrid(0.05, 40)), random_density(3, rng))))
    EXPECT_LT(std::abs(m), 1e-10);
  const SystemSpec two(H(sz()), pm(0.5, sx()), 1.0);
  for (double m : entropy_margin(mean_state(propagate(two, TimeGrid(0.05, 40)), identity(2) / 2.0)))
    EXPECT_LT(std::abs(m), 1e-12);
}

TEST(EntropyMargin, DephasingPairMatchesClosedForm) {
  // H = +-lambda sigma_x from |0>: the average Bloch vector is (0, 0, cos 2 lambda t).
  const double lambda = 0.6;
  const SystemSpec spec(H(Matrix::Zero(2, 2)), pm(lambda, sx()), 1.0);
  const TimeGrid grid(0.01, 300);
  const auto m = entropy_margin(mean_state(propagate(spec, grid), up_state()));
  for (std::size_t k = 0; k < grid.size(); k += 10) {
    const double c = std::cos(2.0 * lambda * grid.time(k));
    EXPECT_NEAR(m[k], binary_entropy(c), 1e-10) << k;
    if (std::abs(std::abs(c) - 1.0) > 1e-3) {
      EXPECT_GT(m[k], 0.0);
    }
  }
}

TEST(BathEntropyProduction, Values) {
  const auto hbar = H(sz());
  const auto b = H(sx());
  EXPECT_EQ(bath_entropy_production(plus_state(), hbar, H(sz()), 0.3, 1.0), 0.0);
  EXPECT_EQ(bath_entropy_production(up_state(), hbar, b, 0.0, 1.0), 0.0);
  EXPECT_NEAR(bath_entropy_production(plus_state(), hbar, b, 0.1, 1.0), 0.0, 1e-16);
  // (1, e^{i pi/4})/sqrt 2 has <sigma_y> = sin(pi/4); Tr(rho [sz, sx]) = 2i <sigma_y>.
  Eigen::VectorXcd psi(2);
  psi << 1.0, std::exp(Complex(0.0, std::acos(-1.0) / 4));
  const Matrix rho = DensityMatrix::pure(psi).matrix();
  const double expected = 2.0 * 0.1 * 1.0 * std::sin(std::acos(-1.0) / 4);
  EXPECT_NEAR(bath_entropy_production(rho, hbar, b, 0.1, 1.0), expected, 1e-15);
}

TEST(Dissipativity, IdentityHoldsForRandomPairs) {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const int d = 2 + n % 7;
    worst = std::max(worst, dissipativity_identity_check(random_density(d, rng), random_hermitian(d, rng)));
  }
  EXPECT_LE(worst, 1e-12);
  EXPECT_EQ(dissipativity_identity_check(random_density(3, rng), Matrix::Zero(3, 3)), 0.0);
}
