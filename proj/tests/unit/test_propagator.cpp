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
#include "fdrlab/propagator.hpp"
#include "testing.hpp"

using namespace fdrlab;
using namespace fdrlab::testing;

namespace {

HermitianOperator H(const Matrix& m) { return HermitianOperator(m); }

}  // namespace

TEST(TimeGrid, PointsAndSnapping) {
  const TimeGrid g(0.1, 10);
  EXPECT_EQ(g.size(), 11u);
  EXPECT_DOUBLE_EQ(g.horizon(), 1.0);
  EXPECT_EQ(g.snap(0.5), 5u);
  EXPECT_EQ(g.snap(0.52), 5u);
  EXPECT_TRUE(g.on_grid(0.3));
  EXPECT_FALSE(g.on_grid(0.35));
  EXPECT_THROW(g.snap(1.2), DomainError);
  EXPECT_THROW(TimeGrid(0.0, 10), DomainError);
  EXPECT_THROW(TimeGrid(0.1, 0), DomainError);
}

TEST(EvolveUnitary, ZeroHamiltonianIsIdentity) {
  const auto traj = evolve_unitary([](double) { return HermitianOperator::zero(3); }, TimeGrid(0.1, 20));
  for (const auto& u : traj.unitaries) EXPECT_EQ((u - identity(3)).norm(), 0.0);
}

TEST(EvolveUnitary, ConstantHamiltonianMatchesExponential) {
  std::mt19937_64 rng(1);
  const auto h = H(random_hermitian(4, rng));
  const TimeGrid grid(0.01, 200);
  const auto traj = evolve_unitary([&](double) { return h; }, grid);
  for (std::size_t k = 0; k < grid.size(); k += 20) {
    EXPECT_LT((traj.at(k) - expm_hermitian(h, Complex(0.0, -grid.time(k)))).norm(), 1e-12) << k;
  }
  EXPECT_LE(unitarity_drift(traj), 1e-9 * static_cast<double>(grid.n_steps));
}

TEST(EvolveUnitary, CommutingFamilyFollowsIntegral) {
  auto f = [](double t) { return 1.0 + 0.5 * std::cos(3.0 * t); };
  auto integral = [](double t) { return t + std::sin(3.0 * t) / 6.0; };
  auto error_at = [&](double dt) {
    const TimeGrid grid(dt, static_cast<std::size_t>(std::lround(2.0 / dt)));
    const auto traj = evolve_unitary([&](double t) { return HermitianOperator(f(t) * sz()); }, grid);
    double midpoint = 0.0;
    double worst = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
      midpoint += dt * f(grid.time(k - 1) + 0.5 * dt);
      // Exact product of commuting steps equals the midpoint quadrature.
      EXPECT_LT((traj.at(k) - expm_hermitian(H(sz()), Complex(0.0, -midpoint))).norm(), 1e-12);
      worst = std::max(worst, (traj.at(k) - expm_hermitian(H(sz()), Complex(0.0, -integral(grid.time(k))))).norm());
    }
    return worst;
  };
  const double coarse = error_at(0.02);
  const double fine = error_at(0.01);
  EXPECT_NEAR(coarse / fine, 4.0, 0.2);
}

TEST(EvolveState, StationaryPurityAndPrecession) {
  const auto h = H(sz());
  const TimeGrid grid(0.01, 300);
  const auto traj = evolve_unitary([&](double) { return h; }, grid);

  const auto still = evolve_state(gibbs_state(h, 0.8), traj);
  for (const auto& r : still) EXPECT_LT((r - still.front()).norm(), 1e-14);

  Eigen::VectorXcd plus(2);
  plus << 1.0, 1.0;
  const auto rho = evolve_state(DensityMatrix::pure(plus), traj);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_NEAR((rho[k] * rho[k]).trace().real(), 1.0, 1e-10);
    const Complex expected = 0.5 * std::exp(Complex(0.0, -2.0 * grid.time(k)));
    EXPECT_LT(std::abs(rho[k](0, 1) - expected), 1e-12);
  }
}

TEST(EvolveObservable, SchrodingerHeisenbergEquivalence) {
  std::mt19937_64 rng(2);
  const Matrix q = random_hermitian(3, rng);
  const Matrix h0 = random_hermitian(3, rng);
  const TimeGrid grid(0.02, 100);
  const auto traj =
      evolve_unitary([&](double t) { return HermitianOperator(h0 + std::sin(2.0 * t) * q); }, grid);
  const Matrix rho0 = random_density(3, rng);
  const Matrix a = random_hermitian(3, rng);
  const auto states = evolve_state(rho0, traj);
  const auto obs = evolve_observable(a, traj);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_LT(std::abs((states[k] * a).trace() - (rho0 * obs[k]).trace()), 1e-10);
  }
  for (const auto& x : evolve_observable(identity(3), traj)) EXPECT_LT((x - identity(3)).norm(), 1e-12);
}

TEST(EvolveObservable, GeneratorIsConserved) {
  std::mt19937_64 rng(3);
  const auto h = H(random_hermitian(4, rng));
  const auto traj = evolve_unitary([&](double) { return h; }, TimeGrid(0.05, 100));
  for (const auto& x : evolve_observable(h, traj)) EXPECT_LT((x - h.matrix()).norm(), 1e-12);
}

TEST(EvolveConfiguration, RejectsMisalignedBreakpoints) {
  const auto z = H(Matrix::Zero(2, 2));
  const PotentialTrajectory v(PiecewiseConstantPotential{z, {0.25}, {H(sx()), H(sz())}});
  const SystemSpec spec(H(sz()), ConfigurationEnsemble::finite(FiniteEnsemble{{WeightedPotential{1.0, v}}}, z), 1.0);
  const Configuration c{0, 1.0, v};
  EXPECT_THROW(evolve_configuration(spec, c, TimeGrid(0.1, 10)), DomainError);
  EXPECT_NO_THROW(evolve_configuration(spec, c, TimeGrid(0.05, 10)));
}

TEST(EvolveUnitary, StepGuardReportsCoarseSteps) {
  const auto big = H(50.0 * sz());
  EXPECT_TRUE(evolve_unitary([&](double) { return big; }, TimeGrid(0.1, 2)).step_guard_exceeded());
  EXPECT_FALSE(evolve_unitary([&](double) { return big; }, TimeGrid(0.01, 2)).step_guard_exceeded());
}
