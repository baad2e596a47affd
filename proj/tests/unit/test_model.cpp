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

#include "fdrlab/model.hpp"
#include "fdrlab/propagator.hpp"
#include "testing.hpp"

using namespace fdrlab;
using namespace fdrlab::testing;

namespace {

HermitianOperator H(const Matrix& m) { return HermitianOperator(m); }

ConfigurationEnsemble pm_ensemble(double lambda, const Matrix& q) {
  return ConfigurationEnsemble::finite(FiniteEnsemble{{WeightedPotential{0.5, PotentialTrajectory::coupling(lambda, H(q))},
                                                       WeightedPotential{0.5, PotentialTrajectory::coupling(-lambda, H(q))}}});
}

}  // namespace

TEST(Potential, CouplingWithZeroStrengthGivesBareHamiltonian) {
  const SystemSpec spec(H(diag({1.0, -1.0})), ConfigurationEnsemble::finite(FiniteEnsemble{
                                                  {WeightedPotential{1.0, PotentialTrajectory::coupling(0.0, H(sx()))}}}),
                        1.0);
  for (double t : {0.0, 0.7, 3.0}) EXPECT_EQ((hamiltonian_at(spec, 0, t).matrix() - diag({1.0, -1.0})).norm(), 0.0);
}

TEST(Potential, FiniteTwoPointConfigurationZero) {
  const SystemSpec spec(H(sz()), pm_ensemble(0.4, sx()), 1.0);
  for (double t : {0.0, 2.5}) EXPECT_LT((hamiltonian_at(spec, 0, t).matrix() - (sz() + 0.4 * sx())).norm(), 1e-15);
  EXPECT_LT((hamiltonian_at(spec, 1, 1.0).matrix() - (sz() - 0.4 * sx())).norm(), 1e-15);
  EXPECT_THROW(hamiltonian_at(spec, 2, 0.0), DomainError);
}

TEST(Potential, FourierAtZeroPhaseAndTime) {
  const FourierPotential p{H(0.3 * sz()), {FourierMode{0.8, 2.0, 0.0, H(sx())}, FourierMode{0.1, 5.0, 0.0, H(sy())}}};
  const PotentialTrajectory v(p);
  EXPECT_LT((v(0.0).matrix() - 0.3 * sz()).norm(), 1e-15);
  const double t = 0.4;
  const Matrix expected = 0.3 * sz() + 0.8 * std::sin(2.0 * t) * sx() + 0.1 * std::sin(5.0 * t) * sy();
  EXPECT_LT((v(t).matrix() - expected).norm(), 1e-15);
  EXPECT_EQ(v.kind(), "fourier");
}

TEST(Potential, PiecewiseConstantIsRightContinuous) {
  const PiecewiseConstantPotential p{H(Matrix::Zero(2, 2)), {1.0, 2.0}, {H(sx()), H(sy()), H(sz())}};
  const PotentialTrajectory v(p);
  EXPECT_LT((v(0.5).matrix() - sx()).norm(), 1e-15);
  EXPECT_LT((v(1.0).matrix() - sy()).norm(), 1e-15);
  EXPECT_LT((v(1.999).matrix() - sy()).norm(), 1e-15);
  EXPECT_LT((v(7.0).matrix() - sz()).norm(), 1e-15);
  EXPECT_EQ(v.breakpoints().size(), 2u);
}

TEST(Potential, PiecewiseConstantValidation) {
  const auto z = H(Matrix::Zero(2, 2));
  EXPECT_THROW(PotentialTrajectory(PiecewiseConstantPotential{z, {1.0}, {z}}), DomainError);
  EXPECT_THROW(PotentialTrajectory(PiecewiseConstantPotential{z, {2.0, 1.0}, {z, z, z}}), DomainError);
  EXPECT_THROW(PotentialTrajectory(PiecewiseConstantPotential{z, {1.0}, {z, H(identity(3))}}), DimensionError);
}

TEST(Ensemble, WeightValidation) {
  const auto v = PotentialTrajectory::coupling(1.0, H(sz()));
  EXPECT_THROW(ConfigurationEnsemble::finite(FiniteEnsemble{{WeightedPotential{0.6, v}, WeightedPotential{0.5, v}}}),
               DomainError);
  EXPECT_THROW(ConfigurationEnsemble::finite(FiniteEnsemble{{WeightedPotential{1.5, v}, WeightedPotential{-0.5, v}}}),
               DomainError);
  EXPECT_THROW(ConfigurationEnsemble::finite(FiniteEnsemble{}), DomainError);
  const auto w = PotentialTrajectory::coupling(1.0, H(identity(3)));
  EXPECT_THROW(ConfigurationEnsemble::finite(FiniteEnsemble{{WeightedPotential{0.5, v}, WeightedPotential{0.5, w}}}),
               DimensionError);
}

TEST(Ensemble, SystemRequiresPositiveBetaAndMatchingDimension) {
  EXPECT_THROW(SystemSpec(H(sz()), pm_ensemble(0.1, sx()), 0.0), DomainError);
  EXPECT_THROW(SystemSpec(H(sz()), pm_ensemble(0.1, sx()), -1.0), DomainError);
  EXPECT_THROW(SystemSpec(H(identity(3)), pm_ensemble(0.1, sx()), 1.0), DimensionError);
}

TEST(MeanHamiltonian, ZeroDeclaredMean) {
  const SystemSpec spec(H(diag({0.0, 1.0})), ConfigurationEnsemble::deterministic(H(Matrix::Zero(2, 2))), 1.0);
  EXPECT_EQ((mean_hamiltonian(spec).matrix() - diag({0.0, 1.0})).norm(), 0.0);
}

TEST(MeanHamiltonian, SymmetricTwoPointEnsembleCancels) {
  const SystemSpec spec(H(sz()), pm_ensemble(0.7, sx()), 1.0);
  EXPECT_LT((mean_hamiltonian(spec).matrix() - sz()).norm(), 1e-15);
}

TEST(MeanHamiltonian, CouplingFamilyUsesLawMean) {
  const SystemSpec normal(H(sx()), ConfigurationEnsemble::sampled({CouplingFamily{H(sz()), NormalLaw{0.3, 0.5}}, 1}), 1.0);
  EXPECT_LT((mean_hamiltonian(normal).matrix() - (sx() + 0.3 * sz())).norm(), 1e-15);
  const SystemSpec uniform(H(sx()), ConfigurationEnsemble::sampled({CouplingFamily{H(sz()), UniformLaw{-0.2, 0.8}}, 1}),
                           1.0);
  EXPECT_LT((mean_hamiltonian(uniform).matrix() - (sx() + 0.3 * sz())).norm(), 1e-15);
}

TEST(MeanConstancy, FiniteSymmetricEnsembleIsExact) {
  const SystemSpec spec(H(sz()), pm_ensemble(0.5, sx()), 1.0);
  const auto times = TimeGrid(0.1, 50).times();
  const auto r = check_mean_constancy(spec, times, 1, 1e-12);
  EXPECT_EQ(r.max_deviation, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(MeanConstancy, RandomPhaseFourierFamilyConverges) {
  // E[sin(nu t + phi)] = 0 for phi uniform on [0, 2 pi); check the oracle by quadrature first.
  const double nu = 1.7;
  for (double t : {0.0, 0.9, 4.2}) {
    double q = 0.0;
    const int n = 4096;
    for (int i = 0; i < n; ++i) q += std::sin(nu * t + 2.0 * std::numbers::pi * i / n) / n;
    EXPECT_LT(std::abs(q), 1e-14);
  }
  const FourierFamily fam{H(0.2 * sz()), {FourierModeSpec{0.6, nu, H(sx())}}};
  const SystemSpec spec(H(sz()), ConfigurationEnsemble::sampled({fam, 99}), 1.0);
  const auto times = TimeGrid(0.25, 20).times();
  const auto small = check_mean_constancy(spec, times, 100, 1e-3);
  const auto large = check_mean_constancy(spec, times, 10000, 1e-3);
  EXPECT_TRUE(large.pass);
  EXPECT_LT(large.max_deviation, small.max_deviation);
  EXPECT_LT(large.max_deviation, 1e-3 + 3.0 * large.max_standard_error);
  EXPECT_GT(large.max_standard_error, 0.0);
}

TEST(MeanConstancy, LinearDriftIsDetected) {
  const CustomPotential drift{2, [](double t) { return HermitianOperator(t * sz()); }};
  const auto ens = ConfigurationEnsemble::finite(FiniteEnsemble{{WeightedPotential{1.0, PotentialTrajectory(drift)}}},
                                                 H(Matrix::Zero(2, 2)));
  const SystemSpec spec(H(sx()), ens, 1.0);
  const TimeGrid grid(0.1, 20);
  const double bound = grid.horizon() * sz().norm();
  const auto r = check_mean_constancy(spec, grid.times(), 1, 0.99 * bound);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.max_deviation, bound, 1e-12);
  EXPECT_TRUE(check_mean_constancy(spec, grid.times(), 1, 1.01 * bound).pass);
}

TEST(Sampling, SameSeedSameTrajectories) {
  const SampledEnsemble s{FourierFamily{H(Matrix::Zero(2, 2)), {FourierModeSpec{1.0, 1.0, H(sx())}}}, 5};
  const auto ens = ConfigurationEnsemble::sampled(s);
  const auto a = sample_configurations(ens, 16, 1234);
  const auto b = sample_configurations(ens, 16, 1234);
  const auto c = sample_configurations(ens, 16, 4321);
  ASSERT_EQ(a.size(), 16u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (double t : {0.0, 0.3, 2.0}) EXPECT_EQ((a.items[i].potential(t).matrix() - b.items[i].potential(t).matrix()).norm(), 0.0);
  }
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
}

TEST(Sampling, DrawsDoNotDependOnCount) {
  const auto ens = ConfigurationEnsemble::sampled({CouplingFamily{H(sz()), NormalLaw{0.0, 1.0}}, 0});
  const auto few = sample_configurations(ens, 4, 77);
  const auto many = sample_configurations(ens, 40, 77);
  for (std::size_t i = 0; i < few.size(); ++i) {
    EXPECT_EQ(few.items[i].potential(0.0).matrix(), many.items[i].potential(0.0).matrix());
  }
}

TEST(Sampling, FiniteEnsembleEnumeratesItems) {
  const auto v = [](double l) { return PotentialTrajectory::coupling(l, HermitianOperator(sz())); };
  const auto ens = ConfigurationEnsemble::finite(
      FiniteEnsemble{{WeightedPotential{0.2, v(1.0)}, WeightedPotential{0.3, v(2.0)}, WeightedPotential{0.5, v(-1.0)}}});
  const auto set = sample_configurations(ens, 1000, 1);
  ASSERT_EQ(set.size(), 3u);
  EXPECT_TRUE(set.exact_weights);
  EXPECT_DOUBLE_EQ(set.items[1].weight, 0.3);
  EXPECT_LT((ens.declared_mean().matrix() - 0.3 * sz()).norm(), 1e-15);
}

TEST(Sampling, MonteCarloMeansAgreeWithDeclaredMean) {
  const auto ens = ConfigurationEnsemble::sampled({CouplingFamily{H(sz()), NormalLaw{0.2, 0.3}}, 0});
  for (std::uint64_t seed : {11u, 12u}) {
    const auto set = sample_configurations(ens, 4000, seed);
    double m = 0.0;
    double m2 = 0.0;
    for (const auto& c : set.items) {
      const double l = c.potential(0.0).matrix()(0, 0).real();
      m += l / 4000.0;
      m2 += l * l / 4000.0;
    }
    const double se = std::sqrt((m2 - m * m) / 4000.0);
    EXPECT_LT(std::abs(m - 0.2), 3.0 * se) << "seed " << seed;
  }
}

TEST(Sampling, PiecewiseFamilyBreakpoints) {
  const PiecewiseConstantFamily fam{H(Matrix::Zero(2, 2)), H(sx()), 0.5, 1.0, 4};
  const auto set = sample_configurations(ConfigurationEnsemble::sampled({fam, 3}), 2, 3);
  const auto bps = set.items[0].potential.breakpoints();
  ASSERT_EQ(bps.size(), 3u);
  EXPECT_DOUBLE_EQ(bps[0], 0.5);
  EXPECT_DOUBLE_EQ(bps[2], 1.5);
}
