#include "oracles.hpp"

#include "qmem/master_equation.hpp"
#include "qmem/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace qmem {
namespace {

DensityMatrix plus_state() { return DensityMatrix::pure(ComplexVector::Ones(2)); }

TEST(LindbladRhs, DephasingDampsCoherenceOnly) {
  const double rate = 0.7;
  const ComplexMatrix d = lindblad_rhs(plus_state(), qubit_dephasing(rate));
  EXPECT_NEAR(std::abs(d(0, 1) - Complex(-2.0 * rate * 0.5, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d(0, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d(1, 1)), 0.0, 1e-15);
}

TEST(LindbladRhs, PureHamiltonianIsCommutator) {
  ComplexMatrix h(2, 2);
  h << 1.0, 0.0, 0.0, -1.0;
  const ComplexMatrix d = lindblad_rhs(plus_state(), {h, {}});
  // d rho_01 / dt = -i (h00 - h11) rho_01
  EXPECT_LT(std::abs(d(0, 1) - (-kI * 2.0 * 0.5)), 1e-15);
}

TEST(LindbladRhs, TracelessHermitianAndMatchesSuperoperator) {
  Rng rng(10);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Index d = 2 + k % 3;
    const auto gen = random_lindblad_generator(d, 3, rng);
    const auto rho = random_state(d, rng);
    const ComplexMatrix r = lindblad_rhs(rho, gen);
    EXPECT_LT(std::abs(r.trace()), 1e-13);
    EXPECT_LT(hermiticity_error(r), 1e-13);
    EXPECT_LT(max_abs(lindblad_superoperator(gen).apply(rho.matrix()) - r), 1e-13);
  }
}

TEST(LindbladRhs, DimensionMismatchThrows) {
  EXPECT_THROW(lindblad_rhs(DensityMatrix::maximally_mixed(3), qubit_dephasing(1.0)), DimensionError);
}

TEST(LindbladGenerator, ValidationRejectsBadInputs) {
  auto gen = qubit_dephasing(1.0);
  gen.channels.front().rate = -0.1;
  EXPECT_THROW(gen.validate(), std::invalid_argument);
  gen = qubit_dephasing(1.0);
  gen.channels.front().op = ComplexMatrix::Identity(3, 3);
  EXPECT_THROW(gen.validate(), DimensionError);
  gen = qubit_dephasing(1.0);
  gen.hamiltonian(0, 1) = 1.0;
  EXPECT_THROW(gen.validate(), std::invalid_argument);
}

TEST(RandomGenerator, DeterministicWithUnitNormChannels) {
  Rng a(55), b(55);
  const auto g1 = random_lindblad_generator(3, 2, a, 0.5);
  const auto g2 = random_lindblad_generator(3, 2, b, 0.5);
  EXPECT_EQ(g1.hamiltonian, g2.hamiltonian);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(g1.channels[k].op, g2.channels[k].op);
    EXPECT_NEAR(g1.channels[k].op.norm(), 1.0, 1e-14);
    EXPECT_LT(g1.channels[k].rate, 0.5);
  }
}

TEST(Propagator, DephasingCoherenceDecaysAsExpMinusTwoGammaT) {
  const double rate = 0.35;
  const std::vector<double> times{0.0, 0.5, 1.0, 3.0};
  const auto states = integrate_lindblad(plus_state(), qubit_dephasing(rate), times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_NEAR(std::abs(states[k](0, 1)), 0.5 * std::exp(-2.0 * rate * times[k]), 1e-14);
    EXPECT_NEAR(states[k](0, 0).real(), 0.5, 1e-14);
  }
}

TEST(Propagator, SemigroupTracePreservingAndCp) {
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index d = 2 + k % 3;
    const auto gen = lindblad_superoperator(random_lindblad_generator(d, 2, rng));
    for (double t : {0.1, 0.8, 2.5}) {
      const ComplexMatrix phi = propagator(gen, t);
      EXPECT_LT(trace_preservation_error(phi), 1e-10);
      EXPECT_GE(min_choi_eigenvalue(phi), -1e-10);
    }
    EXPECT_LT(max_abs(propagator(gen, 1.3) - propagator(gen, 0.5) * propagator(gen, 0.8)), 1e-10);
  }
}

TEST(Propagator, IntegrateValidatesInputs) {
  const std::vector<double> unsorted{1.0, 0.0};
  const std::vector<double> ok{0.0};
  EXPECT_THROW(integrate_lindblad(plus_state(), qubit_dephasing(1.0), unsorted), std::invalid_argument);
  EXPECT_THROW(integrate_lindblad(DensityMatrix::maximally_mixed(3), qubit_dephasing(1.0), ok), DimensionError);
}

TEST(DecoherenceKernel, QuadratureMatchesClosedForm) {
  const grw::PositionGrid grid(-8.0, 8.0, 32);
  for (const grw::GrwParams p : {grw::GrwParams{1.0, 1.0}, grw::GrwParams{0.3, 0.5}, grw::GrwParams{2.0, 2.0}}) {
    const auto k = quadrature_kernel(grid, p);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double expected = oracle::decoherence_rate(grid.point(i), grid.point(j), p.lambda, p.r_c);
        ASSERT_NEAR(k.gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), expected, 1e-9);
      }
    }
  }
}

TEST(DecoherenceKernel, KnownRateAtTwoLocalizationLengths) {
  EXPECT_NEAR(grw_decoherence_rate(2.0, {1.0, 1.0}), 0.6321205588285577, 1e-15);
  EXPECT_NEAR(std::exp(-grw_decoherence_rate(2.0, {1.0, 1.0})), 0.5314636053866156, 1e-15);
  EXPECT_NEAR(grw_decoherence_rate(0.0, {1.0, 1.0}), 0.0, 0.0);
  EXPECT_NEAR(grw_decoherence_rate(1e3, {3.0, 1.0}), 3.0, 1e-15);
}

TEST(GrwGenerator, MatchesDenseSandwichConstruction) {
  const grw::PositionGrid grid(-4.0, 4.0, 12);
  const grw::GrwParams p{1.3, 0.9};
  EXPECT_LT(max_abs(grw_generator(grid, p).matrix - oracle::dense_grw_superoperator(grid, p)), 1e-12);
}

TEST(GrwGenerator, CovariantFormAgrees) {
  const grw::PositionGrid grid(-8.0, 8.0, 32);
  for (const grw::GrwParams p : {grw::GrwParams{1.0, 1.0}, grw::GrwParams{0.5, 0.6}}) {
    const auto a = grw_generator(grid, p);
    const auto b = covariant_generator(grid, p);
    EXPECT_LT(max_abs(a.matrix - b.matrix), 1e-8);
  }
}

TEST(GrwGenerator, CovariantMatchesDenseSandwichConstruction) {
  const grw::PositionGrid grid(-3.0, 3.0, 10);
  const grw::GrwParams p{1.0, 1.0};
  const auto q = default_momentum_grid(grid, p.r_c);
  EXPECT_LT(max_abs(covariant_generator(grid, p, q).matrix - oracle::dense_covariant_superoperator(grid, p, q)), 1e-12);
}

TEST(GrwGenerator, KickWeightIsNormalized) {
  const grw::PositionGrid grid(-8.0, 8.0, 32);
  for (double r_c : {0.4, 1.0, 3.0}) EXPECT_NEAR(momentum_grid_normalization(default_momentum_grid(grid, r_c), r_c), 1.0, 1e-12);
}

TEST(GrwGenerator, RejectsUnderResolvedOrAsymmetricMomentumGrid) {
  const grw::PositionGrid grid(-8.0, 8.0, 16);
  MomentumGrid coarse{{-1.0, 0.0, 1.0}, 1.0};
  EXPECT_THROW(covariant_generator(grid, {1.0, 1.0}, coarse), NumericalError);
  MomentumGrid skew{{-1.0, 0.0, 2.0}, 1.0};
  EXPECT_THROW(covariant_generator(grid, {1.0, 1.0}, skew), std::invalid_argument);
}

TEST(GrwGenerator, GridSizeLimit) {
  EXPECT_THROW(grw_generator(grw::PositionGrid(-8.0, 8.0, 65), {1.0, 1.0}), std::invalid_argument);
}

TEST(GrwGenerator, IntegrationMatchesAnalyticSolution) {
  const grw::PositionGrid grid(-8.0, 8.0, 32);
  const grw::GrwParams p{1.0, 1.0};
  const double centers[2] = {-2.0, 2.0};
  const DensityMatrix rho0 = grid_density_matrix(grw::gaussian_superposition(grid, centers, 0.5));
  const std::vector<double> times{0.5, 1.0, 2.0};
  const auto states = integrate_lindblad(rho0, grw_generator(grid, p), times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto exact = analytic_decoherence_solution(rho0, grid, times[k], p);
    EXPECT_LT(max_abs(states[k].matrix() - exact.matrix()), 1e-9);
    EXPECT_NEAR(states[k].matrix().trace().real(), 1.0, 1e-12);
  }
}

TEST(GrwGenerator, PropagatorIsCompletelyPositive) {
  const grw::PositionGrid grid(-4.0, 4.0, 8);
  const auto gen = grw_generator(grid, {1.0, 0.7});
  for (double t : {0.2, 1.0, 5.0}) EXPECT_GE(min_choi_eigenvalue(propagator(gen, t)), -1e-10);
}

TEST(TimeDependent, ConstantGeneratorMatchesExponential) {
  Rng rng(90);
  const auto gen = lindblad_superoperator(random_lindblad_generator(3, 2, rng));
  const auto rho0 = random_state(3, rng);
  const std::vector<double> times{0.0, 0.3, 1.2};
  const auto rk = integrate_time_dependent(rho0, [&](double) { return gen.matrix; }, times, 1e-11);
  const auto ex = integrate_lindblad(rho0, gen, times);
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_LT(max_abs(rk[k].matrix() - ex[k].matrix()), 1e-9);
}

TEST(TimeDependent, OscillatingDephasingRate) {
  // rate cos(t) gives coherence 0.5 exp(-2 sin t), non-monotone in t
  const auto l1 = lindblad_superoperator(qubit_dephasing(1.0)).matrix;
  const std::vector<double> times{0.5, 1.5, 2.5, 3.0};
  const auto states = integrate_time_dependent(plus_state(), [&](double t) { return ComplexMatrix(std::cos(t) * l1); }, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_NEAR(std::abs(states[k](0, 1)), 0.5 * std::exp(-2.0 * std::sin(times[k])), 1e-8);
  }
}

}  // namespace
}  // namespace qmem
