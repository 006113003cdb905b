#include "qmem/composite.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

namespace qmem {
namespace {

ComplexMatrix sigma_plus() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(1, 0) = 1.0;  // |1><0|
  return m;
}

// g (s+ (x) s- + s- (x) s+): swaps |10> and |01>.
CompositeModel exchange(double g) {
  const ComplexMatrix sp = sigma_plus(), sm = sigma_plus().adjoint();
  ComplexMatrix h = g * (kron(sp, sm) + kron(sm, sp));
  ComplexVector ground = ComplexVector::Zero(2);
  ground(0) = 1.0;
  return {{2, 2}, h, DensityMatrix::pure(ground)};
}

CompositeModel uncoupled(std::uint64_t seed, std::size_t de, const DensityMatrix& env) {
  Rng rng(seed);
  const auto ds = Eigen::Index{2};
  const ComplexMatrix hs = random_hermitian(ds, rng);
  const ComplexMatrix he = random_hermitian(static_cast<Eigen::Index>(de), rng);
  const ComplexMatrix h = kron(hs, ComplexMatrix(ComplexMatrix::Identity(static_cast<Eigen::Index>(de), static_cast<Eigen::Index>(de)))) +
                          kron(ComplexMatrix(ComplexMatrix::Identity(ds, ds)), he);
  return {{2, de}, h, env};
}

TEST(CompositeModel, Validation) {
  auto m = exchange(1.0);
  m.hamiltonian = ComplexMatrix::Identity(3, 3);
  EXPECT_THROW(m.validate(), DimensionError);
  m = exchange(1.0);
  m.hamiltonian(0, 1) = 1.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = exchange(1.0);
  m.env_state = DensityMatrix::maximally_mixed(3);
  EXPECT_THROW(m.validate(), DimensionError);
}

TEST(Evolution, InitialStateIsProduct) {
  const auto model = exchange(0.8);
  const auto rho = random_state(2, 3);
  EXPECT_LT(max_abs(evolve_composite(model, rho, 0.0).matrix() - kron(rho.matrix(), model.env_state.matrix())), 1e-14);
}

TEST(Evolution, PurityIsConserved) {
  Rng rng(21);
  for (int k = 0; k < 10; ++k) {
    const CompositeModel model{{2, 3}, random_hermitian(6, rng), random_state(3, rng)};
    const CompositeEvolution evo(model);
    const auto rho = random_state(2, rng);
    const double p0 = evo.state(rho, 0.0).purity();
    for (double t : {0.3, 1.7, 12.0}) EXPECT_NEAR(evo.state(rho, t).purity(), p0, 1e-10);
  }
}

TEST(Evolution, RabiExchangeOracle) {
  const double g = 1.0;
  const auto model = exchange(g);
  ComplexVector excited = ComplexVector::Zero(2);
  excited(1) = 1.0;
  const DensityMatrix plus = DensityMatrix::pure(ComplexVector::Ones(2));
  const std::vector<double> times{0.3, 0.7, 1.9};
  const double coherence[] = {0.9553364891256058, 0.7648421872844882, -0.32328956686350313};
  const double population[] = {0.9126678074548389, 0.5849835714501203, 0.10451614404279148};
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto s1 = partial_trace(evolve_composite(model, DensityMatrix::pure(excited), times[k]), model.dims,
                                  Subsystem::Environment);
    EXPECT_NEAR(s1(1, 1).real(), population[k], 1e-12);
    const auto s2 = partial_trace(evolve_composite(model, plus, times[k]), model.dims, Subsystem::Environment);
    EXPECT_NEAR(s2(0, 1).real() / 0.5, coherence[k], 1e-12);
    EXPECT_NEAR(s2(0, 1).imag(), 0.0, 1e-12);
  }
}

TEST(ReducedFamily, MatchesDirectEvolution) {
  Rng rng(22);
  const CompositeModel model{{2, 3}, random_hermitian(6, rng), random_state(3, rng)};
  const std::vector<double> times{0.0, 0.4, 1.1, 2.0};
  const auto family = reduced_family(model, times);
  const auto rho = random_state(2, rng);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto direct = partial_trace(evolve_composite(model, rho, times[k]), model.dims, Subsystem::Environment);
    EXPECT_LT(max_abs(apply_map(family.maps()[k], rho.matrix()) - direct.matrix()), 1e-12);
  }
}

TEST(ReducedFamily, ZeroCouplingIsUnitary) {
  const auto model = uncoupled(5, 3, random_state(3, 6));
  const std::vector<double> times{0.0, 0.5, 1.5};
  const auto family = reduced_family(model, times);
  for (const auto& m : family.maps()) {
    // unitary channels have a rank-one Choi matrix with eigenvalue d
    const RealVector ev = hermitian_eigenvalues(choi_matrix(m, 2));
    EXPECT_NEAR(ev(3), 2.0, 1e-10);
    EXPECT_NEAR(ev.head(3).cwiseAbs().maxCoeff(), 0.0, 1e-10);
  }
  const auto a = random_state(2, 7), b = random_state(2, 8);
  for (double d : distance_trajectory(family, a, b)) EXPECT_NEAR(d, trace_distance(a, b), 1e-12);
}

TEST(Bound, ZeroCouplingEqualEnvironmentHasZeroRhs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto env = random_state(2 + seed % 2, seed + 100);
    const auto model = uncoupled(seed, 2 + seed % 2, env);
    const auto r = bound_report(model, random_state(2, seed + 200), random_pure_state(2, seed + 300), 0.7, 2.1);
    EXPECT_LT(r.rhs(), 1e-10);
    EXPECT_LE(r.lhs, 1e-10);
    EXPECT_GE(r.slack(), -1e-10);
  }
}

TEST(Bound, EqualTimesGiveZeroLhs) {
  const auto inst = random_bound_instance(9, 2, 3, 3.0);
  const auto r = bound_report(inst.model, inst.rho1, inst.rho2, 1.3, 1.3);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_GE(r.slack(), 0.0);
}

TEST(Bound, AtTimeZeroCorrelationsVanish) {
  const auto inst = random_bound_instance(10, 2, 2, 3.0);
  const auto r = bound_report(inst.model, inst.rho1, inst.rho2, 0.0, 1.0);
  EXPECT_LT(r.corr1, 1e-12);
  EXPECT_LT(r.corr2, 1e-12);
  EXPECT_LT(r.env_dist, 1e-12);
  EXPECT_LE(r.lhs, 1e-10);  // contraction from a product initial state
}

TEST(Bound, RejectsReversedTimes) {
  const auto inst = random_bound_instance(1, 2, 2, 3.0);
  EXPECT_THROW(bound_report(inst.model, inst.rho1, inst.rho2, 2.0, 1.0), std::invalid_argument);
}

TEST(Bound, HoldsOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto inst = random_bound_instance(seed, 2, 2 + seed % 2, 3.0);
    const auto r = bound_report(inst.model, inst.rho1, inst.rho2, inst.s, inst.t);
    EXPECT_GE(r.slack(), -1e-10) << "seed " << seed;
  }
}

TEST(Campaign, InstancesAreSeededAndSpectrumIsFixed) {
  const auto a = random_bound_instance(77, 2, 3, 3.0);
  const auto b = random_bound_instance(77, 2, 3, 3.0);
  EXPECT_EQ(a.model.hamiltonian, b.model.hamiltonian);
  EXPECT_EQ(a.rho1.matrix(), b.rho1.matrix());
  EXPECT_EQ(a.s, b.s);
  EXPECT_LE(a.s, a.t);
  const RealVector ev = hermitian_eigenvalues(a.model.hamiltonian);
  EXPECT_LT((ev - campaign_spectrum(6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Campaign, ThreadCountInvariantCsv) {
  CampaignSettings cfg;
  cfg.instances = 40;
  cfg.seed = 5;
  std::ostringstream one, four;
  write_campaign_csv(one, run_bound_campaign(cfg));
  cfg.threads = 4;
  write_campaign_csv(four, run_bound_campaign(cfg));
  EXPECT_EQ(one.str(), four.str());
}

TEST(Campaign, RejectsOversizedEnvironment) {
  CampaignSettings cfg;
  cfg.instances = 1;
  cfg.dim_e_options = {9};
  EXPECT_THROW(run_bound_campaign(cfg), std::invalid_argument);
}

}  // namespace
}  // namespace qmem
