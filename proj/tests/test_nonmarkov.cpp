#include "qmem/master_equation.hpp"
#include "qmem/nonmarkov.hpp"
#include "qmem/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

namespace qmem {
namespace {

std::vector<double> uniform_times(double t_final, std::size_t steps) {
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = t_final * static_cast<double>(k) / static_cast<double>(steps);
  return t;
}

MapFamily dephasing(const std::function<double(double)>& f, const std::vector<double>& times) {
  std::vector<double> samples;
  for (double t : times) samples.push_back(f(t));
  return dephasing_family(samples, times);
}

double damped_cosine(double t) { return std::exp(-t) * std::cos(std::numbers::pi * t); }

DensityMatrix ket_plus() { return DensityMatrix::pure(ComplexVector::Ones(2)); }
DensityMatrix ket_minus() {
  ComplexVector v(2);
  v << 1.0, -1.0;
  return DensityMatrix::pure(v);
}

TEST(MapFamily, RejectsInvalidSnapshots) {
  const std::vector<double> t{0.0, 1.0};
  EXPECT_THROW(MapFamily(2, t, {identity_map(2), transpose_map(2)}), NumericalError);
  EXPECT_THROW(MapFamily(2, t, {identity_map(2), 2.0 * identity_map(2)}), NumericalError);
  EXPECT_THROW(MapFamily(2, t, {transpose_map(2), identity_map(2)}), NumericalError);
  EXPECT_THROW(MapFamily(2, {0.0, 0.0}, {identity_map(2), identity_map(2)}), std::invalid_argument);
  EXPECT_THROW(MapFamily(2, {0.5, 1.0}, {identity_map(2), identity_map(2)}), std::invalid_argument);
  EXPECT_THROW(MapFamily(2, t, {identity_map(2)}), std::invalid_argument);
  EXPECT_THROW(MapFamily(2, t, {identity_map(2), identity_map(3)}), DimensionError);
}

TEST(DephasingFamily, RejectsNonPhysicalSamples) {
  const std::vector<double> t{0.0, 1.0};
  const std::vector<double> too_big{1.0, 1.5};
  const std::vector<double> bad_start{0.9, 0.5};
  EXPECT_THROW(dephasing_family(too_big, t), std::invalid_argument);
  EXPECT_THROW(dephasing_family(bad_start, t), std::invalid_argument);
}

TEST(DistanceTrajectory, DephasingPairTracksAbsF) {
  const auto times = uniform_times(4.0, 800);
  const auto family = dephasing(damped_cosine, times);
  const auto d = distance_trajectory(family, ket_plus(), ket_minus());
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_NEAR(d[k], std::abs(damped_cosine(times[k])), 1e-12);
}

TEST(DistanceTrajectory, UnitaryFamilyKeepsDistanceConstant) {
  Rng rng(4);
  const ComplexMatrix h = random_hermitian(3, rng);
  const auto family = unitary_family(h, uniform_times(5.0, 50));
  const auto a = random_state(3, rng), b = random_state(3, rng);
  const double d0 = trace_distance(a, b);
  for (double d : distance_trajectory(family, a, b)) EXPECT_NEAR(d, d0, 1e-12);
  EXPECT_NEAR(blp_measure(family, PairStrategy{16, 1}).measure, 0.0, 1e-10);
  for (const auto& step : divisibility_scan(family)) {
    EXPECT_EQ(step.verdict, DivisibilityVerdict::CpDivisible);
    EXPECT_GE(step.min_choi_eigenvalue, -1e-12);
  }
}

TEST(BlpSigma, ExactForQuadraticsOnNonUniformGrid) {
  const std::vector<double> t{0.0, 0.1, 0.35, 0.4, 0.9, 1.0};
  std::vector<double> d;
  for (double x : t) d.push_back(0.3 + 0.2 * x - 0.7 * x * x);
  const auto s = blp_sigma(d, t);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(s[k], 0.2 - 1.4 * t[k], 1e-12);
}

TEST(BlpSigma, RejectsBadInput) {
  const std::vector<double> d{1.0, 2.0}, one{1.0}, t_bad{0.0, 0.0};
  EXPECT_THROW(blp_sigma(d, t_bad), std::invalid_argument);
  EXPECT_THROW(blp_sigma(one, one), std::invalid_argument);
}

TEST(PositivePart, MonotoneDecreasingGivesZero) {
  const auto t = uniform_times(3.0, 300);
  std::vector<double> d;
  for (double x : t) d.push_back(std::exp(-x));
  for (auto rule : {BlpQuadrature::RefinedExtrema, BlpQuadrature::PositiveVariation, BlpQuadrature::CenteredTrapezoid}) {
    EXPECT_EQ(positive_part_integral(d, t, rule), 0.0);
  }
}

TEST(PositivePart, SumOfRisesForPiecewiseLinear) {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0};
  const std::vector<double> d{1.0, 0.2, 0.5, 0.1, 0.4};
  EXPECT_NEAR(positive_part_integral(d, t, BlpQuadrature::PositiveVariation), 0.3 + 0.3, 1e-15);
}

TEST(PositivePart, IgnoresNoiseBelowThreshold) {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> d{1.0, 0.5, 0.5 + 1e-12, 0.4};
  EXPECT_EQ(positive_part_integral(d, t, BlpQuadrature::PositiveVariation), 0.0);
}

TEST(PositivePart, DampedCosineConvergesToExactMeasure) {
  // exact: sum over revivals of (local max of |f|) - (zero before it)
  const double exact = 0.6005122085362543;
  const auto t = uniform_times(4.0, 8000);
  std::vector<double> d;
  for (double x : t) d.push_back(std::abs(damped_cosine(x)));
  EXPECT_NEAR(positive_part_integral(d, t, BlpQuadrature::RefinedExtrema), exact, 1e-9);
  EXPECT_NEAR(positive_part_integral(d, t, BlpQuadrature::PositiveVariation), exact, 1e-7);
  // centred slopes smear the kinks at the zeros of f: first-order error
  EXPECT_NEAR(positive_part_integral(d, t, BlpQuadrature::CenteredTrapezoid), exact, 2e-3);
}

TEST(BlpMeasure, DephasingDampedCosineMatchesOracle) {
  // dense-grid (step 1e-5) positive-variation value of |f| on [0, 4]
  const double oracle = 0.600512208501528;
  const auto family = dephasing(damped_cosine, uniform_times(4.0, 8000));
  const auto r = blp_measure(family, PairStrategy{12, 3});
  EXPECT_NEAR(r.measure, oracle, 1e-6 * oracle);
  EXPECT_NE(r.state_pair.label, "z-antipodal");
  EXPECT_EQ(r.pair_search_log.size(), 12u);
  EXPECT_EQ(r.pair_search_log[0].measure, 0.0);  // populations are frozen
}

TEST(BlpMeasure, MarkovianSemigroupsGiveZero) {
  Rng rng(13);
  for (int k = 0; k < 10; ++k) {
    const Eigen::Index d = 2 + k % 3;
    const auto gen = lindblad_superoperator(random_lindblad_generator(d, 2, rng));
    const auto family = semigroup_family(gen, uniform_times(2.0, 200));
    const auto r = blp_measure(family, PairStrategy{20, static_cast<std::uint64_t>(k)});
    EXPECT_LE(r.measure, 1e-8);
    for (std::size_t i = 1; i < r.distances.size(); ++i) EXPECT_LE(r.distances[i], r.distances[i - 1] + 1e-10);
  }
}

TEST(BlpMeasure, ThreadCountDoesNotChangeResult) {
  const auto family = dephasing(damped_cosine, uniform_times(4.0, 400));
  const auto a = blp_measure(family, PairStrategy{24, 9}, BlpQuadrature::RefinedExtrema, 1);
  const auto b = blp_measure(family, PairStrategy{24, 9}, BlpQuadrature::RefinedExtrema, 4);
  ASSERT_EQ(a.pair_search_log.size(), b.pair_search_log.size());
  for (std::size_t k = 0; k < a.pair_search_log.size(); ++k) {
    EXPECT_EQ(a.pair_search_log[k].measure, b.pair_search_log[k].measure);
  }
  EXPECT_EQ(a.best_pair, b.best_pair);
}

TEST(CandidatePairs, DeterministicPrefixMonotone) {
  const auto small = candidate_pairs(3, {5, 42});
  const auto large = candidate_pairs(3, {20, 42});
  ASSERT_EQ(small.size(), 5u);
  ASSERT_EQ(large.size(), 20u);
  for (std::size_t k = 0; k < small.size(); ++k) {
    EXPECT_EQ(small[k].label, large[k].label);
    EXPECT_EQ(small[k].first.matrix(), large[k].first.matrix());
    EXPECT_EQ(small[k].second.matrix(), large[k].second.matrix());
  }
  // more candidates never lower the measure
  const auto family = dephasing(damped_cosine, uniform_times(2.0, 200));
  double previous = -1.0;
  for (std::size_t n : {1u, 2u, 4u, 8u, 16u}) {
    const double m = blp_measure(family, PairStrategy{n, 42}).measure;
    EXPECT_GE(m, previous);
    previous = m;
  }
}

TEST(CandidatePairs, OrthogonalPairsArePure) {
  for (const auto& p : candidate_pairs(4, {10, 1})) {
    if (p.label.rfind("random-orthogonal", 0) != 0) continue;
    EXPECT_NEAR(trace_distance(p.first, p.second), 1.0, 1e-10);
  }
}

TEST(Divisibility, SemigroupIsCpDivisible) {
  Rng rng(14);
  for (int k = 0; k < 10; ++k) {
    const auto gen = lindblad_superoperator(random_lindblad_generator(2 + k % 3, 2, rng));
    for (const auto& step : divisibility_scan(semigroup_family(gen, uniform_times(1.5, 30)))) {
      EXPECT_EQ(step.verdict, DivisibilityVerdict::CpDivisible);
      EXPECT_GE(step.min_choi_eigenvalue, -1e-8);
    }
  }
}

TEST(Divisibility, DephasingIntermediateChoiSpectrum) {
  // the intermediate map scales coherences by r = f(t) / f(s); its Choi
  // eigenvalues are 1 + r, 1 - r, 0, 0
  const auto times = uniform_times(4.0, 400);
  const auto family = dephasing(damped_cosine, times);
  for (const auto& step : divisibility_scan(family)) {
    const double fs = damped_cosine(times[step.s_index]);
    const double ft = damped_cosine(times[step.t_index]);
    if (step.verdict == DivisibilityVerdict::NotInvertible) {
      EXPECT_LT(std::abs(fs), 1e-10);
      continue;
    }
    const double r = ft / fs;
    EXPECT_NEAR(step.min_choi_eigenvalue, std::min(0.0, 1.0 - std::abs(r)), 1e-9 * (1.0 + std::abs(r)));
    EXPECT_EQ(step.verdict == DivisibilityVerdict::NotCp, std::abs(ft) > std::abs(fs));
  }
}

TEST(Divisibility, ExactExponentialDephasingEqualsSemigroup) {
  const auto times = uniform_times(2.0, 40);
  const auto family = dephasing([](double t) { return std::exp(-2.0 * t); }, times);
  const auto semigroup = semigroup_family(lindblad_superoperator(qubit_dephasing(1.0)), times);
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_LT(max_abs(family.maps()[k] - semigroup.maps()[k]), 1e-14);
  for (const auto& step : divisibility_scan(family)) EXPECT_EQ(step.verdict, DivisibilityVerdict::CpDivisible);
}

TEST(Divisibility, BlpFlagMatchesDivisibilityForDephasing) {
  const auto times = uniform_times(3.0, 600);
  const std::vector<std::function<double(double)>> models{
      [](double t) { return std::exp(-t); },
      [](double t) { return std::exp(-t * t); },
      [](double t) { return 1.0 / (1.0 + t); },
      damped_cosine,
      [](double t) { return std::exp(-0.5 * t) * std::cos(2.0 * t); },
      [](double t) { return 0.5 * (1.0 + std::exp(-t) * std::cos(3.0 * t)); },
  };
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto family = dephasing(models[m], times);
    const bool blp_positive = blp_measure(family, PairStrategy{3, 0}).measure > 1e-8;
    bool divisible = true;
    for (const auto& step : divisibility_scan(family)) divisible = divisible && step.is_cp_divisible_step();
    EXPECT_EQ(blp_positive, !divisible) << "model " << m;
  }
}

TEST(Divisibility, InvalidIndicesThrow) {
  const auto family = dephasing(damped_cosine, uniform_times(1.0, 4));
  EXPECT_THROW(cp_divisibility_check(family, 2, 2), std::invalid_argument);
  EXPECT_THROW(cp_divisibility_check(family, 0, 9), std::invalid_argument);
}

TEST(FamilyCsv, RoundTripIsLossless) {
  Rng rng(15);
  const auto gen = lindblad_superoperator(random_lindblad_generator(3, 2, rng));
  const auto family = semigroup_family(gen, uniform_times(1.0, 7));
  std::stringstream ss;
  write_family_csv(ss, family);
  const auto back = read_family_csv(ss);
  EXPECT_EQ(back.dim(), 3);
  EXPECT_EQ(back.times(), family.times());
  for (std::size_t k = 0; k < family.size(); ++k) EXPECT_EQ(back.maps()[k], family.maps()[k]);
}

TEST(FamilyCsv, MalformedInputReportsLine) {
  std::stringstream ss;
  write_family_csv(ss, dephasing(damped_cosine, uniform_times(1.0, 2)));
  std::string text = ss.str();
  text.erase(text.rfind('\n', text.size() - 2) + 1);  // drop the last row
  std::istringstream truncated(text);
  try {
    read_family_csv(truncated);
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("family csv line"), std::string::npos);
  }
}

}  // namespace
}  // namespace qmem
