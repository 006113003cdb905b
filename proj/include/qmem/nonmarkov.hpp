// nonmarkov.hpp
// Memory effects in reduced dynamics: trace-distance revivals (BLP measure),
// CP-divisibility of intermediate maps, and analytic dephasing models.

#pragma once

#include "qmem/core.hpp"
#include "qmem/csv.hpp"
#include "qmem/linalg.hpp"
#include "qmem/master_equation.hpp"
#include "qmem/parallel.hpp"
#include "qmem/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace qmem {

inline constexpr double kMapTolerance = 1e-8;

// Time-stamped dynamical maps Phi(t_k) on column-stacked states of dimension
// `dim`. Every snapshot is checked to be CPTP, and Phi(t_0 = 0) the identity.
class MapFamily {
 public:
  MapFamily(Eigen::Index dim, std::vector<double> times, std::vector<ComplexMatrix> maps)
      : dim_(dim), times_(std::move(times)), maps_(std::move(maps)) {
    if (dim_ < 1) throw DimensionError("MapFamily: dim must be >= 1");
    if (times_.empty() || times_.size() != maps_.size()) {
      throw std::invalid_argument("MapFamily: need one map per time and at least one time");
    }
    if (times_.front() != 0.0) throw std::invalid_argument("MapFamily: times must start at 0");
    for (std::size_t k = 1; k < times_.size(); ++k) {
      if (!(times_[k] > times_[k - 1])) throw std::invalid_argument("MapFamily: times must be strictly increasing");
    }
    for (std::size_t k = 0; k < maps_.size(); ++k) {
      const auto& m = maps_[k];
      if (m.rows() != dim_ * dim_ || m.cols() != dim_ * dim_) {
        throw DimensionError("MapFamily: snapshot " + std::to_string(k) + " has wrong size");
      }
      if (trace_preservation_error(m) > kMapTolerance) {
        throw NumericalError("MapFamily: snapshot " + std::to_string(k) + " is not trace preserving");
      }
      const double min_eig = min_choi_eigenvalue(m);
      if (min_eig < -kMapTolerance) {
        throw NumericalError("MapFamily: snapshot " + std::to_string(k) +
                             " is not completely positive (Choi eigenvalue " + csv::format(min_eig) + ")");
      }
    }
    if (max_abs(maps_.front() - identity_map(dim_)) > kMapTolerance) {
      throw NumericalError("MapFamily: map at t = 0 is not the identity");
    }
  }

  Eigen::Index dim() const { return dim_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<ComplexMatrix>& maps() const { return maps_; }
  std::size_t size() const { return times_.size(); }

 private:
  Eigen::Index dim_;
  std::vector<double> times_;
  std::vector<ComplexMatrix> maps_;
};

inline MapFamily semigroup_family(const Superoperator& gen, std::span<const double> times) {
  std::vector<ComplexMatrix> maps;
  maps.reserve(times.size());
  for (double t : times) maps.push_back(matrix_exponential(gen.matrix, t));
  return MapFamily(gen.dim, {times.begin(), times.end()}, std::move(maps));
}

inline MapFamily unitary_family(const ComplexMatrix& hamiltonian, std::span<const double> times) {
  std::vector<ComplexMatrix> maps;
  maps.reserve(times.size());
  for (double t : times) {
    const ComplexMatrix u = matrix_exponential(-kI * hamiltonian, t);
    maps.push_back(sandwich_superoperator(u, u.adjoint()));
  }
  return MapFamily(hamiltonian.rows(), {times.begin(), times.end()}, std::move(maps));
}

// Qubit random-unitary dephasing: populations fixed, coherences scaled by f(t).
inline MapFamily dephasing_family(std::span<const double> f_samples, std::span<const double> times) {
  if (f_samples.size() != times.size()) throw std::invalid_argument("dephasing_family: length mismatch");
  if (f_samples.empty() || std::abs(f_samples.front() - 1.0) > 1e-12) {
    throw std::invalid_argument("dephasing_family: f(0) must equal 1");
  }
  std::vector<ComplexMatrix> maps;
  maps.reserve(times.size());
  for (std::size_t k = 0; k < f_samples.size(); ++k) {
    const double f = f_samples[k];
    if (!(std::abs(f) <= 1.0 + 1e-12)) {
      throw std::invalid_argument("dephasing_family: |f(t)| > 1 at t = " + csv::format(times[k]) +
                                  " (snapshot not CP)");
    }
    ComplexMatrix m = ComplexMatrix::Identity(4, 4);
    m(1, 1) = f;  // rho(1,0)
    m(2, 2) = f;  // rho(0,1)
    maps.push_back(std::move(m));
  }
  return MapFamily(2, {times.begin(), times.end()}, std::move(maps));
}

inline std::vector<double> distance_trajectory(const MapFamily& family, const DensityMatrix& rho1,
                                               const DensityMatrix& rho2) {
  if (static_cast<Eigen::Index>(rho1.dim()) != family.dim() || rho2.dim() != rho1.dim()) {
    throw DimensionError("distance_trajectory: state dimension does not match family");
  }
  const ComplexVector diff = vectorize(rho1.matrix() - rho2.matrix());
  std::vector<double> d;
  d.reserve(family.size());
  for (const auto& m : family.maps()) {
    // trace distance is linear in the difference, so map it directly
    d.push_back(0.5 * hermitian_eigenvalues(unvectorize(m * diff, family.dim())).cwiseAbs().sum());
  }
  return d;
}

// dD/dt by 3-point Lagrange differences: centred in the interior, second-order
// one-sided at the ends. Handles non-uniform spacing.
inline std::vector<double> blp_sigma(std::span<const double> d, std::span<const double> times) {
  if (d.size() != times.size() || d.size() < 2) {
    throw std::invalid_argument("blp_sigma: need equal-length sequences with at least 2 samples");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw std::invalid_argument("blp_sigma: times must be strictly increasing");
  }
  const std::size_t n = d.size();
  std::vector<double> s(n);
  if (n == 2) {
    s[0] = s[1] = (d[1] - d[0]) / (times[1] - times[0]);
    return s;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h1 = times[k] - times[k - 1];
    const double h2 = times[k + 1] - times[k];
    s[k] = -h2 / (h1 * (h1 + h2)) * d[k - 1] + (h2 - h1) / (h1 * h2) * d[k] + h1 / (h2 * (h1 + h2)) * d[k + 1];
  }
  {
    const double h1 = times[1] - times[0];
    const double h2 = times[2] - times[1];
    s[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * d[0] + (h1 + h2) / (h1 * h2) * d[1] - h1 / (h2 * (h1 + h2)) * d[2];
  }
  {
    const double h1 = times[n - 2] - times[n - 3];
    const double h2 = times[n - 1] - times[n - 2];
    s[n - 1] = h2 / (h1 * (h1 + h2)) * d[n - 3] - (h1 + h2) / (h1 * h2) * d[n - 2] +
               (2 * h2 + h1) / (h2 * (h1 + h2)) * d[n - 1];
  }
  return s;
}

// Increases smaller than this are treated as numerical noise.
inline constexpr double kRevivalThreshold = 1e-10;

enum class BlpQuadrature {
  // Sum over increasing runs of D of (max - min), with interior extrema
  // refined by the vertex of the 3-point parabola. Default.
  RefinedExtrema,
  // Exact integral of the positive slope of the piecewise-linear interpolant.
  PositiveVariation,
  // Trapezoid rule applied to max(sigma, 0) with sigma from blp_sigma.
  CenteredTrapezoid,
};

namespace detail {

inline double refined_extremum(std::span<const double> d, std::span<const double> t, std::size_t k) {
  if (k == 0 || k + 1 >= d.size()) return d[k];
  const double x0 = t[k - 1], x1 = t[k], x2 = t[k + 1];
  const double y0 = d[k - 1], y1 = d[k], y2 = d[k + 1];
  // Newton form: p(x) = y0 + a (x - x0) + b (x - x0)(x - x1)
  const double a = (y1 - y0) / (x1 - x0);
  const double b = ((y2 - y1) / (x2 - x1) - a) / (x2 - x0);
  if (b == 0.0) return y1;
  const double xv = 0.5 * (x0 + x1) - a / (2.0 * b);
  if (xv < x0 || xv > x2) return y1;
  return std::max(0.0, y0 + a * (xv - x0) + b * (xv - x0) * (xv - x1));
}

}  // namespace detail

// Integral of the positive part of dD/dt.
inline double positive_part_integral(std::span<const double> d, std::span<const double> times,
                                     BlpQuadrature rule = BlpQuadrature::RefinedExtrema) {
  if (d.size() != times.size()) throw std::invalid_argument("positive_part_integral: length mismatch");
  const std::size_t n = d.size();
  if (n < 2) return 0.0;
  double total = 0.0;
  switch (rule) {
    case BlpQuadrature::CenteredTrapezoid: {
      const auto s = blp_sigma(d, times);
      auto pos = [](double v) { return v > kRevivalThreshold ? v : 0.0; };
      for (std::size_t k = 0; k + 1 < n; ++k) total += 0.5 * (pos(s[k]) + pos(s[k + 1])) * (times[k + 1] - times[k]);
      return total;
    }
    case BlpQuadrature::PositiveVariation:
    case BlpQuadrature::RefinedExtrema: {
      const bool refine = rule == BlpQuadrature::RefinedExtrema;
      std::size_t k = 0;
      while (k + 1 < n) {
        if (d[k + 1] > d[k]) {
          const std::size_t start = k;
          while (k + 1 < n && d[k + 1] > d[k]) ++k;
          const double lo = refine ? detail::refined_extremum(d, times, start) : d[start];
          const double hi = refine ? detail::refined_extremum(d, times, k) : d[k];
          const double rise = hi - lo;
          if (rise > kRevivalThreshold) total += rise;
        } else {
          ++k;
        }
      }
      return total;
    }
  }
  return total;
}

struct StatePair {
  DensityMatrix first;
  DensityMatrix second;
  std::string label;
};

struct PairStrategy {
  std::size_t pair_count = 64;
  std::uint64_t seed = 0;
};

// Deterministic candidate list: three antipodal pure pairs on the x, y, z
// axes of levels {0, 1}, then alternating random orthogonal pure pairs and
// random mixed pairs. The list for n pairs is a prefix of the list for n + 1.
inline std::vector<StatePair> candidate_pairs(Eigen::Index dim, const PairStrategy& strategy) {
  std::vector<StatePair> pairs;
  auto basis = [dim](Eigen::Index k) {
    ComplexVector v = ComplexVector::Zero(dim);
    v(k) = 1.0;
    return v;
  };
  if (dim >= 2) {
    const ComplexVector e0 = basis(0), e1 = basis(1);
    const double r = 1.0 / std::sqrt(2.0);
    pairs.push_back({DensityMatrix::pure(e0), DensityMatrix::pure(e1), "z-antipodal"});
    pairs.push_back({DensityMatrix::pure(r * (e0 + e1)), DensityMatrix::pure(r * (e0 - e1)), "x-antipodal"});
    pairs.push_back({DensityMatrix::pure(r * (e0 + kI * e1)), DensityMatrix::pure(r * (e0 - kI * e1)), "y-antipodal"});
  } else {
    pairs.push_back({DensityMatrix::maximally_mixed(1), DensityMatrix::maximally_mixed(1), "trivial"});
  }
  if (pairs.size() > strategy.pair_count) pairs.erase(pairs.begin() + static_cast<std::ptrdiff_t>(strategy.pair_count), pairs.end());
  for (std::size_t k = pairs.size(); k < strategy.pair_count; ++k) {
    Rng rng(strategy.seed + k);
    if (k % 2 == 1 && dim >= 2) {
      const ComplexMatrix u = random_unitary(dim, rng);
      pairs.push_back({DensityMatrix::pure(u.col(0)), DensityMatrix::pure(u.col(1)),
                       "random-orthogonal-" + std::to_string(k)});
    } else {
      DensityMatrix a = random_state(dim, rng);
      DensityMatrix b = random_state(dim, rng);
      pairs.push_back({std::move(a), std::move(b), "random-mixed-" + std::to_string(k)});
    }
  }
  return pairs;
}

struct PairLogEntry {
  std::size_t pair_id = 0;
  std::string label;
  double measure = 0.0;
};

struct BlpResult {
  StatePair state_pair;
  std::vector<double> distances;
  std::vector<double> sigma;
  double measure = 0.0;
  std::size_t best_pair = 0;
  std::vector<PairLogEntry> pair_search_log;
};

inline BlpResult blp_measure(const MapFamily& family, const std::vector<StatePair>& pairs,
                             BlpQuadrature quadrature = BlpQuadrature::RefinedExtrema, std::size_t threads = 1) {
  if (pairs.empty()) throw std::invalid_argument("blp_measure: no candidate pairs");
  std::vector<double> measures(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto d = distance_trajectory(family, pairs[k].first, pairs[k].second);
    measures[k] = positive_part_integral(d, family.times(), quadrature);
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < measures.size(); ++k) {
    if (measures[k] > measures[best]) best = k;
  }
  BlpResult r{pairs[best], {}, {}, measures[best], best, {}};
  r.distances = distance_trajectory(family, pairs[best].first, pairs[best].second);
  r.sigma = family.size() >= 2 ? blp_sigma(r.distances, family.times()) : std::vector<double>(family.size(), 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) r.pair_search_log.push_back({k, pairs[k].label, measures[k]});
  return r;
}

inline BlpResult blp_measure(const MapFamily& family, const PairStrategy& strategy = {},
                             BlpQuadrature quadrature = BlpQuadrature::RefinedExtrema, std::size_t threads = 1) {
  return blp_measure(family, candidate_pairs(family.dim(), strategy), quadrature, threads);
}

enum class DivisibilityVerdict { CpDivisible, NotCp, NotInvertible };

inline const char* to_string(DivisibilityVerdict v) {
  switch (v) {
    case DivisibilityVerdict::CpDivisible: return "cp";
    case DivisibilityVerdict::NotCp: return "not-cp";
    case DivisibilityVerdict::NotInvertible: return "not-invertible";
  }
  return "?";
}

struct DivisibilityStep {
  std::size_t s_index = 0;
  std::size_t t_index = 0;
  DivisibilityVerdict verdict = DivisibilityVerdict::CpDivisible;
  double min_choi_eigenvalue = 0.0;  // NaN when not invertible
  double condition_number = 1.0;

  bool is_cp_divisible_step() const { return verdict == DivisibilityVerdict::CpDivisible; }
};

inline constexpr double kMaxConditionNumber = 1e12;

// Intermediate map Phi(t, s) = Phi(t) Phi(s)^-1 and the verdict on its
// complete positivity.
inline DivisibilityStep cp_divisibility_check(const MapFamily& family, std::size_t s_index, std::size_t t_index) {
  if (!(t_index > s_index) || t_index >= family.size()) {
    throw std::invalid_argument("cp_divisibility_check: need s_index < t_index < family size");
  }
  DivisibilityStep step;
  step.s_index = s_index;
  step.t_index = t_index;
  const ComplexMatrix& phi_s = family.maps()[s_index];
  const ComplexMatrix& phi_t = family.maps()[t_index];
  const RealVector sv = Eigen::JacobiSVD<ComplexMatrix>(phi_s).singularValues();
  const double smin = sv.minCoeff();
  step.condition_number = smin > 0.0 ? sv.maxCoeff() / smin : std::numeric_limits<double>::infinity();
  if (!(step.condition_number <= kMaxConditionNumber)) {
    step.verdict = DivisibilityVerdict::NotInvertible;
    step.min_choi_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    return step;
  }
  // X phi_s = phi_t  <=>  phi_s^T X^T = phi_t^T
  const ComplexMatrix intermediate =
      ComplexMatrix(phi_s.transpose()).partialPivLu().solve(ComplexMatrix(phi_t.transpose())).transpose();
  step.min_choi_eigenvalue = min_choi_eigenvalue(intermediate);
  step.verdict = step.min_choi_eigenvalue >= -kMapTolerance ? DivisibilityVerdict::CpDivisible
                                                            : DivisibilityVerdict::NotCp;
  return step;
}

// Checks every consecutive step (k, k + 1).
inline std::vector<DivisibilityStep> divisibility_scan(const MapFamily& family) {
  std::vector<DivisibilityStep> steps;
  for (std::size_t k = 0; k + 1 < family.size(); ++k) steps.push_back(cp_divisibility_check(family, k, k + 1));
  return steps;
}

// CSV layout: header `snapshot,time[time],row,re_0[1],im_0[1],...`, then
// d^2 rows per snapshot holding row `row` of Phi(time). d is implied by the
// column count.
inline void write_family_csv(std::ostream& os, const MapFamily& family) {
  csv::Writer w(os);
  const Eigen::Index n = family.dim() * family.dim();
  std::vector<std::string> header{"snapshot", "time[time]", "row"};
  for (Eigen::Index j = 0; j < n; ++j) {
    header.push_back("re_" + std::to_string(j) + "[1]");
    header.push_back("im_" + std::to_string(j) + "[1]");
  }
  w.header(header);
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto& m = family.maps()[k];
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<std::string> cells{csv::format(k), csv::format(family.times()[k]),
                                     csv::format(static_cast<std::size_t>(i))};
      for (Eigen::Index j = 0; j < n; ++j) {
        cells.push_back(csv::format(m(i, j).real()));
        cells.push_back(csv::format(m(i, j).imag()));
      }
      w.line(cells);
    }
  }
}

inline MapFamily read_family_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    return std::invalid_argument("family csv line " + std::to_string(line_no) + ": " + msg);
  };
  if (!std::getline(is, line)) throw std::invalid_argument("family csv: empty input");
  ++line_no;
  const auto header = csv::split(line);
  if (header.size() < 5 || header[0] != "snapshot" || (header.size() - 3) % 2 != 0) throw fail("bad column header");
  const auto n = static_cast<Eigen::Index>((header.size() - 3) / 2);
  const auto dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (dim * dim != n) throw fail("column count is not 3 + 2 d^2");

  std::vector<double> times;
  std::vector<ComplexMatrix> maps;
  Eigen::Index row = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = csv::split(line);
    if (cells.size() != header.size()) throw fail("wrong number of cells");
    try {
      const auto k = static_cast<std::size_t>(csv::parse_double(cells[0]));
      const double t = csv::parse_double(cells[1]);
      const auto i = static_cast<Eigen::Index>(csv::parse_double(cells[2]));
      if (row == 0) {
        if (k != maps.size()) throw fail("snapshot index out of order");
        times.push_back(t);
        maps.push_back(ComplexMatrix::Zero(n, n));
      } else if (k + 1 != maps.size() || t != times.back()) {
        throw fail("snapshot has fewer than d^2 rows");
      }
      if (i != row) throw fail("row index out of order");
      for (Eigen::Index j = 0; j < n; ++j) {
        maps.back()(i, j) = Complex(csv::parse_double(cells[3 + 2 * j]), csv::parse_double(cells[4 + 2 * j]));
      }
    } catch (const std::invalid_argument& e) {
      if (std::string(e.what()).rfind("family csv", 0) == 0) throw;
      throw fail(e.what());
    }
    row = (row + 1) % n;
  }
  if (row != 0) throw fail("truncated snapshot");
  if (maps.empty()) throw fail("no snapshots");
  return MapFamily(dim, std::move(times), std::move(maps));
}

}  // namespace qmem
