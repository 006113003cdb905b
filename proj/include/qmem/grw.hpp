// grw.hpp
// Monte Carlo unraveling of the GRW collapse model on a 1-D position grid.
//
// A trajectory alternates Schrödinger evolution with localization jumps
//   psi -> L(y, x) psi / ||L(y, x) psi||,
//   L(y, x) = (pi r_c^2)^(-1/4) exp(-(y - x)^2 / (2 r_c^2)),
// occurring at Poisson times with total rate lambda. The jump centre y has
// density lambda * ||L(y, x) psi||^2, which integrates to lambda for every
// normalized psi, so waiting times are state independent.

#pragma once

#include "qmem/core.hpp"
#include "qmem/csv.hpp"
#include "qmem/linalg.hpp"
#include "qmem/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qmem::grw {

class PositionGrid {
 public:
  PositionGrid(double x_min, double x_max, std::size_t n_points)
      : x_min_(x_min), x_max_(x_max), n_(n_points) {
    if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
      throw std::invalid_argument("PositionGrid: need finite x_min < x_max");
    }
    if (n_points < 8) throw std::invalid_argument("PositionGrid: need at least 8 points");
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return (x_max_ - x_min_) / static_cast<double>(n_ - 1); }
  double point(std::size_t i) const { return x_min_ + spacing() * static_cast<double>(i); }

  RealVector points() const {
    RealVector x(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) x(static_cast<Eigen::Index>(i)) = point(i);
    return x;
  }

  std::size_t nearest_index(double x) const {
    const double k = std::round((x - x_min_) / spacing());
    return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(n_ - 1)));
  }

  bool operator==(const PositionGrid&) const = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
};

struct GrwParams {
  double lambda = 1.0;  // collapse rate
  double r_c = 1.0;     // localization length

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("GrwParams: lambda must be > 0");
    if (!(r_c > 0.0) || !std::isfinite(r_c)) throw std::invalid_argument("GrwParams: r_c must be > 0");
  }
};

class WaveFunction {
 public:
  // Amplitudes must already have unit grid norm sum |psi_i|^2 dx = 1.
  WaveFunction(PositionGrid grid, ComplexVector amplitudes)
      : grid_(grid), amps_(std::move(amplitudes)) {
    if (amps_.size() != static_cast<Eigen::Index>(grid_.size())) {
      throw DimensionError("WaveFunction: amplitude count does not match grid");
    }
    const double n2 = norm_squared();
    if (std::abs(n2 - 1.0) > 1e-10) {
      throw NumericalError("WaveFunction: grid norm is " + std::to_string(n2) + ", expected 1");
    }
  }

  static WaveFunction normalized(PositionGrid grid, ComplexVector amplitudes) {
    const double n2 = amplitudes.squaredNorm() * grid.spacing();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NumericalError("WaveFunction: cannot normalize zero vector");
    amplitudes /= std::sqrt(n2);
    return WaveFunction(grid, std::move(amplitudes));
  }

  const PositionGrid& grid() const { return grid_; }
  const ComplexVector& amplitudes() const { return amps_; }
  double norm_squared() const { return amps_.squaredNorm() * grid_.spacing(); }

  // Probabilities |psi_i|^2 dx, summing to one.
  RealVector weights() const { return amps_.cwiseAbs2() * grid_.spacing(); }

 private:
  PositionGrid grid_;
  ComplexVector amps_;
};

inline WaveFunction gaussian_superposition(const PositionGrid& grid, std::span<const double> centers,
                                           double width) {
  ComplexVector amps = ComplexVector::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i);
    for (double c : centers) amps(static_cast<Eigen::Index>(i)) += std::exp(-(x - c) * (x - c) / (4.0 * width * width));
  }
  return WaveFunction::normalized(grid, std::move(amps));
}

// |psi|^2 is Normal(center, width^2).
inline WaveFunction gaussian_packet(const PositionGrid& grid, double center, double width) {
  const double c[1] = {center};
  return gaussian_superposition(grid, c, width);
}

inline double localization_amplitude(double y, double x, double r_c) {
  const double prefactor = std::pow(std::numbers::pi * r_c * r_c, -0.25);
  return prefactor * std::exp(-(y - x) * (y - x) / (2.0 * r_c * r_c));
}

// Diagonal of L(y, x) on the grid.
inline RealVector localization_operator(double y, const PositionGrid& grid, double r_c) {
  if (!(r_c > 0.0)) throw std::invalid_argument("localization_operator: r_c must be > 0");
  RealVector d(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) d(static_cast<Eigen::Index>(i)) = localization_amplitude(y, grid.point(i), r_c);
  return d;
}

// Uniform quadrature nodes for the localization centre, extending `padding`
// localization lengths beyond the position grid on both sides.
struct CenterQuadrature {
  std::vector<double> nodes;
  double step = 0.0;
};

inline CenterQuadrature padded_center_grid(const PositionGrid& grid, double r_c, double padding = 6.0,
                                           double resolution = 8.0) {
  const double lo = grid.x_min() - padding * r_c;
  const double hi = grid.x_max() + padding * r_c;
  const double target = std::min(grid.spacing(), r_c / resolution);
  const auto intervals = static_cast<std::size_t>(std::ceil((hi - lo) / target));
  CenterQuadrature q;
  q.step = (hi - lo) / static_cast<double>(intervals);
  q.nodes.reserve(intervals + 1);
  for (std::size_t j = 0; j <= intervals; ++j) q.nodes.push_back(lo + q.step * static_cast<double>(j));
  return q;
}

inline double jump_rate_density(const WaveFunction& psi, double y, const GrwParams& p) {
  const RealVector l = localization_operator(y, psi.grid(), p.r_c);
  return p.lambda * (l.array().square() * psi.weights().array()).sum();
}

// Mass of psi within `margin` of either grid edge.
inline double edge_mass(const WaveFunction& psi, double margin) {
  const RealVector w = psi.weights();
  double mass = 0.0;
  for (std::size_t i = 0; i < psi.grid().size(); ++i) {
    const double x = psi.grid().point(i);
    if (x < psi.grid().x_min() + margin || x > psi.grid().x_max() - margin) mass += w(static_cast<Eigen::Index>(i));
  }
  return mass;
}

inline std::optional<std::string> boundary_warning(const WaveFunction& psi, const GrwParams& p) {
  const double mass = edge_mass(psi, 4.0 * p.r_c);
  if (mass < 1e-8) return std::nullopt;
  return "initial wavefunction has mass " + csv::format(mass) +
         " within 4 r_c of the grid edges; localization tails will be truncated";
}

struct JumpSample {
  double wait_time = 0.0;
  double y = 0.0;
};

// Draws a localization centre from lambda^-1 * jump_rate_density(psi, y).
// The density is a Gaussian mixture sum_i w_i N(x_i, r_c^2 / 2), so pick the
// component by inverse CDF over the grid weights, then offset.
template <typename Engine>
double sample_jump_center(const WaveFunction& psi, const GrwParams& p, Engine& rng) {
  const RealVector w = psi.weights();
  std::vector<double> cdf(static_cast<std::size_t>(w.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    acc += w(i);
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  if (!(acc > 0.0) || !std::isfinite(acc)) {
    throw NumericalError("sample_jump: jump-rate density vanishes on the grid");
  }
  std::uniform_real_distribution<double> uniform(0.0, acc);
  const double u = uniform(rng);
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  const auto index = static_cast<std::size_t>(it - cdf.begin());
  std::normal_distribution<double> offset(0.0, p.r_c / std::numbers::sqrt2);
  return psi.grid().point(index) + offset(rng);
}

template <typename Engine>
double sample_wait_time(const GrwParams& p, Engine& rng) {
  std::exponential_distribution<double> wait(p.lambda);
  return wait(rng);
}

template <typename Engine>
JumpSample sample_jump(const WaveFunction& psi, const GrwParams& p, Engine& rng) {
  JumpSample s;
  s.wait_time = sample_wait_time(p, rng);
  s.y = sample_jump_center(psi, p, rng);
  return s;
}

inline WaveFunction apply_jump(const WaveFunction& psi, double y, const GrwParams& p) {
  const RealVector l = localization_operator(y, psi.grid(), p.r_c);
  ComplexVector out = psi.amplitudes().cwiseProduct(l.cast<Complex>());
  const double n2 = out.squaredNorm() * psi.grid().spacing();
  if (!(n2 > 0.0)) {
    throw NumericalError("apply_jump: localized state has vanishing norm (y = " + csv::format(y) + ")");
  }
  out /= std::sqrt(n2);
  return WaveFunction(psi.grid(), std::move(out));
}

// Kinetic energy -1/(2m) d^2/dx^2 with the 3-point stencil and Dirichlet edges.
inline ComplexMatrix free_particle_hamiltonian(const PositionGrid& grid, double mass) {
  if (!(mass > 0.0)) throw std::invalid_argument("free_particle_hamiltonian: mass must be > 0");
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double h = grid.spacing();
  const double off = -1.0 / (2.0 * mass * h * h);
  ComplexMatrix hmat = ComplexMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    hmat(i, i) = -2.0 * off;
    if (i + 1 < n) {
      hmat(i, i + 1) = off;
      hmat(i + 1, i) = off;
    }
  }
  return hmat;
}

// Exact propagator exp(-i H dt) from a single eigendecomposition of H.
// Without a Hamiltonian it is the identity.
class GridPropagator {
 public:
  GridPropagator() = default;

  explicit GridPropagator(const ComplexMatrix& hamiltonian) {
    require_square(hamiltonian, "GridPropagator");
    if (hermiticity_error(hamiltonian) > kStateTolerance) {
      throw std::invalid_argument("GridPropagator: Hamiltonian is not Hermitian");
    }
    eig_ = hermitian_eigensystem(hamiltonian);
  }

  explicit GridPropagator(const std::optional<ComplexMatrix>& hamiltonian) {
    if (hamiltonian) *this = GridPropagator(*hamiltonian);
  }

  bool trivial() const { return !eig_.has_value(); }

  WaveFunction apply(const WaveFunction& psi, double dt) const {
    if (dt < 0.0) throw std::invalid_argument("evolve_deterministic: dt must be >= 0");
    if (!eig_ || dt == 0.0) return psi;
    if (eig_->values.size() != psi.amplitudes().size()) {
      throw DimensionError("evolve_deterministic: Hamiltonian does not match grid");
    }
    ComplexVector c = eig_->vectors.adjoint() * psi.amplitudes();
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(-kI * (eig_->values(i) * dt));
    return WaveFunction(psi.grid(), eig_->vectors * c);
  }

 private:
  std::optional<EigenSystem> eig_;
};

inline WaveFunction evolve_deterministic(const WaveFunction& psi, const std::optional<ComplexMatrix>& hamiltonian,
                                         double dt) {
  return GridPropagator(hamiltonian).apply(psi, dt);
}

struct Jump {
  double time = 0.0;
  double y = 0.0;
};

struct Trajectory {
  std::vector<double> sample_times;
  std::vector<WaveFunction> states;
  std::vector<Jump> jumps;
  std::uint64_t seed = 0;
};

inline Trajectory simulate_trajectory(const WaveFunction& psi0, const GrwParams& p,
                                      const GridPropagator& propagator,
                                      std::span<const double> sample_times, std::uint64_t seed) {
  p.validate();
  if (!sample_times.empty() && sample_times.front() < 0.0) {
    throw std::invalid_argument("simulate_trajectory: sample times must be >= 0");
  }
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw std::invalid_argument("simulate_trajectory: sample times must be sorted");
  }
  Rng rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.sample_times.assign(sample_times.begin(), sample_times.end());
  traj.states.reserve(sample_times.size());

  WaveFunction psi = psi0;
  double t = 0.0;
  double next_jump = sample_wait_time(p, rng);
  for (double ts : sample_times) {
    while (next_jump <= ts) {
      psi = propagator.apply(psi, next_jump - t);
      t = next_jump;
      const double y = sample_jump_center(psi, p, rng);
      psi = apply_jump(psi, y, p);
      traj.jumps.push_back({t, y});
      next_jump = t + sample_wait_time(p, rng);
    }
    psi = propagator.apply(psi, ts - t);
    t = ts;
    traj.states.push_back(psi);
  }
  return traj;
}

inline Trajectory simulate_trajectory(const WaveFunction& psi0, const GrwParams& p,
                                      const std::optional<ComplexMatrix>& hamiltonian,
                                      std::span<const double> sample_times, std::uint64_t seed) {
  return simulate_trajectory(psi0, p, GridPropagator(hamiltonian), sample_times, seed);
}

namespace detail {
inline void check_ensemble(std::span<const Trajectory> trajectories, std::size_t time_index) {
  if (trajectories.empty()) throw std::invalid_argument("ensemble_average: empty trajectory list");
  const auto& first = trajectories.front();
  for (const auto& tr : trajectories) {
    if (tr.sample_times != first.sample_times) {
      throw std::invalid_argument("ensemble_average: trajectories have different sample times");
    }
    if (time_index >= tr.states.size()) throw std::out_of_range("ensemble_average: time index out of range");
    if (!(tr.states[time_index].grid() == first.states[time_index].grid())) {
      throw std::invalid_argument("ensemble_average: trajectories live on different grids");
    }
  }
}
}  // namespace detail

// rho_ij = dx * E[psi_i conj(psi_j)]; trace one under grid quadrature.
inline DensityMatrix ensemble_average(std::span<const Trajectory> trajectories, std::size_t time_index) {
  detail::check_ensemble(trajectories, time_index);
  const auto& grid = trajectories.front().states[time_index].grid();
  const auto n = static_cast<Eigen::Index>(grid.size());
  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  for (const auto& tr : trajectories) {
    const ComplexVector& a = tr.states[time_index].amplitudes();
    acc.noalias() += a * a.adjoint();
  }
  acc *= grid.spacing() / static_cast<double>(trajectories.size());
  return DensityMatrix(std::move(acc));
}

struct CoherenceEstimate {
  Complex mean;              // dx * E[psi_i conj(psi_j)]
  double standard_error = 0;  // of the mean, complex-magnitude sense
};

inline CoherenceEstimate coherence_statistics(std::span<const Trajectory> trajectories, std::size_t time_index,
                                              std::size_t i, std::size_t j) {
  detail::check_ensemble(trajectories, time_index);
  const double dx = trajectories.front().states[time_index].grid().spacing();
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  Complex sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& tr : trajectories) {
    const ComplexVector& a = tr.states[time_index].amplitudes();
    const Complex v = dx * a(ii) * std::conj(a(jj));
    sum += v;
    sum_sq += std::norm(v);
  }
  const double n = static_cast<double>(trajectories.size());
  CoherenceEstimate est;
  est.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * std::norm(est.mean)) / (n - 1.0)) : 0.0;
  est.standard_error = std::sqrt(var / n);
  return est;
}

// One row per sample time: time, jumps so far, Re/Im amplitudes.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  csv::Writer w(os);
  std::vector<std::string> header{"time[time]", "jumps[count]"};
  const std::size_t n = tr.states.empty() ? 0 : tr.states.front().grid().size();
  for (std::size_t i = 0; i < n; ++i) {
    header.push_back("re_" + std::to_string(i) + "[1/sqrt(length)]");
    header.push_back("im_" + std::to_string(i) + "[1/sqrt(length)]");
  }
  w.header(header);
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const double t = tr.sample_times[k];
    const auto jumps = static_cast<std::size_t>(
        std::count_if(tr.jumps.begin(), tr.jumps.end(), [t](const Jump& jp) { return jp.time <= t; }));
    std::vector<std::string> cells{csv::format(t), csv::format(jumps)};
    for (Eigen::Index i = 0; i < tr.states[k].amplitudes().size(); ++i) {
      cells.push_back(csv::format(tr.states[k].amplitudes()(i).real()));
      cells.push_back(csv::format(tr.states[k].amplitudes()(i).imag()));
    }
    w.line(cells);
  }
}

}  // namespace qmem::grw
