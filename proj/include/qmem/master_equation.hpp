// master_equation.hpp
// Lindblad generators, the GRW master equation in localization and
// momentum-kick (translation covariant) form, their integration, and the
// closed-form position-basis decoherence solution.

#pragma once

#include "qmem/core.hpp"
#include "qmem/grw.hpp"
#include "qmem/linalg.hpp"
#include "qmem/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace qmem {

struct LindbladChannel {
  double rate = 0.0;
  ComplexMatrix op;
};

struct LindbladGenerator {
  ComplexMatrix hamiltonian;
  std::vector<LindbladChannel> channels;

  Eigen::Index dim() const { return hamiltonian.rows(); }

  void validate() const {
    require_square(hamiltonian, "LindbladGenerator");
    if (hermiticity_error(hamiltonian) > kStateTolerance) {
      throw std::invalid_argument("LindbladGenerator: Hamiltonian is not Hermitian");
    }
    for (const auto& c : channels) {
      if (!(c.rate >= 0.0)) throw std::invalid_argument("LindbladGenerator: negative channel rate");
      if (c.op.rows() != dim() || c.op.cols() != dim()) {
        throw DimensionError("LindbladGenerator: channel operator has wrong dimension");
      }
    }
  }
};

// -i[H, rho] + sum_k rate_k (A rho A^dagger - {A^dagger A, rho} / 2)
inline ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const LindbladGenerator& gen) {
  if (rho.rows() != gen.dim() || rho.cols() != gen.dim()) {
    throw DimensionError("lindblad_rhs: state dimension " + std::to_string(rho.rows()) +
                         " does not match generator dimension " + std::to_string(gen.dim()));
  }
  ComplexMatrix out = -kI * (gen.hamiltonian * rho - rho * gen.hamiltonian);
  for (const auto& c : gen.channels) {
    const ComplexMatrix ada = c.op.adjoint() * c.op;
    out += c.rate * (c.op * rho * c.op.adjoint() - 0.5 * (ada * rho + rho * ada));
  }
  return out;
}

inline ComplexMatrix lindblad_rhs(const DensityMatrix& rho, const LindbladGenerator& gen) {
  return lindblad_rhs(rho.matrix(), gen);
}

// Linear map on column-stacked density matrices.
struct Superoperator {
  ComplexMatrix matrix;
  Eigen::Index dim = 0;

  ComplexMatrix apply(const ComplexMatrix& rho) const { return apply_map(matrix, rho); }
};

inline Superoperator lindblad_superoperator(const LindbladGenerator& gen) {
  gen.validate();
  const Eigen::Index d = gen.dim();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  ComplexMatrix s = -kI * (sandwich_superoperator(gen.hamiltonian, id) - sandwich_superoperator(id, gen.hamiltonian));
  for (const auto& c : gen.channels) {
    const ComplexMatrix ada = c.op.adjoint() * c.op;
    s += c.rate * (sandwich_superoperator(c.op, c.op.adjoint()) - 0.5 * sandwich_superoperator(ada, id) -
                   0.5 * sandwich_superoperator(id, ada));
  }
  return {std::move(s), d};
}

inline LindbladGenerator qubit_dephasing(double rate) {
  ComplexMatrix sz(2, 2);
  sz << 1.0, 0.0, 0.0, -1.0;
  return {ComplexMatrix::Zero(2, 2), {{rate, sz}}};
}

// Random Hamiltonian plus `n_channels` random jump operators with rates in
// [0, max_rate). Operators are Ginibre matrices scaled to unit Frobenius norm.
template <typename Engine>
LindbladGenerator random_lindblad_generator(Eigen::Index dim, std::size_t n_channels, Engine& rng,
                                            double max_rate = 1.0) {
  LindbladGenerator gen;
  gen.hamiltonian = random_hermitian(dim, rng);
  std::uniform_real_distribution<double> rate(0.0, max_rate);
  for (std::size_t k = 0; k < n_channels; ++k) {
    ComplexMatrix a = ginibre_matrix(dim, dim, rng);
    a /= a.norm();
    gen.channels.push_back({rate(rng), std::move(a)});
  }
  return gen;
}

inline constexpr std::size_t kMaxSuperoperatorGrid = 64;

// Decoherence rates Gamma(x_i, x_j) multiplying <x_i|rho|x_j> in the GRW
// master equation.
struct DecoherenceKernel {
  grw::PositionGrid grid;
  RealMatrix gamma;
};

inline double grw_decoherence_rate(double separation, const grw::GrwParams& p) {
  return p.lambda * (1.0 - std::exp(-separation * separation / (4.0 * p.r_c * p.r_c)));
}

inline DecoherenceKernel analytic_kernel(const grw::PositionGrid& grid, const grw::GrwParams& p) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  RealMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = grw_decoherence_rate(grid.point(static_cast<std::size_t>(i)) - grid.point(static_cast<std::size_t>(j)), p);
    }
  }
  return {grid, std::move(g)};
}

// Gamma from the padded quadrature lambda (1 - sum_j dy L(y_j, x) L(y_j, x')).
inline DecoherenceKernel quadrature_kernel(const grw::PositionGrid& grid, const grw::GrwParams& p) {
  p.validate();
  const auto q = grw::padded_center_grid(grid, p.r_c);
  const auto n = static_cast<Eigen::Index>(grid.size());
  RealMatrix overlap = RealMatrix::Zero(n, n);
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    const double w = (k == 0 || k + 1 == q.nodes.size()) ? 0.5 * q.step : q.step;
    const RealVector l = grw::localization_operator(q.nodes[k], grid, p.r_c);
    overlap.noalias() += w * l * l.transpose();
  }
  RealMatrix gamma = p.lambda * (RealMatrix::Ones(n, n) - overlap);
  return {grid, std::move(gamma)};
}

namespace detail {
inline Superoperator diagonal_superoperator(const RealMatrix& entries, Eigen::Index n) {
  // entry (i, j) of rho lives at vec index i + j * n
  ComplexMatrix s = ComplexMatrix::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) s(i + j * n, i + j * n) = entries(i, j);
  }
  return {std::move(s), n};
}

inline void check_superoperator_grid(const grw::PositionGrid& grid) {
  if (grid.size() > kMaxSuperoperatorGrid) {
    throw std::invalid_argument("dense GRW superoperator limited to " + std::to_string(kMaxSuperoperatorGrid) +
                                " grid points; use analytic_decoherence_solution for larger grids");
  }
}
}  // namespace detail

// rho -> -lambda [rho - sum_j dy L(y_j) rho L(y_j)] with the y-sum on the
// padded centre grid. Localization operators are diagonal in position, so
// each sandwich L rho L scales <x_a|rho|x_b> by L(y, x_a) L(y, x_b).
inline Superoperator grw_generator(const grw::PositionGrid& grid, const grw::GrwParams& p) {
  detail::check_superoperator_grid(grid);
  const DecoherenceKernel k = quadrature_kernel(grid, p);
  return detail::diagonal_superoperator(-k.gamma, static_cast<Eigen::Index>(grid.size()));
}

// Weight of a momentum kick q in the covariant form; unit integral, and
// int dq w(q) e^{i q d} = exp(-d^2 / (4 r_c^2)).
inline double momentum_kick_weight(double q, double r_c) {
  return r_c / std::sqrt(std::numbers::pi) * std::exp(-q * q * r_c * r_c);
}

struct MomentumGrid {
  std::vector<double> nodes;
  double step = 0.0;
};

// Symmetric momentum grid: cut-off 8 / r_c, spacing fine enough that kicks
// alias beyond the position range plus 12 r_c.
inline MomentumGrid default_momentum_grid(const grw::PositionGrid& grid, double r_c) {
  const double q_max = 8.0 / r_c;
  const double width = grid.x_max() - grid.x_min();
  const double max_step = 2.0 * std::numbers::pi / (width + 12.0 * r_c);
  const auto half = static_cast<std::size_t>(std::ceil(q_max / max_step));
  MomentumGrid m;
  m.step = q_max / static_cast<double>(half);
  for (std::size_t k = 0; k <= 2 * half; ++k) {
    m.nodes.push_back(-q_max + m.step * static_cast<double>(k));
  }
  return m;
}

inline double momentum_grid_normalization(const MomentumGrid& q, double r_c) {
  double total = 0.0;
  for (double node : q.nodes) total += q.step * momentum_kick_weight(node, r_c);
  return total;
}

// rho -> -lambda [rho - sum_j dq w(q_j) e^{i q_j x} rho e^{-i q_j x}].
inline Superoperator covariant_generator(const grw::PositionGrid& grid, const grw::GrwParams& p,
                                         const MomentumGrid& q) {
  p.validate();
  detail::check_superoperator_grid(grid);
  if (q.nodes.size() < 2 || !(q.step > 0.0)) throw std::invalid_argument("covariant_generator: empty q grid");
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    const double mirror = q.nodes[q.nodes.size() - 1 - k];
    if (std::abs(q.nodes[k] + mirror) > 1e-9 * (1.0 + std::abs(mirror))) {
      throw std::invalid_argument("covariant_generator: q grid must be symmetric around 0");
    }
  }
  const double deficit = std::abs(1.0 - momentum_grid_normalization(q, p.r_c));
  if (deficit > 1e-6) {
    throw NumericalError("covariant_generator: q grid under-resolved, normalization deficit " + csv::format(deficit));
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  // sum_j dq w(q_j) e^{i q_j (x_a - x_b)} for each pair
  ComplexMatrix kick = ComplexMatrix::Zero(n, n);
  for (double node : q.nodes) {
    const double w = q.step * momentum_kick_weight(node, p.r_c);
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index a = 0; a < n; ++a) {
        const double d = grid.point(static_cast<std::size_t>(a)) - grid.point(static_cast<std::size_t>(b));
        kick(a, b) += w * std::exp(kI * (node * d));
      }
    }
  }
  ComplexMatrix s = ComplexMatrix::Zero(n * n, n * n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) s(a + b * n, a + b * n) = -p.lambda * (1.0 - kick(a, b));
  }
  return {std::move(s), n};
}

inline Superoperator covariant_generator(const grw::PositionGrid& grid, const grw::GrwParams& p) {
  return covariant_generator(grid, p, default_momentum_grid(grid, p.r_c));
}

inline ComplexMatrix propagator(const Superoperator& gen, double t) {
  return matrix_exponential(gen.matrix, t);
}

// exp(t L) rho0 at every requested time.
inline std::vector<DensityMatrix> integrate_lindblad(const DensityMatrix& rho0, const Superoperator& gen,
                                                     std::span<const double> times) {
  if (static_cast<Eigen::Index>(rho0.dim()) != gen.dim) {
    throw DimensionError("integrate_lindblad: state dimension does not match generator");
  }
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0)) {
    throw std::invalid_argument("integrate_lindblad: times must be sorted and >= 0");
  }
  const ComplexVector v0 = vectorize(rho0.matrix());
  std::vector<DensityMatrix> out;
  out.reserve(times.size());
  for (double t : times) {
    const ComplexVector v = matrix_exponential(gen.matrix, t) * v0;
    out.emplace_back(unvectorize(v, gen.dim), 1e-9);
  }
  return out;
}

inline std::vector<DensityMatrix> integrate_lindblad(const DensityMatrix& rho0, const LindbladGenerator& gen,
                                                     std::span<const double> times) {
  return integrate_lindblad(rho0, lindblad_superoperator(gen), times);
}

// Classical RK4 for a time-dependent superoperator L(t). Each output interval
// is integrated with n and 2n steps, doubling n until the two agree within
// `tolerance` (max entry).
inline std::vector<DensityMatrix> integrate_time_dependent(
    const DensityMatrix& rho0, const std::function<ComplexMatrix(double)>& generator_at,
    std::span<const double> times, double tolerance = 1e-9) {
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0)) {
    throw std::invalid_argument("integrate_time_dependent: times must be sorted and >= 0");
  }
  const Eigen::Index d = static_cast<Eigen::Index>(rho0.dim());
  auto rk4 = [&](ComplexVector v, double t0, double t1, std::size_t steps) {
    const double h = (t1 - t0) / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = t0 + h * static_cast<double>(k);
      const ComplexMatrix l0 = generator_at(t);
      const ComplexMatrix lm = generator_at(t + 0.5 * h);
      const ComplexMatrix l1 = generator_at(t + h);
      const ComplexVector k1 = l0 * v;
      const ComplexVector k2 = lm * (v + 0.5 * h * k1);
      const ComplexVector k3 = lm * (v + 0.5 * h * k2);
      const ComplexVector k4 = l1 * (v + h * k3);
      v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return v;
  };
  std::vector<DensityMatrix> out;
  ComplexVector v = vectorize(rho0.matrix());
  double t = 0.0;
  for (double target : times) {
    if (target > t) {
      std::size_t steps = 1;
      ComplexVector coarse = rk4(v, t, target, steps);
      while (true) {
        ComplexVector fine = rk4(v, t, target, 2 * steps);
        const double diff = (fine - coarse).cwiseAbs().maxCoeff();
        steps *= 2;
        coarse = std::move(fine);
        if (diff <= tolerance) break;
        if (steps > (std::size_t{1} << 22)) {
          throw NumericalError("integrate_time_dependent: step halving did not converge");
        }
      }
      v = std::move(coarse);
      t = target;
    }
    out.emplace_back(unvectorize(v, d), 1e-9);
  }
  return out;
}

// <x|rho(t)|y> = exp(-Gamma(x, y) t) <x|rho(0)|y>; exact for H0 = 0.
inline DensityMatrix analytic_decoherence_solution(const DensityMatrix& rho0, const grw::PositionGrid& grid,
                                                   double t, const grw::GrwParams& p) {
  if (rho0.dim() != grid.size()) throw DimensionError("analytic_decoherence_solution: state does not match grid");
  const DecoherenceKernel k = analytic_kernel(grid, p);
  ComplexMatrix m = rho0.matrix();
  m.array() *= (-t * k.gamma.array()).exp().cast<Complex>();
  return DensityMatrix(std::move(m), 1e-9);
}

// Density matrix on the grid of a wavefunction: rho_ij = dx psi_i conj(psi_j).
inline DensityMatrix grid_density_matrix(const grw::WaveFunction& psi) {
  const ComplexVector& a = psi.amplitudes();
  return DensityMatrix(psi.grid().spacing() * (a * a.adjoint()));
}

}  // namespace qmem
