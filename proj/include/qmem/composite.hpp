// composite.hpp
// Exact unitary system+environment dynamics at small dimension, reduced
// dynamical maps, and the trace-distance information-flow bound
//
//   D(rho1_S(t), rho2_S(t)) - D(rho1_S(s), rho2_S(s))
//     <= D(rho1_SE(s), rho1_S(s) (x) rho1_E(s))
//      + D(rho2_SE(s), rho2_S(s) (x) rho2_E(s))
//      + D(rho1_E(s), rho2_E(s)),     t >= s.

#pragma once

#include "qmem/core.hpp"
#include "qmem/csv.hpp"
#include "qmem/linalg.hpp"
#include "qmem/nonmarkov.hpp"
#include "qmem/parallel.hpp"
#include "qmem/random.hpp"

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace qmem {

struct CompositeModel {
  CompositeDims dims;
  ComplexMatrix hamiltonian;  // on S (x) E
  DensityMatrix env_state;    // rho_E(0)

  void validate() const {
    require_square(hamiltonian, "CompositeModel");
    if (static_cast<std::size_t>(hamiltonian.rows()) != dims.total()) {
      throw DimensionError("CompositeModel: Hamiltonian dimension " + std::to_string(hamiltonian.rows()) +
                           " is not dim_S*dim_E = " + std::to_string(dims.total()));
    }
    if (hermiticity_error(hamiltonian) > kStateTolerance) {
      throw std::invalid_argument("CompositeModel: Hamiltonian is not Hermitian");
    }
    if (env_state.dim() != dims.dim_e) throw DimensionError("CompositeModel: environment state has wrong dimension");
  }
};

// Caches the eigendecomposition of the total Hamiltonian.
class CompositeEvolution {
 public:
  explicit CompositeEvolution(const CompositeModel& model) : model_(model) {
    model_.validate();
    eig_ = hermitian_eigensystem(model_.hamiltonian);
  }

  const CompositeModel& model() const { return model_; }

  ComplexMatrix unitary(double t) const {
    const auto n = eig_.values.size();
    ComplexVector phases(n);
    for (Eigen::Index i = 0; i < n; ++i) phases(i) = std::exp(-kI * (eig_.values(i) * t));
    return eig_.vectors * phases.asDiagonal() * eig_.vectors.adjoint();
  }

  // U(t) (x (x) rho_E) U(t)^dagger for an arbitrary system operator x.
  ComplexMatrix evolve_operator(const ComplexMatrix& system_op, double t) const {
    const ComplexMatrix u = unitary(t);
    return u * kron(system_op, model_.env_state.matrix()) * u.adjoint();
  }

  DensityMatrix state(const DensityMatrix& rho_s0, double t) const {
    if (rho_s0.dim() != model_.dims.dim_s) throw DimensionError("evolve_composite: system state has wrong dimension");
    ComplexMatrix m = evolve_operator(rho_s0.matrix(), t);
    m = 0.5 * (m + m.adjoint());
    return DensityMatrix(std::move(m));
  }

 private:
  CompositeModel model_;
  EigenSystem eig_;
};

inline DensityMatrix evolve_composite(const CompositeModel& model, const DensityMatrix& rho_s0, double t) {
  return CompositeEvolution(model).state(rho_s0, t);
}

// Phi(t_k) assembled column by column from evolved matrix units |i><j|.
inline MapFamily reduced_family(const CompositeModel& model, std::span<const double> sample_times) {
  const CompositeEvolution evo(model);
  const auto ds = static_cast<Eigen::Index>(model.dims.dim_s);
  std::vector<ComplexMatrix> maps;
  maps.reserve(sample_times.size());
  for (double t : sample_times) {
    ComplexMatrix phi(ds * ds, ds * ds);
    for (Eigen::Index j = 0; j < ds; ++j) {
      for (Eigen::Index i = 0; i < ds; ++i) {
        ComplexMatrix unit = ComplexMatrix::Zero(ds, ds);
        unit(i, j) = 1.0;
        const ComplexMatrix out = partial_trace(evo.evolve_operator(unit, t), model.dims, Subsystem::Environment);
        phi.col(i + j * ds) = vectorize(out);
      }
    }
    maps.push_back(std::move(phi));
  }
  return MapFamily(ds, {sample_times.begin(), sample_times.end()}, std::move(maps));
}

struct BoundReport {
  double s = 0.0;
  double t = 0.0;
  double lhs = 0.0;
  double corr1 = 0.0;     // D(rho1_SE(s), rho1_S(s) (x) rho1_E(s))
  double corr2 = 0.0;     // same for the second state
  double env_dist = 0.0;  // D(rho1_E(s), rho2_E(s))

  double rhs() const { return corr1 + corr2 + env_dist; }
  double slack() const { return rhs() - lhs; }
};

inline BoundReport bound_report(const CompositeEvolution& evo, const DensityMatrix& rho_s1, const DensityMatrix& rho_s2,
                                double s, double t) {
  if (!(s >= 0.0) || !(t >= s)) throw std::invalid_argument("bound_report: need t >= s >= 0");
  const auto& dims = evo.model().dims;
  const DensityMatrix se1_s = evo.state(rho_s1, s);
  const DensityMatrix se2_s = evo.state(rho_s2, s);
  const ComplexMatrix s1_s = partial_trace(se1_s.matrix(), dims, Subsystem::Environment);
  const ComplexMatrix s2_s = partial_trace(se2_s.matrix(), dims, Subsystem::Environment);
  const ComplexMatrix e1_s = partial_trace(se1_s.matrix(), dims, Subsystem::System);
  const ComplexMatrix e2_s = partial_trace(se2_s.matrix(), dims, Subsystem::System);

  ComplexMatrix s1_t, s2_t;
  if (t == s) {
    s1_t = s1_s;
    s2_t = s2_s;
  } else {
    s1_t = partial_trace(evo.state(rho_s1, t).matrix(), dims, Subsystem::Environment);
    s2_t = partial_trace(evo.state(rho_s2, t).matrix(), dims, Subsystem::Environment);
  }

  BoundReport r;
  r.s = s;
  r.t = t;
  r.lhs = trace_distance(s1_t, s2_t) - trace_distance(s1_s, s2_s);
  r.corr1 = trace_distance(se1_s.matrix(), kron(s1_s, e1_s));
  r.corr2 = trace_distance(se2_s.matrix(), kron(s2_s, e2_s));
  r.env_dist = trace_distance(e1_s, e2_s);
  return r;
}

inline BoundReport bound_report(const CompositeModel& model, const DensityMatrix& rho_s1, const DensityMatrix& rho_s2,
                                double s, double t) {
  return bound_report(CompositeEvolution(model), rho_s1, rho_s2, s, t);
}

// Eigenvalues shared by every random campaign Hamiltonian: evenly spaced in
// [-2, 2]. Instances differ by the Haar unitary that rotates them.
inline RealVector campaign_spectrum(Eigen::Index dim) {
  RealVector e(dim);
  for (Eigen::Index k = 0; k < dim; ++k) e(k) = dim == 1 ? 0.0 : -2.0 + 4.0 * static_cast<double>(k) / static_cast<double>(dim - 1);
  return e;
}

struct BoundInstance {
  std::uint64_t seed = 0;
  CompositeModel model;
  DensityMatrix rho1;
  DensityMatrix rho2;
  double s = 0.0;
  double t = 0.0;
};

inline BoundInstance random_bound_instance(std::uint64_t seed, std::size_t dim_s, std::size_t dim_e, double t_max) {
  Rng rng(seed);
  const CompositeDims dims{dim_s, dim_e};
  const auto n = static_cast<Eigen::Index>(dims.total());
  const ComplexMatrix u = random_unitary(n, rng);
  ComplexMatrix h = u * campaign_spectrum(n).cast<Complex>().asDiagonal() * u.adjoint();
  h = 0.5 * (h + h.adjoint());
  DensityMatrix env = random_state(static_cast<Eigen::Index>(dim_e), rng);
  std::bernoulli_distribution pure(0.5);
  const auto ds = static_cast<Eigen::Index>(dim_s);
  DensityMatrix rho1 = pure(rng) ? random_pure_state(ds, rng) : random_state(ds, rng);
  DensityMatrix rho2 = pure(rng) ? random_pure_state(ds, rng) : random_state(ds, rng);
  std::uniform_real_distribution<double> time(0.0, t_max);
  double s = time(rng);
  double t = time(rng);
  if (s > t) std::swap(s, t);
  return {seed, {dims, std::move(h), std::move(env)}, std::move(rho1), std::move(rho2), s, t};
}

struct CampaignSettings {
  std::size_t instances = 10000;
  std::size_t dim_s = 2;
  std::vector<std::size_t> dim_e_options{2, 3};
  double t_max = 3.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

inline constexpr std::size_t kMaxEnvironmentDim = 8;

struct CampaignRow {
  std::uint64_t seed = 0;
  std::size_t dim_e = 0;
  BoundReport report;
};

// Instance i uses seed base + i and dim_E = options[i % options.size()].
inline std::vector<CampaignRow> run_bound_campaign(const CampaignSettings& cfg) {
  if (cfg.dim_e_options.empty()) throw std::invalid_argument("bound campaign: no environment dimensions");
  for (auto de : cfg.dim_e_options) {
    if (de < 1 || de > kMaxEnvironmentDim) throw std::invalid_argument("bound campaign: dim_E must be in [1, 8]");
  }
  if (cfg.dim_s < 1) throw std::invalid_argument("bound campaign: dim_S must be >= 1");
  std::vector<CampaignRow> rows(cfg.instances);
  parallel_for(cfg.instances, cfg.threads, [&](std::size_t i) {
    const std::size_t de = cfg.dim_e_options[i % cfg.dim_e_options.size()];
    const auto inst = random_bound_instance(cfg.seed + i, cfg.dim_s, de, cfg.t_max);
    rows[i] = {inst.seed, de, bound_report(inst.model, inst.rho1, inst.rho2, inst.s, inst.t)};
  });
  return rows;
}

inline void write_campaign_csv(std::ostream& os, std::span<const CampaignRow> rows) {
  csv::Writer w(os);
  w.header({"seed", "dim_e", "s[time]", "t[time]", "lhs[1]", "corr1[1]", "corr2[1]", "env_dist[1]", "slack[1]"});
  for (const auto& r : rows) {
    w.row(static_cast<unsigned long long>(r.seed), r.dim_e, r.report.s, r.report.t, r.report.lhs, r.report.corr1,
          r.report.corr2, r.report.env_dist, r.report.slack());
  }
}

}  // namespace qmem
