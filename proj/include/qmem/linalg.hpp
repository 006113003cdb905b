// linalg.hpp
// Dense linear algebra and quantum-information primitives: tensor products,
// partial traces, eigensystems, matrix exponentials, trace distance and the
// Choi representation of linear maps on density matrices.

#pragma once

#include "qmem/core.hpp"

#include <array>
#include <cmath>
#include <string>

namespace qmem {

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// Traces out `traced` from an operator on the space labelled by `dims`.
// Works on arbitrary operators (not only states), which reduced_family needs
// for matrix units.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, CompositeDims dims, Subsystem traced) {
  require_square(m, "partial_trace");
  const auto ds = static_cast<Eigen::Index>(dims.dim_s);
  const auto de = static_cast<Eigen::Index>(dims.dim_e);
  if (ds == 0 || de == 0 || m.rows() != ds * de) {
    throw DimensionError("partial_trace: dimension " + std::to_string(m.rows()) +
                         " does not factor as " + std::to_string(ds) + "x" + std::to_string(de));
  }
  if (traced == Subsystem::Environment) {
    ComplexMatrix out = ComplexMatrix::Zero(ds, ds);
    for (Eigen::Index e = 0; e < de; ++e) {
      for (Eigen::Index i = 0; i < ds; ++i) {
        for (Eigen::Index j = 0; j < ds; ++j) out(i, j) += m(i * de + e, j * de + e);
      }
    }
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Zero(de, de);
  for (Eigen::Index s = 0; s < ds; ++s) out += m.block(s * de, s * de, de, de);
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, CompositeDims dims, Subsystem traced) {
  if (rho.dim() != dims.total()) {
    throw DimensionError("partial_trace: state dimension " + std::to_string(rho.dim()) +
                         " is not dim_S*dim_E = " + std::to_string(dims.total()));
  }
  return DensityMatrix(partial_trace(rho.matrix(), dims, traced));
}

struct EigenSystem {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // columns are eigenvectors
};

inline EigenSystem hermitian_eigensystem(const ComplexMatrix& m, double hermitian_tolerance = 1e-8) {
  require_square(m, "hermitian_eigensystem");
  const double herm = hermiticity_error(m);
  if (herm > hermitian_tolerance) {
    throw std::invalid_argument("hermitian_eigensystem: input not Hermitian (deviation " +
                                std::to_string(herm) + ")");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_eigensystem: solver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline RealVector hermitian_eigenvalues(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const ComplexMatrix& hermitian) {
  return hermitian_eigenvalues(hermitian).minCoeff();
}

enum class ExpmMethod { Auto, Pade, Spectral };

namespace detail {

// Scaling and squaring with diagonal Padé approximants (Higham 2005).
inline ComplexMatrix expm_pade(const ComplexMatrix& a) {
  const Eigen::Index n = a.rows();
  const ComplexMatrix ident = ComplexMatrix::Identity(n, n);
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();

  static constexpr std::array<double, 4> kB3{120., 60., 12., 1.};
  static constexpr std::array<double, 6> kB5{30240., 15120., 3360., 420., 30., 1.};
  static constexpr std::array<double, 8> kB7{17297280., 8648640., 1995840., 277200.,
                                             25200.,    1512.,    56.,      1.};
  static constexpr std::array<double, 10> kB9{17643225600., 8821612800., 2075673600., 302702400.,
                                              30270240.,    2162160.,    110880.,     3960.,
                                              90.,          1.};
  static constexpr std::array<double, 14> kB13{
      64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
      129060195264000.,   10559470521600.,    670442572800.,    33522128640.,
      1323241920.,        40840800.,          960960.,          16380.,
      182.,               1.};

  auto low_order = [&](const auto& b) {
    const ComplexMatrix a2 = a * a;
    ComplexMatrix power = ident;
    ComplexMatrix u_inner = ComplexMatrix::Zero(n, n);
    ComplexMatrix v = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k + 1 < b.size(); k += 2) {
      v += b[k] * power;
      u_inner += b[k + 1] * power;
      power = power * a2;
    }
    ComplexMatrix u = a * u_inner;
    return ComplexMatrix((v - u).partialPivLu().solve(v + u));
  };

  if (norm1 <= 1.495585217958292e-2) return low_order(kB3);
  if (norm1 <= 2.539398330063230e-1) return low_order(kB5);
  if (norm1 <= 9.504178996162932e-1) return low_order(kB7);
  if (norm1 <= 2.097847961257068) return low_order(kB9);

  constexpr double kTheta13 = 5.371920351148152;
  int squarings = 0;
  if (norm1 > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  const ComplexMatrix as = a / std::ldexp(1.0, squarings);
  const auto& b = kB13;
  const ComplexMatrix a2 = as * as;
  const ComplexMatrix a4 = a2 * a2;
  const ComplexMatrix a6 = a4 * a2;
  ComplexMatrix u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                          b[3] * a2 + b[1] * ident);
  ComplexMatrix v =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
  ComplexMatrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

inline bool is_diagonal(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != Complex(0.0, 0.0)) return false;
    }
  }
  return true;
}

}  // namespace detail

// exp(t * m). Auto picks the exact spectral route for diagonal, Hermitian and
// anti-Hermitian inputs and Padé scaling-and-squaring otherwise.
inline ComplexMatrix matrix_exponential(const ComplexMatrix& m, double t,
                                        ExpmMethod method = ExpmMethod::Auto) {
  require_square(m, "matrix_exponential");
  const Eigen::Index n = m.rows();
  if (t == 0.0 || n == 0) return ComplexMatrix::Identity(n, n);

  if (method != ExpmMethod::Pade) {
    if (detail::is_diagonal(m)) {
      ComplexMatrix out = ComplexMatrix::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) out(i, i) = std::exp(t * m(i, i));
      return out;
    }
    const double scale = std::max(max_abs(m), 1e-300);
    if (hermiticity_error(m) <= 1e-14 * scale) {
      auto es = hermitian_eigensystem(m);
      const RealVector e = (t * es.values.array()).exp();
      return es.vectors * e.cast<Complex>().asDiagonal() * es.vectors.adjoint();
    }
    if (max_abs(m + m.adjoint()) <= 1e-14 * scale) {
      // m = i K with K Hermitian
      auto es = hermitian_eigensystem(-kI * m);
      ComplexVector phases(n);
      for (Eigen::Index i = 0; i < n; ++i) phases(i) = std::exp(kI * (t * es.values(i)));
      return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
    }
    if (method == ExpmMethod::Spectral) {
      throw std::invalid_argument("matrix_exponential: spectral route needs a normal (Hermitian or "
                                  "anti-Hermitian) matrix");
    }
  }
  return detail::expm_pade(t * m);
}

inline double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("trace_distance: dimension mismatch " + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()));
  }
  return 0.5 * hermitian_eigenvalues(a - b).cwiseAbs().sum();
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.matrix(), b.matrix());
}

// Column-stacking vectorization.
inline ComplexVector vectorize(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

inline ComplexMatrix unvectorize(const ComplexVector& v, Eigen::Index dim) {
  if (v.size() != dim * dim) throw DimensionError("unvectorize: length is not dim^2");
  return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

// Superoperator of rho -> a rho b, i.e. b^T (x) a under column stacking.
inline ComplexMatrix sandwich_superoperator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return kron(ComplexMatrix(b.transpose()), a);
}

inline ComplexMatrix apply_map(const ComplexMatrix& map, const ComplexMatrix& rho) {
  if (map.rows() != rho.size() || map.cols() != rho.size()) {
    throw DimensionError("apply_map: map is " + std::to_string(map.rows()) + "x" +
                         std::to_string(map.cols()) + " but state has " + std::to_string(rho.size()) +
                         " entries");
  }
  return unvectorize(map * vectorize(rho), rho.rows());
}

inline Eigen::Index map_dimension(const ComplexMatrix& map) {
  require_square(map, "map_dimension");
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(map.rows()))));
  if (d * d != map.rows()) {
    throw DimensionError("map size " + std::to_string(map.rows()) + " is not a perfect square");
  }
  return d;
}

// C = sum_ij Phi(|i><j|) (x) |i><j|, output factor first. Phi is CP iff C >= 0
// and TP iff tracing the output factor leaves the identity.
inline ComplexMatrix choi_matrix(const ComplexMatrix& map, Eigen::Index dim) {
  if (map.rows() != dim * dim || map.cols() != dim * dim) {
    throw DimensionError("choi_matrix: map is " + std::to_string(map.rows()) + "x" +
                         std::to_string(map.cols()) + ", expected " + std::to_string(dim * dim) +
                         " square");
  }
  ComplexMatrix c(dim * dim, dim * dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      const Eigen::Index in = i + j * dim;
      for (Eigen::Index a = 0; a < dim; ++a) {
        for (Eigen::Index b = 0; b < dim; ++b) c(a * dim + i, b * dim + j) = map(a + b * dim, in);
      }
    }
  }
  return c;
}

inline ComplexMatrix choi_matrix(const ComplexMatrix& map) {
  return choi_matrix(map, map_dimension(map));
}

inline double min_choi_eigenvalue(const ComplexMatrix& map) {
  return min_eigenvalue(choi_matrix(map));
}

// max-entry deviation of Tr_out(C) from the identity
inline double trace_preservation_error(const ComplexMatrix& map) {
  const Eigen::Index d = map_dimension(map);
  const CompositeDims dims{static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  const ComplexMatrix reduced = partial_trace(choi_matrix(map, d), dims, Subsystem::System);
  return max_abs(reduced - ComplexMatrix::Identity(d, d));
}

inline ComplexMatrix identity_map(Eigen::Index dim) {
  return ComplexMatrix::Identity(dim * dim, dim * dim);
}

inline ComplexMatrix transpose_map(Eigen::Index dim) {
  ComplexMatrix m = ComplexMatrix::Zero(dim * dim, dim * dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) m(j + i * dim, i + j * dim) = 1.0;
  }
  return m;
}

// Builds the superoperator matrix of rho -> sum_k K_k rho K_k^dagger.
template <typename Range>
ComplexMatrix kraus_superoperator(const Range& kraus_ops) {
  ComplexMatrix out;
  for (const ComplexMatrix& k : kraus_ops) {
    ComplexMatrix term = sandwich_superoperator(k, k.adjoint());
    if (out.size() == 0) {
      out = term;
    } else {
      out += term;
    }
  }
  return out;
}

}  // namespace qmem
