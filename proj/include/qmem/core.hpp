// core.hpp
// Shared types, tolerances and error classes for the qmem library.
//
// Conventions used throughout:
//   * hbar = 1, all quantities in dimensionless internal units.
//   * Composite Hilbert spaces are ordered system first: index(s, e) = s * dim_E + e.
//   * Maps on density matrices act on column-stacked vectors: vec(rho)[i + j * d] = rho(i, j).

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qmem {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

// Single tolerance for Hermiticity, trace and positivity of states.
inline constexpr double kStateTolerance = 1e-10;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A mathematically ill-posed request (singular map, vanishing norm, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_error(const ComplexMatrix& m) {
  return max_abs(m - m.adjoint());
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

inline void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
}

// Labels a bipartite space; system factor is the slow index.
struct CompositeDims {
  std::size_t dim_s = 1;
  std::size_t dim_e = 1;

  std::size_t total() const { return dim_s * dim_e; }
};

enum class Subsystem { System, Environment };

// Hermitian, unit-trace, positive semidefinite matrix. Invariants are checked
// once at construction; the stored matrix is never mutated afterwards.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m, double tolerance = kStateTolerance) : m_(std::move(m)) {
    require_square(m_, "DensityMatrix");
    if (m_.rows() == 0) throw DimensionError("DensityMatrix: empty matrix");
    if (!all_finite(m_)) throw NumericalError("DensityMatrix: non-finite entries");
    const double herm = hermiticity_error(m_);
    if (herm > tolerance) {
      throw NumericalError("DensityMatrix: not Hermitian (deviation " + std::to_string(herm) + ")");
    }
    const double tr_err = std::abs(m_.trace() - Complex(1.0, 0.0));
    if (tr_err > tolerance) {
      throw NumericalError("DensityMatrix: trace differs from 1 by " + std::to_string(tr_err));
    }
    ComplexMatrix sym = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -tolerance) {
      throw NumericalError("DensityMatrix: negative eigenvalue " + std::to_string(min_eig));
    }
  }

  static DensityMatrix pure(const ComplexVector& psi) {
    ComplexVector v = psi / psi.norm();
    return DensityMatrix(v * v.adjoint());
  }

  static DensityMatrix maximally_mixed(std::size_t dim) {
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  const ComplexMatrix& matrix() const { return m_; }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  double purity() const { return (m_ * m_).trace().real(); }

 private:
  ComplexMatrix m_;
};

}  // namespace qmem
