// random.hpp
// Seeded random unitaries, states and Hermitian matrices.

#pragma once

#include "qmem/core.hpp"

#include <cstdint>
#include <random>

namespace qmem {

using Rng = std::mt19937_64;

template <typename Engine>
ComplexMatrix ginibre_matrix(Eigen::Index rows, Eigen::Index cols, Engine& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return g;
}

// Haar unitary: QR of a Ginibre matrix with the phases of diag(R) removed.
template <typename Engine>
ComplexMatrix random_unitary(Eigen::Index dim, Engine& rng) {
  ComplexMatrix g = ginibre_matrix(dim, dim, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Complex d = r(k, k);
    const double mag = std::abs(d);
    q.col(k) *= (mag > 0.0 ? d / mag : Complex(1.0, 0.0));
  }
  return q;
}

inline ComplexMatrix random_unitary(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  return random_unitary(dim, rng);
}

template <typename Engine>
ComplexVector random_pure_vector(Eigen::Index dim, Engine& rng) {
  ComplexVector v = ginibre_matrix(dim, 1, rng).col(0);
  return v / v.norm();
}

template <typename Engine>
DensityMatrix random_pure_state(Eigen::Index dim, Engine& rng) {
  const ComplexVector v = random_pure_vector(dim, rng);
  return DensityMatrix(v * v.adjoint());
}

inline DensityMatrix random_pure_state(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  return random_pure_state(dim, rng);
}

// Hilbert-Schmidt distributed mixed state G G^dagger / tr(G G^dagger).
template <typename Engine>
DensityMatrix random_state(Eigen::Index dim, Engine& rng) {
  const ComplexMatrix g = ginibre_matrix(dim, dim, rng);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(std::move(rho));
}

inline DensityMatrix random_state(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  return random_state(dim, rng);
}

template <typename Engine>
ComplexMatrix random_hermitian(Eigen::Index dim, Engine& rng) {
  const ComplexMatrix g = ginibre_matrix(dim, dim, rng);
  return 0.5 * (g + g.adjoint());
}

}  // namespace qmem
