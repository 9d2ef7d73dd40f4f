#pragma once

#include <random>

#include "chronodil/linalg.hpp"

namespace testsupport {

using chronodil::Complex;
using chronodil::ComplexMatrix;
using chronodil::ComplexVector;
using chronodil::Index;

inline ComplexMatrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = Complex(n(rng), n(rng));
  return a;
}

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, Index d, double scale = 1.0) {
  const ComplexMatrix a = random_matrix(rng, d, d);
  return scale * 0.5 * (a + a.adjoint());
}

inline ComplexVector random_state(std::mt19937_64& rng, Index d) {
  ComplexVector v = random_matrix(rng, d, 1).col(0);
  return v / v.norm();
}

// Mixed state of full rank.
inline ComplexMatrix random_density(std::mt19937_64& rng, Index d) {
  const ComplexMatrix a = random_matrix(rng, d, d);
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace testsupport
