#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include "chronodil/constants.hpp"
#include "chronodil/errors.hpp"

namespace chronodil {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

inline constexpr Complex I{0.0, 1.0};

inline double max_abs(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& a, double rel_tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  const double scale = max_abs(a);
  if (scale == 0.0) return true;
  return max_abs(a - a.adjoint()) < rel_tol * scale;
}

inline void require_square(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw DimensionError(std::string(what) + ": matrix must be square and non-empty");
}

inline void require_hermitian(const ComplexMatrix& a, const char* what) {
  require_square(a, what);
  if (!is_hermitian(a)) throw std::invalid_argument(std::string(what) + ": matrix is not Hermitian");
}

inline ComplexMatrix identity(Index n) { return ComplexMatrix::Identity(n, n); }

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

// tr(AB) without forming the product.
inline Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols())
    throw DimensionError("trace_product: dimension mismatch");
  return (a.transpose().cwiseProduct(b)).sum();
}

// Qubit basis: |0> ground. sigma_z = |1><1| - |0><0|.
inline ComplexMatrix sigma_x() {
  ComplexMatrix s(2, 2);
  s << 0.0, 1.0, 1.0, 0.0;
  return s;
}

inline ComplexMatrix sigma_y() {
  ComplexMatrix s(2, 2);
  s << 0.0, -I, I, 0.0;
  return s;
}

inline ComplexMatrix sigma_z() {
  ComplexMatrix s(2, 2);
  s << -1.0, 0.0, 0.0, 1.0;
  return s;
}

struct HermitianEigen {
  RealVector values;     // ascending
  ComplexMatrix vectors; // columns
};

inline HermitianEigen eigen_hermitian(const ComplexMatrix& h) {
  require_hermitian(h, "eigen_hermitian");
  const ComplexMatrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen_hermitian: decomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m, double tol = 1e-10) : m_(std::move(m)) {
    require_square(m_, "DensityMatrix");
    if (!is_hermitian(m_)) throw std::invalid_argument("DensityMatrix: not Hermitian");
    const Complex tr = m_.trace();
    if (std::abs(tr - 1.0) > tol) throw std::invalid_argument("DensityMatrix: trace differs from 1");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (m_ + m_.adjoint()), Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -tol)
      throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  }

  static DensityMatrix pure(const ComplexVector& psi) {
    const double n = psi.norm();
    if (n == 0.0) throw std::invalid_argument("DensityMatrix::pure: zero vector");
    const ComplexVector u = psi / n;
    return DensityMatrix(u * u.adjoint());
  }

  const ComplexMatrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

  RealVector eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (m_ + m_.adjoint()), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
  }

 private:
  ComplexMatrix m_;
};

// Cached spectral decomposition of a Hermitian generator.
class Propagator {
 public:
  explicit Propagator(const ComplexMatrix& h, double hbar = constants::hbar)
      : eig_(eigen_hermitian(h)), hbar_(hbar) {}

  ComplexMatrix unitary(double t) const {
    ComplexVector phases(eig_.values.size());
    for (Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(-I * (eig_.values(k) * t / hbar_));
    return eig_.vectors * phases.asDiagonal() * eig_.vectors.adjoint();
  }

  ComplexMatrix evolve(const ComplexMatrix& rho, double t) const {
    if (rho.rows() != eig_.values.size() || rho.cols() != eig_.values.size())
      throw DimensionError("Propagator::evolve: dimension mismatch");
    const ComplexMatrix u = unitary(t);
    return u * rho * u.adjoint();
  }

  const RealVector& energies() const { return eig_.values; }
  const ComplexMatrix& basis() const { return eig_.vectors; }
  double hbar() const { return hbar_; }

 private:
  HermitianEigen eig_;
  double hbar_;
};

inline DensityMatrix evolve_hermitian(const ComplexMatrix& h, const DensityMatrix& rho, double t,
                                      double hbar = constants::hbar) {
  require_hermitian(h, "evolve_hermitian");
  if (h.rows() != rho.dim()) throw DimensionError("evolve_hermitian: dimension mismatch");
  return DensityMatrix(Propagator(h, hbar).evolve(rho.matrix(), t));
}

// Clock factor first, kinematic factor second.
inline ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

enum class Subsystem { clock, kinematic };

struct Dims {
  Index clock;
  Index kinematic;
};

inline ComplexMatrix partial_trace(const ComplexMatrix& rho, Dims dims, Subsystem keep) {
  if (dims.clock <= 0 || dims.kinematic <= 0 || rho.rows() != dims.clock * dims.kinematic ||
      rho.cols() != rho.rows())
    throw DimensionError("partial_trace: dimension mismatch");
  const Index dc = dims.clock;
  const Index dk = dims.kinematic;
  if (keep == Subsystem::clock) {
    ComplexMatrix out = ComplexMatrix::Zero(dc, dc);
    for (Index i = 0; i < dc; ++i)
      for (Index j = 0; j < dc; ++j) out(i, j) = rho.block(i * dk, j * dk, dk, dk).trace();
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  for (Index i = 0; i < dc; ++i) out += rho.block(i * dk, i * dk, dk, dk);
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, Dims dims, Subsystem keep) {
  return DensityMatrix(partial_trace(rho.matrix(), dims, keep));
}

struct Expectation {
  double value;  // Re tr(A rho)
  double imag;   // |Im tr(A rho)|
};

inline Expectation expectation(const ComplexMatrix& a, const DensityMatrix& rho) {
  if (a.rows() != rho.dim() || a.cols() != rho.dim()) throw DimensionError("expectation: dimension mismatch");
  const Complex v = trace_product(a, rho.matrix());
  return {v.real(), std::abs(v.imag())};
}

}  // namespace linalg
}  // namespace chronodil
