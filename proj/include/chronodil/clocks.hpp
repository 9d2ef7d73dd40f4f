#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "chronodil/constants.hpp"
#include "chronodil/errors.hpp"
#include "chronodil/linalg.hpp"
#include "chronodil/quadrature.hpp"

namespace chronodil {

enum class ClockKind { swp, quasi_ideal, qubit_phase, custom };

inline const char* to_string(ClockKind k) {
  switch (k) {
    case ClockKind::swp: return "swp";
    case ClockKind::quasi_ideal: return "quasi_ideal";
    case ClockKind::qubit_phase: return "qubit_phase";
    case ClockKind::custom: return "custom";
  }
  return "?";
}

// Continuous covariant POVM: density F(s) per unit clock time, s in [s0, s1).
struct ContinuousPovm {
  ComplexMatrix at_zero;
  double s0;
  double s1;
};

// Analytic clock with [T, H] = i hbar and a Gaussian clock-time profile of
// width sigma_time. Only its spread is a parameter.
struct IdealisedClock {
  double sigma_time = 0.0;
};

class ClockModel {
 public:
  ClockModel(ClockKind kind, ComplexMatrix hamiltonian, ComplexMatrix time_operator,
             linalg::DensityMatrix rho0, double period, std::optional<ContinuousPovm> povm = {},
             ComplexMatrix time_basis = {}) {
    linalg::require_hermitian(hamiltonian, "ClockModel Hamiltonian");
    linalg::require_hermitian(time_operator, "ClockModel time operator");
    if (time_operator.rows() != hamiltonian.rows() || rho0.dim() != hamiltonian.rows())
      throw DimensionError("ClockModel: operand dimensions differ");
    if (!(period > 0.0)) throw DomainError("ClockModel: period must be positive");
    auto data = std::make_shared<Data>();
    auto& d = *data;
    d.kind = kind;
    d.h = std::move(hamiltonian);
    d.t = std::move(time_operator);
    d.rho0 = std::move(rho0);
    d.period = period;
    d.povm = std::move(povm);
    d.time_basis = std::move(time_basis);
    const auto eig = linalg::eigen_hermitian(d.h);
    d.energies = eig.values;
    d.v = eig.vectors;
    d.t_e = d.v.adjoint() * d.t * d.v;
    d.comm_e = d.v.adjoint() * linalg::commutator(d.t, d.h) * d.v;
    d.rho0_e = d.v.adjoint() * d.rho0.matrix() * d.v;
    d.offset = linalg::trace_product(d.t, d.rho0.matrix()).real();
    d_ = std::move(data);
  }

  ClockKind kind() const { return d_->kind; }
  Index dim() const { return d_->h.rows(); }
  const ComplexMatrix& hamiltonian() const { return d_->h; }
  const ComplexMatrix& time_operator() const { return d_->t; }
  const linalg::DensityMatrix& initial_state() const { return d_->rho0; }
  double period() const { return d_->period; }
  const std::optional<ContinuousPovm>& povm() const { return d_->povm; }
  // Columns |theta_m>; empty unless the clock reads a discrete time basis.
  const ComplexMatrix& time_basis() const { return d_->time_basis; }
  // tr[T rho0], subtracted so that <T>(0) = 0.
  double time_offset() const { return d_->offset; }

  const RealVector& energies() const { return d_->energies; }
  const ComplexMatrix& energy_basis() const { return d_->v; }
  const ComplexMatrix& initial_state_energy_basis() const { return d_->rho0_e; }
  const ComplexMatrix& time_operator_energy_basis() const { return d_->t_e; }
  const ComplexMatrix& commutator_energy_basis() const { return d_->comm_e; }

  ComplexMatrix to_energy_basis(const ComplexMatrix& a) const { return d_->v.adjoint() * a * d_->v; }
  ComplexMatrix from_energy_basis(const ComplexMatrix& a) const { return d_->v * a * d_->v.adjoint(); }

  // Phase factor exp(-i (E_k - E_l) t / hbar) as a matrix.
  ComplexMatrix phase_matrix(double t) const {
    const Index n = dim();
    ComplexMatrix p(n, n);
    for (Index k = 0; k < n; ++k)
      for (Index l = 0; l < n; ++l)
        p(k, l) = std::exp(-linalg::I * ((d_->energies(k) - d_->energies(l)) * t / constants::hbar));
    return p;
  }

  // rho_NR(t) in the energy basis.
  ComplexMatrix evolved_energy_basis(double t) const { return d_->rho0_e.cwiseProduct(phase_matrix(t)); }

  // rho_NR(t) in the construction basis.
  ComplexMatrix evolved(double t) const { return from_energy_basis(evolved_energy_basis(t)); }

  // n-th moment operator of the time POVM: T^n for projective clocks, direct
  // integration of s^n F(s) for continuous ones.
  ComplexMatrix moment_operator(int n) const {
    if (n < 0) throw std::invalid_argument("moment_operator: negative order");
    if (n == 0) return linalg::identity(dim());
    if (!d_->povm) {
      ComplexMatrix out = d_->t;
      for (int k = 1; k < n; ++k) out = out * d_->t;
      return out;
    }
    const auto& p = *d_->povm;
    const Index m = dim();
    ComplexMatrix out(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) {
        const auto re = [&](double s) { return std::pow(s, n) * povm_density(s)(i, j).real(); };
        const auto im = [&](double s) { return std::pow(s, n) * povm_density(s)(i, j).imag(); };
        out(i, j) = Complex(quadrature::integrate_l1(re, p.s0, p.s1), quadrature::integrate_l1(im, p.s0, p.s1));
      }
    return out;
  }

  // F(s) = U(s) F(0) U(s)^dagger.
  ComplexMatrix povm_density(double s) const {
    if (!d_->povm) throw DomainError("povm_density: clock has no continuous POVM");
    const ComplexMatrix f0 = to_energy_basis(d_->povm->at_zero);
    return from_energy_basis(f0.cwiseProduct(phase_matrix(s)));
  }

 private:
  struct Data {
    ClockKind kind{};
    ComplexMatrix h, t;
    linalg::DensityMatrix rho0{ComplexMatrix::Identity(1, 1)};
    double period = 0.0;
    std::optional<ContinuousPovm> povm;
    ComplexMatrix time_basis;
    RealVector energies;
    ComplexMatrix v, t_e, comm_e, rho0_e;
    double offset = 0.0;
  };
  std::shared_ptr<const Data> d_;
};

namespace clocks {

namespace detail {

inline void require_frequency(double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("clock frequency must be positive and finite");
}

inline ComplexMatrix fourier_time_basis(int d) {
  ComplexMatrix b(d, d);
  const double norm = 1.0 / std::sqrt(static_cast<double>(d));
  for (int j = 0; j < d; ++j)
    for (int m = 0; m < d; ++m)
      b(j, m) = norm * std::exp(-linalg::I * (2.0 * constants::pi * j * m / d));
  return b;
}

inline ComplexMatrix ladder_hamiltonian(int d, double omega) {
  ComplexMatrix h = ComplexMatrix::Zero(d, d);
  for (int j = 0; j < d; ++j) h(j, j) = static_cast<double>(j) * constants::hbar * omega;
  return h;
}

inline ComplexMatrix sawtooth_time_operator(const ComplexMatrix& basis, double period) {
  const Index d = basis.cols();
  RealVector ticks(d);
  for (Index m = 0; m < d; ++m) ticks(m) = static_cast<double>(m) * period / static_cast<double>(d);
  ComplexMatrix t = basis * ticks.cast<Complex>().asDiagonal() * basis.adjoint();
  return 0.5 * (t + t.adjoint());
}

}  // namespace detail

inline ClockModel build_swp(int d, double omega) {
  if (d < 2) throw DomainError("build_swp: d must be at least 2");
  detail::require_frequency(omega);
  const double period = 2.0 * constants::pi / omega;
  const ComplexMatrix basis = detail::fourier_time_basis(d);
  return ClockModel(ClockKind::swp, detail::ladder_hamiltonian(d, omega),
                    detail::sawtooth_time_operator(basis, period),
                    linalg::DensityMatrix::pure(basis.col(0)), period, std::nullopt, basis);
}

// Gaussian amplitudes exp(-pi (k - m0)^2 / sigma_bar^2) exp(2 pi i n0 (k - m0) / d)
// on the d integers k in [m0 - d/2, m0 + d/2), folded onto |theta_{k mod d}>.
inline ClockModel build_quasi_ideal(int d, double omega, double sigma_bar, double m0, double n0) {
  if (d < 2) throw DomainError("build_quasi_ideal: d must be at least 2");
  detail::require_frequency(omega);
  if (!(sigma_bar > 0.0 && sigma_bar < d)) throw DomainError("build_quasi_ideal: sigma_bar must lie in (0, d)");
  if (!std::isfinite(m0) || !std::isfinite(n0)) throw DomainError("build_quasi_ideal: m0, n0 must be finite");
  const double period = 2.0 * constants::pi / omega;
  const ComplexMatrix basis = detail::fourier_time_basis(d);
  ComplexVector psi = ComplexVector::Zero(d);
  const long k0 = static_cast<long>(std::ceil(m0 - 0.5 * d));
  for (long k = k0; k < k0 + d; ++k) {
    const double x = static_cast<double>(k) - m0;
    const Complex g = std::exp(-constants::pi * x * x / (sigma_bar * sigma_bar)) *
                      std::exp(linalg::I * (2.0 * constants::pi * n0 * x / d));
    const long m = ((k % d) + d) % d;
    psi += g * basis.col(m);
  }
  return ClockModel(ClockKind::quasi_ideal, detail::ladder_hamiltonian(d, omega),
                    detail::sawtooth_time_operator(basis, period), linalg::DensityMatrix::pure(psi),
                    period, std::nullopt, basis);
}

inline ClockModel build_quasi_ideal(int d, double omega, double sigma_bar) {
  return build_quasi_ideal(d, omega, sigma_bar, 0.25 * d, 0.5 * (d - 1));
}

// |theta> = (|0> + e^{-i theta}|1>)/sqrt2, F(theta) = |theta><theta|/pi, s = theta/omega.
inline ClockModel build_qubit_phase(double omega) {
  detail::require_frequency(omega);
  const double period = 2.0 * constants::pi / omega;
  const double r = 1.0 / std::sqrt(2.0);
  ComplexVector plus(2);
  plus << r, r;
  const ComplexMatrix f0 = (omega / constants::pi) * plus * plus.adjoint();
  const ComplexMatrix h = 0.5 * constants::hbar * omega * linalg::sigma_z();
  // First moment of the covariant density over one period, in closed form:
  // int_0^P s ds = P^2/2 and int_0^P s e^{-i w s} ds = i P / w.
  ComplexMatrix t(2, 2);
  t(0, 0) = t(1, 1) = 0.5 * period;
  t(1, 0) = linalg::I / omega;
  t(0, 1) = -linalg::I / omega;
  t = 0.5 * (t + t.adjoint());
  return ClockModel(ClockKind::qubit_phase, h, t, linalg::DensityMatrix::pure(plus), period,
                    ContinuousPovm{f0, 0.0, period});
}

struct ErrorTraceSeries {
  std::vector<double> times;
  std::vector<double> values;
  double max_imag = 0.0;
};

inline Complex error_trace_complex(const ClockModel& clock, double t) {
  const Complex tr = linalg::trace_product(clock.commutator_energy_basis(), clock.evolved_energy_basis(t));
  return -linalg::I * tr / constants::hbar - 1.0;
}

// tr E(t) = -(i/hbar) tr([T, H] rho_NR(t)) - 1.
inline double error_trace(const ClockModel& clock, double t) {
  const Complex v = error_trace_complex(clock, t);
  if (std::abs(v.imag()) > 1e-10 * std::max(1.0, std::abs(v.real())))
    throw NumericalError("error_trace: imaginary part exceeds 1e-10");
  return v.real();
}

inline double error_trace(const IdealisedClock&, double) { return 0.0; }

inline ErrorTraceSeries error_trace_series(const ClockModel& clock, const std::vector<double>& times) {
  ErrorTraceSeries s;
  s.times = times;
  s.values.reserve(times.size());
  for (double t : times) {
    const Complex v = error_trace_complex(clock, t);
    s.values.push_back(v.real());
    s.max_imag = std::max(s.max_imag, std::abs(v.imag()));
  }
  return s;
}

// Error operator E(t) = (i[H, T]/hbar - 1) rho_NR(t).
inline ComplexMatrix error_operator(const ClockModel& clock, double t) {
  const ComplexMatrix e_hat =
      linalg::I * linalg::commutator(clock.hamiltonian(), clock.time_operator()) / constants::hbar -
      linalg::identity(clock.dim());
  return e_hat * clock.evolved(t);
}

// tr[T rho_NR(t)] - tr[T rho0].
inline double mean_clock_time_nr(const ClockModel& clock, double t) {
  return linalg::trace_product(clock.time_operator_energy_basis(), clock.evolved_energy_basis(t)).real() -
         clock.time_offset();
}

inline double mean_clock_time_nr(const IdealisedClock&, double t) { return t; }

struct MeanTimeIdentity {
  double direct;      // <T>_NR(t)
  double integrated;  // t + int_0^t tr E
  double residual;
  std::size_t intervals;
};

// <T>_NR(t) = t + int_0^t tr E(t') dt'. Simpson with >= 200 points per period,
// refined until successive estimates differ by < 1e-9 periods.
inline MeanTimeIdentity check_mean_time_identity(const ClockModel& clock, double t) {
  const double periods = std::abs(t) / clock.period();
  const auto n0 = static_cast<std::size_t>(200.0 * std::max(1.0, std::ceil(periods)));
  const auto q = quadrature::simpson_refined([&](double s) { return error_trace_complex(clock, s).real(); },
                                             0.0, t, n0, 1e-9 * clock.period());
  const double direct = mean_clock_time_nr(clock, t);
  const double integrated = t + q.value;
  return {direct, integrated, std::abs(direct - integrated), q.intervals};
}

// Moments in s^n. Residuals are in units of T0^n.
struct MomentCheck {
  double lhs;
  double rhs;
  double residual;            // |lhs - rhs|
  double wrap_correction;     // bounded-domain term, lhs = rhs + wrap_correction
  double corrected_residual;  // |lhs - rhs - wrap_correction|
  double wrap_probability;    // initial probability carried across the period boundary
};

namespace detail {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

// <T^(n)>(t) against sum_k C(n,k) t^(n-k) <T^(k)>(0), raw moments (no offset).
inline MomentCheck covariant_moment_check(const ClockModel& clock, int n, double t) {
  if (n < 0) throw std::invalid_argument("covariant_moment_check: negative order");
  const double period = clock.period();
  const ComplexMatrix rho_t = clock.evolved(t);
  const ComplexMatrix& rho0 = clock.initial_state().matrix();
  MomentCheck r{};
  r.lhs = linalg::trace_product(clock.moment_operator(n), rho_t).real();
  for (int k = 0; k <= n; ++k)
    r.rhs += detail::binomial(n, k) * std::pow(t, n - k) *
             linalg::trace_product(clock.moment_operator(k), rho0).real();
  r.residual = std::abs(r.lhs - r.rhs);
  if (clock.kind() == ClockKind::swp || clock.kind() == ClockKind::quasi_ideal) {
    const Index d = clock.dim();
    const double tick = period / static_cast<double>(d);
    const double steps = t / tick;
    if (std::abs(steps - std::round(steps)) > 1e-9 || steps < 0.0 || steps >= static_cast<double>(d))
      throw DomainError("covariant_moment_check: discrete clock is covariant only at t = k T0/d, 0 <= k < d");
    const auto s = static_cast<Index>(std::llround(steps));
    const ComplexMatrix& basis = clock.time_basis();
    for (Index m = d - s; m < d; ++m) {
      const double p = (basis.col(m).adjoint() * rho0 * basis.col(m))(0, 0).real();
      const double tm = static_cast<double>(m) * tick;
      r.wrap_probability += p;
      r.wrap_correction += p * (std::pow(tm + t - period, n) - std::pow(tm + t, n));
    }
  } else if (clock.povm()) {
    if (t < 0.0 || t >= period) throw DomainError("covariant_moment_check: t must lie in [0, T0)");
    const auto p0 = [&](double s) { return linalg::trace_product(clock.povm_density(s), rho0).real(); };
    r.wrap_probability = quadrature::integrate([&](double s) { return p0(s - t + period); }, 0.0, t);
    r.wrap_correction = quadrature::integrate(
        [&](double s) { return (std::pow(s, n) - std::pow(s + period, n)) * p0(s - t + period); }, 0.0, t);
  } else {
    throw DomainError("covariant_moment_check: clock carries no covariant time measurement");
  }
  const double unit = std::pow(period, n);
  r.residual /= unit;
  r.corrected_residual = std::abs(r.lhs - r.rhs - r.wrap_correction) / unit;
  return r;
}

// Idealised clock with a Gaussian time profile: moments of N(t, sigma^2).
inline MomentCheck covariant_moment_check(const IdealisedClock& clock, int n, double t) {
  const auto gaussian_moment = [&](double mu, int k) {
    double m = 0.0;
    for (int j = 0; j <= k; j += 2) {
      double dfact = 1.0;
      for (int i = j - 1; i > 0; i -= 2) dfact *= i;
      m += detail::binomial(k, j) * std::pow(mu, k - j) * std::pow(clock.sigma_time, j) * dfact;
    }
    return m;
  };
  MomentCheck r{};
  r.lhs = gaussian_moment(t, n);
  for (int k = 0; k <= n; ++k) r.rhs += detail::binomial(n, k) * std::pow(t, n - k) * gaussian_moment(0.0, k);
  r.residual = r.corrected_residual = std::abs(r.lhs - r.rhs);
  return r;
}

struct CommutatorCheck {
  bool applicable;
  double residual;
  std::string note;
};

// max |[T, H] - i hbar 1 - i hbar (s0 - s1) F(0)| / hbar.
inline CommutatorCheck commutator_form_check(const ClockModel& clock) {
  if (!clock.povm()) {
    if (clock.kind() == ClockKind::swp || clock.kind() == ClockKind::quasi_ideal)
      return {false, std::numeric_limits<double>::quiet_NaN(),
              "discrete PVM - continuous identity not applicable"};
    throw DomainError("commutator_form_check: clock has no continuous POVM");
  }
  const auto& p = *clock.povm();
  const ComplexMatrix lhs = linalg::commutator(clock.time_operator(), clock.hamiltonian());
  const ComplexMatrix rhs = linalg::I * constants::hbar * linalg::identity(clock.dim()) +
                            linalg::I * constants::hbar * (p.s0 - p.s1) * p.at_zero;
  return {true, linalg::max_abs(lhs - rhs) / constants::hbar, "bounded clock time: boundary term included"};
}

inline CommutatorCheck commutator_form_check(const IdealisedClock&) {
  return {true, 0.0, "unbounded clock time: canonical form, no boundary term"};
}

}  // namespace clocks
}  // namespace chronodil
