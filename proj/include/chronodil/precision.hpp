#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <variant>

#include "chronodil/clocks.hpp"
#include "chronodil/dilation.hpp"
#include "chronodil/errors.hpp"
#include "chronodil/kinematics.hpp"

namespace chronodil {

// Coefficient of the W^2 term in the second-order expansion of exp(i H (1 + W) t).
// taylor: -t^2/2 (exact series). doubled: -t^2, which reproduces the
// t^2 (<p^4> + sigma_p2^2) / (8 sigma m^4 c^4) idealised term.
enum class SecondOrder { taylor, doubled };

inline double second_order_weight(SecondOrder s) { return s == SecondOrder::taylor ? 0.5 : 1.0; }

struct WMoments {
  double mean_w;
  double mean_w2;  // truncated to <p^4> / 4 m^4 c^4
  bool truncation_negative;
};

struct PrecisionBreakdown {
  double sigma_nr;
  double sigma_i;
  double sigma_ni;
  double total;
  KinematicMoments moments;
  WMoments w;
};

struct NonIdealTerms {
  std::array<double, 4> braces;  // the four contributions, in order
  double value;
  double fourth_printed;  // fourth contribution with the brace as usually printed, for comparison
  double imag;  // largest imaginary residue among the traces
};

namespace precision {

namespace detail {
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}
}  // namespace detail

inline void require_flat(const Coupling& k) {
  kinematics::validate(k);
  if (k.g != 0.0) throw DomainError("precision decomposition requires g = 0");
}

inline void require_projective(const ClockModel& clock) {
  if (clock.povm())
    throw DomainError("precision decomposition assumes a projection-valued time measurement");
}

// W = -p^2/2m^2c^2 + 3p^4/8m^4c^4.
inline WMoments w_moments(const KinematicState& s, const Coupling& k) {
  kinematics::validate(k);
  const auto m = kinematics::moments(s);
  const double mc = k.mass * k.light_speed;
  const double mc_2 = mc * mc;
  const double mc_4 = mc_2 * mc_2;
  WMoments w{};
  w.mean_w = -m.mean_p2 / (2.0 * mc_2) + 3.0 * m.mean_p4 / (8.0 * mc_4);
  w.mean_w2 = m.mean_p4 / (4.0 * mc_4);
  w.truncation_negative = w.mean_w2 < 0.0;
  return w;
}

// sigma_I = t^2 (2 l <p^4> - <p^2>^2) / (8 sigma_NR m^4 c^4), l the W^2 weight.
inline double sigma_ideal_term(const KinematicState& s, double t, double sigma_nr, const Coupling& k,
                               SecondOrder order = SecondOrder::taylor) {
  kinematics::validate(k);
  if (!(sigma_nr > 0.0)) throw DomainError("sigma_ideal_term: sigma_NR must be positive");
  const auto m = kinematics::moments(s);
  const double l = second_order_weight(order);
  const double mc = k.mass * k.light_speed;
  const double mc4 = std::pow(mc, 4);
  return t * t * (2.0 * l * m.mean_p4 - m.mean_p2 * m.mean_p2) / (8.0 * sigma_nr * mc4);
}

// Standard deviation of the clock reading without relativistic coupling.
inline double sigma_nr(const ClockModel& clock, double t) {
  const ComplexMatrix rho = clock.evolved_energy_basis(t);
  const ComplexMatrix& te = clock.time_operator_energy_basis();
  const double mu = linalg::trace_product(te, rho).real();
  const ComplexMatrix centred = te - mu * linalg::identity(clock.dim());
  const double var = linalg::trace_product(centred * centred, rho).real();
  return std::sqrt(std::max(var, 0.0));
}

inline double sigma_nr(const IdealisedClock& clock, double) { return clock.sigma_time; }

// Non-idealised contribution, with e = i[H, T]/hbar - 1 and E(t) = e rho_NR(t).
inline NonIdealTerms sigma_nonideal_terms(const ClockModel& clock, const KinematicState& s, double t,
                                          const Coupling& k, SecondOrder order = SecondOrder::taylor) {
  require_flat(k);
  require_projective(clock);
  const auto w = w_moments(s, k);
  const double hb = constants::hbar;
  const ComplexMatrix& h = clock.hamiltonian();
  const ComplexMatrix& tm = clock.time_operator();
  const ComplexMatrix rho = clock.evolved(t);
  const ComplexMatrix id = linalg::identity(clock.dim());
  const ComplexMatrix e_hat = linalg::I * linalg::commutator(h, tm) / hb - id;
  const ComplexMatrix e = e_hat * rho;
  const ComplexMatrix ed = e.adjoint();
  const double sig = sigma_nr(clock, t);
  if (!(sig > 0.0)) throw DomainError("sigma_nonideal_term: sigma_NR vanishes");
  const Complex mean_t = linalg::trace_product(tm, rho);
  const Complex tr_e = e.trace();

  const Complex tr_et = linalg::trace_product(e + ed, tm);
  const Complex b1 = tr_et - 2.0 * mean_t * tr_e;
  const Complex b3 = 2.0 * tr_e + tr_e * tr_e;
  // Fourth brace from the double commutator [H, [H, T^2]] - 2<T>[H, [H, T]] + 2 hbar^2.
  const ComplexMatrix he = linalg::commutator(h, e_hat);
  const Complex q1 = linalg::trace_product(e_hat * e_hat, rho);
  const Complex q2 = linalg::I / hb * linalg::trace_product(he * tm + tm * he, rho);
  const Complex q3 = 2.0 * linalg::I / hb * mean_t * linalg::trace_product(h, e - ed);
  const Complex b4 = -4.0 * tr_e - 2.0 * q1 - q2 + q3;
  const Complex b4_printed =
      2.0 * tr_e +
      linalg::I / hb *
          (linalg::trace_product(h * e_hat * tm - tm * e_hat * h, rho) + linalg::trace_product(h * tm, e) -
           linalg::trace_product(ed * tm, h)) +
      2.0 * linalg::I / hb * mean_t * linalg::trace_product(h, e - ed);

  const double wt = w.mean_w * t;
  const double l = second_order_weight(order);
  NonIdealTerms out{};
  const std::array<Complex, 4> terms{wt / (2.0 * sig) * b1, -wt * wt / (8.0 * sig * sig * sig) * b1 * b1,
                                     -wt * wt / (2.0 * sig) * b3, -l * w.mean_w2 * t * t / (2.0 * sig) * b4};
  // Size of the ingredients, against which the imaginary residue is judged.
  // For good clocks the traces sit at rounding level, so a floor is added.
  const double m1 = std::abs(tr_et) + 2.0 * std::abs(mean_t * tr_e);
  const double m3 = 2.0 * std::abs(tr_e) + std::norm(tr_e);
  const double m4 = 4.0 * std::abs(tr_e) + 2.0 * std::abs(q1) + std::abs(q2) + std::abs(q3);
  const double c1 = std::abs(wt / (2.0 * sig)), c2 = std::abs(wt * wt / (8.0 * sig * sig * sig)),
               c3 = std::abs(wt * wt / (2.0 * sig)), c4 = std::abs(l * w.mean_w2 * t * t / (2.0 * sig));
  const double scale = c1 * m1 + c2 * m1 * m1 + c3 * m3 + c4 * m4;
  const double u = 16.0 * double(clock.dim()) * std::numeric_limits<double>::epsilon() * (1.0 + linalg::max_abs(e_hat));
  const double floor = c1 * u * linalg::max_abs(tm) + c3 * u + c4 * u * (1.0 + linalg::max_abs(e_hat)) * double(clock.dim());
  Complex total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    out.braces[i] = terms[i].real();
    total += terms[i];
  }
  out.value = total.real();
  out.fourth_printed = (-l * w.mean_w2 * t * t / (2.0 * sig) * b4_printed).real();
  out.imag = std::abs(total.imag());
  if (out.imag > 1e-10 * scale + floor)
    throw NumericalError("sigma_nonideal_term: assembled value is not real within 1e-10 (imaginary part " +
                         detail::sci(out.imag) + ", scale " + detail::sci(scale) + ")");
  return out;
}

inline double sigma_nonideal_term(const ClockModel& clock, const KinematicState& s, double t, const Coupling& k,
                                  SecondOrder order = SecondOrder::taylor) {
  return sigma_nonideal_terms(clock, s, t, k, order).value;
}

inline PrecisionBreakdown sigma_breakdown(const AnyClock& clock, const KinematicState& s, double t,
                                          const Coupling& k, SecondOrder order = SecondOrder::taylor) {
  require_flat(k);
  PrecisionBreakdown b{};
  b.moments = kinematics::moments(s);
  b.w = w_moments(s, k);
  std::visit(
      [&](const auto& c) {
        using C = std::decay_t<decltype(c)>;
        b.sigma_nr = sigma_nr(c, t);
        if constexpr (std::is_same_v<C, ClockModel>) {
          require_projective(c);
          b.sigma_ni = sigma_nonideal_term(c, s, t, k, order);
        } else {
          b.sigma_ni = 0.0;
        }
      },
      clock);
  b.sigma_i = sigma_ideal_term(s, t, b.sigma_nr, k, order);
  b.total = b.sigma_nr + b.sigma_i + b.sigma_ni;
  return b;
}

}  // namespace precision
}  // namespace chronodil
