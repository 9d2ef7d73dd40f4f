#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include "chronodil/clocks.hpp"
#include "chronodil/constants.hpp"
#include "chronodil/errors.hpp"
#include "chronodil/kinematics.hpp"

namespace chronodil {

using AnyClock = std::variant<IdealisedClock, ClockModel>;

struct DilationResult {
  double t;
  double mean_T_nr;
  double r_factor;
  double error_trace;
  double correction;  // t R (1 + tr E)
  double mean_T;      // mean_T_nr + correction
  double classical_tau;
  double classical_shift;  // classical_tau - t, formed without cancellation
};

struct CoherenceResult {
  double t_sup;
  double t_mix;
  double t_coh;
};

struct CoherenceCheck {
  CoherenceResult direct;  // t_coh from the difference of corrections
  double closed_form;      // t_coh in closed form
  double relative_deviation;
};

namespace dilation {

// tau - t = [-v0^2/2c^2 + g x0/c^2 + v0 g t/c^2 - (g t/c)^2/3] t.
inline double classical_shift(double v0, double x0, double t, const Coupling& k) {
  const double c2 = k.light_speed * k.light_speed;
  return (-v0 * v0 / (2.0 * c2) + k.g * x0 / c2 + v0 * k.g * t / c2 - k.g * k.g * t * t / (3.0 * c2)) * t;
}

inline double classical_proper_time(double v0, double x0, double t, const Coupling& k) {
  return t + classical_shift(v0, x0, t, k);
}

inline std::optional<std::string> low_velocity_warning(double v0, const Coupling& k) {
  if (std::abs(v0) > 0.01 * k.light_speed)
    return "velocity exceeds 0.01 c; the weak-field low-velocity expansion is unreliable";
  return std::nullopt;
}

inline DilationResult mean_clock_time(const AnyClock& clock, const KinematicState& s, double t, const Coupling& k) {
  kinematics::validate(k);
  DilationResult r{};
  r.t = t;
  r.r_factor = kinematics::r_factor(s, t, k);
  std::visit(
      [&](const auto& c) {
        r.mean_T_nr = clocks::mean_clock_time_nr(c, t);
        r.error_trace = clocks::error_trace(c, t);
      },
      clock);
  r.correction = t * r.r_factor * (1.0 + r.error_trace);
  r.mean_T = r.mean_T_nr + r.correction;
  const auto m = kinematics::moments(s);
  r.classical_shift = classical_shift(m.mean_p / k.mass, m.mean_x, t, k);
  r.classical_tau = t + r.classical_shift;
  return r;
}

// Coherence contribution under the good-clock assumption (tr E neglected):
// T_coh = t/(2N) A [cos(th)((dx/2sx)^2 sv^2/c^2 - g dx (1-2a)/c^2)
//                   - sin(th) 2 sv^2 dx (p - m g t)/(hbar c^2)],
// A = 2 sqrt(a(1-a)) exp(-(dx/2sx)^2/2). Written with sin(th) rather than
// (N-1) tan(th), so cos(th) = 0 is regular.
inline double coherence_term(const CatState& cat, double t, const Coupling& k) {
  kinematics::validate(cat);
  kinematics::validate(k);
  const double c2 = k.light_speed * k.light_speed;
  const double sv = cat.base.sigma_p() / k.mass;
  const double r = cat.delta_x0 / (2.0 * cat.base.sigma_x);
  const double a = 2.0 * std::sqrt(cat.alpha * (1.0 - cat.alpha)) * kinematics::overlap(cat);
  const double bracket =
      std::cos(cat.theta) * (r * r * sv * sv / c2 - k.g * cat.delta_x0 * (1.0 - 2.0 * cat.alpha) / c2) -
      std::sin(cat.theta) * 2.0 * sv * sv * cat.delta_x0 * (cat.base.p0 - k.mass * k.g * t) / (constants::hbar * c2);
  return t * a * bracket / (2.0 * kinematics::norm_factor(cat));
}

// T_mix from the weighted constituent results, T_sup = T_mix + T_coh.
inline CoherenceResult t_coh(const CatState& cat, double t, const Coupling& k) {
  const double r_mix = kinematics::r_factor(kinematics::constituents(cat), t, k);
  CoherenceResult out{};
  out.t_mix = t + t * r_mix;
  out.t_coh = coherence_term(cat, t, k);
  out.t_sup = out.t_mix + out.t_coh;
  return out;
}

// Direct path: moments of the cat state against the weighted constituent
// moments, each term of R differenced before assembly.
inline CoherenceCheck sup_vs_mix(const CatState& cat, double t, const Coupling& k) {
  kinematics::validate(k);
  const auto ms = kinematics::moments(cat);
  const auto m1 = kinematics::moments(cat.first());
  const auto m2 = kinematics::moments(cat.second());
  const double a = cat.alpha, b = 1.0 - cat.alpha;
  const double c2 = k.light_speed * k.light_speed;
  const double d_p2 = ms.mean_p2 - (a * m1.mean_p2 + b * m2.mean_p2);
  const double d_p = ms.mean_p - (a * m1.mean_p + b * m2.mean_p);
  const double d_x = ms.mean_x - (a * m1.mean_x + b * m2.mean_x);
  CoherenceCheck c{};
  c.direct.t_mix = t + t * kinematics::r_factor(kinematics::constituents(cat), t, k);
  c.direct.t_coh = t * (-d_p2 / (2.0 * k.mass * k.mass * c2) + k.g * d_x / c2 + d_p * k.g * t / (k.mass * c2));
  c.direct.t_sup = t + t * kinematics::r_factor(cat, t, k);
  c.closed_form = coherence_term(cat, t, k);
  const double scale = std::max(std::abs(c.closed_form), std::abs(c.direct.t_coh));
  c.relative_deviation = scale == 0.0 ? 0.0 : std::abs(c.direct.t_coh - c.closed_form) / scale;
  return c;
}

}  // namespace dilation
}  // namespace chronodil
