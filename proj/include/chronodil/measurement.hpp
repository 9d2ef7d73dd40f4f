#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chronodil/clocks.hpp"
#include "chronodil/errors.hpp"
#include "chronodil/kinematics.hpp"
#include "chronodil/quadrature.hpp"

namespace chronodil {

// Bin n covers [(n - 1/2) delta_p, (n + 1/2) delta_p).
struct MomentumBinning {
  double delta_p;
  long n_lo;
  long n_hi;
  double q;

  double lower(long n) const { return (double(n) - 0.5) * delta_p; }
  double upper(long n) const { return (double(n) + 0.5) * delta_p; }
  long count() const { return n_hi - n_lo + 1; }
};

struct ConditionedResult {
  long bin;
  double probability;
  double sigma_T_given_n;
  double mean_T_given_n;
};

struct ClockStatistics {
  double mean;
  double sigma;
};

struct ConditionedRow {
  double q;
  double t;
  ConditionedResult result;
  double sigma_nr;
  double sigma_unconditioned;
};

namespace measurement {

// Bins of width q sigma_p, enough of them to cover p0 +- span sigma_p.
inline MomentumBinning binning_for(const GaussianState& s, double q, double span = 12.0) {
  kinematics::validate(s);
  if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("binning: q must be positive and finite");
  const double sp = s.sigma_p();
  const double dp = q * sp;
  MomentumBinning b{dp, 0, 0, q};
  b.n_lo = long(std::floor((s.p0 - span * sp) / dp + 0.5));
  b.n_hi = long(std::floor((s.p0 + span * sp) / dp + 0.5));
  return b;
}

// W(p) = -p^2/2m^2c^2 + 3p^4/8m^4c^4.
inline double w_of_p(double p, const Coupling& k) {
  const double r = p / (k.mass * k.light_speed);
  const double r2 = r * r;
  return -0.5 * r2 + 0.375 * r2 * r2;
}

inline double bin_probability(const GaussianState& s, const MomentumBinning& b, long n) {
  kinematics::validate(s);
  const double sp = s.sigma_p();
  const double za = (b.lower(n) - s.p0) / (std::sqrt(2.0) * sp);
  const double zb = (b.upper(n) - s.p0) / (std::sqrt(2.0) * sp);
  // Difference of erfc on the side where it is not close to 1.
  if (za >= 0.0) return 0.5 * (std::erfc(za) - std::erfc(zb));
  if (zb <= 0.0) return 0.5 * (std::erfc(-zb) - std::erfc(-za));
  return 1.0 - 0.5 * (std::erfc(-za) + std::erfc(zb));
}

namespace detail {

struct ShiftMoments {
  double probability;
  double mean;      // E[w | interval]
  double variance;  // Var[w | interval]
};

// Moments of w(p) under the Gaussian density restricted to [a, b], by two-pass
// Gauss-Kronrod in units of sigma_p.
inline ShiftMoments shift_moments(const GaussianState& s, double a, double b, const Coupling& k) {
  const double sp = s.sigma_p();
  const double za = std::max((a - s.p0) / sp, -40.0);
  const double zb = std::min((b - s.p0) / sp, 40.0);
  if (!(zb > za)) return {0.0, 0.0, 0.0};
  const double pc = s.p0 + sp * 0.5 * (za + zb);
  const double wc = w_of_p(pc, k);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * constants::pi);
  auto phi = [&](double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); };
  auto u = [&](double z) { return w_of_p(s.p0 + sp * z, k) - wc; };

  const int pieces = std::max(1, int(std::ceil((zb - za) / 2.0)));
  auto sum = [&](auto&& f) {
    double acc = 0.0;
    const double h = (zb - za) / pieces;
    for (int i = 0; i < pieces; ++i) acc += quadrature::integrate(f, za + h * i, za + h * (i + 1), 1e-12, 8);
    return acc;
  };
  const double p = sum(phi);
  if (!(p > 0.0)) return {0.0, 0.0, 0.0};
  const double m1 = sum([&](double z) { return u(z) * phi(z); }) / p;
  const double var = sum([&](double z) {
                       const double d = u(z) - m1;
                       return d * d * phi(z);
                     }) /
                     p;
  return {p, wc + m1, var};
}

inline void require_flat(const Coupling& k) {
  kinematics::validate(k);
  if (k.g != 0.0) throw DomainError("momentum conditioning requires g = 0");
}

}  // namespace detail

// Idealised clock with Gaussian reading of spread sigma_time: each momentum
// component shifts the reading by t w(p), so within bin n the reading is
// N(t, sigma_time^2) convolved with the law of t w(p) given the bin.
inline ConditionedResult conditioned_sigma(const IdealisedClock& clock, const GaussianState& s, double t,
                                           const Coupling& k, const MomentumBinning& b, long n) {
  detail::require_flat(k);
  kinematics::validate(s);
  if (!(clock.sigma_time > 0.0)) throw DomainError("conditioned_sigma: sigma_time must be positive");
  const double prob = bin_probability(s, b, n);
  if (prob < 1e-15) throw DomainError("conditioned_sigma: bin " + std::to_string(n) + " is empty");
  const auto m = detail::shift_moments(s, b.lower(n), b.upper(n), k);
  ConditionedResult r{};
  r.bin = n;
  r.probability = prob;
  r.mean_T_given_n = t + t * m.mean;
  r.sigma_T_given_n = std::sqrt(clock.sigma_time * clock.sigma_time + t * t * m.variance);
  return r;
}

// No momentum information: the exact mixture over all p.
inline ClockStatistics unconditioned(const IdealisedClock& clock, const GaussianState& s, double t,
                                     const Coupling& k) {
  detail::require_flat(k);
  kinematics::validate(s);
  const double sp = s.sigma_p();
  const auto m = detail::shift_moments(s, s.p0 - 40.0 * sp, s.p0 + 40.0 * sp, k);
  return {t + t * m.mean, std::sqrt(clock.sigma_time * clock.sigma_time + t * t * m.variance)};
}

inline std::vector<ConditionedRow> sweep_conditioned(const IdealisedClock& clock, const GaussianState& s,
                                                     const Coupling& k, const std::vector<double>& qs,
                                                     const std::vector<double>& ts, long bin = 0) {
  std::vector<ConditionedRow> rows;
  rows.reserve(qs.size() * ts.size());
  for (double q : qs) {
    const auto b = binning_for(s, q);
    for (double t : ts) {
      const auto base = unconditioned(clock, s, t, k);
      rows.push_back({q, t, conditioned_sigma(clock, s, t, k, b, bin), clock.sigma_time, base.sigma});
    }
  }
  return rows;
}

}  // namespace measurement
}  // namespace chronodil
