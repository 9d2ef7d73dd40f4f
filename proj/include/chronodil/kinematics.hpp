#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "chronodil/constants.hpp"
#include "chronodil/errors.hpp"
#include "chronodil/linalg.hpp"

namespace chronodil {

// Minimum-uncertainty Gaussian, sigma_p = hbar / (2 sigma_x).
struct GaussianState {
  double x0 = 0.0;       // m
  double p0 = 0.0;       // kg m/s
  double sigma_x = 0.0;  // m

  double sigma_p() const { return constants::hbar / (2.0 * sigma_x); }
  bool operator==(const GaussianState&) const = default;
};

// (sqrt(alpha) psi1 + e^{i theta} sqrt(1 - alpha) psi2) / sqrt(N), psi2 displaced
// upwards by delta_x0 >= 0. Both packets share base.p0 and base.sigma_x.
struct CatState {
  GaussianState base;
  double delta_x0 = 0.0;
  double alpha = 0.5;
  double theta = 0.0;

  GaussianState first() const { return base; }
  GaussianState second() const { return {base.x0 + delta_x0, base.p0, base.sigma_x}; }
  bool operator==(const CatState&) const = default;
};

struct MixtureComponent {
  double weight;
  GaussianState state;
  bool operator==(const MixtureComponent&) const = default;
};

struct MixtureState {
  std::vector<MixtureComponent> components;
  bool operator==(const MixtureState&) const = default;
};

using KinematicState = std::variant<GaussianState, CatState, MixtureState>;

// Physical parameters shared by the coupling terms.
struct Coupling {
  double mass = 0.0;                              // kg
  double g = constants::standard_gravity;         // m/s^2
  double light_speed = constants::c;              // m/s, scaled in oracle runs
  bool operator==(const Coupling&) const = default;
};

struct KinematicMoments {
  double mean_x;
  double mean_p;
  double mean_p2;
  double mean_p4;
  double var_p2;
};

namespace kinematics {

inline void validate(const GaussianState& s) {
  if (!(s.sigma_x > 0.0) || !std::isfinite(s.sigma_x)) throw DomainError("sigma_x must be positive and finite");
  if (!std::isfinite(s.x0) || !std::isfinite(s.p0)) throw DomainError("state means must be finite");
}

inline double overlap(const CatState& c) {
  const double r = c.delta_x0 / (2.0 * c.base.sigma_x);
  return std::exp(-0.5 * r * r);
}

// N = 1 + 2 sqrt(alpha (1 - alpha)) exp(-(dx/2 sigma_x)^2 / 2) cos theta.
inline double norm_factor(const CatState& c) {
  return 1.0 + 2.0 * std::sqrt(c.alpha * (1.0 - c.alpha)) * overlap(c) * std::cos(c.theta);
}

inline void validate(const CatState& c) {
  validate(c.base);
  if (!(c.delta_x0 >= 0.0) || !std::isfinite(c.delta_x0)) throw DomainError("delta_x0 must be >= 0");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  if (!std::isfinite(c.theta)) throw DomainError("theta must be finite");
  if (!(norm_factor(c) > 1e-12)) throw DomainError("cat state has vanishing norm");
}

inline void validate(const MixtureState& m) {
  if (m.components.empty()) throw DomainError("mixture has no components");
  double sum = 0.0;
  for (const auto& c : m.components) {
    if (!(c.weight >= 0.0)) throw DomainError("mixture weights must be non-negative");
    validate(c.state);
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
}

inline void validate(const KinematicState& s) {
  std::visit([](const auto& v) { validate(v); }, s);
}

inline void validate(const Coupling& c) {
  if (!(c.mass > 0.0) || !std::isfinite(c.mass)) throw DomainError("mass must be positive");
  if (!std::isfinite(c.g)) throw DomainError("g must be finite");
  if (!(c.light_speed > 0.0) || !std::isfinite(c.light_speed)) throw DomainError("light speed must be positive");
}

// Mixture of the two cat constituents with weights alpha, 1 - alpha.
inline MixtureState constituents(const CatState& c) {
  return {{{c.alpha, c.first()}, {1.0 - c.alpha, c.second()}}};
}

namespace detail {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// E[u^j] for u ~ N(0, s^2).
inline double gaussian_central_moment(int j, double s) {
  if (j % 2) return 0.0;
  double m = 1.0;
  for (int i = j - 1; i > 0; i -= 2) m *= i;
  return m * std::pow(s, j);
}

// Probabilists' Hermite polynomial He_n(x).
inline double hermite_e(int n, double x) {
  double h0 = 1.0, h1 = x;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    const double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

// E[u^j e^{-i k u}] for u ~ N(0, s^2): i^j s^j He_j(-s k) e^{-s^2 k^2 / 2}.
inline Complex gaussian_fourier_moment(int j, double s, double k) {
  const Complex ij = std::pow(linalg::I, j);
  return ij * std::pow(s, j) * hermite_e(j, -s * k) * std::exp(-0.5 * s * s * k * k);
}

}  // namespace detail

// <p^n> in closed form.
inline double momentum_moment(const GaussianState& s, int n) {
  double m = 0.0;
  for (int j = 0; j <= n; ++j)
    m += detail::binomial(n, j) * std::pow(s.p0, n - j) * detail::gaussian_central_moment(j, s.sigma_p());
  return m;
}

// |psi(p)|^2 = phi(u)^2 [1 + A cos(theta - k u)] / N, u = p - p0, k = dx / hbar,
// A = 2 sqrt(alpha (1 - alpha)).
inline double momentum_moment(const CatState& c, int n) {
  const double sp = c.base.sigma_p();
  const double k = c.delta_x0 / constants::hbar;
  const double a = 2.0 * std::sqrt(c.alpha * (1.0 - c.alpha));
  const Complex phase = std::exp(linalg::I * c.theta);
  double m = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double central = detail::gaussian_central_moment(j, sp) +
                           a * std::real(phase * detail::gaussian_fourier_moment(j, sp, k));
    m += detail::binomial(n, j) * std::pow(c.base.p0, n - j) * central;
  }
  return m / norm_factor(c);
}

inline double momentum_moment(const MixtureState& mx, int n) {
  double m = 0.0;
  for (const auto& c : mx.components) m += c.weight * momentum_moment(c.state, n);
  return m;
}

inline double momentum_moment(const KinematicState& s, int n) {
  return std::visit([n](const auto& v) { return momentum_moment(v, n); }, s);
}

inline double mean_position(const GaussianState& s) { return s.x0; }

// Interference term weights the midpoint of the two packets.
inline double mean_position(const CatState& c) {
  const double a = 2.0 * std::sqrt(c.alpha * (1.0 - c.alpha));
  const double x1 = c.base.x0, x2 = c.base.x0 + c.delta_x0;
  return (c.alpha * x1 + (1.0 - c.alpha) * x2 + a * std::cos(c.theta) * overlap(c) * 0.5 * (x1 + x2)) /
         norm_factor(c);
}

inline double mean_position(const MixtureState& mx) {
  double m = 0.0;
  for (const auto& c : mx.components) m += c.weight * c.state.x0;
  return m;
}

inline double mean_position(const KinematicState& s) {
  return std::visit([](const auto& v) { return mean_position(v); }, s);
}

inline KinematicMoments moments(const KinematicState& s) {
  validate(s);
  KinematicMoments m{};
  m.mean_x = mean_position(s);
  m.mean_p = momentum_moment(s, 1);
  m.mean_p2 = momentum_moment(s, 2);
  m.mean_p4 = momentum_moment(s, 4);
  m.var_p2 = m.mean_p4 - m.mean_p2 * m.mean_p2;
  return m;
}

// R(t) = <-p^2/2m^2c^2 + g x/c^2 + p g t/m c^2> - g^2 t^2 / 3c^2.
inline double r_factor(const KinematicState& s, double t, const Coupling& k) {
  validate(k);
  const auto m = moments(s);
  const double c2 = k.light_speed * k.light_speed;
  return -m.mean_p2 / (2.0 * k.mass * k.mass * c2) + k.g * m.mean_x / c2 + m.mean_p * k.g * t / (k.mass * c2) -
         k.g * k.g * t * t / (3.0 * c2);
}

struct MomentumGrid {
  double p_min;
  double dp;
  std::size_t n;

  double point(std::size_t j) const { return p_min + dp * static_cast<double>(j); }
  double p_max() const { return point(n - 1); }
};

inline MomentumGrid centered_grid(double center, double half_width, std::size_t n) {
  if (n < 2 || !(half_width > 0.0)) throw DomainError("grid needs >= 2 points and positive width");
  return {center - half_width, 2.0 * half_width / static_cast<double>(n - 1), n};
}

// 1024 points over +-8 sigma_p; refined to >= 8 points per interference fringe.
inline MomentumGrid default_grid(const KinematicState& s) {
  double lo = 0.0, hi = 0.0, fringe = 0.0;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GaussianState>) {
          lo = v.p0 - 8.0 * v.sigma_p();
          hi = v.p0 + 8.0 * v.sigma_p();
        } else if constexpr (std::is_same_v<T, CatState>) {
          lo = v.base.p0 - 8.0 * v.base.sigma_p();
          hi = v.base.p0 + 8.0 * v.base.sigma_p();
          if (v.delta_x0 > 0.0) fringe = 2.0 * constants::pi * constants::hbar / v.delta_x0;
        } else {
          lo = 1e300;
          hi = -1e300;
          for (const auto& c : v.components) {
            lo = std::min(lo, c.state.p0 - 8.0 * c.state.sigma_p());
            hi = std::max(hi, c.state.p0 + 8.0 * c.state.sigma_p());
          }
        }
      },
      s);
  std::size_t n = 1024;
  if (fringe > 0.0) n = std::max<std::size_t>(n, static_cast<std::size_t>(std::ceil(8.0 * (hi - lo) / fringe)) + 1);
  return {lo, (hi - lo) / static_cast<double>(n - 1), n};
}

// Momentum amplitude of a Gaussian centred at x0: phi(p - p0) e^{-i x0 (p - p0) / hbar}.
inline Complex gaussian_amplitude(const GaussianState& s, double p) {
  const double sp = s.sigma_p();
  const double u = p - s.p0;
  const double env = std::pow(2.0 * constants::pi * sp * sp, -0.25) * std::exp(-u * u / (4.0 * sp * sp));
  return env * std::exp(-linalg::I * (s.x0 * u / constants::hbar));
}

inline Complex momentum_amplitude(const CatState& c, double p) {
  const Complex a = std::sqrt(c.alpha) * gaussian_amplitude(c.first(), p) +
                    std::exp(linalg::I * c.theta) * std::sqrt(1.0 - c.alpha) * gaussian_amplitude(c.second(), p);
  return a / std::sqrt(norm_factor(c));
}

struct GridComponent {
  double weight;
  std::vector<Complex> amplitude;
  double discrete_norm;  // sum |psi|^2 dp, not renormalised
};

struct GridSample {
  MomentumGrid grid;
  std::vector<GridComponent> components;
};

inline GridSample to_grid(const KinematicState& s, const MomentumGrid& grid) {
  validate(s);
  GridSample out{grid, {}};
  const auto sample = [&](double w, auto&& amp) {
    GridComponent c{w, std::vector<Complex>(grid.n), 0.0};
    for (std::size_t j = 0; j < grid.n; ++j) {
      c.amplitude[j] = amp(grid.point(j));
      c.discrete_norm += std::norm(c.amplitude[j]) * grid.dp;
    }
    if (c.discrete_norm < 1.0 - 1e-6)
      throw NumericalError("to_grid: grid too narrow (captured norm " + std::to_string(c.discrete_norm) + ")");
    out.components.push_back(std::move(c));
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GaussianState>) {
          sample(1.0, [&](double p) { return gaussian_amplitude(v, p); });
        } else if constexpr (std::is_same_v<T, CatState>) {
          sample(1.0, [&](double p) { return momentum_amplitude(v, p); });
        } else {
          for (const auto& c : v.components) sample(c.weight, [&](double p) { return gaussian_amplitude(c.state, p); });
        }
      },
      s);
  return out;
}

}  // namespace kinematics
}  // namespace chronodil
