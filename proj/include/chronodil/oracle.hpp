#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "chronodil/clocks.hpp"
#include "chronodil/dilation.hpp"
#include "chronodil/errors.hpp"
#include "chronodil/kinematics.hpp"
#include "chronodil/precision.hpp"

namespace chronodil {

// c2: W = -p^2/2m^2c^2. c4 adds 3p^4/8m^4c^4 to W and -p^4/8m^3c^2 to the kinetic energy.
enum class CouplingOrder { c2, c4 };

enum class Representation { momentum, position };

// One kinematic branch per clock energy level. Amplitudes exclude the
// non-relativistic clock phase e^{-i E_k t / hbar} and the c-number phase
// `phase[k]`, both restored by the reduced state.
struct BranchSet {
  double weight;
  std::vector<std::vector<Complex>> level;
  std::vector<double> phase;
  double frame_x = 0.0;  // comoving frame at time t, position representation only
  double frame_p = 0.0;
  // Momentum representation: |psi(p_j)|^2 dp, normalised.
  std::vector<double> block_weight;
};

struct JointState {
  Index clock_dim;
  RealVector energies;
  ComplexMatrix rho0;  // energy basis
  Representation representation;
  double t;
  std::vector<double> grid;
  double spacing;
  std::vector<BranchSet> components;
  std::vector<double> block_w;  // W(p_j), momentum representation only
  std::size_t steps = 0;
};

struct SplitStepOptions {
  std::size_t steps = 0;  // 0: choose from the phase rule
  std::size_t grid_points = 2048;
  std::size_t min_steps = 200;
  std::size_t max_steps = 100000;
  double max_phase = 0.1;
  CouplingOrder order = CouplingOrder::c2;
};

struct VerificationReport {
  std::string quantity;
  std::vector<double> scalings;
  std::vector<double> perturbative;
  std::vector<double> exact;
  std::vector<double> residual;           // relative
  std::vector<double> absolute_residual;  // |exact - perturbative|
  double exponent = 0.0;                  // fit of log residual vs log scaling
  double absolute_exponent = 0.0;
  bool at_floor = false;
  bool passed = false;
  double threshold = -1.8;
};

namespace oracle {

inline double w_of_p(double p, const Coupling& k, CouplingOrder order) {
  const double r = p / (k.mass * k.light_speed);
  const double r2 = r * r;
  return order == CouplingOrder::c2 ? -0.5 * r2 : -0.5 * r2 + 0.375 * r2 * r2;
}

inline double kinetic(double p, const Coupling& k, CouplingOrder order) {
  const double e = p * p / (2.0 * k.mass);
  if (order == CouplingOrder::c2) return e;
  return e - std::pow(p, 4) / (8.0 * std::pow(k.mass, 3) * k.light_speed * k.light_speed);
}

namespace detail {

// e^{i x} - 1 without cancellation.
inline Complex expm1_i(double x) {
  const double s = std::sin(0.5 * x);
  return {-2.0 * s * s, std::sin(x)};
}

inline void require_clock(const ClockModel& clock) {
  if (clock.dim() < 1) throw DomainError("oracle: empty clock");
}

}  // namespace detail

// Momentum blocks decouple at g = 0: block p evolves the clock under H (1 + W(p)).
inline JointState exact_evolve_g0(const ClockModel& clock, const KinematicState& s, double t, const Coupling& k,
                                  CouplingOrder order = CouplingOrder::c2,
                                  std::optional<kinematics::MomentumGrid> override_grid = std::nullopt) {
  kinematics::validate(k);
  if (k.g != 0.0) throw DomainError("exact_evolve_g0 requires g = 0");
  detail::require_clock(clock);
  const auto grid = override_grid ? *override_grid : kinematics::default_grid(s);
  const auto sample = kinematics::to_grid(s, grid);
  const double hb = constants::hbar;
  JointState js{clock.dim(), clock.energies(), clock.initial_state_energy_basis(), Representation::momentum, t, {}, grid.dp, {}, {}, 0};
  js.grid.resize(grid.n);
  js.block_w.resize(grid.n);
  for (std::size_t j = 0; j < grid.n; ++j) {
    js.grid[j] = grid.point(j);
    js.block_w[j] = w_of_p(js.grid[j], k, order);
  }
  for (const auto& comp : sample.components) {
    BranchSet b{comp.weight, {}, std::vector<double>(clock.dim(), 0.0), 0.0, 0.0, {}};
    const double norm = std::sqrt(comp.discrete_norm);
    b.block_weight.resize(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) b.block_weight[j] = std::norm(comp.amplitude[j]) * grid.dp / comp.discrete_norm;
    for (Index lv = 0; lv < clock.dim(); ++lv) {
      std::vector<Complex> a(grid.n);
      const double e = clock.energies()(lv);
      for (std::size_t j = 0; j < grid.n; ++j) {
        const double phase = -(e * js.block_w[j] + kinetic(js.grid[j], k, order)) * t / hb;
        a[j] = comp.amplitude[j] / norm * std::polar(1.0, phase);
      }
      b.level.push_back(std::move(a));
    }
    js.components.push_back(std::move(b));
  }
  return js;
}

// Split-step evolution for g != 0, per clock level, in the frame comoving with
// x_c = x + p t/m - g t^2/2, p_c = p - m g t. Relative to that frame level k sees
//   A_k(q, s) = q^2/2m + E_k [W(p_c + q) - W(p_c)]  (+ kinetic c4 correction)
//   B_k(y)    = E_k g y / c^2
// and the c-number E_k [W(p_c) + g x_c / c^2] is integrated in closed form.
inline JointState exact_evolve_g(const ClockModel& clock, const KinematicState& s, double t, const Coupling& k,
                                 const SplitStepOptions& opt = {}) {
  kinematics::validate(k);
  kinematics::validate(s);
  detail::require_clock(clock);
  if (opt.grid_points < 64 || (opt.grid_points & (opt.grid_points - 1)))
    throw DomainError("split-step grid must be a power of two >= 64");
  const double hb = constants::hbar;
  const double c2 = k.light_speed * k.light_speed;
  const double m = k.mass;
  const std::size_t n = opt.grid_points;

  struct Packet {
    double weight;
    std::vector<std::pair<Complex, GaussianState>> parts;  // coefficient, packet
    double x, p;                                             // frame centre
  };
  std::vector<Packet> packets;
  double sx = 0.0, extent = 0.0;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GaussianState>) {
          packets.push_back({1.0, {{1.0, v}}, v.x0, v.p0});
          sx = v.sigma_x;
        } else if constexpr (std::is_same_v<T, CatState>) {
          const double nn = std::sqrt(kinematics::norm_factor(v));
          const double mid = v.base.x0 + 0.5 * v.delta_x0;
          packets.push_back({1.0,
                             {{std::sqrt(v.alpha) / nn, v.first()},
                              {std::polar(std::sqrt(1.0 - v.alpha), v.theta) / nn, v.second()}},
                             mid,
                             v.base.p0});
          sx = v.base.sigma_x;
          extent = 0.5 * v.delta_x0;
        } else {
          for (const auto& c : v.components) {
            packets.push_back({c.weight, {{1.0, c.state}}, c.state.x0, c.state.p0});
            sx = std::max(sx, c.state.sigma_x);
          }
        }
      },
      s);

  const double sp = constants::hbar / (2.0 * sx);
  const double sx_t = sx * std::sqrt(1.0 + std::pow(sp * t / (m * sx), 2));
  const double half = 10.0 * sx_t + extent + 2.0 * sx;
  const double dy = 2.0 * half / double(n);
  std::vector<double> y(n), q(n);
  for (std::size_t j = 0; j < n; ++j) {
    y[j] = -half + dy * double(j);
    const long idx = j < n / 2 ? long(j) : long(j) - long(n);
    q[j] = 2.0 * constants::pi * hb * double(idx) / (dy * double(n));
  }

  JointState js{clock.dim(), clock.energies(), clock.initial_state_energy_basis(), Representation::position, t, y, dy, {}, {}, 0};
  const auto& en = clock.energies();
  std::vector<Index> active;
  for (Index lv = 0; lv < clock.dim(); ++lv)
    if (std::abs(js.rho0(lv, lv)) > 1e-26) active.push_back(lv);

  // Step count from the largest level-dependent phase per unit time.
  double rate = 0.0;
  for (const auto& pk : packets) {
    for (Index lv : active) {
      const double e = std::abs(en(lv));
      double a_max = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(q[j]) > 40.0 * sp) continue;  // beyond any populated momentum
        for (double pc : {pk.p, pk.p - m * k.g * t})
          a_max = std::max(a_max, std::abs(w_of_p(pc + q[j], k, opt.order) - w_of_p(pc, k, opt.order)));
      }
      rate = std::max(rate, e * (a_max + std::abs(k.g) * half / c2) / hb);
    }
  }
  std::size_t steps = opt.steps;
  if (steps == 0) {
    const double need = std::ceil(rate * t / opt.max_phase);
    if (need > double(opt.max_steps)) throw NumericalError("split-step: step budget exceeded");
    steps = std::max(opt.min_steps, std::size_t(need));
  }
  js.steps = steps;
  const double dt = t / double(steps);

  Eigen::FFT<double> fft;
  std::vector<Complex> buf(n), spec(n);
  for (const auto& pk : packets) {
    BranchSet b{pk.weight, {}, std::vector<double>(clock.dim(), 0.0), pk.x, pk.p, {}};
    // Initial relative wavefunction; the common e^{i p x / hbar} is the frame boost.
    std::vector<Complex> chi0(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& [coef, g] : pk.parts) {
        const double u = y[j] + pk.x - g.x0;
        chi0[j] += coef * std::pow(2.0 * constants::pi * g.sigma_x * g.sigma_x, -0.25) *
                   std::exp(-u * u / (4.0 * g.sigma_x * g.sigma_x));
      }
    }
    double captured = 0.0;
    for (const auto& a : chi0) captured += std::norm(a) * dy;
    if (std::abs(captured - 1.0) > 1e-6) throw NumericalError("split-step: grid does not capture the state");
    for (auto& a : chi0) a /= std::sqrt(captured);

    auto pc_at = [&](double s_) { return pk.p - m * k.g * s_; };
    auto xc_at = [&](double s_) { return pk.x + pk.p * s_ / m - 0.5 * k.g * s_ * s_; };
    // Integral of W(p_c) + g x_c / c^2 over [0, t], exact for the polynomial.
    double cnum = -(pk.p * pk.p * t - pk.p * m * k.g * t * t + m * m * k.g * k.g * t * t * t / 3.0) / (2.0 * m * m * c2) +
                  k.g * (pk.x * t + pk.p * t * t / (2.0 * m) - k.g * t * t * t / 6.0) / c2;
    if (opt.order == CouplingOrder::c4) {
      double s4 = 0.0;
      for (int j = 0; j <= 4; ++j)
        s4 += kinematics::detail::binomial(4, j) * std::pow(pk.p, 4 - j) * std::pow(-m * k.g, j) * std::pow(t, j + 1) / (j + 1);
      cnum += 3.0 * s4 / (8.0 * std::pow(m * k.light_speed, 4));
    }

    for (Index lv = 0; lv < clock.dim(); ++lv) {
      const double e = en(lv);
      b.phase[lv] = -e * cnum / hb;
      if (std::find(active.begin(), active.end(), lv) == active.end()) {
        b.level.emplace_back();
        continue;
      }
      std::vector<Complex> chi = chi0;
      std::vector<Complex> pot(n);
      for (std::size_t j = 0; j < n; ++j) pot[j] = std::polar(1.0, -e * k.g * y[j] / c2 * dt / hb);
      auto kick = [&](double s_mid, double h) {
        const double pc = pc_at(s_mid);
        const double wc = w_of_p(pc, k, opt.order);
        for (std::size_t j = 0; j < n; ++j) {
          double a = e * (w_of_p(pc + q[j], k, opt.order) - wc);
          double kin = q[j] * q[j] / (2.0 * m);
          if (opt.order == CouplingOrder::c4) kin = kinetic(pc + q[j], k, opt.order) - kinetic(pc, k, opt.order) - pc * q[j] / m;
          spec[j] *= std::polar(1.0, -(kin + a) * h / hb);
        }
      };
      for (std::size_t st = 0; st < steps; ++st) {
        const double s0 = dt * double(st);
        fft.fwd(spec, chi);
        kick(s0 + 0.25 * dt, 0.5 * dt);
        fft.inv(chi, spec);
        for (std::size_t j = 0; j < n; ++j) chi[j] *= pot[j];
        fft.fwd(spec, chi);
        kick(s0 + 0.75 * dt, 0.5 * dt);
        fft.inv(chi, spec);
      }
      double edge = 0.0;
      for (std::size_t j = 0; j < n / 20; ++j) edge += (std::norm(chi[j]) + std::norm(chi[n - 1 - j])) * dy;
      if (edge > 1e-6) throw NumericalError("split-step: probability reached the grid edge (aliasing)");
      b.level.push_back(std::move(chi));
    }
    b.frame_x = xc_at(t);
    b.frame_p = pc_at(t);
    js.components.push_back(std::move(b));
  }
  return js;
}

// <chi_l | chi_k> - 1 for one branch set.
inline Complex overlap_minus_one(const JointState& js, const BranchSet& b, Index kk, Index ll) {
  if (kk == ll) {
    if (js.representation == Representation::momentum) return 0.0;
    double nrm = 0.0;
    for (const auto& a : b.level[kk]) nrm += std::norm(a);
    return nrm * js.spacing - 1.0;
  }
  if (js.representation == Representation::momentum) {
    const double de = (js.energies(kk) - js.energies(ll)) * js.t / constants::hbar;
    Complex acc = 0.0;
    for (std::size_t j = 0; j < js.grid.size(); ++j) acc += b.block_weight[j] * detail::expm1_i(-de * js.block_w[j]);
    return acc;
  }
  // -|chi_k - chi_l|^2 / 2 + i Im<chi_l|chi_k> + (|chi_k|^2 + |chi_l|^2)/2 - 1.
  const auto& a = b.level[kk];
  const auto& c = b.level[ll];
  double diff = 0.0, nk = 0.0, nl = 0.0, im = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    diff += std::norm(a[j] - c[j]);
    nk += std::norm(a[j]);
    nl += std::norm(c[j]);
    im += (std::conj(c[j]) * a[j]).imag();
  }
  const double h = js.spacing;
  return {-0.5 * diff * h + 0.5 * (nk + nl) * h - 1.0, im * h};
}

// rho(t) - rho_NR(t) in the clock energy basis.
inline ComplexMatrix clock_shift(const JointState& js) {
  const Index d = js.clock_dim;
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  const double hb = constants::hbar;
  for (Index kk = 0; kk < d; ++kk)
    for (Index ll = 0; ll < d; ++ll) {
      const Complex r0 = js.rho0(kk, ll);
      if (std::abs(r0) == 0.0) continue;
      const Complex nr = r0 * std::polar(1.0, -(js.energies(kk) - js.energies(ll)) * js.t / hb);
      Complex acc = 0.0;
      for (const auto& b : js.components) {
        if (b.level[kk].empty() || b.level[ll].empty()) continue;  // level never populated
        const double dphi = b.phase[kk] - b.phase[ll];
        const Complex ov1 = overlap_minus_one(js, b, kk, ll);
        acc += b.weight * (detail::expm1_i(dphi) + std::polar(1.0, dphi) * ov1);
      }
      out(kk, ll) = nr * acc;
    }
  return out;
}

inline ComplexMatrix reduced_clock_state(const JointState& js) {
  const Index d = js.clock_dim;
  ComplexMatrix nr(d, d);
  for (Index kk = 0; kk < d; ++kk)
    for (Index ll = 0; ll < d; ++ll)
      nr(kk, ll) = js.rho0(kk, ll) * std::polar(1.0, -(js.energies(kk) - js.energies(ll)) * js.t / constants::hbar);
  return nr + clock_shift(js);
}

inline double total_norm(const JointState& js) {
  double total = 0.0;
  for (const auto& b : js.components)
    for (Index lv = 0; lv < js.clock_dim; ++lv) {
      if (b.level[lv].empty()) continue;
      double nrm = 0.0;
      for (const auto& a : b.level[lv]) nrm += std::norm(a);
      total += b.weight * js.rho0(lv, lv).real() * nrm * js.spacing;
    }
  double pop = 0.0;
  for (Index lv = 0; lv < js.clock_dim; ++lv)
    if (!js.components.empty() && !js.components.front().level[lv].empty()) pop += js.rho0(lv, lv).real();
  return total / pop;
}

// Lab-frame mean position of the kinematic branch attached to one level.
inline double mean_position(const JointState& js, Index level) {
  if (js.representation != Representation::position) throw DomainError("mean_position needs the position representation");
  double mean = 0.0;
  for (const auto& b : js.components) {
    double m = 0.0, nrm = 0.0;
    for (std::size_t j = 0; j < js.grid.size(); ++j) {
      m += js.grid[j] * std::norm(b.level[level][j]);
      nrm += std::norm(b.level[level][j]);
    }
    mean += b.weight * (b.frame_x + m / nrm);
  }
  return mean;
}

// <T> - <T>_NR from the oracle.
inline double mean_time_shift(const ClockModel& clock, const JointState& js) {
  return linalg::trace_product(clock.time_operator_energy_basis(), clock_shift(js)).real();
}

// sigma_exact - sigma_NR, formed from the shift of the second moment.
inline double sigma_shift(const ClockModel& clock, const JointState& js) {
  const ComplexMatrix& te = clock.time_operator_energy_basis();
  const ComplexMatrix rho_nr = clock.evolved_energy_basis(js.t);
  const double mu = linalg::trace_product(te, rho_nr).real();
  const ComplexMatrix tc = te - mu * linalg::identity(clock.dim());
  const ComplexMatrix tc2 = clock.povm() ? ComplexMatrix(clock.to_energy_basis(clock.moment_operator(2)) -
                                                         2.0 * mu * te + mu * mu * linalg::identity(clock.dim()))
                                         : ComplexMatrix(tc * tc);
  const ComplexMatrix d = clock_shift(js);
  const double s_nr = std::sqrt(std::max(linalg::trace_product(tc2, rho_nr).real(), 0.0));
  const double m1 = linalg::trace_product(tc, d).real();
  const double dvar = linalg::trace_product(tc2, d).real() - m1 * m1;
  return dvar / (s_nr + std::sqrt(std::max(s_nr * s_nr + dvar, 0.0)));
}

namespace detail {

inline void fit(VerificationReport& r) {
  const std::size_t n = r.scalings.size();
  if (n < 3) throw DomainError("verification needs at least three c scalings");
  double worst = 0.0;
  for (double v : r.residual) worst = std::max(worst, v);
  auto slope = [&](const std::vector<double>& ys) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = std::log(r.scalings[i]);
      const double yv = std::log(std::max(ys[i], 1e-300));
      sx += x;
      sy += yv;
      sxx += x * x;
      sxy += x * yv;
    }
    const double den = double(n) * sxx - sx * sx;
    if (den == 0.0) throw DomainError("verification scalings must differ");
    return (double(n) * sxy - sx * sy) / den;
  };
  r.exponent = slope(r.residual);
  r.absolute_exponent = slope(r.absolute_residual);
  r.at_floor = worst < 1e-8;
  r.passed = r.at_floor || r.exponent <= r.threshold;
}

inline Coupling scaled(const Coupling& k, double s) { return {k.mass, k.g, k.light_speed * s}; }

inline JointState evolve(const ClockModel& clock, const KinematicState& s, double t, const Coupling& k,
                         const SplitStepOptions& opt) {
  if (k.g == 0.0) return exact_evolve_g0(clock, s, t, k, opt.order);
  return exact_evolve_g(clock, s, t, k, opt);
}

}  // namespace detail

// Oracle <T> - <T>_NR against t R (1 + tr E).
inline VerificationReport verify_mean_time(const ClockModel& clock, const KinematicState& s, double t,
                                           const Coupling& k, const std::vector<double>& scalings,
                                           const SplitStepOptions& opt = {}) {
  VerificationReport r;
  r.quantity = "mean_time";
  const double tr_e = clocks::error_trace(clock, t);
  for (double sc : scalings) {
    const Coupling kc = detail::scaled(k, sc);
    const double pred = t * kinematics::r_factor(s, t, kc) * (1.0 + tr_e);
    const double exact = mean_time_shift(clock, detail::evolve(clock, s, t, kc, opt));
    r.scalings.push_back(sc);
    r.perturbative.push_back(pred);
    r.exact.push_back(exact);
    r.absolute_residual.push_back(std::abs(exact - pred));
    r.residual.push_back(std::abs(exact - pred) / std::abs(pred));
  }
  detail::fit(r);
  return r;
}

// Oracle sigma - sigma_NR against sigma_I + sigma_NI (g = 0).
inline VerificationReport verify_sigma(const ClockModel& clock, const KinematicState& s, double t, const Coupling& k,
                                       const std::vector<double>& scalings,
                                       SecondOrder order = SecondOrder::taylor) {
  if (k.g != 0.0) throw DomainError("verify_sigma requires g = 0");
  VerificationReport r;
  r.quantity = "sigma";
  for (double sc : scalings) {
    const Coupling kc = detail::scaled(k, sc);
    const auto b = precision::sigma_breakdown(AnyClock{clock}, s, t, kc, order);
    const double pred = b.sigma_i + b.sigma_ni;
    const double exact = sigma_shift(clock, exact_evolve_g0(clock, s, t, kc, CouplingOrder::c4));
    r.scalings.push_back(sc);
    r.perturbative.push_back(pred);
    r.exact.push_back(exact);
    r.absolute_residual.push_back(std::abs(exact - pred));
    r.residual.push_back(std::abs(exact - pred) / std::abs(pred));
  }
  detail::fit(r);
  return r;
}

// Oracle (T_sup - T_mix) against (1 + tr E) T_coh, T_mix from the two constituent runs.
inline VerificationReport verify_coherence(const ClockModel& clock, const CatState& cat, double t, const Coupling& k,
                                           const std::vector<double>& scalings, const SplitStepOptions& opt = {}) {
  VerificationReport r;
  r.quantity = "coherence";
  const double tr_e = clocks::error_trace(clock, t);
  for (double sc : scalings) {
    const Coupling kc = detail::scaled(k, sc);
    const double pred = (1.0 + tr_e) * dilation::coherence_term(cat, t, kc);
    const double sup = mean_time_shift(clock, detail::evolve(clock, cat, t, kc, opt));
    const double s1 = mean_time_shift(clock, detail::evolve(clock, cat.first(), t, kc, opt));
    const double s2 = mean_time_shift(clock, detail::evolve(clock, cat.second(), t, kc, opt));
    const double exact = sup - (cat.alpha * s1 + (1.0 - cat.alpha) * s2);
    r.scalings.push_back(sc);
    r.perturbative.push_back(pred);
    r.exact.push_back(exact);
    r.absolute_residual.push_back(std::abs(exact - pred));
    r.residual.push_back(std::abs(exact - pred) / std::abs(pred));
  }
  detail::fit(r);
  return r;
}

}  // namespace oracle
}  // namespace chronodil
