#include <catch_amalgamated.hpp>

#include <vector>

#include "chronodil/clocks.hpp"
#include "support.hpp"

using namespace chronodil;
using namespace chronodil::clocks;
using namespace testsupport;

namespace {

constexpr double pi = constants::pi;

double max_abs_error_trace(const ClockModel& c, double t0, double t1, int samples) {
  double m = 0.0;
  for (int i = 0; i <= samples; ++i) m = std::max(m, std::abs(error_trace(c, t0 + (t1 - t0) * i / samples)));
  return m;
}

// Closed-form qubit-phase moment operators:
// diagonal (2 pi)^n / ((n+1) w^n), (0,1) element I_n / (2 pi w^n) with
// I_n = int_0^{2pi} th^n e^{i th} = -i (2pi)^n + i n I_{n-1}, I_0 = 0.
ComplexMatrix qubit_moment_closed_form(int n, double omega) {
  Complex in = 0.0;
  for (int k = 1; k <= n; ++k) in = -linalg::I * std::pow(2 * pi, k) + linalg::I * double(k) * in;
  ComplexMatrix m(2, 2);
  const double wn = std::pow(omega, n);
  m(0, 0) = m(1, 1) = std::pow(2 * pi, n) / ((n + 1) * wn);
  m(0, 1) = in / (2 * pi * wn);
  m(1, 0) = std::conj(m(0, 1));
  if (n == 0) m = linalg::identity(2);
  return m;
}

// Circular mean of the time-basis distribution, in units of the period.
double circular_mean_fraction(const ClockModel& c, double t) {
  const ComplexMatrix rho = c.evolved(t);
  const Index d = c.dim();
  Complex z = 0.0;
  for (Index m = 0; m < d; ++m) {
    const double p = (c.time_basis().col(m).adjoint() * rho * c.time_basis().col(m))(0, 0).real();
    z += p * std::exp(linalg::I * (2 * pi * double(m) / double(d)));
  }
  double f = std::arg(z) / (2 * pi);
  return f < 0 ? f + 1.0 : f;
}

}  // namespace

TEST_CASE("SWP construction") {
  const auto c = build_swp(2, 1.0);
  CHECK(c.period() == Catch::Approx(2 * pi).epsilon(1e-15));
  const RealVector ev = linalg::eigen_hermitian(c.time_operator()).values;
  CHECK(std::abs(ev(0)) < 1e-14);
  CHECK(std::abs(ev(1) - pi) < 1e-14);
  for (int d : {2, 3, 5, 8}) {
    const auto s = build_swp(d, 3.0);
    for (Index j = 0; j < d; ++j)
      for (Index m = 0; m < d; ++m) CHECK(std::abs(std::norm(s.time_basis()(j, m)) - 1.0 / d) < 1e-14);
    const double gap = s.energies()(1) - s.energies()(0);
    CHECK(rel_diff(s.period(), 2 * pi * constants::hbar / gap) < 1e-12);
  }
}

TEST_CASE("SWP error trace is -1 at every focusing time") {
  for (int d = 2; d <= 16; ++d) {
    const auto c = build_swp(d, 1.0);
    for (int m = 0; m < d; ++m) REQUIRE(std::abs(error_trace(c, m * c.period() / d) + 1.0) < 1e-10);
  }
}

TEST_CASE("SWP error trace between focusing times") {
  const auto c = build_swp(5, 1.0);
  const double tick = c.period() / 5;
  const double v = error_trace(c, c.period() / 10);
  CHECK(v > -1.0);
  CHECK(std::abs(v) > 0.1);
  // Brute force: d<T>/dt - 1 by central differences.
  const double h = 1e-5 * tick;
  const double fd = (mean_clock_time_nr(c, tick / 2 + h) - mean_clock_time_nr(c, tick / 2 - h)) / (2 * h) - 1.0;
  CHECK(std::abs(fd - v) < 1e-6);
  // <T> advances by exactly one tick between focusing times, so tr E
  // integrates to zero over the interval and cannot stay negative.
  const auto q = quadrature::simpson_refined([&](double s) { return error_trace(c, s); }, 0.0, tick, 200, 1e-12);
  CHECK(std::abs(q.value) < 1e-10);
  CHECK(v > 0.0);
}

TEST_CASE("error trace is real for every model and for random clocks") {
  std::mt19937_64 rng(41);
  std::vector<ClockModel> models{build_swp(4, 2.0), build_quasi_ideal(16, 2.0, 4.0), build_qubit_phase(2.0)};
  for (int k = 0; k < 5; ++k) {
    const Index d = 3 + k;
    ComplexMatrix h = random_hermitian(rng, d, constants::hbar);
    ComplexMatrix t = random_hermitian(rng, d);
    models.emplace_back(ClockKind::custom, h, t, linalg::DensityMatrix(random_density(rng, d)), 1.0);
  }
  std::vector<double> times;
  for (int i = 0; i < 50; ++i) times.push_back(0.37 * i);
  for (const auto& c : models) CHECK(error_trace_series(c, times).max_imag < 1e-10);
}

TEST_CASE("error operator trace matches the commutator form") {
  const auto c = build_quasi_ideal(8, 1.5, 2.0);
  for (double t : {0.0, 0.3, 1.1}) CHECK(std::abs(error_operator(c, t).trace().real() - error_trace(c, t)) < 1e-12);
}

TEST_CASE("Quasi-Ideal construction") {
  for (int d : {4, 9, 16, 33}) {
    const auto c = build_quasi_ideal(d, 1.0, std::sqrt(double(d)), 0.3 * d, 0.5 * (d - 1));
    CHECK(std::abs(c.initial_state().matrix().trace().real() - 1.0) < 1e-12);
  }
  const auto c = build_quasi_ideal(16, 1.0, 4.0, 0.0, 7.5);
  double f = circular_mean_fraction(c, 0.0);
  if (f > 0.5) f -= 1.0;
  CHECK(std::abs(f) < 0.05);
  CHECK_THROWS_AS(build_quasi_ideal(16, 1.0, 0.0, 0.0, 7.5), DomainError);
  CHECK_THROWS_AS(build_quasi_ideal(16, 1.0, 16.0, 0.0, 7.5), DomainError);
  CHECK_THROWS_AS(build_quasi_ideal(16, -1.0, 4.0, 0.0, 7.5), DomainError);
}

TEST_CASE("Quasi-Ideal error decays with dimension") {
  std::vector<double> maxima;
  for (int d : {8, 16, 32, 64}) {
    const auto c = build_quasi_ideal(d, 1.0, std::sqrt(double(d)));
    maxima.push_back(max_abs_error_trace(c, 0.0, 0.5 * c.period(), 400));
  }
  for (std::size_t i = 1; i < maxima.size(); ++i) CHECK(maxima[i] < maxima[i - 1]);
  for (std::size_t i = 2; i < maxima.size(); ++i)
    CHECK(maxima[i] / maxima[i - 1] < maxima[i - 1] / maxima[i - 2]);
}

TEST_CASE("qubit-phase construction") {
  const double omega = 3.0;
  const auto c = build_qubit_phase(omega);
  CHECK(rel_diff(c.time_operator().trace().real(), 2 * pi / omega) < 1e-12);
  for (int n = 0; n <= 3; ++n)
    CHECK(linalg::max_abs(c.moment_operator(n) - qubit_moment_closed_form(n, omega)) <
          1e-12 * std::pow(2 * pi / omega, n));
  // 1 + tr E = -cos(wt) with this phase convention.
  for (double wt : {0.0, pi / 2, pi, 0.7, 2.9}) {
    const double e = error_trace(c, wt / omega);
    CHECK(std::abs(1.0 + e + std::cos(wt)) < 1e-12);
  }
  CHECK(std::abs(std::abs(1.0 + error_trace(c, pi / omega)) - 1.0) < 1e-12);
  CHECK_THROWS_AS(build_qubit_phase(0.0), DomainError);
}

TEST_CASE("mean clock time without relativity") {
  const auto swp = build_swp(4, 1.0);
  CHECK(std::abs(mean_clock_time_nr(swp, 0.0)) < 1e-14);
  CHECK(std::abs(mean_clock_time_nr(swp, swp.period() / 4) - swp.period() / 4) < 1e-10);
  const auto q = build_qubit_phase(2.0);
  CHECK(std::abs(mean_clock_time_nr(q, 0.0)) < 1e-14);
  const auto qi = build_quasi_ideal(32, 1.0, std::sqrt(32.0));
  CHECK(std::abs(mean_clock_time_nr(qi, 0.0)) < 1e-14);
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double t = 0.5 * qi.period() * i / 400;
    worst = std::max(worst, std::abs(mean_clock_time_nr(qi, t) - t));
  }
  CHECK(worst < 0.02 * qi.period());
  CHECK(mean_clock_time_nr(IdealisedClock{1e-9}, 2.5) == 2.5);
}

TEST_CASE("mean clock time equals t plus the integrated error trace") {
  std::vector<ClockModel> models{build_swp(3, 1.0), build_swp(7, 4.0), build_quasi_ideal(16, 1.0, 4.0),
                                 build_qubit_phase(1.3)};
  for (const auto& c : models)
    for (double f : {0.1, 0.5, 0.93, 1.7, 3.25}) {
      const auto r = check_mean_time_identity(c, f * c.period());
      CHECK(r.residual < 1e-8 * c.period());
    }
}

TEST_CASE("covariant moment polynomial") {
  const auto q = build_qubit_phase(1.0);
  const auto m0 = covariant_moment_check(q, 0, 0.3);
  CHECK(std::abs(m0.lhs - 1.0) < 1e-12);
  CHECK(std::abs(m0.rhs - 1.0) < 1e-12);

  const auto id = covariant_moment_check(IdealisedClock{0.2}, 1, 1.5);
  CHECK(std::abs(id.lhs - 1.5) < 1e-15);
  CHECK(id.residual < 1e-15);

  // A qubit state always has weight near the wrap point; the bounded-domain
  // term closes the identity.
  for (int n = 1; n <= 3; ++n) {
    const auto r = covariant_moment_check(q, n, 0.3);
    CHECK(r.wrap_probability > 0.0);
    CHECK(r.corrected_residual < 1e-8);
  }
  CHECK(covariant_moment_check(q, 2, 0.3).residual > 1e-6);

  // Discrete clocks at covariance shifts, support away from the jump.
  const auto swp = build_swp(8, 1.0);
  const auto qi = build_quasi_ideal(32, 1.0, std::sqrt(32.0), 16.0, 15.5);
  for (int n = 0; n <= 3; ++n) {
    for (int k : {1, 3, 7}) CHECK(covariant_moment_check(swp, n, k * swp.period() / 8).residual < 1e-8);
    for (int k : {1, 2, 4}) CHECK(covariant_moment_check(qi, n, k * qi.period() / 32).residual < 1e-8);
  }
  // A shift that carries the SWP pointer across the jump is caught by the wrap term.
  const auto wrapped = covariant_moment_check(build_swp(4, 1.0), 1, 0.0);
  CHECK(wrapped.residual < 1e-12);
  CHECK_THROWS_AS(covariant_moment_check(swp, 1, 0.1), DomainError);
  std::mt19937_64 rng(3);
  const ClockModel custom(ClockKind::custom, random_hermitian(rng, 3, constants::hbar), random_hermitian(rng, 3),
                          linalg::DensityMatrix(random_density(rng, 3)), 1.0);
  CHECK_THROWS_AS(covariant_moment_check(custom, 1, 0.1), DomainError);
}

TEST_CASE("commutator form of covariant clocks") {
  const auto r = commutator_form_check(build_qubit_phase(2.7));
  CHECK(r.applicable);
  CHECK(r.residual < 1e-10);
  const auto id = commutator_form_check(IdealisedClock{});
  CHECK(id.applicable);
  CHECK(id.residual == 0.0);
  const auto swp = commutator_form_check(build_swp(4, 1.0));
  CHECK_FALSE(swp.applicable);
  CHECK(swp.note.find("discrete PVM") != std::string::npos);
}

TEST_CASE("clock builders reject bad parameters") {
  CHECK_THROWS_AS(build_swp(1, 1.0), DomainError);
  CHECK_THROWS_AS(build_swp(4, 0.0), DomainError);
  CHECK_THROWS_AS(build_quasi_ideal(1, 1.0, 0.5, 0.0, 0.0), DomainError);
}
