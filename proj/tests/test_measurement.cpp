#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include "chronodil/measurement.hpp"
#include "chronodil/precision.hpp"
#include "support.hpp"

using namespace chronodil;
using namespace chronodil::measurement;
using namespace testsupport;

namespace {

const double me = constants::electron_mass;
const Coupling electron{me, 0.0, constants::c};
const GaussianState fig3{0.0, 0.0, 1e-9};
const IdealisedClock ns_clock{1e-9};
constexpr double t_fig = 0.05;

// Explicit joint (p, clock reading) density restricted to a bin, integrated on
// a 256 x 256 Gauss-Legendre product grid.
ClockStatistics joint_conditioning(const IdealisedClock& clock, const GaussianState& s, double t, const Coupling& k,
                                   double a, double b) {
  using GL = boost::math::quadrature::gauss<double, 256>;
  const double sp = s.sigma_p();
  a = std::max(a, s.p0 - 12 * sp);
  b = std::min(b, s.p0 + 12 * sp);
  const double st = clock.sigma_time;
  auto density_p = [&](double p) { return std::exp(-0.5 * std::pow((p - s.p0) / sp, 2)); };
  // Reading window wide enough for every shift in the bin.
  double lo = 1e300, hi = -1e300;
  for (double p : {a, b, 0.5 * (a + b), std::clamp(0.0, a, b)}) {
    lo = std::min(lo, t * w_of_p(p, k));
    hi = std::max(hi, t * w_of_p(p, k));
  }
  lo -= 12 * st;
  hi += 12 * st;
  auto moments = [&](int n, double centre) {
    return GL::integrate(
        [&](double p) {
          const double shift = t * w_of_p(p, k);
          // Split the reading window at the peak so each half is smooth.
          auto g = [&](double s) { return std::pow(s - centre, n) * std::exp(-0.5 * std::pow((s - shift) / st, 2)); };
          return density_p(p) * (GL::integrate(g, lo, shift) + GL::integrate(g, shift, hi));
        },
        a, b);
  };
  const double z = moments(0, 0.0);
  const double mean = moments(1, 0.0) / z;
  const double var = moments(2, mean) / z;
  return {t + mean, std::sqrt(var)};
}

}  // namespace

TEST_CASE("bin probabilities") {
  const auto wide = binning_for(fig3, 1e3);
  CHECK(wide.count() == 1);
  CHECK(std::abs(bin_probability(fig3, wide, 0) - 1.0) < 1e-15);
  const auto two = binning_for(fig3, 2.0);
  CHECK(std::abs(bin_probability(fig3, two, 0) - std::erf(1 / std::sqrt(2.0))) < 1e-15);
  CHECK(std::abs(bin_probability(fig3, two, 0) - 0.6827) < 1e-4);
  for (long n = 1; n < 5; ++n) CHECK(rel_diff(bin_probability(fig3, two, n), bin_probability(fig3, two, -n)) < 1e-12);

  const GaussianState moving{0.0, 1.3 * fig3.sigma_p(), 1e-9};
  for (double q : {0.05, 0.7, 3.0}) {
    const auto b = binning_for(moving, q);
    double total = 0.0;
    for (long n = b.n_lo; n <= b.n_hi; ++n) total += bin_probability(moving, b, n);
    CHECK(std::abs(total - 1.0) < 1e-8);
    CHECK(b.lower(b.n_lo + 1) == b.upper(b.n_lo));
  }
  CHECK_THROWS_AS(binning_for(fig3, 0.0), DomainError);
}

TEST_CASE("precision recovered by fine momentum bins") {
  const auto fine = conditioned_sigma(ns_clock, fig3, t_fig, electron, binning_for(fig3, 0.01), 0);
  CHECK(std::abs(fine.sigma_T_given_n / ns_clock.sigma_time - 1.0) < 1e-3);
  CHECK(fine.sigma_T_given_n >= ns_clock.sigma_time - 1e-12);

  const auto base = unconditioned(ns_clock, fig3, t_fig, electron);
  CHECK(base.sigma > 1.05 * ns_clock.sigma_time);
  const auto coarse = conditioned_sigma(ns_clock, fig3, t_fig, electron, binning_for(fig3, 1e3), 0);
  CHECK(std::abs(coarse.sigma_T_given_n / base.sigma - 1.0) < 1e-2);
  CHECK(rel_diff(coarse.sigma_T_given_n, base.sigma) < 1e-10);
}

TEST_CASE("unconditioned spread agrees with the precision decomposition") {
  // Small effect so the perturbative form applies.
  const double t = 0.005;
  const auto base = unconditioned(ns_clock, fig3, t, electron);
  const auto b = precision::sigma_breakdown(ns_clock, fig3, t, electron);
  CHECK(std::abs((base.sigma - ns_clock.sigma_time) / (b.total - b.sigma_nr) - 1.0) < 1e-2);
  const auto d = precision::sigma_breakdown(ns_clock, fig3, t, electron, SecondOrder::doubled);
  CHECK(std::abs((base.sigma - ns_clock.sigma_time) / (d.total - d.sigma_nr) - 1.0) > 0.5);
}

TEST_CASE("law of total variance") {
  for (const GaussianState& s : {fig3, GaussianState{0.0, 1.7 * fig3.sigma_p(), 1e-9}}) {
    for (double t : {0.01, t_fig}) {
      const auto base = unconditioned(ns_clock, s, t, electron);
      for (double q : {0.3, 1.0, 2.5, 40.0}) {
        const auto b = binning_for(s, q);
        double total = 0.0;
        for (long n = b.n_lo; n <= b.n_hi; ++n) {
          if (bin_probability(s, b, n) < 1e-15) continue;
          const auto r = conditioned_sigma(ns_clock, s, t, electron, b, n);
          total += r.probability * (r.sigma_T_given_n * r.sigma_T_given_n + std::pow(r.mean_T_given_n - base.mean, 2));
        }
        INFO("q " << q << " t " << t);
        CHECK(rel_diff(total, base.sigma * base.sigma) < 1e-8);
        // The relativistic excess alone, which is what the bins redistribute.
        const double excess = base.sigma * base.sigma - ns_clock.sigma_time * ns_clock.sigma_time;
        CHECK(std::abs(total - base.sigma * base.sigma) < 1e-7 * excess);
      }
    }
  }
}

TEST_CASE("conditioning monotone in q and t") {
  const std::vector<double> qs{0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0, 1e3};
  const std::vector<double> ts{0.01, 0.02, 0.05, 0.1};
  const auto rows = sweep_conditioned(ns_clock, fig3, electron, qs, ts);
  REQUIRE(rows.size() == qs.size() * ts.size());
  for (std::size_t i = 0; i < qs.size(); ++i)
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const auto& r = rows[i * ts.size() + j];
      CHECK(r.q == qs[i]);
      CHECK(r.t == ts[j]);
      CHECK(r.sigma_nr <= r.result.sigma_T_given_n);
      CHECK(r.result.sigma_T_given_n <= r.sigma_unconditioned + 1e-12 * r.sigma_unconditioned);
      if (i > 0) CHECK(rows[(i - 1) * ts.size() + j].result.sigma_T_given_n <= r.result.sigma_T_given_n);
      if (j > 0) CHECK(rows[i * ts.size() + j - 1].result.sigma_T_given_n <= r.result.sigma_T_given_n);
    }
  // Nested refinement of the central bin.
  double prev = 1e300;
  for (double q = 8.0; q > 0.01; q /= 2) {
    const double s = conditioned_sigma(ns_clock, fig3, t_fig, electron, binning_for(fig3, q), 0).sigma_T_given_n;
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("excess shrinks as c^-4") {
  const auto b = binning_for(fig3, 1.0);
  const double e1 = conditioned_sigma(ns_clock, fig3, t_fig, electron, b, 0).sigma_T_given_n - ns_clock.sigma_time;
  const Coupling fast{me, 0.0, 2 * constants::c};
  const double e2 = conditioned_sigma(ns_clock, fig3, t_fig, fast, b, 0).sigma_T_given_n - ns_clock.sigma_time;
  CHECK(std::abs(e1 / e2 / 16.0 - 1.0) < 2e-2);
}

TEST_CASE("reduction agrees with explicit joint conditioning") {
  for (const GaussianState& s : {fig3, GaussianState{0.0, -0.8 * fig3.sigma_p(), 1e-9}}) {
    for (double q : {0.5, 2.0, 30.0}) {
      const auto b = binning_for(s, q);
      for (long n : {0L, 1L, -1L}) {
        if (bin_probability(s, b, n) < 1e-6) continue;
        const auto r = conditioned_sigma(ns_clock, s, t_fig, electron, b, n);
        const auto j = joint_conditioning(ns_clock, s, t_fig, electron, b.lower(n), b.upper(n));
        INFO("q " << q << " n " << n);
        CHECK(rel_diff(r.sigma_T_given_n, j.sigma) < 1e-6);
        CHECK(std::abs(r.mean_T_given_n - j.mean) < 1e-6 * j.sigma);
      }
    }
  }
}

TEST_CASE("measurement errors") {
  const auto b = binning_for(fig3, 0.5);
  CHECK_THROWS_AS(conditioned_sigma(ns_clock, fig3, 1.0, Coupling{me, 9.81, constants::c}, b, 0), DomainError);
  CHECK_THROWS_AS(conditioned_sigma(ns_clock, fig3, 1.0, electron, b, 1000), DomainError);
  CHECK_THROWS_AS(conditioned_sigma(IdealisedClock{0.0}, fig3, 1.0, electron, b, 0), DomainError);
}
