#include <catch_amalgamated.hpp>

#include <unsupported/Eigen/FFT>

#include "chronodil/kinematics.hpp"
#include "support.hpp"

using namespace chronodil;
using namespace chronodil::kinematics;
using namespace testsupport;

namespace {

constexpr double hb = constants::hbar;
const double sx = 2.0e-9;
const double sp = hb / (2 * sx);

// Quadrature oracle over the explicit momentum wavefunction.
struct Quad {
  std::vector<double> p;
  std::vector<double> density;
  std::vector<std::vector<Complex>> amps;
  std::vector<double> weights;
  double dp;
};

Quad sample(const KinematicState& s, std::size_t n = 6001, double span = 14.0) {
  double center = 0.0, sig = 0.0;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GaussianState>) {
          center = v.p0;
          sig = v.sigma_p();
        } else if constexpr (std::is_same_v<T, CatState>) {
          center = v.base.p0;
          sig = v.base.sigma_p();
        } else {
          center = v.components[0].state.p0;
          sig = v.components[0].state.sigma_p();
        }
      },
      s);
  const auto grid = centered_grid(center, span * sig, n);
  const auto gs = to_grid(s, grid);
  Quad q{{}, std::vector<double>(n, 0.0), {}, {}, grid.dp};
  for (std::size_t j = 0; j < n; ++j) q.p.push_back(grid.point(j));
  for (const auto& c : gs.components) {
    for (std::size_t j = 0; j < n; ++j) q.density[j] += c.weight * std::norm(c.amplitude[j]);
    q.amps.push_back(c.amplitude);
    q.weights.push_back(c.weight);
  }
  return q;
}

double quad_moment(const Quad& q, int n) {
  double s = 0.0;
  for (std::size_t j = 0; j < q.p.size(); ++j) s += std::pow(q.p[j], n) * q.density[j];
  return s * q.dp;
}

// <x> by direct Fourier transform of each component to position space.
double quad_mean_x(const Quad& q, double x_lo, double x_hi, std::size_t nx = 1201) {
  const double dx = (x_hi - x_lo) / double(nx - 1);
  double mean = 0.0;
  for (std::size_t c = 0; c < q.amps.size(); ++c) {
    double m = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = x_lo + dx * double(i);
      Complex psi = 0.0;
      for (std::size_t j = 0; j < q.p.size(); ++j) psi += q.amps[c][j] * std::exp(linalg::I * (q.p[j] * x / hb));
      psi *= q.dp / std::sqrt(2 * constants::pi * hb);
      m += x * std::norm(psi) * dx;
    }
    mean += q.weights[c] * m;
  }
  return mean;
}

}  // namespace

TEST_CASE("cat normalisation factor") {
  const GaussianState g{0.0, 0.0, sx};
  CHECK(norm_factor(CatState{g, 0.0, 0.5, 0.0}) == Catch::Approx(2.0).epsilon(1e-15));
  CHECK(std::abs(norm_factor(CatState{g, 4 * sx, 0.5, 0.0}) - (1 + std::exp(-2.0))) < 1e-15);
  for (double a : {0.1, 0.5, 0.8})
    for (double dx : {0.0, sx, 5 * sx})
      CHECK(std::abs(norm_factor(CatState{g, dx, a, constants::pi / 2}) - 1.0) < 1e-15);
  double prev = norm_factor(CatState{g, 0.0, 0.5, 0.0});
  for (int i = 1; i <= 40; ++i) {
    const double n = norm_factor(CatState{g, 0.5 * i * sx, 0.5, 0.0});
    CHECK((n < prev || n == 1.0));
    prev = n;
  }
  CHECK(std::abs(prev - 1.0) < 1e-10);
}

TEST_CASE("Gaussian moments") {
  const auto m = moments(GaussianState{0.0, 0.0, sx});
  CHECK(rel_diff(m.mean_p2, sp * sp) < 1e-14);
  CHECK(rel_diff(m.mean_p4, 3 * std::pow(sp, 4)) < 1e-14);
  CHECK(rel_diff(m.var_p2, 2 * std::pow(sp, 4)) < 1e-14);
  const double p0 = 3.3 * sp;
  const auto m2 = moments(GaussianState{1e-9, p0, sx});
  CHECK(rel_diff(m2.mean_p2, p0 * p0 + sp * sp) < 1e-14);
  CHECK(m2.mean_x == 1e-9);
}

TEST_CASE("cat with coincident packets has the base moments") {
  const GaussianState g{2e-9, 0.7 * sp, sx};
  const auto a = moments(CatState{g, 0.0, 0.3, 0.0});
  const auto b = moments(g);
  CHECK(rel_diff(a.mean_p2, b.mean_p2) < 1e-13);
  CHECK(rel_diff(a.mean_p4, b.mean_p4) < 1e-13);
  CHECK(rel_diff(a.mean_x, b.mean_x) < 1e-13);
}

TEST_CASE("analytic moments agree with quadrature over the wavefunction") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 12; ++trial) {
    const GaussianState g{uniform(rng, -3, 3) * sx, uniform(rng, -2, 2) * sp, sx};
    std::vector<KinematicState> states{
        g, CatState{g, uniform(rng, 0.0, 6.0) * sx, uniform(rng, 0.05, 0.95), uniform(rng, -3.0, 3.0)},
        MixtureState{{{0.3, g}, {0.7, GaussianState{g.x0 + 2 * sx, g.p0, sx}}}}};
    for (const auto& s : states) {
      const auto q = sample(s);
      for (int n = 1; n <= 4; ++n) {
        const double a = momentum_moment(s, n);
        const double scale = std::pow(sp, n) + std::abs(a);
        REQUIRE(std::abs(a - quad_moment(q, n)) < 1e-10 * scale);
      }
    }
  }
}

TEST_CASE("cat mean position agrees with position-space quadrature") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const GaussianState g{uniform(rng, -1, 1) * sx, uniform(rng, -1, 1) * sp, sx};
    const CatState c{g, uniform(rng, 0.5, 4.0) * sx, uniform(rng, 0.1, 0.9), uniform(rng, -2.0, 2.0)};
    const auto q = sample(c, 801, 10.0);
    const double lo = g.x0 - 12 * sx, hi = g.x0 + c.delta_x0 + 12 * sx;
    CHECK(std::abs(mean_position(c) - quad_mean_x(q, lo, hi)) < 1e-10 * (std::abs(mean_position(c)) + sx));
  }
}

TEST_CASE("R factor") {
  const double m = 27 * constants::atomic_mass_unit;
  const Coupling k{m, 9.81, constants::c};
  const double c2 = constants::c * constants::c;
  const GaussianState g{1.5, 2.0 * sp, sx};
  const double t = 0.8;
  const double eq = -(g.p0 * g.p0 + sp * sp) / (2 * m * m * c2) + 9.81 * g.x0 / c2 + g.p0 * 9.81 * t / (m * c2) -
                    std::pow(9.81 * t / constants::c, 2) / 3;
  CHECK(rel_diff(r_factor(g, t, k), eq) < 1e-14);

  const Coupling flat{m, 0.0, constants::c};
  const GaussianState rest{0.0, 0.0, sx};
  CHECK(rel_diff(r_factor(rest, 0.1, flat), -sp * sp / (2 * m * m * c2)) < 1e-15);
  CHECK(r_factor(rest, 0.1, flat) == r_factor(rest, 7.0, flat));

  // Cat with explicit quadrature.
  const CatState cat{GaussianState{0.0, 0.0, sx}, 4 * sx, 0.5, 0.0};
  const auto q = sample(cat, 801, 10.0);
  const double mean_x = quad_mean_x(q, -12 * sx, 16 * sx);
  const double quad = -quad_moment(q, 2) / (2 * m * m * c2) + 9.81 * mean_x / c2 +
                      quad_moment(q, 1) * 9.81 * t / (m * c2) - std::pow(9.81 * t / constants::c, 2) / 3;
  CHECK(rel_diff(r_factor(cat, t, k), quad) < 1e-12);

  // Mixtures are linear.
  const MixtureState mix{{{0.25, g}, {0.75, rest}}};
  CHECK(rel_diff(r_factor(mix, t, k), 0.25 * r_factor(g, t, k) + 0.75 * r_factor(rest, t, k)) < 1e-14);
  CHECK_THROWS_AS(r_factor(g, t, Coupling{0.0, 9.81, constants::c}), DomainError);
}

TEST_CASE("grid sampling") {
  const GaussianState g{0.0, 1.3 * sp, sx};
  const auto grid = centered_grid(g.p0, 8 * sp, 1025);
  const auto gs = to_grid(g, grid);
  REQUIRE(gs.components.size() == 1);
  const auto& a = gs.components[0].amplitude;
  for (std::size_t j = 0; j < grid.n; ++j) {
    CHECK(std::abs(a[j].imag()) < 1e-300 + 1e-15 * std::abs(a[j]));
    CHECK(std::abs(a[j] - a[grid.n - 1 - j]) < 1e-12 * std::abs(a[j]) + 1e-300);
  }
  CHECK(std::abs(gs.components[0].discrete_norm - 1.0) < 1e-8);

  CHECK_THROWS_AS(to_grid(g, centered_grid(g.p0, 2 * sp, 1024)), NumericalError);

  const MixtureState mix{{{0.4, g}, {0.6, GaussianState{3 * sx, g.p0, sx}}}};
  const auto ms = to_grid(mix, grid);
  REQUIRE(ms.components.size() == 2);
  CHECK(ms.components[0].weight == 0.4);
  CHECK(ms.components[1].weight == 0.6);
}

TEST_CASE("cat fringes have period 2 pi hbar / dx") {
  const double dx = 10 * sx;
  const CatState cat{GaussianState{0.0, 0.0, sx}, dx, 0.5, 0.0};
  const std::size_t n = 4096;
  const auto grid = centered_grid(0.0, 8 * sp, n);
  const auto gs = to_grid(cat, grid);
  const auto mix = to_grid(constituents(cat), grid);
  std::vector<Complex> fringe(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double incoherent = 0.5 * std::norm(mix.components[0].amplitude[j]) + 0.5 * std::norm(mix.components[1].amplitude[j]);
    fringe[j] = norm_factor(cat) * std::norm(gs.components[0].amplitude[j]) - incoherent;
  }
  Eigen::FFT<double> fft;
  std::vector<Complex> spec;
  fft.fwd(spec, fringe);
  std::size_t peak = 1;
  for (std::size_t k = 1; k < n / 2; ++k)
    if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
  const double expected = dx / (2 * constants::pi * hb) * grid.dp * double(n);  // cycles across the grid
  CHECK(std::abs(double(peak) - expected) <= 1.0);
  const auto dg = default_grid(cat);
  CHECK(dg.dp <= 2 * constants::pi * hb / dx / 8);
}

TEST_CASE("state validation") {
  CHECK_THROWS_AS(moments(GaussianState{0.0, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(moments(CatState{GaussianState{0, 0, sx}, 1e-9, 1.5, 0.0}), DomainError);
  CHECK_THROWS_AS(moments(CatState{GaussianState{0, 0, sx}, 0.0, 0.5, constants::pi}), DomainError);
  CHECK_THROWS_AS(moments(MixtureState{{{0.5, GaussianState{0, 0, sx}}}}), DomainError);
}
