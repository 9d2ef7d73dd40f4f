#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chronodil/config.hpp"
#include "chronodil/csv.hpp"
#include "chronodil/dilation.hpp"
#include "chronodil/measurement.hpp"
#include "chronodil/oracle.hpp"
#include "chronodil/precision.hpp"

namespace chronodil::run {

struct Outcome {
  CsvTable table;
  bool verification_failed = false;
  std::vector<std::string> warnings;
};

// Results land at their index whatever order the workers finish in; the
// first failure by index is rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, std::size_t jobs, F&& f) {
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        slots[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

inline ClockModel make_matrix_clock(const ClockSpec& c) {
  const double sb = c.sigma_bar > 0.0 ? c.sigma_bar : std::sqrt(double(c.d));
  if (c.model == "swp") return clocks::build_swp(c.d, c.omega);
  if (c.model == "quasi_ideal") return clocks::build_quasi_ideal(c.d, c.omega, sb);
  if (c.model == "qubit") return clocks::build_qubit_phase(c.omega);
  // Idealised clock stand-in for runs that need a matrix model.
  return clocks::build_quasi_ideal(64, c.omega, 8.0);
}

inline AnyClock make_clock(const ClockSpec& c) {
  if (c.model == "idealised") return IdealisedClock{c.sigma_time};
  return make_matrix_clock(c);
}

inline GaussianState make_gaussian(const StateSpec& s) { return GaussianState{s.x0, s.p0, s.sigma_x}; }

inline CatState make_cat(const StateSpec& s) { return CatState{make_gaussian(s), s.delta_x0, s.alpha, s.theta}; }

inline KinematicState make_state(const StateSpec& s) {
  if (s.kind == "cat") return make_cat(s);
  return make_gaussian(s);
}

inline Coupling make_coupling(const PhysicsSpec& p) { return Coupling{p.mass, p.g, p.c_scale * constants::c}; }

inline SecondOrder make_order(const PhysicsSpec& p) {
  return p.second_order == "doubled" ? SecondOrder::doubled : SecondOrder::taylor;
}

namespace detail {

inline std::string num(double v) { return config::detail::num(v); }

inline std::vector<double> dilation_row(const RunConfig& c, const AnyClock& clock, double t) {
  const auto r = dilation::mean_clock_time(clock, make_state(c.state), t, make_coupling(c.physics));
  return {t, r.mean_T_nr, r.r_factor, r.error_trace, r.correction, r.mean_T, r.classical_shift};
}

inline double clock_factor(const AnyClock& clock, double t) {
  if (const auto* m = std::get_if<ClockModel>(&clock)) return 1.0 + clocks::error_trace(*m, t);
  return 1.0;
}

// Corrections (mean time minus t) for the superposition and the weighted
// mixture of its two packets, then T_coh by the direct and closed-form routes.
inline std::vector<double> coherence_row(const RunConfig& c, const AnyClock& clock, double t) {
  const CatState cat = make_cat(c.state);
  const Coupling k = make_coupling(c.physics);
  const IdealisedClock ideal{c.clock.sigma_time};
  const double f = clock_factor(clock, t);
  const double sup = dilation::mean_clock_time(ideal, cat, t, k).correction;
  const double mix = cat.alpha * dilation::mean_clock_time(ideal, cat.first(), t, k).correction +
                     (1.0 - cat.alpha) * dilation::mean_clock_time(ideal, cat.second(), t, k).correction;
  const auto chk = dilation::sup_vs_mix(cat, t, k);
  return {t, f * sup, f * mix, f * chk.direct.t_coh, f * chk.closed_form, chk.relative_deviation};
}

inline std::vector<double> precision_row(const RunConfig& c, const AnyClock& clock, double t) {
  const auto b = precision::sigma_breakdown(clock, make_state(c.state), t, make_coupling(c.physics),
                                            make_order(c.physics));
  return {t, b.sigma_nr, b.sigma_i, b.sigma_ni, b.total};
}

inline void velocity_warning(const RunConfig& c, Outcome& out) {
  if (auto w = dilation::low_velocity_warning(c.state.p0 / c.physics.mass, make_coupling(c.physics)))
    out.warnings.push_back(*w);
}

}  // namespace detail

inline Outcome dilation_table(const RunConfig& c, std::size_t jobs) {
  Outcome out;
  out.table.kind = "dilation";
  out.table.header = {"t", "mean_T_nr", "r_factor", "error_trace", "correction", "mean_T", "classical_shift"};
  detail::velocity_warning(c, out);
  const AnyClock clock = make_clock(c.clock);
  const auto& ts = c.physics.times;
  for (auto& row : parallel_map<std::vector<double>>(ts.size(), jobs,
                                                     [&](std::size_t i) { return detail::dilation_row(c, clock, ts[i]); }))
    out.table.add_row(std::move(row));
  return out;
}

inline Outcome coherence_table(const RunConfig& c, std::size_t jobs) {
  if (c.state.kind != "cat") throw DomainError("coherence needs state.kind = cat");
  Outcome out;
  out.table.kind = "coherence";
  out.table.header = {"t", "sup_correction", "mix_correction", "t_coh", "t_coh_closed_form", "relative_deviation"};
  detail::velocity_warning(c, out);
  const AnyClock clock = make_clock(c.clock);
  const auto& ts = c.physics.times;
  for (auto& row : parallel_map<std::vector<double>>(
           ts.size(), jobs, [&](std::size_t i) { return detail::coherence_row(c, clock, ts[i]); }))
    out.table.add_row(std::move(row));
  return out;
}

inline Outcome precision_table(const RunConfig& c, std::size_t jobs) {
  Outcome out;
  out.table.kind = "precision";
  out.table.header = {"t", "sigma_nr", "sigma_i", "sigma_ni", "total"};
  out.table.metadata.push_back({"second_order", c.physics.second_order});
  const AnyClock clock = make_clock(c.clock);
  const auto& ts = c.physics.times;
  for (auto& row : parallel_map<std::vector<double>>(
           ts.size(), jobs, [&](std::size_t i) { return detail::precision_row(c, clock, ts[i]); }))
    out.table.add_row(std::move(row));
  return out;
}

inline Outcome measurement_table(const RunConfig& c, std::size_t jobs) {
  if (c.clock.model != "idealised") throw DomainError("measurement needs clock.model = idealised");
  if (c.state.kind != "gaussian") throw DomainError("measurement needs state.kind = gaussian");
  Outcome out;
  out.table.kind = "measurement";
  out.table.header = {"q",           "t",        "bin", "probability", "sigma_T_given_n", "mean_T_given_n",
                      "sigma_nr", "sigma_unconditioned"};
  const IdealisedClock clock{c.clock.sigma_time};
  const GaussianState s = make_gaussian(c.state);
  const Coupling k = make_coupling(c.physics);
  const auto& qs = c.measurement.q;
  const auto rows = parallel_map<std::vector<ConditionedRow>>(qs.size(), jobs, [&](std::size_t i) {
    return measurement::sweep_conditioned(clock, s, k, {qs[i]}, c.physics.times, c.measurement.bin);
  });
  for (const auto& block : rows)
    for (const auto& r : block)
      out.table.add_row({r.q, r.t, double(r.result.bin), r.result.probability, r.result.sigma_T_given_n,
                         r.result.mean_T_given_n, r.sigma_nr, r.sigma_unconditioned});
  return out;
}

inline Outcome verify_table(const RunConfig& c, std::size_t jobs) {
  Outcome out;
  out.table.kind = "verify";
  out.table.header = {"t",        "scaling",           "perturbative", "exact",    "residual",
                      "absolute_residual", "exponent", "absolute_exponent", "at_floor", "passed"};
  out.table.metadata.push_back({"quantity", c.verify.quantity});
  const ClockModel clock = make_matrix_clock(c.clock);
  const Coupling k = make_coupling(c.physics);
  SplitStepOptions opt;
  opt.grid_points = std::size_t(c.verify.grid_points);
  const auto& ts = c.physics.times;
  const auto reports = parallel_map<VerificationReport>(ts.size(), jobs, [&](std::size_t i) {
    if (c.verify.quantity == "sigma")
      return oracle::verify_sigma(clock, make_state(c.state), ts[i], k, c.verify.c_scalings, make_order(c.physics));
    if (c.verify.quantity == "coherence") {
      if (c.state.kind != "cat") throw DomainError("verify coherence needs state.kind = cat");
      return oracle::verify_coherence(clock, make_cat(c.state), ts[i], k, c.verify.c_scalings, opt);
    }
    return oracle::verify_mean_time(clock, make_state(c.state), ts[i], k, c.verify.c_scalings, opt);
  });
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& r = reports[i];
    if (!r.passed) out.verification_failed = true;
    for (std::size_t j = 0; j < r.scalings.size(); ++j)
      out.table.add_row({ts[i], r.scalings[j], r.perturbative[j], r.exact[j], r.residual[j], r.absolute_residual[j],
                         r.exponent, r.absolute_exponent, r.at_floor ? 1.0 : 0.0, r.passed ? 1.0 : 0.0});
  }
  return out;
}

inline std::vector<double> sweep_values(const SweepSpec& s, std::uint64_t seed) {
  const std::size_t n = std::size_t(s.points);
  std::vector<double> v(n);
  if (s.spacing == "random") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(s.from, s.to);
    for (auto& x : v) x = u(rng);
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double f = double(i) / double(n - 1);
    v[i] = s.spacing == "log" ? s.from * std::pow(s.to / s.from, f) : s.from + (s.to - s.from) * f;
  }
  return v;
}

inline Outcome sweep_table(const RunConfig& c, std::size_t jobs) {
  Outcome out;
  out.table.kind = "sweep";
  out.table.header = {"index", c.sweep.parameter};
  if (c.sweep.quantity == "coherence")
    out.table.header.insert(out.table.header.end(), {"t_coh", "sup_correction", "mix_correction"});
  else if (c.sweep.quantity == "dilation")
    out.table.header.insert(out.table.header.end(), {"correction", "mean_T", "r_factor"});
  else
    out.table.header.insert(out.table.header.end(), {"sigma_i", "sigma_ni", "total"});
  out.table.metadata.push_back({"quantity", c.sweep.quantity});
  const AnyClock clock = make_clock(c.clock);
  const auto values = sweep_values(c.sweep, c.seed);
  const auto rows = parallel_map<std::vector<double>>(values.size(), jobs, [&](std::size_t i) {
    RunConfig p = c;
    double t = c.physics.times.front();
    const double v = values[i];
    if (c.sweep.parameter == "separation") {
      p.state.kind = "cat";
      p.state.delta_x0 = v * c.state.sigma_x;
    } else if (c.sweep.parameter == "alpha") {
      p.state.alpha = v;
    } else if (c.sweep.parameter == "theta") {
      p.state.theta = v;
    } else if (c.sweep.parameter == "sigma_x") {
      p.state.sigma_x = v;
    } else {
      t = v;
    }
    std::vector<double> row{double(i), v};
    if (c.sweep.quantity == "coherence") {
      const auto r = detail::coherence_row(p, clock, t);
      row.insert(row.end(), {r[3], r[1], r[2]});
    } else if (c.sweep.quantity == "dilation") {
      const auto r = detail::dilation_row(p, clock, t);
      row.insert(row.end(), {r[4], r[5], r[2]});
    } else {
      const auto r = detail::precision_row(p, clock, t);
      row.insert(row.end(), {r[2], r[3], r[4]});
    }
    return row;
  });
  for (auto row : rows) out.table.add_row(std::move(row));
  return out;
}

inline Outcome execute(const RunConfig& c, std::size_t jobs = 1) {
  if (c.physics.times.empty()) throw ConfigError(0, "missing required key physics.t");
  if (c.command == "dilation") return dilation_table(c, jobs);
  if (c.command == "coherence") return coherence_table(c, jobs);
  if (c.command == "precision") return precision_table(c, jobs);
  if (c.command == "measurement") return measurement_table(c, jobs);
  if (c.command == "verify") return verify_table(c, jobs);
  if (c.command == "sweep") return sweep_table(c, jobs);
  throw ConfigError(0, "unknown command " + c.command);
}

// Gnuplot script for a measurement or sweep table; `csv_path` is written
// verbatim, so pass it relative to where the script will live.
inline std::string plot_script(const CsvTable& t, const std::string& csv_path) {
  std::ostringstream o;
  o << "set datafile separator ','\n"
    << "set datafile commentschars '#'\n"
    << "set key autotitle columnhead\n"
    << "set format y '%.2e'\n";
  if (t.kind == "measurement") {
    const std::size_t cq = t.column("q"), ct = t.column("t"), cs = t.column("sigma_T_given_n");
    std::vector<double> qs;
    for (const auto& r : t.rows)
      if (std::find(qs.begin(), qs.end(), r[cq]) == qs.end()) qs.push_back(r[cq]);
    o << "set xlabel 't [s]'\n"
      << "set ylabel 'sigma_T given n [s]'\n"
      << "plot \\\n";
    for (std::size_t i = 0; i < qs.size(); ++i) {
      o << "  '" << csv_path << "' using " << ct + 1 << ":($" << cq + 1 << "==" << csv::number(qs[i]) << " ? $"
        << cs + 1 << " : 1/0) with linespoints title 'q = " << detail::num(qs[i]) << "'"
        << (i + 1 < qs.size() ? ", \\\n" : "\n");
    }
    return o.str();
  }
  if (t.kind == "sweep") {
    if (t.rows.empty()) throw DomainError("plot_script: empty sweep table");
    const std::size_t cx = 1, cy = 2;
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      if (std::abs(t.rows[i][cy]) > std::abs(t.rows[best][cy])) best = i;
    const double bx = t.rows[best][cx], by = t.rows[best][cy];
    o << "set xlabel '" << t.header[cx] << "'\n"
      << "set ylabel '" << t.header[cy] << "'\n"
      << "set label 1 sprintf('extremum %.3e at %.3g', " << csv::number(by) << ", " << csv::number(bx) << ") at "
      << csv::number(bx) << ", " << csv::number(by) << " point pointtype 7 offset 1,1\n"
      << "plot '" << csv_path << "' using " << cx + 1 << ":" << cy + 1 << " with linespoints title '" << t.header[cy]
      << "'\n";
    return o.str();
  }
  throw ConfigError(0, "plot_script: no plot for '" + t.kind + "' tables");
}

}  // namespace chronodil::run
