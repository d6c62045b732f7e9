#pragma once

// The four experiment commands. Each validates its configuration, writes
// its data files through one ArtifactWriter and finishes with a manifest.

#include "laxflow/cli/io.hpp"

#include <chrono>

namespace laxflow::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2 };

struct CommandResult {
  int exit_code = kOk;
  json manifest;
};

namespace detail {

using clock = std::chrono::steady_clock;

inline double seconds_since(clock::time_point t0) {
  return std::chrono::duration<double>(clock::now() - t0).count();
}

inline CommandResult finish(const Manifest& m, const ArtifactWriter& w) {
  m.finish(w);
  return {m.all_pass() ? kOk : kCheckFailed, m.to_json(w)};
}

inline Eigen::Index grid_size(Eigen::Index K) { return 2 * K; }

/// Times paired with their source expressions, sorted by value.
inline std::vector<std::pair<double, std::string>> labelled_times(const RunConfig& c) {
  std::vector<std::pair<double, std::string>> out;
  if (!c.times.empty()) {
    for (const auto& s : c.times) out.emplace_back(TimeExpression::evaluate(s), s);
  } else {
    for (double t : symmetric_grid(c.T.value_or(1.0), c.grid_points)) out.emplace_back(t, format_double(t));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out.erase(std::unique(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
            out.end());
  return out;
}

inline void record_run(Manifest& m, const SchemeOutput& out) {
  m.decompositions += out.decompositions;
  m.cache_hits += out.cache_hits;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline CommandResult cmd_evolve(const RunConfig& cfg) {
  validate(cfg);
  const auto t_start = detail::clock::now();
  const Schedule schedule = resolve_schedule(cfg.schedule, cfg.K);
  const std::vector<double> times = cfg.time_values();

  const SchemeConfig sc{cfg.equation, schedule, times, cfg.profile, cfg.override_focusing_threshold};
  const SchemeOutput out = run_scheme(sc);
  const double scheme_seconds = detail::seconds_since(t_start);

  ArtifactWriter writer(cfg.out);
  Manifest m;
  m.config = to_json(cfg);
  detail::record_run(m, out);
  m.extra["warnings"] = schedule.warnings;
  m.extra["ambient_size"] = out.M;

  const Eigen::Index K = schedule.K;
  CsvTable coeffs({"t", "k", "re", "im"});
  for (std::size_t i = 0; i < times.size(); ++i)
    for (Eigen::Index k = 0; k < K; ++k) {
      const cplx c = out.coeffs(k, static_cast<Eigen::Index>(i));
      coeffs.row() << times[i] << k << c.real() << c.imag();
    }
  writer.write("coefficients.csv", coeffs);

  const auto x = uniform_grid(detail::grid_size(K));
  const bool ccm = is_ccm(cfg.equation);
  CsvTable samples = ccm ? CsvTable({"t", "x", "re", "im"}) : CsvTable({"t", "x", "value"});
  for (double t : times) {
    if (ccm) {
      const auto v = synthesize(out.hardy(t), x);
      for (std::size_t j = 0; j < x.size(); ++j) samples.row() << t << x[j] << v[j].real() << v[j].imag();
    } else {
      const auto v = synthesize_real(out.spectrum(t), x);
      for (std::size_t j = 0; j < x.size(); ++j) samples.row() << t << x[j] << v[j];
    }
  }
  writer.write("samples.csv", samples);

  CsvTable inv({"t", "mass", "hardy_l2", "full_l2", "final_iterate_l2"});
  double mass_err = 0.0, l2_excess = 0.0, full_excess = 0.0, l2_drift = 0.0, tail_max = 0.0, telescope = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const double h = hardy_l2(out, t);
    const double full = ccm ? h : full_l2(out, t);
    inv.row() << t << mass(out, t) << h << full << out.tail_norm[i];
    mass_err = std::max(mass_err, std::abs(out.coeffs(0, static_cast<Eigen::Index>(i)) - out.initial_mean));
    l2_excess = std::max(l2_excess, h - out.truncated_norm);
    full_excess = std::max(full_excess, full - out.initial_norm);
    l2_drift = std::max(l2_drift, std::abs(h - out.truncated_norm));
    tail_max = std::max(tail_max, out.tail_max_abs[i]);
    telescope = std::max(telescope, std::abs(std::hypot(h, out.tail_norm[i]) - out.truncated_norm));
  }
  writer.write("invariants.csv", inv);

  if (schedule.n(0) >= 1) m.check("mass_conservation", mass_err, cfg.tol_mass, mass_err <= cfg.tol_mass);
  m.check("hardy_l2_nonincrease", l2_excess, cfg.tol_l2, l2_excess <= cfg.tol_l2);
  if (!ccm) m.check("full_l2_nonincrease", full_excess, cfg.tol_l2, full_excess <= cfg.tol_l2);
  m.check("l2_telescoping", telescope, cfg.tol_l2, telescope <= cfg.tol_l2);
  if (schedule.l2_preserving) {
    m.check("hardy_l2_preserved", l2_drift, cfg.tol_l2, l2_drift <= cfg.tol_l2);
    m.check("final_iterate_vanishes", tail_max, cfg.tol_l2, tail_max <= cfg.tol_l2);
  }
  m.wall_seconds = {{"scheme", scheme_seconds}, {"total", detail::seconds_since(t_start)}};
  return detail::finish(m, writer);
}

// ---------------------------------------------------------------------------

inline CommandResult cmd_talbot(const RunConfig& cfg) {
  validate(cfg);
  const auto t_start = detail::clock::now();
  const Eigen::Index K = cfg.K;
  const Schedule nonlinear = resolve_schedule(cfg.schedule, K);
  const Schedule linear = make_schedule(Schedule::Kind::linear_case, K);
  const auto labelled = detail::labelled_times(cfg);
  std::vector<double> times;
  for (const auto& [t, _] : labelled) times.push_back(t);

  const SchemeOutput nl = run_scheme({Flow::bo, nonlinear, times, cfg.profile, false});
  const SchemeOutput li = run_scheme({Flow::bo, linear, times, cfg.profile, false});
  const double scheme_seconds = detail::seconds_since(t_start);

  ArtifactWriter writer(cfg.out);
  Manifest m;
  m.config = to_json(cfg);
  detail::record_run(m, nl);
  detail::record_run(m, li);

  const RealSpectrum u0 = analyze_profile(cfg.profile, K);
  CsvTable coeffs({"t", "k", "nonlinear_re", "nonlinear_im", "linear_re", "linear_im"});
  double oracle_err = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index k = 0; k < K; ++k) {
      const cplx a = nl.coeffs(k, col);
      const cplx b = li.coeffs(k, col);
      coeffs.row() << times[i] << k << a.real() << a.imag() << b.real() << b.imag();
      const double kk = static_cast<double>(k);
      oracle_err = std::max(oracle_err, std::abs(b - std::polar(1.0, times[i] * kk * kk) * u0.coeff(k)));
    }
  }
  writer.write("coefficients.csv", coeffs);
  m.check("linear_phase_oracle", oracle_err, 1e-10, oracle_err <= 1e-10);

  const auto x = uniform_grid(detail::grid_size(K));
  json panels = json::array();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto a = synthesize_real(nl.spectrum(times[i]), x);
    const auto b = synthesize_real(li.spectrum(times[i]), x);
    CsvTable panel({"x", "nonlinear", "linear"});
    double diff = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      panel.row() << x[j] << a[j] << b[j];
      diff = std::max(diff, std::abs(a[j] - b[j]));
    }
    const std::string name = "panel_" + std::to_string(i) + ".csv";
    writer.write(name, panel);
    panels.push_back({{"file", name}, {"t", times[i]}, {"expression", labelled[i].second},
                      {"points", x.size()}, {"nonlinear_minus_linear_max_abs", diff}});
  }
  m.extra["panels"] = panels;
  m.wall_seconds = {{"scheme", scheme_seconds}, {"total", detail::seconds_since(t_start)}};
  return detail::finish(m, writer);
}

// ---------------------------------------------------------------------------

inline CommandResult cmd_convergence(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.schedule.kind == Schedule::Kind::custom)
    throw ConfigError("schedule", "convergence studies need a named schedule kind");
  const auto t_start = detail::clock::now();
  ConvergenceOptions opts;
  opts.reference_schedule = cfg.reference_schedule;
  opts.run.override_focusing_threshold = cfg.override_focusing_threshold;
  PropagatorCache cache;
  opts.run.cache = &cache;
  const double T = cfg.T.value_or(std::numbers::pi);
  const ConvergenceTable table =
      run_convergence_study(cfg.profile, cfg.equation, cfg.Ks, cfg.schedule.kind, T, cfg.grid_points, cfg.K_ref, opts);

  ArtifactWriter writer(cfg.out);
  Manifest m;
  m.config = to_json(cfg);
  m.decompositions = cache.decompositions();
  m.cache_hits = cache.hits();

  CsvTable csv({"K", "schedule", "error", "norm_diff", "norm_diff_bounded", "decompositions"});
  json row_times = json::object();
  for (const auto& r : table.rows) {
    csv.row() << r.K << to_string(r.schedule) << r.error << r.norm_diff << r.norm_diff_bounded << r.decompositions;
    row_times[std::to_string(r.K)] = r.wall_seconds;
  }
  writer.write("convergence.csv", csv);

  std::optional<RateFit> fit;
  if (table.rows.size() >= 4) fit = fit_rate(table);
  const std::optional<double> slope = fit ? fit->slope : std::nullopt;

  const bool monotone = table.non_increasing();
  const bool bounded = table.norm_differences_bounded();
  bool in_window = true;
  if (cfg.rate_window) in_window = slope && *slope >= cfg.rate_window->first && *slope <= cfg.rate_window->second;
  m.check("error_non_increasing", table.rows.back().error, table.rows.front().error, monotone);
  m.check("norm_difference_bounded", 0.0, 0.0, bounded);
  if (cfg.rate_window) m.check("rate_in_window", slope.value_or(NAN), cfg.rate_window->second, in_window);

  json summary;
  summary["equation"] = std::string(to_string(cfg.equation));
  summary["schedule"] = std::string(to_string(cfg.schedule.kind));
  summary["reference_schedule"] = std::string(to_string(table.reference_schedule));
  summary["K_ref"] = table.K_ref;
  summary["T"] = table.T;
  summary["grid_points"] = table.grid_points;
  summary["Ks"] = cfg.Ks;
  json errors = json::array();
  for (const auto& r : table.rows) errors.push_back(r.error);
  summary["errors"] = errors;
  summary["slope"] = slope ? json(*slope) : json(nullptr);
  summary["convergent"] = fit ? json(fit->convergent) : json(nullptr);
  summary["non_increasing"] = monotone;
  summary["strictly_decreasing"] = table.strictly_decreasing();
  summary["norm_differences_bounded"] = bounded;
  summary["rate_window"] = cfg.rate_window ? json{cfg.rate_window->first, cfg.rate_window->second} : json(nullptr);
  summary["pass"] = m.all_pass();
  writer.write_json("summary.json", summary);

  m.wall_seconds = {{"reference", table.reference_seconds}, {"rows", row_times},
                    {"total", detail::seconds_since(t_start)}};
  return detail::finish(m, writer);
}

// ---------------------------------------------------------------------------

inline std::vector<Eigen::Index> powers_of_two_up_to(Eigen::Index M) {
  std::vector<Eigen::Index> ns;
  for (Eigen::Index n = 1; n <= M; n *= 2) ns.push_back(n);
  return ns;
}

inline CommandResult cmd_diagnostics(const RunConfig& cfg) {
  validate(cfg);
  const auto t_start = detail::clock::now();
  const Eigen::Index M = cfg.M;
  const InitialData u0 = is_ccm(cfg.equation) ? InitialData(analyze_hardy_profile(cfg.profile, M))
                                              : InitialData(analyze_profile(cfg.profile, M));
  const auto ns = powers_of_two_up_to(M);

  SuiteOptions suite;
  suite.seed = cfg.seed;
  suite.bound_scale = cfg.bound_scale;
  const auto reports = run_bound_suite(u0, cfg.equation, M, cfg.kappas, ns, suite);
  const double bounds_seconds = detail::seconds_since(t_start);

  const KappaZero k0 = laxflow::detail::kappa_zero_for(u0, cfg.equation, M, ns);
  auto t1 = detail::clock::now();
  const ResolventStudy resolvent = run_resolvent_convergence(u0, cfg.equation, M, k0.value);
  const double resolvent_seconds = detail::seconds_since(t1);
  t1 = detail::clock::now();
  const PropagatorSweep sweep = run_propagator_sweep(u0, cfg.equation, M, cfg.sweep_T, cfg.seed);
  const double sweep_seconds = detail::seconds_since(t1);

  ArtifactWriter writer(cfg.out);
  Manifest m;
  m.config = to_json(cfg);
  m.kappa0 = k0;

  CsvTable bounds({"name", "n", "kappa", "measured", "bound", "pass"});
  std::size_t bound_failures = 0;
  for (const auto& r : reports) {
    bounds.row() << r.name << r.n << r.kappa << r.measured << r.bound << r.pass;
    if (!r.pass) ++bound_failures;
  }
  writer.write("bounds.csv", bounds);

  CsvTable rcsv({"n", "kappa", "measured", "bound", "pass"});
  std::size_t resolvent_failures = 0;
  for (const auto& r : resolvent.rows) {
    const double bound = r.bound * cfg.bound_scale;
    const bool pass = within_bound(r.measured, bound);
    rcsv.row() << r.n << resolvent.kappa << r.measured << bound << pass;
    if (!pass) ++resolvent_failures;
  }
  writer.write("resolvent.csv", rcsv);

  CsvTable scsv({"n", "sup_error"});
  for (const auto& r : sweep.rows) scsv.row() << r.n << r.sup_error;
  writer.write("propagator_sweep.csv", scsv);

  m.check("bounds", static_cast<double>(bound_failures), 0.0, bound_failures == 0);
  m.check("resolvent_rate", static_cast<double>(resolvent_failures), 0.0, resolvent_failures == 0);

  json summary;
  summary["equation"] = std::string(to_string(cfg.equation));
  summary["M"] = M;
  summary["data_norm"] = laxflow::detail::data_norm(u0);
  summary["kappa0"] = k0.value;
  summary["bound_count"] = reports.size();
  summary["bound_failures"] = bound_failures;
  summary["resolvent_failures"] = resolvent_failures;
  summary["resolvent_monotone"] = resolvent.monotone;
  summary["propagator_sweep"] = {{"T", sweep.T}, {"improves_with_n", sweep.pass}};
  summary["pass"] = m.all_pass();
  writer.write_json("summary.json", summary);

  m.wall_seconds = {{"bounds", bounds_seconds}, {"resolvent", resolvent_seconds}, {"sweep", sweep_seconds},
                    {"total", detail::seconds_since(t_start)}};
  return detail::finish(m, writer);
}

// ---------------------------------------------------------------------------

inline CommandResult run_command(RunConfig cfg) {
  finalize(cfg);
  if (cfg.command == "evolve") return cmd_evolve(cfg);
  if (cfg.command == "talbot") return cmd_talbot(cfg);
  if (cfg.command == "convergence") return cmd_convergence(cfg);
  if (cfg.command == "diagnostics") return cmd_diagnostics(cfg);
  throw ConfigError("command", "unknown command '" + cfg.command + "'");
}

}  // namespace laxflow::cli
