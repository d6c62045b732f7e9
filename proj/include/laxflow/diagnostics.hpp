#pragma once

// Experiment harnesses: Galerkin-level operator bounds, resolvent
// convergence rates, scheme convergence studies and the propagator sweep.

#include "laxflow/scheme.hpp"

#include <chrono>

namespace laxflow {

struct BoundReport {
  std::string name;
  Eigen::Index n = 0;
  double kappa = 0.0;
  Eigen::Index M = 0;
  Flow flow = Flow::bo;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline bool within_bound(double measured, double bound) {
  return measured <= bound + 1e-10 * (1.0 + std::abs(bound));
}

struct SuiteOptions {
  std::size_t random_vectors = 200;
  std::uint64_t seed = 7;
  /// Test hook: every bound is multiplied by this before comparison.
  double bound_scale = 1.0;
};

/// Uniform grid of `points` times on [-T, T], endpoints included.
inline std::vector<double> symmetric_grid(double T, int points) {
  if (points < 2) throw InvalidArgument("time grid needs at least 2 points");
  std::vector<double> t(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) t[static_cast<std::size_t>(i)] = -T + 2.0 * T * i / (points - 1);
  return t;
}

namespace detail {

inline double data_norm(const InitialData& u0) {
  return std::visit([](const auto& u) { return l2_norm(u); }, u0);
}

inline HardyVector hardy_part(const InitialData& u0) {
  if (const auto* r = std::get_if<RealSpectrum>(&u0)) return project_hardy(*r);
  return std::get<HardyVector>(u0);
}

// Multiplication by u0 compressed to [0, M).
inline CMatrix multiplication(const InitialData& u0, Eigen::Index M) {
  if (const auto* r = std::get_if<RealSpectrum>(&u0)) return multiplication_matrix(*r, M);
  return hardy_multiplication_matrix(std::get<HardyVector>(u0), M);
}

inline LaxMatrix build_lax(const InitialData& u0, Flow flow, Eigen::Index n, Eigen::Index M) {
  if (is_ccm(flow)) return build_ccm_lax(std::get<HardyVector>(u0), n, M, flow);
  return build_bo_lax(std::get<RealSpectrum>(u0), n, M);
}

inline void check_data(const InitialData& u0, Flow flow) {
  if (is_ccm(flow) != std::holds_alternative<HardyVector>(u0))
    throw InvalidArgument(is_ccm(flow) ? "CCM diagnostics need Hardy-space data"
                                       : "BO diagnostics need a real spectrum");
}

// Test vectors on [0, M) with a mix of flat and decaying spectra.
inline std::vector<CVector> test_vectors(Eigen::Index M, std::size_t count, std::uint64_t seed) {
  static constexpr double kDecay[] = {0.0, 0.5, 1.0, 2.0};
  const CounterRng rng(seed, 0x7e57);
  std::vector<CVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    CVector f(M);
    for (Eigen::Index k = 0; k < M; ++k)
      f[k] = rng.complex_normal(static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(M) +
                                static_cast<std::uint64_t>(k)) *
             std::pow(1.0 + static_cast<double>(k), -kDecay[i % 4]);
    out.push_back(f / f.norm());
  }
  return out;
}

inline KappaZero kappa_zero_for(const InitialData& u0, Flow flow, Eigen::Index M,
                                std::span<const Eigen::Index> ns) {
  if (is_ccm(flow)) return find_kappa_zero(std::get<HardyVector>(u0), flow, M, ns);
  return find_kappa_zero(std::get<RealSpectrum>(u0), M);
}

}  // namespace detail

/// Hardy-inequality sequence (1/(l+1)) sum_{m<=l} |uhat(m)| on l in [0, M).
inline double hardy_average_norm(const HardyVector& u, Eigen::Index M) {
  double running = 0.0;
  double acc = 0.0;
  for (Eigen::Index l = 0; l < M; ++l) {
    running += std::abs(u[l]);
    const double v = running / static_cast<double>(l + 1);
    acc += v * v;
  }
  return std::sqrt(acc);
}

/// Evaluates the operator bounds at the Galerkin level for every
/// (n, kappa) pair and the norm equivalences at kappa_0. Failures are
/// reported, never thrown.
inline std::vector<BoundReport> run_bound_suite(const InitialData& u0, Flow flow, Eigen::Index M,
                                                std::span<const double> kappas,
                                                std::span<const Eigen::Index> ns,
                                                const SuiteOptions& opts = {}) {
  detail::check_data(u0, flow);
  if (M < 8) throw InvalidArgument("bound suite needs M >= 8");
  for (double k : kappas)
    if (!(k >= 1.0)) throw InvalidArgument("bound suite kappas must be >= 1");
  for (Eigen::Index n : ns)
    if (n < 1 || n > M) throw InvalidArgument("bound suite truncations must lie in [1, M]");

  const double norm = detail::data_norm(u0);
  const CMatrix U = detail::multiplication(u0, M);
  std::vector<BoundReport> reports;
  auto report = [&](std::string name, Eigen::Index n, double kappa, double measured, double bound) {
    bound *= opts.bound_scale;
    reports.push_back({std::move(name), n, kappa, M, flow, measured, bound, within_bound(measured, bound)});
  };

  for (double kappa : kappas) {
    const RVector r0 = FreeResolvent(kappa, M).diagonal();
    for (Eigen::Index n : ns) {
      const CMatrix URn = U.leftCols(n) * r0.head(n).cast<cplx>().asDiagonal();
      report("potential_resolvent", n, kappa, operator_norm(URn), std::sqrt(3.0 / kappa) * norm);
      if (is_ccm(flow)) {
        // u P_n ubar P_n R0: A[:, :n] A[:n, :n]^H R0.
        const CMatrix An = U.topLeftCorner(n, n);
        const CMatrix prod = U.leftCols(n) * (An.adjoint() * r0.head(n).cast<cplx>().asDiagonal());
        report("quadratic_resolvent", n, kappa, operator_norm(prod), 2.0 * norm * norm);
      }
      // (P - P_n) R0 on the window [0, M]: diagonal 1/(k + kappa), k >= n.
      report("tail_resolvent", n, kappa, 1.0 / (static_cast<double>(n) + kappa), 1.0 / static_cast<double>(n));
    }
  }

  report("hardy_average", M, 0.0, hardy_average_norm(detail::hardy_part(u0), M), 2.0 * norm);

  const KappaZero k0 = detail::kappa_zero_for(u0, flow, M, ns);
  const double kappa = k0.value;
  const std::string fwd = "h1_equivalence";
  const std::string dual = "dual_equivalence";
  const auto vectors = detail::test_vectors(M, opts.random_vectors, opts.seed);
  RVector weight(M);  // (k + kappa): the H^1_kappa multiplier
  for (Eigen::Index k = 0; k < M; ++k) weight[k] = static_cast<double>(k) + kappa;

  for (Eigen::Index n : ns) {
    const LaxMatrix lax = detail::build_lax(u0, flow, n, M);
    const HermitianEig e = eig_hermitian(lax);
    report("semibounded", n, kappa, -e.eigenvalues().minCoeff(), kappa);

    CMatrix shifted = lax.entries();
    shifted.diagonal().array() += kappa;
    Eigen::PartialPivLU<CMatrix> lu(shifted);

    double fwd_lo = 0.0, fwd_hi = 0.0, dual_lo = 0.0, dual_hi = 0.0;
    for (const CVector& f : vectors) {
      const double h1 = f.cwiseProduct(weight.cast<cplx>()).norm();
      const double hm1 = f.cwiseQuotient(weight.cast<cplx>()).norm();
      const double Lf = (shifted * f).norm();
      const double Rf = lu.solve(f).norm();
      fwd_lo = std::max(fwd_lo, h1 / Lf);
      fwd_hi = std::max(fwd_hi, Lf / h1);
      dual_hi = std::max(dual_hi, Rf / hm1);
      dual_lo = std::max(dual_lo, hm1 / Rf);
    }
    report(fwd + "_lower", n, kappa, fwd_lo, 2.0);
    report(fwd + "_upper", n, kappa, fwd_hi, 1.5);
    report(dual + "_upper", n, kappa, dual_hi, 2.0);
    report(dual + "_lower", n, kappa, dual_lo, 1.5);

    // Operator-level version: singular values of (L_n + kappa) D^{-1} lie in [1/2, 3/2].
    const CMatrix X = shifted * weight.cwiseInverse().cast<cplx>().asDiagonal();
    Eigen::SelfAdjointEigenSolver<CMatrix> sv(X.adjoint() * X, Eigen::EigenvaluesOnly);
    const double smin = std::sqrt(std::max(0.0, sv.eigenvalues().minCoeff()));
    const double smax = std::sqrt(std::max(0.0, sv.eigenvalues().maxCoeff()));
    report(fwd + "_operator_lower", n, kappa, smin > 0 ? 1.0 / smin : INFINITY, 2.0);
    report(fwd + "_operator_upper", n, kappa, smax, 1.5);
  }

  std::stable_sort(reports.begin(), reports.end(), [](const BoundReport& a, const BoundReport& b) {
    return std::tie(a.name, a.n, a.kappa) < std::tie(b.name, b.n, b.kappa);
  });
  return reports;
}

// ---------------------------------------------------------------------------

struct ResolventRow {
  Eigen::Index n = 0;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct ResolventStudy {
  std::vector<ResolventRow> rows;
  double kappa = 0.0;
  bool monotone = true;  // measured(2n) <= measured(n) + 1e-12
  bool all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ResolventRow& r) { return r.pass; });
  }
};

/// ||R_n(kappa) - R_M(kappa)|| for n = 2, 4, ..., M/2, with L_M standing in
/// for the untruncated operator.
inline ResolventStudy run_resolvent_convergence(const InitialData& u0, Flow flow, Eigen::Index M,
                                                double kappa) {
  detail::check_data(u0, flow);
  if (M < 32 || (M & (M - 1)) != 0) throw InvalidArgument("resolvent study needs M a power of two >= 32");
  if (!(kappa >= 1.0)) throw InvalidArgument("kappa must be >= 1");
  const double norm = detail::data_norm(u0);
  const CMatrix RM = resolvent_matrix(eig_hermitian(detail::build_lax(u0, flow, M, M)), kappa);

  ResolventStudy study;
  study.kappa = kappa;
  for (Eigen::Index n = 2; n <= M / 2; n *= 2) {
    const CMatrix Rn = resolvent_matrix(eig_hermitian(detail::build_lax(u0, flow, n, M)), kappa);
    const double measured = operator_norm(Rn - RM);
    const double bound = is_ccm(flow) ? 16.0 * norm * norm / static_cast<double>(n)
                                      : 8.0 * std::sqrt(3.0) / static_cast<double>(n) / std::sqrt(kappa) * norm;
    if (!study.rows.empty() && measured > study.rows.back().measured + 1e-12) study.monotone = false;
    study.rows.push_back({n, measured, bound, within_bound(measured, bound)});
  }
  return study;
}

// ---------------------------------------------------------------------------

struct ConvergenceRow {
  Eigen::Index K = 0;
  Schedule::Kind schedule = Schedule::Kind::constant;
  double error = 0.0;      // sup_t ||u_K(t) - u_ref(t)||
  double norm_diff = 0.0;  // sup_t | ||u_K(t)|| - ||u_ref(t)|| |
  bool norm_diff_bounded = true;  // per t: norm difference <= error
  double wall_seconds = 0.0;
  std::size_t decompositions = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  Eigen::Index K_ref = 0;
  Schedule::Kind reference_schedule = Schedule::Kind::constant;
  double T = 0.0;
  int grid_points = 0;
  Flow flow = Flow::bo;
  double reference_seconds = 0.0;

  bool non_increasing(double tol = 1e-12) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].error > rows[i - 1].error + tol) return false;
    return true;
  }
  bool strictly_decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].error < rows[i - 1].error)) return false;
    return true;
  }
  bool norm_differences_bounded() const {
    return std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.norm_diff_bounded; });
  }
};

struct ConvergenceOptions {
  Schedule::Kind reference_schedule = Schedule::Kind::constant;
  RunOptions run;
};

namespace detail {

// ||u_a - u_b|| with both given by nonnegative coefficients (zero-padded).
inline double output_distance(Flow flow, const CVector& a, const CVector& b) {
  const Eigen::Index m = std::max(a.size(), b.size());
  CVector d = CVector::Zero(m);
  d.head(a.size()) += a;
  d.head(b.size()) -= b;
  if (is_ccm(flow)) return d.norm();
  const double z = d[0].real();
  return std::sqrt(std::max(0.0, 2.0 * d.squaredNorm() - z * z));
}

inline double output_norm(Flow flow, const CVector& a) { return output_distance(flow, a, CVector()); }

}  // namespace detail

inline ConvergenceTable run_convergence_study(const InitialProfile& u0, Flow flow, std::span<const Eigen::Index> Ks,
                                              Schedule::Kind schedule_kind, double T, int grid_points,
                                              Eigen::Index K_ref, const ConvergenceOptions& opts = {}) {
  if (Ks.empty()) throw InvalidArgument("convergence study needs at least one K");
  for (std::size_t i = 1; i < Ks.size(); ++i)
    if (Ks[i] <= Ks[i - 1]) throw InvalidArgument("K values must be strictly increasing");
  if (K_ref < 4 * Ks.back()) throw InvalidArgument("reference K must be >= 4 max(K)");
  if (grid_points < 11) throw InvalidArgument("convergence study needs >= 11 grid points");
  if (!(T > 0.0)) throw InvalidArgument("T must be positive");

  using clock = std::chrono::steady_clock;
  const auto times = symmetric_grid(T, grid_points);
  ConvergenceTable table;
  table.K_ref = K_ref;
  table.reference_schedule = opts.reference_schedule;
  table.T = T;
  table.grid_points = grid_points;
  table.flow = flow;

  SchemeConfig ref_cfg{flow, make_schedule(opts.reference_schedule, K_ref), times, u0, false};
  ref_cfg.override_focusing_threshold = opts.run.override_focusing_threshold;
  auto t0 = clock::now();
  const SchemeOutput ref = run_scheme(ref_cfg, opts.run);
  table.reference_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  for (Eigen::Index K : Ks) {
    SchemeConfig cfg{flow, make_schedule(schedule_kind, K), times, u0, false};
    cfg.override_focusing_threshold = opts.run.override_focusing_threshold;
    t0 = clock::now();
    const SchemeOutput out = run_scheme(cfg, opts.run);
    ConvergenceRow row;
    row.K = K;
    row.schedule = schedule_kind;
    row.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    row.decompositions = out.decompositions;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(times.size()); ++i) {
      const CVector a = out.coeffs.col(i);
      const CVector b = ref.coeffs.col(i);
      const double err = detail::output_distance(flow, a, b);
      const double nd = std::abs(detail::output_norm(flow, a) - detail::output_norm(flow, b));
      row.error = std::max(row.error, err);
      row.norm_diff = std::max(row.norm_diff, nd);
      if (nd > err + 1e-12) row.norm_diff_bounded = false;
    }
    table.rows.push_back(row);
  }
  return table;
}

struct RateFit {
  std::optional<double> slope;  // empty: not applicable (zero errors)
  bool convergent = false;
};

/// Least-squares slope of log(error) against log(K).
inline RateFit fit_rate(const ConvergenceTable& table) {
  if (table.rows.size() < 4) throw InvalidArgument("rate fit needs at least 4 rows");
  RateFit fit;
  for (const auto& r : table.rows)
    if (!(r.error > 0.0)) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(table.rows.size());
  for (const auto& r : table.rows) {
    const double x = std::log(static_cast<double>(r.K));
    const double y = std::log(r.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.convergent = *fit.slope < -0.1;
  return fit;
}

// ---------------------------------------------------------------------------

struct SweepRow {
  Eigen::Index n = 0;
  double sup_error = 0.0;
};

struct PropagatorSweep {
  std::vector<SweepRow> rows;
  double T = 0.0;
  bool pass = false;  // error at n = M/2 <= error at n = 4
};

/// Unit vectors e_0..e_7 plus 8 seeded random unit vectors with decaying
/// spectra: a fixed finite (hence compact) family.
inline std::vector<CVector> sweep_family(Eigen::Index M, std::uint64_t seed) {
  std::vector<CVector> F;
  for (Eigen::Index j = 0; j < 8 && j < M; ++j) F.push_back(CVector::Unit(M, j));
  const CounterRng rng(seed, 0xf4);
  for (std::uint64_t i = 0; i < 8; ++i) {
    CVector f(M);
    for (Eigen::Index k = 0; k < M; ++k)
      f[k] = rng.complex_normal(i * static_cast<std::uint64_t>(M) + static_cast<std::uint64_t>(k)) /
             std::pow(1.0 + static_cast<double>(k), 2.0);
    F.push_back(f / f.norm());
  }
  return F;
}

/// sup over a 21-point grid on [-T, T] and the family of
/// ||(e^{itL_n} - e^{itL_M}) f|| for n = 4, 8, ..., M/2.
inline PropagatorSweep run_propagator_sweep(const InitialData& u0, Flow flow, Eigen::Index M, double T,
                                            std::uint64_t seed) {
  detail::check_data(u0, flow);
  if (M < 64 || (M & (M - 1)) != 0) throw InvalidArgument("propagator sweep needs M a power of two >= 64");
  const auto F = sweep_family(M, seed);
  CMatrix Fm(M, static_cast<Eigen::Index>(F.size()));
  for (std::size_t i = 0; i < F.size(); ++i) Fm.col(static_cast<Eigen::Index>(i)) = F[i];
  const auto times = symmetric_grid(T, 21);

  auto evolve_family = [&](const HermitianEig& e, double t) {
    CMatrix P(M, Fm.cols());
    for (Eigen::Index j = 0; j < M; ++j) P.row(j).setConstant(std::polar(1.0, t * e.eigenvalues()[j]));
    return apply_phases(e, P, Fm);
  };

  const HermitianEig full = eig_hermitian(detail::build_lax(u0, flow, M, M));
  std::vector<CMatrix> reference;
  for (double t : times) reference.push_back(evolve_family(full, t));

  PropagatorSweep sweep;
  sweep.T = T;
  for (Eigen::Index n = 4; n <= M / 2; n *= 2) {
    const HermitianEig e = eig_hermitian(detail::build_lax(u0, flow, n, M));
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const CMatrix diff = evolve_family(e, times[i]) - reference[i];
      worst = std::max(worst, diff.colwise().norm().maxCoeff());
    }
    sweep.rows.push_back({n, worst});
  }
  sweep.pass = !sweep.rows.empty() && sweep.rows.back().sup_error <= sweep.rows.front().sup_error;
  return sweep;
}

}  // namespace laxflow
