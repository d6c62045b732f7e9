#pragma once

// The explicit-formula scheme
//
//   u^0 = P_{n(0)} u0,   u^k = e^{i alpha t (I + 2 L_{n(k)})} S* u^{k-1},
//   uhat_K(t, k) = <u^k, 1>,  0 <= k < K,
//
// with alpha = +1 (BO) or -1 (CCM). Time only enters through the phases
// e^{i alpha t (1 + 2 lambda_j)}, so every t is an independent exact
// evaluation; there is no time stepping.

#include "laxflow/propagator.hpp"

#include <cstdlib>
#include <thread>
#include <unordered_map>
#include <variant>

namespace laxflow {

struct Schedule {
  enum class Kind { constant, linear_case, half_staircase, full_staircase, custom };

  Kind kind = Kind::constant;
  Eigen::Index K = 1;
  std::vector<Eigen::Index> values;  // n(k) for 0 <= k < K
  bool l2_preserving = false;        // n(k) <= K - k for every k
  std::vector<std::string> warnings;

  Eigen::Index n(Eigen::Index k) const { return values.at(static_cast<std::size_t>(k)); }

  /// Ambient size: max_k n(k), at least 1.
  Eigen::Index ambient_size() const {
    Eigen::Index m = 1;
    for (auto v : values) m = std::max(m, v);
    return m;
  }

  /// Distinct truncations whose operators the iteration applies (k >= 1);
  /// n(0) only truncates the data.
  std::vector<Eigen::Index> operator_truncations() const {
    std::vector<Eigen::Index> out(values.begin() + std::min<std::size_t>(1, values.size()), values.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

inline std::string_view to_string(Schedule::Kind k) {
  switch (k) {
    case Schedule::Kind::constant: return "constant";
    case Schedule::Kind::linear_case: return "linear-case";
    case Schedule::Kind::half_staircase: return "half-staircase";
    case Schedule::Kind::full_staircase: return "full-staircase";
    case Schedule::Kind::custom: return "custom";
  }
  return "?";
}

inline Schedule::Kind parse_schedule_kind(std::string_view s) {
  if (s == "constant") return Schedule::Kind::constant;
  if (s == "linear-case" || s == "linear") return Schedule::Kind::linear_case;
  if (s == "half-staircase") return Schedule::Kind::half_staircase;
  if (s == "full-staircase") return Schedule::Kind::full_staircase;
  if (s == "custom") return Schedule::Kind::custom;
  throw InvalidArgument("unknown schedule kind '" + std::string(s) + "'");
}

inline Schedule make_schedule(Schedule::Kind kind, Eigen::Index K,
                              std::span<const Eigen::Index> custom_values = {}) {
  if (K < 1) throw InvalidArgument("frequency count K must be >= 1");
  Schedule s;
  s.kind = kind;
  s.K = K;
  s.values.assign(static_cast<std::size_t>(K), 0);
  for (Eigen::Index k = 0; k < K; ++k) {
    auto& v = s.values[static_cast<std::size_t>(k)];
    switch (kind) {
      case Schedule::Kind::constant: v = K; break;
      case Schedule::Kind::linear_case: v = k == 0 ? K : 0; break;
      case Schedule::Kind::half_staircase: v = k <= K / 2 ? K / 2 : 0; break;
      case Schedule::Kind::full_staircase: v = K - k; break;
      case Schedule::Kind::custom:
        if (static_cast<Eigen::Index>(custom_values.size()) != K)
          throw InvalidArgument("custom schedule needs exactly K = " + std::to_string(K) + " values, got " +
                                std::to_string(custom_values.size()));
        v = custom_values[static_cast<std::size_t>(k)];
        if (v < 0) throw InvalidArgument("custom schedule entry n(" + std::to_string(k) + ") is negative");
        break;
    }
  }
  s.l2_preserving = true;
  for (Eigen::Index k = 0; k < K; ++k)
    if (s.values[static_cast<std::size_t>(k)] > K - k) s.l2_preserving = false;
  if (s.values[0] == 0)
    s.warnings.emplace_back("n(0) = 0: the data is truncated away and the mean is not conserved");
  return s;
}

/// Support size m_k = max_{l <= k} (n(l) - (k - l)) of the k-th iterate.
inline Eigen::Index iterate_size(const Schedule& s, Eigen::Index k) {
  if (k < 0 || k >= s.K) throw InvalidArgument("iterate index out of range");
  Eigen::Index m = 0;
  for (Eigen::Index l = 0; l <= k; ++l) m = std::max(m, s.n(l) - (k - l));
  return m;
}

// ---------------------------------------------------------------------------

using InitialData = std::variant<RealSpectrum, HardyVector>;

struct SchemeConfig {
  Flow flow = Flow::bo;
  Schedule schedule;
  std::vector<double> times;
  InitialProfile u0;
  bool override_focusing_threshold = false;
};

struct RunOptions {
  PropagatorCache* cache = nullptr;
  /// Called with the iterates u^k (columns match `times`) for k = 0..K-1.
  /// Forces single-threaded evaluation.
  std::function<void(Eigen::Index k, const CMatrix& iterates, std::span<const double> times)> observer;
  unsigned threads = 0;  // 0: LAXFLOW_THREADS or hardware concurrency
  bool override_focusing_threshold = false;
};

struct SchemeOutput {
  Flow flow = Flow::bo;
  Schedule schedule;
  std::vector<double> times;
  CMatrix coeffs;                 // K x times: uhat_K(t, k)
  std::vector<double> tail_norm;  // ||u^K|| = ||S* u^{K-1}|| per t
  std::vector<double> tail_max_abs;
  cplx initial_mean{};            // uhat0(0)
  double truncated_norm = 0.0;    // ||P_{n(0)} u0||
  double initial_norm = 0.0;      // ||u0|| (two-sided for BO)
  std::uint64_t data_digest = 0;
  Eigen::Index M = 0;
  std::size_t decompositions = 0;  // performed during this run
  std::size_t cache_hits = 0;

  Eigen::Index K() const { return schedule.K; }

  Eigen::Index index_of(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (times[i] == t) return static_cast<Eigen::Index>(i);
    throw InvalidArgument("time " + std::to_string(t) + " was not computed");
  }

  HardyVector hardy(double t) const { return HardyVector(coeffs.col(index_of(t))); }

  /// BO only: the real field with uhat(-k) = conj(uhat(k)).
  RealSpectrum spectrum(double t) const {
    if (is_ccm(flow)) throw InvalidArgument("CCM output lives in the Hardy space; use hardy()");
    return hermitian_symmetrize(hardy(t), K());
  }
};

inline double mass(const SchemeOutput& out, double t) { return out.coeffs(0, out.index_of(t)).real(); }

/// ||P u_K(t)||.
inline double hardy_l2(const SchemeOutput& out, double t) { return out.coeffs.col(out.index_of(t)).norm(); }

/// ||u_K(t)|| for BO output, from the Hardy half and the zero mode.
inline double full_l2(const SchemeOutput& out, double t) {
  if (is_ccm(out.flow)) throw InvalidArgument("full_l2 is defined for BO output; use hardy_l2 for CCM");
  const Eigen::Index i = out.index_of(t);
  const double h = out.coeffs.col(i).squaredNorm();
  const double z = out.coeffs(0, i).real();
  return std::sqrt(std::max(0.0, 2.0 * h - z * z));
}

namespace detail {

inline unsigned worker_count(unsigned requested) {
  unsigned n = requested;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LAXFLOW_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

inline void shift_rows_up(CMatrix& U) {
  const Eigen::Index M = U.rows();
  if (M > 1) U.topRows(M - 1) = U.bottomRows(M - 1).eval();
  U.row(M - 1).setZero();
}

inline constexpr Eigen::Index kTimeBatch = 16;

}  // namespace detail

/// Runs the scheme on already-analyzed data. BO takes a RealSpectrum, CCM a
/// HardyVector.
inline SchemeOutput evolve(Flow flow, const Schedule& schedule, std::span<const double> times,
                           const InitialData& u0, const RunOptions& opts = {}) {
  const bool ccm = is_ccm(flow);
  if (ccm != std::holds_alternative<HardyVector>(u0))
    throw InvalidArgument(ccm ? "CCM runs need Hardy-space data" : "BO runs need a real spectrum");
  if (static_cast<Eigen::Index>(schedule.values.size()) != schedule.K)
    throw InvalidArgument("schedule has " + std::to_string(schedule.values.size()) + " entries for K = " +
                          std::to_string(schedule.K));

  const HardyVector hardy0 = ccm ? std::get<HardyVector>(u0) : project_hardy(std::get<RealSpectrum>(u0));
  const double u0_norm = ccm ? l2_norm(hardy0) : l2_norm(std::get<RealSpectrum>(u0));
  if (flow == Flow::ccm_focusing && !(opts.override_focusing_threshold) && !(u0_norm < 1.0 - 1e-9))
    throw InvalidArgument("focusing CCM needs ||u0|| < 1 (got " + std::to_string(u0_norm) +
                          "); pass the focusing override to explore beyond the threshold");

  SchemeOutput out;
  out.flow = flow;
  out.schedule = schedule;
  out.times.assign(times.begin(), times.end());
  out.M = schedule.ambient_size();
  out.data_digest = ccm ? data_digest(std::get<HardyVector>(u0)) : data_digest(std::get<RealSpectrum>(u0));
  out.initial_mean = hardy0[0];
  out.initial_norm = u0_norm;

  const Eigen::Index K = schedule.K;
  const Eigen::Index M = out.M;
  const Eigen::Index nt = static_cast<Eigen::Index>(times.size());
  const int alpha = group_sign(flow);

  const HardyVector start = truncate(hardy0, schedule.n(0));
  out.truncated_norm = l2_norm(start);
  CVector u_start = CVector::Zero(M);
  u_start.head(start.size()) = start.coeffs();

  PropagatorCache local_cache;
  PropagatorCache& cache = opts.cache ? *opts.cache : local_cache;
  const std::size_t dec_before = cache.decompositions();
  const std::size_t hits_before = cache.hits();

  // Decompositions for every truncation the iteration uses.
  std::unordered_map<Eigen::Index, PropagatorCache::Entry> eig;
  for (Eigen::Index n : schedule.operator_truncations()) {
    const PropagatorKey key{flow, n, M, out.data_digest};
    try {
      eig.emplace(n, cache.get_or_build(key, [&] {
        return ccm ? build_ccm_lax(std::get<HardyVector>(u0), n, M, flow)
                   : build_bo_lax(std::get<RealSpectrum>(u0), n, M);
      }));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " while preparing truncation n = " + std::to_string(n));
    }
  }

  // Q^H S* Q for truncations applied on consecutive steps; lets the state
  // stay in eigen-coordinates with one matrix product per step.
  std::unordered_map<Eigen::Index, CMatrix> conjugated_shift;
  if (!opts.observer) {
    for (Eigen::Index k = 2; k < K; ++k) {
      const Eigen::Index n = schedule.n(k);
      if (n != schedule.n(k - 1) || conjugated_shift.count(n)) continue;
      const HermitianEig& e = *eig.at(n);
      if (e.identity_basis()) continue;
      CMatrix SQ = e.eigenvectors();
      detail::shift_rows_up(SQ);
      conjugated_shift.emplace(n, e.eigenvectors().adjoint() * SQ);
    }
  }

  out.coeffs = CMatrix::Zero(K, nt);
  out.tail_norm.assign(static_cast<std::size_t>(nt), 0.0);
  out.tail_max_abs.assign(static_cast<std::size_t>(nt), 0.0);

  auto run_batch = [&](Eigen::Index b0, Eigen::Index B) {
    const std::span<const double> bt = times.subspan(static_cast<std::size_t>(b0), static_cast<std::size_t>(B));
    std::unordered_map<Eigen::Index, CMatrix> phases;
    auto phase_table = [&](Eigen::Index n) -> const CMatrix& {
      auto it = phases.find(n);
      if (it == phases.end()) it = phases.emplace(n, group_phases(*eig.at(n), bt, alpha)).first;
      return it->second;
    };

    CMatrix U = u_start.replicate(1, B);
    CMatrix Y;
    bool in_eigen = false;
    const HermitianEig* current = nullptr;
    Eigen::Index current_n = -1;

    auto to_standard = [&] {
      if (!in_eigen) return;
      if (current->identity_basis()) {
        U.swap(Y);
      } else {
        U.noalias() = current->eigenvectors() * Y;
      }
      in_eigen = false;
    };

    out.coeffs.block(0, b0, 1, B).setConstant(u_start.size() > 0 ? u_start[0] : cplx{});
    if (opts.observer) opts.observer(0, U, bt);

    for (Eigen::Index k = 1; k < K; ++k) {
      const Eigen::Index n = schedule.n(k);
      const HermitianEig& e = *eig.at(n);
      auto cs = conjugated_shift.find(n);
      if (in_eigen && current_n == n && cs != conjugated_shift.end()) {
        Y = cs->second * Y;
      } else {
        to_standard();
        detail::shift_rows_up(U);
        if (e.identity_basis()) {
          Y.swap(U);
        } else {
          Y.noalias() = e.eigenvectors().adjoint() * U;
        }
      }
      Y.array() *= phase_table(n).array();
      in_eigen = true;
      current = &e;
      current_n = n;

      if (e.identity_basis()) {
        out.coeffs.block(k, b0, 1, B) = Y.row(0);
      } else {
        out.coeffs.block(k, b0, 1, B).noalias() = e.eigenvectors().row(0) * Y;
      }
      if (opts.observer) {
        to_standard();
        opts.observer(k, U, bt);
      }
    }
    to_standard();
    detail::shift_rows_up(U);
    for (Eigen::Index b = 0; b < B; ++b) {
      out.tail_norm[static_cast<std::size_t>(b0 + b)] = U.col(b).norm();
      out.tail_max_abs[static_cast<std::size_t>(b0 + b)] = U.col(b).cwiseAbs().maxCoeff();
    }
  };

  const Eigen::Index batches = (nt + detail::kTimeBatch - 1) / detail::kTimeBatch;
  const unsigned workers =
      opts.observer ? 1u : std::min<unsigned>(detail::worker_count(opts.threads), static_cast<unsigned>(std::max<Eigen::Index>(batches, 1)));
  auto batch_range = [&](Eigen::Index i) {
    const Eigen::Index b0 = i * detail::kTimeBatch;
    return std::pair{b0, std::min(detail::kTimeBatch, nt - b0)};
  };
  if (workers <= 1) {
    for (Eigen::Index i = 0; i < batches; ++i) {
      auto [b0, B] = batch_range(i);
      run_batch(b0, B);
    }
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (Eigen::Index i = next++; i < batches; i = next++) {
            auto [b0, B] = batch_range(i);
            run_batch(b0, B);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  out.decompositions = cache.decompositions() - dec_before;
  out.cache_hits = cache.hits() - hits_before;
  return out;
}

/// Analyzes the configured profile at bandwidth max(K, M) and evolves it.
inline SchemeOutput run_scheme(const SchemeConfig& cfg, RunOptions opts = {}) {
  const Eigen::Index bandwidth = std::max(cfg.schedule.K, cfg.schedule.ambient_size());
  opts.override_focusing_threshold = opts.override_focusing_threshold || cfg.override_focusing_threshold;
  if (is_ccm(cfg.flow))
    return evolve(cfg.flow, cfg.schedule, cfg.times, analyze_hardy_profile(cfg.u0, bandwidth), opts);
  return evolve(cfg.flow, cfg.schedule, cfg.times, analyze_profile(cfg.u0, bandwidth), opts);
}

}  // namespace laxflow
