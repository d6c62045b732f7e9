#pragma once

// Hermitian eigendecompositions of Lax matrices and exact-in-time
// application of the unitary groups e^{i alpha t (I + 2L)}.

#include "laxflow/lax.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <tuple>
#include <vector>

namespace laxflow {

struct EigSource {
  Flow flow = Flow::bo;
  Eigen::Index n = -1;
  Eigen::Index M = 0;
  std::uint64_t data_digest = 0;
};

/// L = Q diag(lambda) Q^H with ascending lambda. Each column of Q is
/// normalized so its largest-magnitude entry is real and positive.
class HermitianEig {
 public:
  HermitianEig(RVector eigenvalues, CMatrix vectors, EigSource source, bool identity_basis)
      : lambda_(std::move(eigenvalues)),
        Q_(std::move(vectors)),
        source_(source),
        identity_(identity_basis) {}

  const RVector& eigenvalues() const { return lambda_; }
  const CMatrix& eigenvectors() const { return Q_; }
  const EigSource& source() const { return source_; }
  Eigen::Index size() const { return lambda_.size(); }
  /// True when Q is exactly the identity (diagonal input).
  bool identity_basis() const { return identity_; }

 private:
  RVector lambda_;
  CMatrix Q_;
  EigSource source_;
  bool identity_;
};

namespace detail {

inline void canonicalize_columns(CMatrix& Q) {
  for (Eigen::Index c = 0; c < Q.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < Q.rows(); ++r) {
      const double a = std::abs(Q(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (best > 0.0) {
      const cplx phase = std::conj(Q(arg, c)) / best;
      Q.col(c) *= phase;
      Q(arg, c) = cplx(std::abs(Q(arg, c)), 0.0);
    }
  }
}

inline std::string describe(const EigSource& s) {
  return "equation=" + std::string(to_string(s.flow)) + " n=" + std::to_string(s.n) +
         " M=" + std::to_string(s.M);
}

// Eigenpairs of a dense Hermitian block, ascending.
inline std::pair<RVector, CMatrix> dense_eig(const CMatrix& m, const EigSource& src) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw NumericalError("Hermitian eigensolver did not converge (" + describe(src) + ")");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace detail

/// General dense path; the input must be exactly Hermitian.
inline HermitianEig eig_hermitian(const CMatrix& m, EigSource src = {}) {
  if (m.rows() != m.cols()) throw InvalidArgument("eig_hermitian needs a square matrix");
  if (hermitian_defect(m) != 0.0) throw InvalidArgument("eig_hermitian needs an exactly Hermitian matrix");
  if (src.M == 0) src.M = m.rows();
  auto [lambda, Q] = detail::dense_eig(m, src);
  detail::canonicalize_columns(Q);
  return HermitianEig(std::move(lambda), std::move(Q), src, false);
}

/// Lax matrices are the free diagonal outside the leading n x n block, so
/// only that block is decomposed; the remaining eigenpairs are (j, e_j).
inline HermitianEig eig_hermitian(const LaxMatrix& lax) {
  const CMatrix& m = lax.entries();
  const Eigen::Index M = m.rows();
  const Eigen::Index n = lax.n();
  const EigSource src{lax.flow(), n, M, lax.data_digest()};
  if (hermitian_defect(m) != 0.0)
    throw InvalidArgument("Lax matrix is not exactly Hermitian (" + detail::describe(src) + ")");

  bool block_structured = true;
  for (Eigen::Index j = 0; j < M && block_structured; ++j)
    for (Eigen::Index l = 0; l < M; ++l) {
      if (j < n && l < n) continue;
      const cplx expected = j == l ? cplx(static_cast<double>(j), 0.0) : cplx{};
      if (m(j, l) != expected) {
        block_structured = false;
        break;
      }
    }
  if (!block_structured) return eig_hermitian(m, src);

  if (n == 0) {
    RVector lambda(M);
    for (Eigen::Index j = 0; j < M; ++j) lambda[j] = static_cast<double>(j);
    return HermitianEig(std::move(lambda), CMatrix::Identity(M, M), src, true);
  }

  auto [block_lambda, block_Q] = detail::dense_eig(m.topLeftCorner(n, n), src);
  RVector all(M);
  all.head(n) = block_lambda;
  for (Eigen::Index j = n; j < M; ++j) all[j] = static_cast<double>(j);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return all[a] < all[b]; });

  RVector lambda(M);
  CMatrix Q = CMatrix::Zero(M, M);
  for (Eigen::Index c = 0; c < M; ++c) {
    const Eigen::Index src_col = order[static_cast<std::size_t>(c)];
    lambda[c] = all[src_col];
    if (src_col < n) {
      Q.col(c).head(n) = block_Q.col(src_col);
    } else {
      Q(src_col, c) = 1.0;
    }
  }
  detail::canonicalize_columns(Q);
  return HermitianEig(std::move(lambda), std::move(Q), src, false);
}

// ---------------------------------------------------------------------------
// Group application.

/// Q diag(e^{i phase(lambda_j)}) Q^H v for a batch of columns; column b uses
/// phases(:, b).
inline CMatrix apply_phases(const HermitianEig& e, const CMatrix& phases, const CMatrix& V) {
  if (V.rows() != e.size() || phases.rows() != e.size() || phases.cols() != V.cols())
    throw InvalidArgument("dimension mismatch in propagator application");
  if (e.identity_basis()) return phases.cwiseProduct(V);
  CMatrix W = e.eigenvectors().adjoint() * V;
  W.array() *= phases.array();
  return e.eigenvectors() * W;
}

/// Phase table e^{i alpha t_b (1 + 2 lambda_j)}.
inline CMatrix group_phases(const HermitianEig& e, std::span<const double> times, int alpha) {
  CMatrix P(e.size(), static_cast<Eigen::Index>(times.size()));
  for (Eigen::Index b = 0; b < P.cols(); ++b) {
    const double t = times[static_cast<std::size_t>(b)];
    for (Eigen::Index j = 0; j < P.rows(); ++j)
      P(j, b) = std::polar(1.0, alpha * t * (1.0 + 2.0 * e.eigenvalues()[j]));
  }
  return P;
}

/// e^{i alpha t (I + 2L)} v.
inline CVector apply_group(const HermitianEig& e, double t, int alpha, const CVector& v) {
  if (alpha != 1 && alpha != -1) throw InvalidArgument("alpha must be +1 or -1");
  if (v.size() != e.size())
    throw InvalidArgument("vector length " + std::to_string(v.size()) + " does not match propagator size " +
                          std::to_string(e.size()));
  const double ts[1] = {t};
  return apply_phases(e, group_phases(e, ts, alpha), v);
}

/// e^{i t L} v.
inline CVector apply_unitary(const HermitianEig& e, double t, const CVector& v) {
  if (v.size() != e.size()) throw InvalidArgument("vector length does not match propagator size");
  CMatrix P(e.size(), 1);
  for (Eigen::Index j = 0; j < e.size(); ++j) P(j, 0) = std::polar(1.0, t * e.eigenvalues()[j]);
  return apply_phases(e, P, v);
}

/// (L + kappa)^{-1} as a dense matrix.
inline CMatrix resolvent_matrix(const HermitianEig& e, double kappa) {
  RVector d(e.size());
  for (Eigen::Index j = 0; j < e.size(); ++j) {
    const double shifted = e.eigenvalues()[j] + kappa;
    if (std::abs(shifted) < 1e-14) throw NumericalError("resolvent requested at an eigenvalue");
    d[j] = 1.0 / shifted;
  }
  if (e.identity_basis()) return d.cast<cplx>().asDiagonal().toDenseMatrix();
  const CMatrix& Q = e.eigenvectors();
  return Q * d.cast<cplx>().asDiagonal() * Q.adjoint();
}

/// Largest singular value via the smaller Gram matrix.
inline double operator_norm(const CMatrix& A) {
  if (A.size() == 0) return 0.0;
  const CMatrix G = A.rows() <= A.cols() ? CMatrix(A * A.adjoint()) : CMatrix(A.adjoint() * A);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(G, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("operator norm: eigensolver failed");
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

// ---------------------------------------------------------------------------
// Cache.

struct PropagatorKey {
  Flow flow;
  Eigen::Index n;
  Eigen::Index M;
  std::uint64_t data_digest;

  auto tie() const { return std::tie(flow, n, M, data_digest); }
  bool operator<(const PropagatorKey& o) const { return tie() < o.tie(); }
};

/// Get-or-build store of decompositions. Concurrent callers asking for the
/// same key wait on a single build.
class PropagatorCache {
 public:
  using Entry = std::shared_ptr<const HermitianEig>;

  Entry get_or_build(const PropagatorKey& key, const std::function<LaxMatrix()>& factory) {
    std::promise<Entry> promise;
    std::shared_future<Entry> fut;
    bool builder = false;
    {
      std::lock_guard lock(mu_);
      auto it = entries_.find(key);
      if (it != entries_.end()) {
        fut = it->second;
        ++hits_;
      } else {
        fut = promise.get_future().share();
        entries_.emplace(key, fut);
        builder = true;
      }
    }
    if (builder) {
      try {
        auto e = std::make_shared<const HermitianEig>(eig_hermitian(factory()));
        ++decompositions_;
        promise.set_value(std::move(e));
      } catch (...) {
        {
          std::lock_guard lock(mu_);
          entries_.erase(key);
        }
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

  std::size_t decompositions() const { return decompositions_.load(); }
  std::size_t hits() const { return hits_.load(); }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  mutable std::mutex mu_;
  std::map<PropagatorKey, std::shared_future<Entry>> entries_;
  std::atomic<std::size_t> decompositions_{0};
  std::atomic<std::size_t> hits_{0};
};

// ---------------------------------------------------------------------------
// Resolvent shift beyond which the perturbation is dominated by D.

struct KappaZero {
  enum class Method { formula, search };
  Flow equation = Flow::bo;
  double value = 1.0;
  Method method = Method::formula;
};

inline std::string_view to_string(KappaZero::Method m) {
  return m == KappaZero::Method::formula ? "formula" : "search";
}

/// BO: max(12 ||u||^2, 1).
inline KappaZero find_kappa_zero(const RealSpectrum& u0, Eigen::Index M) {
  if (M < 4) throw InvalidArgument("kappa_0 needs M >= 4");
  const double norm = l2_norm(u0);
  return {Flow::bo, std::max(12.0 * norm * norm, 1.0), KappaZero::Method::formula};
}

/// Truncations tested by the CCM search: powers of two up to M, plus M/2, M.
inline std::vector<Eigen::Index> default_kappa_truncations(Eigen::Index M) {
  std::vector<Eigen::Index> ns;
  for (Eigen::Index n = 1; n <= M; n *= 2) ns.push_back(n);
  ns.push_back(M / 2);
  ns.push_back(M);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  ns.erase(std::remove(ns.begin(), ns.end(), Eigen::Index{0}), ns.end());
  return ns;
}

/// CCM: smallest kappa in {1, 2, 4, ..., 2^20} with
/// ||P_n u P_n ubar P_n R0(kappa)|| <= 1/2 for every n in `ns`.
inline KappaZero find_kappa_zero(const HardyVector& u0, Flow flow, Eigen::Index M,
                                 std::span<const Eigen::Index> ns = {}) {
  if (M < 4) throw InvalidArgument("kappa_0 needs M >= 4");
  if (!is_ccm(flow)) throw InvalidArgument("Hardy-space kappa_0 search is for CCM flows");
  std::vector<Eigen::Index> owned;
  if (ns.empty()) {
    owned = default_kappa_truncations(M);
    ns = owned;
  }
  std::vector<CMatrix> grams;
  grams.reserve(ns.size());
  for (Eigen::Index n : ns) grams.push_back(ccm_gram(u0, n, M));

  for (int p = 0; p <= 20; ++p) {
    const double kappa = std::ldexp(1.0, p);
    const RVector r0 = FreeResolvent(kappa, M).diagonal();
    bool ok = true;
    for (const CMatrix& G : grams) {
      if (operator_norm(G * r0.cast<cplx>().asDiagonal()) > 0.5) {
        ok = false;
        break;
      }
    }
    if (ok) return {flow, kappa, KappaZero::Method::search};
  }
  throw NumericalError(
      "kappa_0 search exhausted kappa <= 2^20; the data is too large for the perturbation to be "
      "tamed, try a smaller ||u0||");
}

}  // namespace laxflow
