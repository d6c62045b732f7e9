#pragma once

// Truncated Lax operators as dense Hermitian matrices on frequencies [0, M).
//
//   BO:   L_n = D - P_n u P_n
//   CCM:  L_n = D -+ P_n u P_n ubar P_n     (- focusing, + defocusing)
//
// with D = diag(0, 1, ..., M-1) never truncated.

#include "laxflow/spectral.hpp"

#include <cstdio>
#include <fstream>
#include <string>

namespace laxflow {

/// Hermitian matrix of a truncated Lax operator, tagged with its origin.
class LaxMatrix {
 public:
  LaxMatrix(CMatrix entries, Flow flow, Eigen::Index n, std::uint64_t data_digest)
      : entries_(std::move(entries)), flow_(flow), n_(n), digest_(data_digest) {}

  const CMatrix& entries() const { return entries_; }
  Flow flow() const { return flow_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index M() const { return entries_.rows(); }
  std::uint64_t data_digest() const { return digest_; }

 private:
  CMatrix entries_;
  Flow flow_;
  Eigen::Index n_;
  std::uint64_t digest_;
};

inline std::uint64_t data_digest(const RealSpectrum& u0) { return digest(u0.view(), 0xb0); }
inline std::uint64_t data_digest(const HardyVector& u0) { return digest(u0.view(), 0xcc); }

inline CMatrix free_operator(Eigen::Index M) {
  CMatrix D = CMatrix::Zero(M, M);
  for (Eigen::Index j = 0; j < M; ++j) D(j, j) = static_cast<double>(j);
  return D;
}

// ---------------------------------------------------------------------------
// Galerkin matrices of multiplication operators.

/// U_{jl} = uhat(j - l) for 0 <= j, l < M: multiplication by a real field,
/// compressed to the frequency window. Hermitian Toeplitz.
inline CMatrix multiplication_matrix(const RealSpectrum& u, Eigen::Index M) {
  CMatrix U(M, M);
  for (Eigen::Index j = 0; j < M; ++j) {
    U(j, j) = u.coeff(0);
    for (Eigen::Index l = 0; l < j; ++l) {
      const cplx c = u.coeff(j - l);
      U(j, l) = c;
      U(l, j) = std::conj(c);
    }
  }
  return U;
}

/// A_{jm} = uhat(j - m) for a Hardy-space u: lower-triangular Toeplitz.
inline CMatrix hardy_multiplication_matrix(const HardyVector& u, Eigen::Index M) {
  CMatrix A = CMatrix::Zero(M, M);
  for (Eigen::Index j = 0; j < M; ++j)
    for (Eigen::Index m = 0; m <= j; ++m) A(j, m) = u[j - m];
  return A;
}

/// P_n u P_n embedded in an M x M matrix.
inline CMatrix bo_perturbation(const RealSpectrum& u, Eigen::Index n, Eigen::Index M) {
  CMatrix B = CMatrix::Zero(M, M);
  if (n > 0) B.topLeftCorner(n, n) = multiplication_matrix(u, n);
  return B;
}

/// P_n u P_n ubar P_n = A A^H on the leading n x n block, exactly Hermitian.
inline CMatrix ccm_gram(const HardyVector& u, Eigen::Index n, Eigen::Index M) {
  CMatrix G = CMatrix::Zero(M, M);
  if (n == 0) return G;
  const CMatrix A = hardy_multiplication_matrix(u, n);
  const CMatrix AA = A * A.adjoint();
  for (Eigen::Index j = 0; j < n; ++j) {
    G(j, j) = AA(j, j).real();
    for (Eigen::Index l = 0; l < j; ++l) {
      G(j, l) = AA(j, l);
      G(l, j) = std::conj(AA(j, l));
    }
  }
  return G;
}

namespace detail {

inline void check_sizes(Eigen::Index n, Eigen::Index M) {
  if (M < 1) throw InvalidArgument("ambient size M must be >= 1");
  if (n < 0 || n > M)
    throw InvalidArgument("truncation n = " + std::to_string(n) + " must lie in [0, M = " +
                          std::to_string(M) + "]");
}

}  // namespace detail

inline LaxMatrix build_bo_lax(const RealSpectrum& u0, Eigen::Index n, Eigen::Index M) {
  detail::check_sizes(n, M);
  CMatrix L = free_operator(M);
  if (n > 0) L.topLeftCorner(n, n) -= multiplication_matrix(u0, n);
  return LaxMatrix(std::move(L), Flow::bo, n, data_digest(u0));
}

inline LaxMatrix build_ccm_lax(const HardyVector& u0, Eigen::Index n, Eigen::Index M, Flow flow) {
  detail::check_sizes(n, M);
  if (!is_ccm(flow)) throw InvalidArgument("build_ccm_lax needs a CCM flow");
  CMatrix L = free_operator(M);
  if (n > 0) {
    const CMatrix G = ccm_gram(u0, n, M);
    if (flow == Flow::ccm_focusing) {
      L -= G;
    } else {
      L += G;
    }
  }
  return LaxMatrix(std::move(L), flow, n, data_digest(u0));
}

// ---------------------------------------------------------------------------

/// R0(kappa) = (D + kappa)^{-1} on [0, M).
class FreeResolvent {
 public:
  FreeResolvent(double kappa, Eigen::Index M) : kappa_(kappa), M_(M) {
    if (!(kappa >= 1.0)) throw InvalidArgument("resolvent shift kappa must be >= 1");
    if (M < 0) throw InvalidArgument("ambient size must be >= 0");
  }

  double kappa() const { return kappa_; }
  Eigen::Index M() const { return M_; }

  RVector diagonal() const {
    RVector d(M_);
    for (Eigen::Index k = 0; k < M_; ++k) d[k] = 1.0 / (static_cast<double>(k) + kappa_);
    return d;
  }

 private:
  double kappa_;
  Eigen::Index M_;
};

inline CVector apply_free_resolvent(const FreeResolvent& r, const CVector& v) {
  if (v.size() != r.M()) throw InvalidArgument("vector length does not match resolvent size");
  CVector out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = v[k] / (static_cast<double>(k) + r.kappa());
  return out;
}

inline double hermitian_defect(const CMatrix& m) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index l = 0; l < m.cols(); ++l)
      worst = std::max(worst, std::abs(m(j, l) - std::conj(m(l, j))));
  return worst;
}

inline double hermitian_defect(const LaxMatrix& m) { return hermitian_defect(m.entries()); }

/// Debug dump: one row per line, "re,im" pairs separated by commas.
inline void dump_csv(const LaxMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path);
  char buf[64];
  const CMatrix& e = m.entries();
  for (Eigen::Index j = 0; j < e.rows(); ++j) {
    for (Eigen::Index l = 0; l < e.cols(); ++l) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", e(j, l).real(), e(j, l).imag());
      out << (l ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace laxflow
