#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library's operator builders, eigensolver or synthesis.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// exp(A) by a 60-term Taylor series after scaling by 2^-s, then s squarings.
inline CMat expm_taylor(const CMat& A) {
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (std::ldexp(norm, -s) > 0.5) ++s;
  const CMat B = A * std::ldexp(1.0, -s);
  CMat term = CMat::Identity(A.rows(), A.cols());
  CMat sum = term;
  for (int j = 1; j <= 60; ++j) {
    term = (term * B) / static_cast<double>(j);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

/// Coefficient lookup: frequency -> value, zero when absent.
using Coeffs = std::function<cplx(long)>;

/// (P_n u P_n f)^(j) = sum_{l<n} uhat(j - l) fhat(l), applied to basis vectors.
inline CMat bo_lax(const Coeffs& u, long n, long M) {
  CMat L = CMat::Zero(M, M);
  for (long j = 0; j < M; ++j) L(j, j) = static_cast<double>(j);
  for (long l = 0; l < n; ++l)
    for (long j = 0; j < n; ++j) L(j, l) -= u(j - l);
  return L;
}

/// D -+ G with G_{jl} = sum_{m<n} uhat(j - m) conj(uhat(l - m)), uhat(p<0) = 0.
inline CMat ccm_lax(const Coeffs& u, long n, long M, bool focusing) {
  CMat L = CMat::Zero(M, M);
  for (long j = 0; j < M; ++j) L(j, j) = static_cast<double>(j);
  for (long j = 0; j < n; ++j)
    for (long l = 0; l < n; ++l) {
      cplx g = 0.0;
      for (long m = 0; m < n; ++m) {
        const cplx a = j - m >= 0 ? u(j - m) : cplx{};
        const cplx b = l - m >= 0 ? u(l - m) : cplx{};
        g += a * std::conj(b);
      }
      L(j, l) += focusing ? -g : g;
    }
  return L;
}

enum class Eq { bo, ccm_focusing, ccm_defocusing };

/// The whole scheme rebuilt from scratch: every operator is assembled from
/// the coefficient formulas and exponentiated with the Taylor oracle.
inline std::vector<cplx> scheme(Eq eq, const Coeffs& u0, const std::vector<long>& n, double t) {
  const long K = static_cast<long>(n.size());
  long M = 1;
  for (long v : n) M = std::max(M, v);
  const double alpha = eq == Eq::bo ? 1.0 : -1.0;
  CVec u = CVec::Zero(M);
  for (long k = 0; k < std::min(n[0], M); ++k) u[k] = u0(k);
  std::vector<cplx> out{u[0]};
  for (long k = 1; k < K; ++k) {
    CVec shifted = CVec::Zero(M);
    for (long j = 0; j + 1 < M; ++j) shifted[j] = u[j + 1];
    const CMat L = eq == Eq::bo ? bo_lax(u0, n[k], M) : ccm_lax(u0, n[k], M, eq == Eq::ccm_focusing);
    const CMat gen = cplx(0.0, alpha * t) * (CMat::Identity(M, M) + 2.0 * L);
    u = expm_taylor(gen) * shifted;
    out.push_back(u[0]);
  }
  return out;
}

/// (1/2pi) int_{-pi}^{pi} sgn(x) e^{-ikx} dx by adaptive Gauss-Kronrod on each half.
inline cplx square_wave_quadrature(long k) {
  using boost::math::quadrature::gauss_kronrod;
  const double kk = static_cast<double>(k);
  auto re_pos = [&](double x) { return std::cos(kk * x); };
  auto im_pos = [&](double x) { return -std::sin(kk * x); };
  const double pi = std::numbers::pi;
  const double re = gauss_kronrod<double, 61>::integrate(re_pos, 0.0, pi, 15, 1e-14) -
                    gauss_kronrod<double, 61>::integrate(re_pos, -pi, 0.0, 15, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate(im_pos, 0.0, pi, 15, 1e-14) -
                    gauss_kronrod<double, 61>::integrate(im_pos, -pi, 0.0, 15, 1e-14);
  return cplx(re, im) / (2.0 * pi);
}

/// sum_k c_k e^{ikx} with every exponential evaluated directly.
inline std::vector<cplx> dft_synthesis(const std::map<long, cplx>& c, const std::vector<double>& x) {
  std::vector<cplx> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    for (const auto& [k, v] : c) out[j] += v * std::exp(cplx(0.0, static_cast<double>(k) * x[j]));
  return out;
}

/// (1/N) sum_j f(x_j) e^{-ikx_j} on an N-point uniform grid.
inline cplx dft_analysis(const std::vector<cplx>& f, const std::vector<double>& x, long k) {
  cplx acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) acc += f[j] * std::exp(cplx(0.0, -static_cast<double>(k) * x[j]));
  return acc / static_cast<double>(x.size());
}

/// ||P_{<K} sgn||^2 = sum over odd |k| < K of 4/(pi^2 k^2).
inline double square_wave_partial_l2(long K) {
  double s = 0.0;
  for (long k = 1; k < K; k += 2) s += 2.0 * 4.0 / (std::numbers::pi * std::numbers::pi * k * k);
  return std::sqrt(s);
}

/// Random coefficients with a seeded std::mt19937_64.
inline std::vector<cplx> random_coeffs(std::size_t m, std::uint64_t seed, double decay = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<cplx> c(m);
  for (std::size_t k = 0; k < m; ++k) c[k] = cplx(nd(gen), nd(gen)) / std::pow(1.0 + k, decay);
  return c;
}

}  // namespace oracle
