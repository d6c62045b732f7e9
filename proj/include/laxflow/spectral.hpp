#pragma once

// Fourier-space primitives on the torus. Coefficients follow the convention
// f(x) = sum_k fhat(k) e^{ikx}, fhat(k) = (1/2pi) int f(x) e^{-ikx} dx, so
// Plancherel reads ||f||^2 = sum_k |fhat(k)|^2.

#include "laxflow/common.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <vector>

namespace laxflow {

/// Element of the Hardy space: coefficients at frequencies 0, 1, ..., m-1.
/// Frequencies at or above size() are implicitly zero.
class HardyVector {
 public:
  HardyVector() = default;
  explicit HardyVector(CVector coeffs) : c_(std::move(coeffs)) {}
  HardyVector(std::initializer_list<cplx> coeffs) : c_(static_cast<Eigen::Index>(coeffs.size())) {
    Eigen::Index i = 0;
    for (const auto& v : coeffs) c_[i++] = v;
  }

  static HardyVector zeros(Eigen::Index m) { return HardyVector(CVector::Zero(m)); }

  Eigen::Index size() const { return c_.size(); }
  bool empty() const { return c_.size() == 0; }

  /// Coefficient at frequency k; zero outside [0, size()).
  cplx operator[](Eigen::Index k) const {
    return (k >= 0 && k < c_.size()) ? c_[k] : cplx{};
  }

  const CVector& coeffs() const { return c_; }
  std::span<const cplx> view() const { return {c_.data(), static_cast<std::size_t>(c_.size())}; }

 private:
  CVector c_;
};

/// Real-valued field, stored through its nonnegative half. The negative
/// half is read back as the conjugate, so Hermitian symmetry holds bit for
/// bit. Frequencies |k| >= bandwidth() are zero.
class RealSpectrum {
 public:
  RealSpectrum() : half_(CVector::Zero(1)) {}

  static RealSpectrum zeros(Eigen::Index bandwidth) {
    if (bandwidth < 1) throw InvalidArgument("RealSpectrum bandwidth must be >= 1");
    RealSpectrum r;
    r.half_ = CVector::Zero(bandwidth);
    return r;
  }

  /// Takes coefficients for k = 0..K-1. The zero mode must be real to 1e-10
  /// and is then stored exactly real.
  static RealSpectrum from_nonnegative(CVector half) {
    if (half.size() < 1) throw InvalidArgument("RealSpectrum needs at least the zero mode");
    if (std::abs(half[0].imag()) > 1e-10)
      throw InvalidArgument("zero mode of a real field must be real (imag = " +
                            std::to_string(half[0].imag()) + ")");
    half[0] = cplx(half[0].real(), 0.0);
    RealSpectrum r;
    r.half_ = std::move(half);
    return r;
  }

  /// Takes coefficients for k = -(K-1)..K-1 (index k + K - 1) and rejects any
  /// input that is not exactly Hermitian symmetric.
  static RealSpectrum from_two_sided(std::span<const cplx> two_sided) {
    if (two_sided.size() % 2 == 0)
      throw InvalidArgument("two-sided spectrum must have odd length 2K-1");
    const auto K = static_cast<Eigen::Index>((two_sided.size() + 1) / 2);
    CVector half(K);
    for (Eigen::Index k = 0; k < K; ++k) {
      const cplx pos = two_sided[static_cast<std::size_t>(K - 1 + k)];
      const cplx neg = two_sided[static_cast<std::size_t>(K - 1 - k)];
      if (neg != std::conj(pos))
        throw InvalidArgument("spectrum is not Hermitian symmetric at k = " + std::to_string(k));
      half[k] = pos;
    }
    return from_nonnegative(std::move(half));
  }

  Eigen::Index bandwidth() const { return half_.size(); }

  cplx coeff(Eigen::Index k) const {
    const Eigen::Index a = k < 0 ? -k : k;
    if (a >= half_.size()) return {};
    return k < 0 ? std::conj(half_[a]) : half_[a];
  }

  const CVector& nonnegative() const { return half_; }

  CVector two_sided() const {
    const Eigen::Index K = bandwidth();
    CVector out(2 * K - 1);
    for (Eigen::Index k = -(K - 1); k < K; ++k) out[k + K - 1] = coeff(k);
    return out;
  }

  std::span<const cplx> view() const { return {half_.data(), static_cast<std::size_t>(half_.size())}; }

 private:
  CVector half_;
};

/// Exponent and shift for the weighted norm sum (|k| + kappa)^{2s} |fhat(k)|^2.
struct NormSpec {
  double s = 0.0;
  double kappa = 1.0;

  NormSpec() = default;
  NormSpec(double s_, double kappa_) : s(s_), kappa(kappa_) {
    if (!(kappa >= 1.0)) throw InvalidArgument("norm shift kappa must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Basic operations

inline HardyVector project_hardy(const RealSpectrum& spec) {
  return HardyVector(spec.nonnegative());
}

inline HardyVector truncate(const HardyVector& h, Eigen::Index j) {
  const Eigen::Index m = std::min<Eigen::Index>(h.size(), std::max<Eigen::Index>(j, 0));
  return HardyVector(h.coeffs().head(m));
}

/// Left shift in frequency: (S* h)^(k) = h^(k+1).
inline HardyVector shift_left(const HardyVector& h) {
  if (h.size() <= 1) return HardyVector{};
  return HardyVector(h.coeffs().tail(h.size() - 1));
}

/// <h, 1> = hhat(0).
inline cplx inner_with_one(const HardyVector& h) { return h[0]; }

inline double l2_norm(const HardyVector& h) { return h.coeffs().norm(); }

inline double l2_norm(const RealSpectrum& spec) {
  const CVector& half = spec.nonnegative();
  const double z = std::norm(half[0]);
  const double rest = half.size() > 1 ? half.tail(half.size() - 1).squaredNorm() : 0.0;
  return std::sqrt(z + 2.0 * rest);
}

inline double hs_kappa_norm(const HardyVector& h, const NormSpec& spec) {
  if (!(spec.kappa >= 1.0)) throw InvalidArgument("norm shift kappa must be >= 1");
  if (spec.s == 0.0) return l2_norm(h);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < h.size(); ++k)
    acc += std::pow(static_cast<double>(k) + spec.kappa, 2.0 * spec.s) * std::norm(h[k]);
  return std::sqrt(acc);
}

/// Builds the real field whose nonnegative half is h, zero for |k| >= K.
inline RealSpectrum hermitian_symmetrize(const HardyVector& h, Eigen::Index K) {
  if (K < 1) throw InvalidArgument("bandwidth K must be >= 1");
  CVector half = CVector::Zero(K);
  const Eigen::Index m = std::min(K, h.size());
  half.head(m) = h.coeffs().head(m);
  if (std::abs(half[0].imag()) > 1e-10)
    throw InvalidArgument("materially complex zero mode (imag = " + std::to_string(half[0].imag()) +
                          "); a real field needs a real mean");
  return RealSpectrum::from_nonnegative(std::move(half));
}

// ---------------------------------------------------------------------------
// Spatial synthesis by direct summation.

namespace detail {

// sum_{k=0}^{m-1} c[k] e^{i (k + offset) x}; the running phase is re-seeded
// every 32 steps to keep rounding drift at the 1e-15 level.
inline cplx phase_sum(std::span<const cplx> c, Eigen::Index offset, double x) {
  const cplx step = std::polar(1.0, x);
  cplx acc{};
  cplx z{};
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k % 32 == 0) z = std::polar(1.0, static_cast<double>(static_cast<Eigen::Index>(k) + offset) * x);
    acc += c[k] * z;
    z *= step;
  }
  return acc;
}

}  // namespace detail

inline std::vector<double> uniform_grid(Eigen::Index n) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j)
    x[static_cast<std::size_t>(j)] = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
  return x;
}

inline std::vector<cplx> synthesize(const HardyVector& h, std::span<const double> points) {
  std::vector<cplx> out(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) out[j] = detail::phase_sum(h.view(), 0, points[j]);
  return out;
}

/// Two-sided sum for a real field; imaginary parts are rounding residue.
inline std::vector<cplx> synthesize(const RealSpectrum& spec, std::span<const double> points) {
  const CVector two = spec.two_sided();
  const std::span<const cplx> view(two.data(), static_cast<std::size_t>(two.size()));
  std::vector<cplx> out(points.size());
  for (std::size_t j = 0; j < points.size(); ++j)
    out[j] = detail::phase_sum(view, -(spec.bandwidth() - 1), points[j]);
  return out;
}

inline std::vector<double> synthesize_real(const RealSpectrum& spec, std::span<const double> points) {
  const auto z = synthesize(spec, points);
  std::vector<double> out(z.size());
  std::transform(z.begin(), z.end(), out.begin(), [](cplx v) { return v.real(); });
  return out;
}

// ---------------------------------------------------------------------------
// Named initial data.

struct InitialProfile {
  enum class Kind { explicit_coefficients, square_wave, single_mode, random_sobolev };

  Kind kind = Kind::square_wave;
  // single_mode
  Eigen::Index k0 = 0;
  cplx amplitude{};
  // random_sobolev
  double s = 0.0;
  std::uint64_t seed = 0;
  Eigen::Index bandwidth = 0;
  std::optional<double> target_norm;
  // explicit_coefficients: nonnegative frequencies 0..m-1
  CVector coefficients;

  /// Extra decay in the random profile so it lies in H^s.
  static constexpr double kSobolevEpsilon = 0.01;

  static InitialProfile square_wave() { return {}; }

  static InitialProfile single_mode(Eigen::Index k0, cplx amplitude) {
    InitialProfile p;
    p.kind = Kind::single_mode;
    p.k0 = k0;
    p.amplitude = amplitude;
    return p;
  }

  static InitialProfile random_sobolev(double s, std::uint64_t seed, Eigen::Index bandwidth,
                                      std::optional<double> target_norm = std::nullopt) {
    if (bandwidth < 1) throw InvalidArgument("random-sobolev bandwidth must be >= 1");
    if (target_norm && !(*target_norm >= 0.0)) throw InvalidArgument("target norm must be >= 0");
    InitialProfile p;
    p.kind = Kind::random_sobolev;
    p.s = s;
    p.seed = seed;
    p.bandwidth = bandwidth;
    p.target_norm = target_norm;
    return p;
  }

  static InitialProfile explicit_coefficients(CVector c) {
    InitialProfile p;
    p.kind = Kind::explicit_coefficients;
    p.coefficients = std::move(c);
    return p;
  }

  static InitialProfile zero() { return explicit_coefficients(CVector::Zero(1)); }
};

inline std::string_view to_string(InitialProfile::Kind k) {
  switch (k) {
    case InitialProfile::Kind::explicit_coefficients: return "explicit";
    case InitialProfile::Kind::square_wave: return "square-wave";
    case InitialProfile::Kind::single_mode: return "single-mode";
    case InitialProfile::Kind::random_sobolev: return "random-sobolev";
  }
  return "?";
}

/// Fourier coefficient of sgn(x) on (-pi, pi).
inline cplx square_wave_coefficient(Eigen::Index k) {
  if (k == 0 || k % 2 == 0) return {};
  return {0.0, -2.0 / (std::numbers::pi * static_cast<double>(k))};
}

namespace detail {

inline double sobolev_weight(double s, Eigen::Index k) {
  return std::pow(1.0 + static_cast<double>(k), -s - 0.5 - InitialProfile::kSobolevEpsilon);
}

// Raw random coefficients for 0 <= k < p.bandwidth before normalization.
inline CVector random_half(const InitialProfile& p, bool real_zero_mode) {
  const CounterRng rng(p.seed, 0x50b0);
  CVector c(p.bandwidth);
  for (Eigen::Index k = 0; k < p.bandwidth; ++k) {
    cplx z = rng.complex_normal(static_cast<std::uint64_t>(k));
    if (k == 0 && real_zero_mode) z = cplx(std::sqrt(2.0) * z.real(), 0.0);
    c[k] = z * sobolev_weight(p.s, k);
  }
  return c;
}

inline void normalize_to(CVector& c, double current, std::optional<double> target) {
  if (!target || current == 0.0) return;
  c *= *target / current;
}

}  // namespace detail

/// Real field of the profile restricted to |k| < bandwidth.
inline RealSpectrum analyze_profile(const InitialProfile& p, Eigen::Index bandwidth) {
  if (bandwidth < 1) throw InvalidArgument("analysis bandwidth must be >= 1");
  CVector half = CVector::Zero(bandwidth);
  switch (p.kind) {
    case InitialProfile::Kind::square_wave:
      for (Eigen::Index k = 1; k < bandwidth; ++k) half[k] = square_wave_coefficient(k);
      break;
    case InitialProfile::Kind::single_mode: {
      const Eigen::Index a = p.k0 < 0 ? -p.k0 : p.k0;
      if (a >= bandwidth)
        throw InvalidArgument("single-mode frequency " + std::to_string(p.k0) +
                              " outside bandwidth " + std::to_string(bandwidth));
      if (a == 0) {
        half[0] = cplx(p.amplitude.real(), 0.0);
      } else {
        half[a] = p.k0 < 0 ? std::conj(p.amplitude) : p.amplitude;
      }
      break;
    }
    case InitialProfile::Kind::random_sobolev: {
      CVector full = detail::random_half(p, /*real_zero_mode=*/true);
      detail::normalize_to(full, l2_norm(RealSpectrum::from_nonnegative(full)), p.target_norm);
      const Eigen::Index m = std::min(bandwidth, full.size());
      half.head(m) = full.head(m);
      break;
    }
    case InitialProfile::Kind::explicit_coefficients:
      return hermitian_symmetrize(HardyVector(p.coefficients), bandwidth);
  }
  return RealSpectrum::from_nonnegative(std::move(half));
}

/// Hardy-space data (CCM) of the profile at frequencies 0..bandwidth-1.
inline HardyVector analyze_hardy_profile(const InitialProfile& p, Eigen::Index bandwidth) {
  if (bandwidth < 1) throw InvalidArgument("analysis bandwidth must be >= 1");
  CVector c = CVector::Zero(bandwidth);
  switch (p.kind) {
    case InitialProfile::Kind::square_wave:
      for (Eigen::Index k = 1; k < bandwidth; ++k) c[k] = square_wave_coefficient(k);
      break;
    case InitialProfile::Kind::single_mode:
      if (p.k0 < 0) throw InvalidArgument("Hardy-space single mode needs k0 >= 0");
      if (p.k0 >= bandwidth)
        throw InvalidArgument("single-mode frequency " + std::to_string(p.k0) +
                              " outside bandwidth " + std::to_string(bandwidth));
      c[p.k0] = p.amplitude;
      break;
    case InitialProfile::Kind::random_sobolev: {
      CVector full = detail::random_half(p, /*real_zero_mode=*/false);
      detail::normalize_to(full, full.norm(), p.target_norm);
      const Eigen::Index m = std::min(bandwidth, full.size());
      c.head(m) = full.head(m);
      break;
    }
    case InitialProfile::Kind::explicit_coefficients: {
      const Eigen::Index m = std::min(bandwidth, p.coefficients.size());
      c.head(m) = p.coefficients.head(m);
      break;
    }
  }
  return HardyVector(std::move(c));
}

}  // namespace laxflow
