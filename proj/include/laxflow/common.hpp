#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace laxflow {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr std::string_view kVersion = "1.0.0";

/// Bad input: violated precondition, malformed config, unknown query.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure inside a numerical kernel (eigensolver, search exhaustion).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The three flows the library evolves. CCM carries its sign in the tag.
enum class Flow { bo, ccm_focusing, ccm_defocusing };

inline bool is_ccm(Flow f) { return f != Flow::bo; }

/// +1 for BO, -1 for CCM: the sign in e^{i alpha t (I + 2L)}.
inline int group_sign(Flow f) { return f == Flow::bo ? 1 : -1; }

inline std::string_view to_string(Flow f) {
  switch (f) {
    case Flow::bo: return "bo";
    case Flow::ccm_focusing: return "ccm-focusing";
    case Flow::ccm_defocusing: return "ccm-defocusing";
  }
  return "?";
}

inline Flow parse_flow(std::string_view s) {
  if (s == "bo" || s == "BO") return Flow::bo;
  if (s == "ccm-focusing" || s == "ccm_focusing") return Flow::ccm_focusing;
  if (s == "ccm-defocusing" || s == "ccm_defocusing") return Flow::ccm_defocusing;
  throw InvalidArgument("unknown equation '" + std::string(s) +
                        "' (expected bo, ccm-focusing or ccm-defocusing)");
}

/// FNV-1a over raw bytes. Used to tag Lax matrices and cache entries with
/// the initial data they were built from.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void update_value(const T& v) { update(&v, sizeof(T)); }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t digest(std::span<const cplx> values, std::uint64_t salt = 0) {
  Fnv1a h;
  h.update_value(salt);
  const std::uint64_t n = values.size();
  h.update_value(n);
  if (!values.empty()) h.update(values.data(), values.size() * sizeof(cplx));
  return h.value();
}

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so coefficient k of a random profile does not
/// depend on how many other coefficients were requested.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + mix(counter));
  }

  /// Uniform in (0, 1): 53 random bits, never exactly 0.
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard complex normal (E|z|^2 = 1) via Box-Muller on two draws.
  cplx complex_normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    const double r = std::sqrt(-std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(th), r * std::sin(th)};
  }

  double normal(std::uint64_t counter) const {
    return std::sqrt(2.0) * complex_normal(counter).real();
  }

 private:
  std::uint64_t key_;
};

}  // namespace laxflow
