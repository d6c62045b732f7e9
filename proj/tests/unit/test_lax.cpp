#include "laxflow/propagator.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace laxflow;
using namespace std::complex_literals;

namespace {

RealSpectrum random_real(Eigen::Index K, std::uint64_t seed, double norm = 1.0) {
  return analyze_profile(InitialProfile::random_sobolev(0.5, seed, K, norm), K);
}

HardyVector random_hardy(Eigen::Index K, std::uint64_t seed, double norm = 0.8) {
  return analyze_hardy_profile(InitialProfile::random_sobolev(0.5, seed, K, norm), K);
}

oracle::Coeffs lookup(const RealSpectrum& r) {
  return [r](long k) { return r.coeff(k); };
}

oracle::Coeffs lookup(const HardyVector& h) {
  return [h](long k) { return h[k]; };
}

double max_abs(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

// ---- build_bo_lax

TEST(BoLax, ZeroDataIsFree) {
  for (Eigen::Index n : {0, 3, 6}) {
    const LaxMatrix L = build_bo_lax(RealSpectrum::zeros(4), n, 6);
    EXPECT_EQ(L.entries(), free_operator(6));
  }
}

TEST(BoLax, NoTruncationMeansFree) {
  EXPECT_EQ(build_bo_lax(random_real(8, 1), 0, 5).entries(), free_operator(5));
}

TEST(BoLax, SmallExample) {
  const cplx a = 0.3 - 0.2i, c = 0.7;
  CVector half(2);
  half << c, a;
  const LaxMatrix L = build_bo_lax(RealSpectrum::from_nonnegative(half), 2, 3);
  CMatrix expected(3, 3);
  expected << -c, -std::conj(a), 0.0, -a, 1.0 - c, 0.0, 0.0, 0.0, 2.0;
  EXPECT_EQ(L.entries(), expected);
  EXPECT_EQ(L.n(), 2);
  EXPECT_EQ(L.M(), 3);
  EXPECT_EQ(L.flow(), Flow::bo);
}

TEST(BoLax, MatchesConvolutionOracle) {
  const RealSpectrum u = random_real(12, 4);
  for (Eigen::Index n : {1, 5, 9}) {
    const LaxMatrix L = build_bo_lax(u, n, 9);
    EXPECT_LE(max_abs(L.entries() - oracle::bo_lax(lookup(u), n, 9)), 1e-13);
  }
}

TEST(BoLax, BlockIsHermitianToeplitzAndFreeOutside) {
  const RealSpectrum u = random_real(16, 2);
  const Eigen::Index n = 7, M = 12;
  const LaxMatrix lax = build_bo_lax(u, n, M);
  const CMatrix& L = lax.entries();
  for (Eigen::Index j = 0; j + 1 < n; ++j)
    for (Eigen::Index l = 0; l + 1 < n; ++l) {
      EXPECT_LE(std::abs(L(j + 1, l + 1) - (j == l ? 1.0 : 0.0) - L(j, l)), 1e-14);
    }
  for (Eigen::Index j = 0; j < M; ++j)
    for (Eigen::Index l = 0; l < M; ++l)
      if (std::max(j, l) >= n) {
        EXPECT_EQ(L(j, l), j == l ? cplx(static_cast<double>(j)) : cplx(0.0));
      }
}

TEST(BoLax, RejectsBadSizes) {
  EXPECT_THROW(build_bo_lax(random_real(4, 1), 5, 4), InvalidArgument);
  EXPECT_THROW(build_bo_lax(random_real(4, 1), 0, 0), InvalidArgument);
  EXPECT_THROW(build_bo_lax(random_real(4, 1), -1, 4), InvalidArgument);
}

TEST(BoLax, SemiBoundedByKappaZero) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (double norm : {0.3, 1.0, 2.0}) {
      const RealSpectrum u = random_real(64, seed, norm);
      const double k0 = std::max(12.0 * norm * norm, 1.0);
      for (Eigen::Index n : {1, 16, 64}) {
        const HermitianEig e = eig_hermitian(build_bo_lax(u, n, 64));
        EXPECT_GE(e.eigenvalues().minCoeff(), -k0 - 1e-8);
      }
    }
  }
}

// ---- build_ccm_lax

TEST(CcmLax, ZeroDataIsFree) {
  for (Flow f : {Flow::ccm_focusing, Flow::ccm_defocusing})
    EXPECT_EQ(build_ccm_lax(HardyVector::zeros(3), 3, 5, f).entries(), free_operator(5));
}

TEST(CcmLax, OneByOneBlock) {
  const cplx b = 0.4 + 0.3i;
  const LaxMatrix F = build_ccm_lax(HardyVector{b, 0.1}, 1, 4, Flow::ccm_focusing);
  const LaxMatrix D = build_ccm_lax(HardyVector{b, 0.1}, 1, 4, Flow::ccm_defocusing);
  EXPECT_NEAR(F.entries()(0, 0).real(), -std::norm(b), 1e-16);
  EXPECT_NEAR(D.entries()(0, 0).real(), std::norm(b), 1e-16);
  CMatrix rest = F.entries();
  rest(0, 0) = 0.0;
  EXPECT_EQ(rest, free_operator(4));
}

TEST(CcmLax, MatchesGramOracle) {
  const HardyVector u = random_hardy(8, 11);
  for (Flow f : {Flow::ccm_focusing, Flow::ccm_defocusing}) {
    const LaxMatrix L = build_ccm_lax(u, 4, 8, f);
    EXPECT_LE(max_abs(L.entries() - oracle::ccm_lax(lookup(u), 4, 8, f == Flow::ccm_focusing)), 1e-13);
  }
}

TEST(CcmLax, GramIsPositiveSemidefinite) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const HardyVector u = random_hardy(32, seed, 3.0);
    const CMatrix G = ccm_gram(u, 32, 32);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(G);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * G.norm());
  }
}

TEST(CcmLax, RejectsBadInput) {
  EXPECT_THROW(build_ccm_lax(HardyVector{1.0}, 3, 2, Flow::ccm_focusing), InvalidArgument);
  EXPECT_THROW(build_ccm_lax(HardyVector{1.0}, 1, 2, Flow::bo), InvalidArgument);
}

TEST(LaxOps, ConvolutionFormAtFullTruncation) {
  // L_M e_l = l e_l - P_M(u e_l) for BO, computed coefficientwise.
  const RealSpectrum u = random_real(10, 6);
  const Eigen::Index M = 10;
  const LaxMatrix lax = build_bo_lax(u, M, M);
  const CMatrix& L = lax.entries();
  for (Eigen::Index l = 0; l < M; ++l) {
    CVector expected = CVector::Zero(M);
    expected[l] = static_cast<double>(l);
    for (Eigen::Index j = 0; j < M; ++j) expected[j] -= u.coeff(j - l);
    EXPECT_LE((L.col(l) - expected).cwiseAbs().maxCoeff(), 1e-13);
  }
}

// ---- resolvent

TEST(FreeResolvent, Examples) {
  const CVector e0 = CVector::Unit(4, 0);
  EXPECT_EQ(apply_free_resolvent(FreeResolvent(1.0, 4), e0), e0);
  const CVector e2 = CVector::Unit(4, 2);
  EXPECT_LE((apply_free_resolvent(FreeResolvent(3.0, 4), e2) - e2 / 5.0).norm(), 1e-16);
}

TEST(FreeResolvent, Contraction) {
  const auto c = oracle::random_coeffs(32, 3, 0.0);
  CVector v(32);
  for (int k = 0; k < 32; ++k) v[k] = c[static_cast<std::size_t>(k)];
  for (double kappa : {1.0, 2.5, 40.0})
    EXPECT_LE(apply_free_resolvent(FreeResolvent(kappa, 32), v).norm(), v.norm() / kappa + 1e-15);
}

TEST(FreeResolvent, Validation) {
  EXPECT_THROW(FreeResolvent(0.5, 4), InvalidArgument);
  EXPECT_THROW(apply_free_resolvent(FreeResolvent(1.0, 4), CVector::Zero(3)), InvalidArgument);
}

// ---- hermitian_defect

TEST(HermitianDefect, BuiltMatricesAreExact) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    EXPECT_EQ(hermitian_defect(build_bo_lax(random_real(20, seed, 3.0), 13, 20)), 0.0);
    EXPECT_EQ(hermitian_defect(build_ccm_lax(random_hardy(20, seed, 3.0), 13, 20, Flow::ccm_focusing)), 0.0);
    EXPECT_EQ(hermitian_defect(build_ccm_lax(random_hardy(20, seed, 3.0), 20, 20, Flow::ccm_defocusing)), 0.0);
  }
}

TEST(HermitianDefect, DetectsCorruption) {
  CMatrix m = build_bo_lax(random_real(6, 1), 6, 6).entries();
  m(1, 4) += 1e-3;
  const double d = hermitian_defect(m);
  EXPECT_GE(d, 0.5e-3);
  EXPECT_LE(d, 2e-3);
}

TEST(LaxMatrix, DigestTracksData) {
  const RealSpectrum a = random_real(8, 1), b = random_real(8, 2);
  EXPECT_EQ(build_bo_lax(a, 4, 8).data_digest(), build_bo_lax(a, 2, 8).data_digest());
  EXPECT_NE(build_bo_lax(a, 4, 8).data_digest(), build_bo_lax(b, 4, 8).data_digest());
}

TEST(LaxMatrix, CsvDump) {
  const auto path = std::filesystem::temp_directory_path() / "laxflow_dump_test.csv";
  dump_csv(build_bo_lax(random_real(3, 1), 3, 3), path.string());
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(rows, 3);
  std::filesystem::remove(path);
}
