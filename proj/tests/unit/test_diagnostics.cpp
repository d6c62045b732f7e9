#include "laxflow/diagnostics.hpp"

#include <gtest/gtest.h>

using namespace laxflow;

namespace {

RealSpectrum random_real(Eigen::Index bw, std::uint64_t seed, double norm, double s = 0.5) {
  return analyze_profile(InitialProfile::random_sobolev(s, seed, bw, norm), bw);
}

HardyVector random_hardy(Eigen::Index bw, std::uint64_t seed, double norm) {
  return analyze_hardy_profile(InitialProfile::random_sobolev(0.5, seed, bw, norm), bw);
}

const BoundReport& find(const std::vector<BoundReport>& r, const std::string& name, Eigen::Index n, double kappa) {
  for (const auto& b : r)
    if (b.name == name && b.n == n && b.kappa == kappa) return b;
  throw std::runtime_error("missing report " + name);
}

ConvergenceTable synthetic(const std::vector<std::pair<Eigen::Index, double>>& pts) {
  ConvergenceTable t;
  for (auto [K, e] : pts) {
    ConvergenceRow r;
    r.K = K;
    r.error = e;
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace

// ---- bound suite

TEST(BoundSuite, ZeroDataPasses) {
  const std::vector<double> kappas{1.0, 10.0};
  const std::vector<Eigen::Index> ns{1, 8, 32};
  for (Flow f : {Flow::bo, Flow::ccm_focusing, Flow::ccm_defocusing}) {
    const InitialData d = is_ccm(f) ? InitialData(HardyVector::zeros(4)) : InitialData(RealSpectrum::zeros(4));
    const auto reports = run_bound_suite(d, f, 32, kappas, ns);
    for (const auto& r : reports) EXPECT_TRUE(r.pass) << r.name << " n=" << r.n;
    EXPECT_EQ(find(reports, "potential_resolvent", 8, 10.0).measured, 0.0);
  }
}

TEST(BoundSuite, RandomDataPasses) {
  const std::vector<double> kappas{1.0, 10.0, 100.0};
  const std::vector<Eigen::Index> ns{1, 4, 16, 64};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (const auto& r : run_bound_suite(random_real(64, seed, 1.5), Flow::bo, 64, kappas, ns))
      EXPECT_TRUE(r.pass) << r.name << " n=" << r.n << " kappa=" << r.kappa;
    for (Flow f : {Flow::ccm_focusing, Flow::ccm_defocusing})
      for (const auto& r : run_bound_suite(random_hardy(64, seed, 0.9), f, 64, kappas, ns))
        EXPECT_TRUE(r.pass) << r.name << " n=" << r.n << " kappa=" << r.kappa;
  }
}

TEST(BoundSuite, TailResolventIsExact) {
  const std::vector<double> kappas{1.0, 4.0};
  const std::vector<Eigen::Index> ns{3, 10};
  const auto reports = run_bound_suite(random_real(16, 1, 1.0), Flow::bo, 16, kappas, ns);
  for (Eigen::Index n : ns)
    for (double k : kappas) {
      const auto& r = find(reports, "tail_resolvent", n, k);
      EXPECT_DOUBLE_EQ(r.measured, 1.0 / (static_cast<double>(n) + k));
      EXPECT_DOUBLE_EQ(r.bound, 1.0 / static_cast<double>(n));
    }
}

TEST(BoundSuite, PotentialBoundAtLargeKappa) {
  const std::vector<double> kappas{100.0};
  const std::vector<Eigen::Index> ns{32};
  const auto r = find(run_bound_suite(random_real(32, 2, 1.0), Flow::bo, 32, kappas, ns), "potential_resolvent", 32, 100.0);
  EXPECT_NEAR(r.bound, std::sqrt(3.0) / 10.0, 1e-12);
  EXPECT_LE(r.measured, r.bound);
}

TEST(BoundSuite, QuadraticTermDecaysInKappa) {
  const HardyVector u = random_hardy(32, 3, 0.9);
  const std::vector<double> kappas{1.0, 10.0, 100.0, 1e4};
  const std::vector<Eigen::Index> ns{32};
  const auto reports = run_bound_suite(u, Flow::ccm_defocusing, 32, kappas, ns);
  double prev = INFINITY;
  for (double k : kappas) {
    const double m = find(reports, "quadratic_resolvent", 32, k).measured;
    EXPECT_LT(m, prev);
    prev = m;
  }
  EXPECT_LT(prev, 0.1 * 2.0 * 0.81);
}

TEST(BoundSuite, ScaleHookFailsEverything) {
  SuiteOptions opts;
  opts.bound_scale = 0.0;
  const std::vector<double> kappas{1.0};
  const std::vector<Eigen::Index> ns{8};
  const auto reports = run_bound_suite(random_real(16, 1, 1.0), Flow::bo, 16, kappas, ns, opts);
  EXPECT_TRUE(std::any_of(reports.begin(), reports.end(), [](const BoundReport& r) { return !r.pass; }));
}

TEST(BoundSuite, Validation) {
  const std::vector<double> bad_kappa{0.5}, kappas{1.0};
  const std::vector<Eigen::Index> ns{4}, bad_ns{40};
  const RealSpectrum u = random_real(8, 1, 1.0);
  EXPECT_THROW(run_bound_suite(u, Flow::bo, 32, bad_kappa, ns), InvalidArgument);
  EXPECT_THROW(run_bound_suite(u, Flow::bo, 32, kappas, bad_ns), InvalidArgument);
  EXPECT_THROW(run_bound_suite(u, Flow::bo, 4, kappas, ns), InvalidArgument);
  EXPECT_THROW(run_bound_suite(u, Flow::ccm_focusing, 32, kappas, ns), InvalidArgument);
}

TEST(HardyAverage, Examples) {
  EXPECT_EQ(hardy_average_norm(HardyVector::zeros(4), 8), 0.0);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const HardyVector u = random_hardy(64, seed, 1.0);
    EXPECT_LE(hardy_average_norm(u, 64), 2.0 * l2_norm(u) + 1e-12);
  }
}

// ---- resolvent convergence

TEST(Resolvent, ZeroData) {
  const ResolventStudy s = run_resolvent_convergence(RealSpectrum::zeros(2), Flow::bo, 64, 1.0);
  for (const auto& r : s.rows) EXPECT_EQ(r.measured, 0.0);
  EXPECT_TRUE(s.all_pass());
}

TEST(Resolvent, RateAndMonotone) {
  for (Flow f : {Flow::bo, Flow::ccm_defocusing}) {
    const InitialData d = is_ccm(f) ? InitialData(random_hardy(64, 4, 0.8)) : InitialData(random_real(64, 4, 1.0));
    const ResolventStudy s = run_resolvent_convergence(d, f, 64, 10.0);
    ASSERT_EQ(s.rows.size(), 5u);
    EXPECT_EQ(s.rows.front().n, 2);
    EXPECT_EQ(s.rows.back().n, 32);
    for (std::size_t i = 1; i < s.rows.size(); ++i) EXPECT_NEAR(s.rows[i].bound, s.rows[i - 1].bound / 2.0, 1e-14);
    EXPECT_TRUE(s.all_pass());
    EXPECT_TRUE(s.monotone);
  }
}

TEST(Resolvent, Validation) {
  EXPECT_THROW(run_resolvent_convergence(RealSpectrum::zeros(2), Flow::bo, 48, 1.0), InvalidArgument);
  EXPECT_THROW(run_resolvent_convergence(RealSpectrum::zeros(2), Flow::bo, 64, 0.0), InvalidArgument);
}

// ---- convergence study

TEST(Convergence, ZeroData) {
  const std::vector<Eigen::Index> Ks{4, 8};
  const auto t = run_convergence_study(InitialProfile::zero(), Flow::bo, Ks, Schedule::Kind::constant, 1.0, 11, 32);
  for (const auto& r : t.rows) EXPECT_EQ(r.error, 0.0);
  EXPECT_TRUE(t.non_increasing());
  EXPECT_FALSE(t.strictly_decreasing());
}

TEST(Convergence, BandlimitedLinearCaseIsExact) {
  CVector c(4);
  c << 0.2, 0.3, -0.1, 0.05;
  ConvergenceOptions opts;
  opts.reference_schedule = Schedule::Kind::linear_case;
  const std::vector<Eigen::Index> Ks{4, 8, 16};
  const auto t = run_convergence_study(InitialProfile::explicit_coefficients(c), Flow::bo, Ks,
                                       Schedule::Kind::linear_case, 3.0, 11, 64, opts);
  for (const auto& r : t.rows) EXPECT_LE(r.error, 1e-12);
}

TEST(Convergence, NonIncreasingAndNormBounded) {
  const std::vector<Eigen::Index> Ks{8, 16, 32};
  const auto t = run_convergence_study(InitialProfile::random_sobolev(2.0, 3, 128, 1.0), Flow::bo, Ks,
                                       Schedule::Kind::half_staircase, 1.0, 11, 128);
  EXPECT_TRUE(t.non_increasing());
  EXPECT_TRUE(t.norm_differences_bounded());
  for (const auto& r : t.rows) EXPECT_LE(r.norm_diff, r.error + 1e-12);
}

TEST(Convergence, Validation) {
  const std::vector<Eigen::Index> bad{8, 8}, Ks{8};
  const auto p = InitialProfile::zero();
  EXPECT_THROW(run_convergence_study(p, Flow::bo, bad, Schedule::Kind::constant, 1.0, 11, 64), InvalidArgument);
  EXPECT_THROW(run_convergence_study(p, Flow::bo, Ks, Schedule::Kind::constant, 1.0, 11, 16), InvalidArgument);
  EXPECT_THROW(run_convergence_study(p, Flow::bo, Ks, Schedule::Kind::constant, 1.0, 5, 64), InvalidArgument);
  EXPECT_THROW(run_convergence_study(p, Flow::bo, Ks, Schedule::Kind::constant, 0.0, 11, 64), InvalidArgument);
}

// ---- rate fit

TEST(FitRate, SyntheticPowerLaw) {
  const RateFit f = fit_rate(synthetic({{16, 3.0 / 16}, {32, 3.0 / 32}, {64, 3.0 / 64}, {128, 3.0 / 128}}));
  ASSERT_TRUE(f.slope);
  EXPECT_NEAR(*f.slope, -1.0, 1e-6);
  EXPECT_TRUE(f.convergent);
}

TEST(FitRate, ConstantErrorsDoNotConverge) {
  const RateFit f = fit_rate(synthetic({{16, 0.5}, {32, 0.5}, {64, 0.5}, {128, 0.5}}));
  ASSERT_TRUE(f.slope);
  EXPECT_NEAR(*f.slope, 0.0, 1e-12);
  EXPECT_FALSE(f.convergent);
}

TEST(FitRate, ZeroErrorsNotApplicable) {
  const RateFit f = fit_rate(synthetic({{16, 0.0}, {32, 0.0}, {64, 0.0}, {128, 0.0}}));
  EXPECT_FALSE(f.slope);
  EXPECT_FALSE(f.convergent);
}

TEST(FitRate, NeedsFourRows) {
  EXPECT_THROW(fit_rate(synthetic({{16, 1.0}, {32, 0.5}, {64, 0.25}})), InvalidArgument);
}

// ---- propagator sweep

TEST(PropagatorSweep, ZeroData) {
  const PropagatorSweep s = run_propagator_sweep(RealSpectrum::zeros(2), Flow::bo, 64, 1.0, 7);
  for (const auto& r : s.rows) EXPECT_LE(r.sup_error, 1e-13);
}

TEST(PropagatorSweep, SmoothDataConverges) {
  const RealSpectrum u = random_real(256, 5, 1.0, 2.0);
  const PropagatorSweep s = run_propagator_sweep(u, Flow::bo, 256, 0.5, 7);
  ASSERT_EQ(s.rows.size(), 6u);
  for (const auto& r : s.rows) EXPECT_LE(r.sup_error, 2.0 + 1e-12);
  for (std::size_t i = 1; i < s.rows.size(); ++i) EXPECT_LE(s.rows[i].sup_error, 2.0 * s.rows[i - 1].sup_error + 1e-12);
  EXPECT_TRUE(s.pass);
  EXPECT_LT(s.rows.back().sup_error, 1e-2);
}

TEST(PropagatorSweep, Validation) {
  EXPECT_THROW(run_propagator_sweep(RealSpectrum::zeros(2), Flow::bo, 32, 1.0, 7), InvalidArgument);
}

TEST(SymmetricGrid, Endpoints) {
  const auto g = symmetric_grid(2.0, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), -2.0);
  EXPECT_EQ(g[2], 0.0);
  EXPECT_EQ(g.back(), 2.0);
}
