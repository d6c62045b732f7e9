// Evolves a square wave under BO with two schedules and prints the
// conserved quantities and a few coefficients at t = pi/2.

#include "laxflow/laxflow.hpp"

#include <cstdio>

int main() {
  using namespace laxflow;
  const double t = std::numbers::pi / 2;
  const std::vector<double> times{0.0, t};

  for (auto kind : {Schedule::Kind::constant, Schedule::Kind::half_staircase}) {
    const SchemeConfig cfg{Flow::bo, make_schedule(kind, 128), times, InitialProfile::square_wave()};
    const SchemeOutput out = run_scheme(cfg);
    std::printf("%s schedule, K = %ld\n", std::string(to_string(kind)).c_str(), static_cast<long>(out.K()));
    std::printf("  mass(t)     = %.3e\n", mass(out, t));
    std::printf("  ||u_K(0)||  = %.12f\n", full_l2(out, 0.0));
    std::printf("  ||u_K(t)||  = %.12f\n", full_l2(out, t));
    std::printf("  eigendecompositions: %zu\n", out.decompositions);
    for (Eigen::Index k = 1; k <= 5; ++k) {
      const cplx c = out.coeffs(k, out.index_of(t));
      std::printf("  uhat(t, %ld) = %+.10f %+.10fi\n", static_cast<long>(k), c.real(), c.imag());
    }
  }
}
