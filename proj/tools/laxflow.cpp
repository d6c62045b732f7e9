// laxflow: explicit-formula spectral schemes for Benjamin-Ono and
// continuum Calogero-Moser flows on the torus.

#include "laxflow/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace laxflow;
using namespace laxflow::cli;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> equation;
  std::optional<Eigen::Index> K;
  std::optional<std::string> schedule;
  std::optional<std::string> profile;
  std::vector<std::string> times;
  std::optional<std::string> T;
  std::optional<int> grid_points;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<Eigen::Index> kref;
  std::vector<Eigen::Index> Ks;
  std::optional<Eigen::Index> M;
  std::vector<double> kappas;
  std::optional<std::string> reference_schedule;
  std::vector<double> rate_window;
  std::optional<double> bound_scale;
  std::optional<double> sweep_T;
  std::optional<double> tol_mass;
  std::optional<double> tol_l2;
  bool override_focusing = false;
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "JSON config or manifest to start from");
  app.add_option("--equation", f.equation, "bo | ccm-focusing | ccm-defocusing");
  app.add_option("--K", f.K, "number of computed Fourier coefficients");
  app.add_option("--schedule", f.schedule,
                 "constant | linear-case | half-staircase | full-staircase | n0,n1,...");
  app.add_option("--profile", f.profile,
                 "square-wave | zero | single-mode:k0=..,amp=.. | random-sobolev:s=..[,seed=..,bandwidth=..,norm=..]"
                 " | explicit:c0;c1;...");
  app.add_option("--times", f.times, "evaluation times, e.g. 0 1 pi/2 sqrt2*pi")->delimiter(',');
  app.add_option("--T", f.T, "time horizon for a symmetric grid on [-T, T]");
  app.add_option("--grid-points", f.grid_points, "points of the symmetric time grid");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--seed", f.seed, "seed for random profiles and test vectors");
  app.add_option("--kref", f.kref, "reference K for convergence studies");
  app.add_option("--Ks", f.Ks, "K values of a convergence study")->delimiter(',');
  app.add_option("--M", f.M, "ambient size for diagnostics");
  app.add_option("--kappas", f.kappas, "resolvent shifts for the bound suite")->delimiter(',');
  app.add_option("--reference-schedule", f.reference_schedule, "schedule kind of the convergence reference");
  app.add_option("--rate-window", f.rate_window, "accepted slope interval low,high")->delimiter(',')->expected(2);
  app.add_option("--sweep-T", f.sweep_T, "time horizon of the propagator sweep");
  app.add_option("--tol-mass", f.tol_mass, "tolerance of the mass check");
  app.add_option("--tol-l2", f.tol_l2, "tolerance of the L2 checks");
  app.add_flag("--override-focusing-threshold", f.override_focusing, "allow ||u0|| >= 1 for focusing CCM");
  app.add_option("--bound-scale", f.bound_scale, "multiply every diagnostic bound (harness self-test)")
      ->group("");
}

RunConfig build_config(const std::string& command, const Flags& f) {
  RunConfig c = defaults_for(command);
  if (f.config) apply_json(c, load_json_file(*f.config));
  if (f.equation) {
    try {
      c.equation = parse_flow(*f.equation);
    } catch (const InvalidArgument& e) {
      throw ConfigError("--equation", e.what());
    }
  }
  if (f.seed) c.seed = *f.seed;
  if (f.K) c.K = *f.K;
  if (f.M) c.M = *f.M;
  if (f.kref) c.K_ref = *f.kref;
  if (f.profile) {
    c.profile = parse_profile_spec(*f.profile, c.seed, default_profile_bandwidth(c));
    c.profile_explicit = true;
  }
  if (f.schedule) c.schedule = parse_schedule_spec(*f.schedule);
  if (!f.times.empty()) {
    c.times = f.times;
    c.T.reset();
  }
  if (f.T) {
    c.T = TimeExpression::evaluate(*f.T);
    if (f.times.empty()) c.times.clear();
  }
  if (f.grid_points) {
    c.grid_points = *f.grid_points;
    if (f.times.empty()) c.times.clear();
  }
  if (f.out) c.out = *f.out;
  if (!f.Ks.empty()) c.Ks = f.Ks;
  if (!f.kappas.empty()) c.kappas = f.kappas;
  if (f.reference_schedule) c.reference_schedule = parse_schedule_kind(*f.reference_schedule);
  if (f.rate_window.size() == 2) c.rate_window = {f.rate_window[0], f.rate_window[1]};
  if (f.bound_scale) c.bound_scale = *f.bound_scale;
  if (f.sweep_T) c.sweep_T = *f.sweep_T;
  if (f.tol_mass) c.tol_mass = *f.tol_mass;
  if (f.tol_l2) c.tol_l2 = *f.tol_l2;
  if (f.override_focusing) c.override_focusing_threshold = true;
  return c;
}

void print_summary(const CommandResult& r) {
  const json& m = r.manifest;
  for (const auto& c : m["checks"])
    std::cout << (c["pass"].get<bool>() ? "ok    " : "FAIL  ") << c["name"].get<std::string>() << "  "
              << c["value"].dump() << " (threshold " << c["threshold"].dump() << ")\n";
  std::cout << "decompositions: " << m["decompositions"] << ", files: " << m["files"].size() << ", wall: "
            << m["wall_seconds"]["total"] << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit-formula spectral schemes for Benjamin-Ono and continuum Calogero-Moser flows"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Flags flags;
  std::string command;
  for (const char* name : {"evolve", "talbot", "convergence", "diagnostics"}) {
    static const std::map<std::string, std::string> help{
        {"evolve", "evaluate the scheme at the requested times"},
        {"talbot", "paired nonlinear/linear profiles at rational and irrational times"},
        {"convergence", "error table against a high-K reference"},
        {"diagnostics", "operator bound suite, resolvent rates and propagator sweep"}};
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    add_flags(*sub, flags);
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const CommandResult result = run_command(build_config(command, flags));
    print_summary(result);
    return result.exit_code;
  } catch (const InvalidArgument& e) {
    std::cerr << "laxflow: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    std::cerr << "laxflow: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "laxflow: " << e.what() << '\n';
    return kCheckFailed;
  }
}
