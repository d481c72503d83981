// Command-line front end: scenario runs, the autodiff-vs-oracle selfcheck,
// and transport/geodesic shortcuts.
//
// Exit codes: 0 all checks pass, 1 check failure, 2 validation error,
// 3 internal error.
#include <chrono>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "weylcps/scenario.hpp"
#include "weylcps/version.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInternal = 3;

struct CommonOptions {
  std::string scenario_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  double tol_scale = 1.0;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_scenario = true) {
  if (with_scenario)
    cmd->add_option("scenario", opts.scenario_path, "Scenario JSON file")->required();
  cmd->add_option("--out", opts.out_path, "Write the run report to this path");
  std::uint64_t seed_value = 0;
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&opts](const std::uint64_t& v) { opts.seed = v; },
      "Override the scenario seed");
  (void)seed_value;
  cmd->add_option("--tol-scale", opts.tol_scale,
                  "Multiply every tolerance by this factor (exploratory runs)");
  cmd->add_option("--workers", opts.workers, "Worker threads (results are identical for any count)");
}

void print_summary(const weylcps::RunReport& report, double wall_seconds) {
  for (const auto& c : report.checks) {
    std::printf("[%s] %-42s max %.3e  tol %.3e  (%d samples)\n", c.pass ? "PASS" : "FAIL",
                c.check.c_str(), c.max_residual, c.tolerance, c.samples);
    for (const auto& note : c.notes) std::printf("       note: %s\n", note.c_str());
  }
  std::printf("%s: %s (%zu checks, %.2fs)\n", report.scenario_name.c_str(),
              report.overall_pass ? "PASS" : "FAIL", report.checks.size(), wall_seconds);
}

int finish(const weylcps::RunReport& report, const CommonOptions& opts, double wall_seconds) {
  print_summary(report, wall_seconds);
  if (!opts.out_path.empty()) weylcps::emit_report(report, opts.out_path);
  return report.overall_pass ? kExitPass : kExitCheckFailure;
}

int run_command(const CommonOptions& opts, const std::vector<std::string>& only) {
  const auto t0 = std::chrono::steady_clock::now();
  weylcps::Scenario scenario = weylcps::load_scenario(opts.scenario_path);
  weylcps::RunOptions run_opts;
  run_opts.seed_override = opts.seed;
  run_opts.tol_scale = opts.tol_scale;
  run_opts.workers = opts.workers;
  run_opts.only = only;
  const weylcps::RunReport report = weylcps::run_scenario(scenario, run_opts);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish(report, opts, wall);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(weylcps::kToolName) + " " + weylcps::kVersion +
               " - numerical verification of Weyl connections and conformal product structures"};
  app.require_subcommand(1);

  CommonOptions run_opts, selfcheck_opts, transport_opts, geodesic_opts;

  CLI::App* run = app.add_subcommand("run", "Run every check in a scenario");
  add_common(run, run_opts);

  CLI::App* selfcheck =
      app.add_subcommand("selfcheck", "Autodiff vs finite-difference oracle battery");
  add_common(selfcheck, selfcheck_opts, false);

  CLI::App* transport =
      app.add_subcommand("transport", "Run only the holonomy checks of a scenario");
  add_common(transport, transport_opts);

  CLI::App* geodesic =
      app.add_subcommand("geodesic", "Run only the geodesic checks of a scenario");
  add_common(geodesic, geodesic_opts);

  CLI::App* list = app.add_subcommand("list-builtins", "List metric constructors and checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitValidation;
  }

  try {
    if (run->parsed()) return run_command(run_opts, {});
    if (transport->parsed()) return run_command(transport_opts, {"holonomy"});
    if (geodesic->parsed()) return run_command(geodesic_opts, {"geodesic"});
    if (selfcheck->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      const weylcps::RunReport report = weylcps::run_selfcheck(
          selfcheck_opts.seed.value_or(0), selfcheck_opts.tol_scale, selfcheck_opts.workers);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return finish(report, selfcheck_opts, wall);
    }
    if (list->parsed()) {
      std::printf("metric constructors:\n");
      for (const auto& c : weylcps::builtin_constructors()) std::printf("  %s\n", c.c_str());
      std::printf("checks:\n");
      for (const auto& c : weylcps::builtin_checks()) std::printf("  %s\n", c.c_str());
      return kExitPass;
    }
  } catch (const weylcps::ParseError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const weylcps::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const weylcps::SyntaxError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const weylcps::UnknownIdentifier& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const weylcps::ArityError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const weylcps::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitValidation;
}
