// Scenario ingestion, check orchestration, and report emission.
//
// Scenario files are JSON:
//   {
//     "name": "...", "seed": 7,
//     "metric": {"constructor": "kahler_warped_torus", "phi": "...", "k_dim": 2},
//     "lee_form": "auto" | "zero" | {"components": [...], "auto_plus": [...]},
//     "splitting": "auto" | {"t1": [["..."]], "t2": [["..."]]},
//     "samples": {"count": 200, "seed": 7} | {"grid": [8, 8]},
//     "quadrature_grid": [64, 64, 1, 1],
//     "loops": {"count": 20, "seed": 3, "harmonics": 3, "amplitude": 0.2},
//     "transport_tol": 1e-9,
//     "checks": ["derivS", {"name": "trace_chain", "tolerance": 1e-7}, ...]
//   }
// Validation is fail-fast: every expression is compiled and every reference
// resolved before any numeric work starts.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "weylcps/metric.hpp"
#include "weylcps/report.hpp"

namespace weylcps {

struct CheckSpec {
  std::string name;
  std::optional<double> tolerance;  // overrides the check's default tolerances

  // check-specific parameters (unused fields stay at their defaults)
  int random_thetas = 5;                                  // weyl_axioms
  std::string phi;                                        // exactness
  std::vector<std::string> eta;                           // construct_eta
  std::vector<std::vector<std::string>> parallel_frame;   // construct_eta ("auto" if empty)
  std::vector<std::string> xi;                            // construct_surface ("auto" if empty)
  std::vector<int> dims = {4, 6, 8};                      // ineq_la
  int trials = 10000;                                     // ineq_la
  bool expect_convention_gap = false;                     // parallel_splitting
  bool perturbed_control = false;                         // holonomy
  std::vector<double> start, velocity;                    // geodesic
  double length = 10.0;                                   // geodesic
  int drift_axis = 0;                                     // geodesic
};

struct LoopSpec {
  int count = 20;
  std::optional<std::uint64_t> seed;
  int harmonics = 3;
  double amplitude = 0.2;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;

  // metric constructor and its parameters
  std::string constructor;
  int dim = 2;                     // flat_torus
  std::string phi;                 // kahler_warped_torus
  int k_dim = 2;
  bool orientation_flip = false;
  std::string psi;                 // surface_conformal_torus
  FactorSpec factor1, factor2;     // conformal_product
  std::string f1, f2;
  ExprMetricSpec expr_metric;      // expr_metric

  enum class LeeMode { kAuto, kZero, kExplicit };
  LeeMode lee_mode = LeeMode::kAuto;
  std::vector<std::string> lee_components;
  std::vector<std::string> lee_perturbation;  // added on top of the mode's form

  bool splitting_auto = true;
  std::vector<std::vector<std::string>> t1, t2;

  int sample_count = 200;
  std::optional<std::uint64_t> sample_seed;
  std::vector<int> sample_grid;    // alternative to count: lattice sampling

  std::vector<int> quad_grid;
  LoopSpec loops;
  double transport_tol = 1e-9;

  std::vector<CheckSpec> checks;

  std::string canonical_json;  // canonical serialization, hashed into reports
};

// Throws ParseError (malformed JSON, with position), ValidationError (naming
// the offending key), SyntaxError/UnknownIdentifier (bad expressions).
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text, const std::string& name_hint);

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  double tol_scale = 1.0;
  int workers = 1;
  // restrict execution to checks with these names (empty = all)
  std::vector<std::string> only;
};

// Executes the checks in declaration order; check errors are recorded in the
// report without aborting siblings.
RunReport run_scenario(const Scenario& s, const RunOptions& opts = {});

// Builds the scenario's metric bundle (also used to validate eagerly).
CpsMetric build_bundle(const Scenario& s);

std::vector<std::string> builtin_constructors();
std::vector<std::string> builtin_checks();

// Autodiff-vs-finite-difference battery over every builtin metric family.
RunReport run_selfcheck(std::uint64_t seed, double tol_scale, int workers);

}  // namespace weylcps
