#include "weylcps/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "weylcps/holonomy.hpp"
#include "weylcps/structure.hpp"
#include "weylcps/version.hpp"

namespace weylcps {

namespace {

using nlohmann::json;

[[noreturn]] void fail_validation(const std::string& key, const std::string& message) {
  throw ValidationError(key + ": " + message);
}

double require_positive(const json& j, const std::string& key) {
  if (!j.is_number()) fail_validation(key, "expected a number");
  const double v = j.get<double>();
  if (v <= 0.0) fail_validation(key, "must be positive");
  return v;
}

std::vector<std::string> string_list(const json& j, const std::string& key) {
  if (!j.is_array()) fail_validation(key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) fail_validation(key, "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<std::vector<std::string>> string_matrix(const json& j, const std::string& key) {
  if (!j.is_array()) fail_validation(key, "expected an array of string arrays");
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(string_list(j[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<Axis> parse_axes(const json& j, const std::string& key) {
  if (!j.contains("coords")) fail_validation(key, "missing 'coords'");
  const auto names = string_list(j.at("coords"), key + ".coords");
  std::vector<Axis> axes(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) axes[i].name = names[i];
  if (j.contains("periods")) {
    const auto& periods = j.at("periods");
    if (!periods.is_array() || periods.size() != names.size())
      fail_validation(key + ".periods", "must match 'coords' in length");
    for (std::size_t i = 0; i < names.size(); ++i)
      if (!periods[i].is_null())
        axes[i].period = require_positive(periods[i], key + ".periods");
  }
  if (j.contains("bounds")) {
    const auto& bounds = j.at("bounds");
    if (!bounds.is_array() || bounds.size() != names.size())
      fail_validation(key + ".bounds", "must match 'coords' in length");
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (bounds[i].is_null()) continue;
      if (!bounds[i].is_array() || bounds[i].size() != 2)
        fail_validation(key + ".bounds", "each entry must be null or [lo, hi]");
      axes[i].bounds = std::make_pair(bounds[i][0].get<double>(), bounds[i][1].get<double>());
    }
  }
  return axes;
}

FactorSpec parse_factor(const json& j, const std::string& key) {
  FactorSpec spec;
  spec.axes = parse_axes(j, key);
  if (!j.contains("metric")) fail_validation(key, "missing 'metric'");
  spec.metric_entries = string_matrix(j.at("metric"), key + ".metric");
  return spec;
}

const std::set<std::string>& known_check_names() {
  static const std::set<std::string> kNames = {
      "weyl_axioms",    "exactness",   "kahler_parallel", "derivS",
      "parallel_splitting", "curvS",   "trace_lemma",     "trace_chain",
      "ineq_la",        "rank1_suite", "construct_eta",   "construct_surface",
      "holonomy",       "geodesic",    "selfcheck_oracle"};
  return kNames;
}

CheckSpec parse_check(const json& j, const std::string& key) {
  CheckSpec spec;
  if (j.is_string()) {
    spec.name = j.get<std::string>();
  } else if (j.is_object()) {
    if (!j.contains("name")) fail_validation(key, "check object needs a 'name'");
    spec.name = j.at("name").get<std::string>();
    if (j.contains("tolerance")) spec.tolerance = require_positive(j.at("tolerance"), key + ".tolerance");
    if (j.contains("random_thetas")) spec.random_thetas = j.at("random_thetas").get<int>();
    if (j.contains("phi")) spec.phi = j.at("phi").get<std::string>();
    if (j.contains("eta")) spec.eta = string_list(j.at("eta"), key + ".eta");
    if (j.contains("frame") && !j.at("frame").is_string())
      spec.parallel_frame = string_matrix(j.at("frame"), key + ".frame");
    if (j.contains("xi") && !j.at("xi").is_string())
      spec.xi = string_list(j.at("xi"), key + ".xi");
    if (j.contains("dims")) {
      spec.dims.clear();
      for (const auto& d : j.at("dims")) spec.dims.push_back(d.get<int>());
    }
    if (j.contains("trials")) spec.trials = j.at("trials").get<int>();
    if (j.contains("expect_convention_gap"))
      spec.expect_convention_gap = j.at("expect_convention_gap").get<bool>();
    if (j.contains("perturbed_control"))
      spec.perturbed_control = j.at("perturbed_control").get<bool>();
    if (j.contains("start")) spec.start = j.at("start").get<std::vector<double>>();
    if (j.contains("velocity")) spec.velocity = j.at("velocity").get<std::vector<double>>();
    if (j.contains("length")) spec.length = require_positive(j.at("length"), key + ".length");
    if (j.contains("drift_axis")) spec.drift_axis = j.at("drift_axis").get<int>();
  } else {
    fail_validation(key, "expected a check name or a check object");
  }
  if (!known_check_names().count(spec.name))
    fail_validation(key, "unknown check '" + spec.name + "'");
  return spec;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, const std::string& name_hint) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // byte offset -> line/column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < json_text.size(); ++i) {
      if (json_text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("JSON parse error at line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("scenario root must be a JSON object");

  Scenario s;
  s.name = j.value("name", name_hint);
  s.seed = j.value("seed", 0ULL);

  if (!j.contains("metric")) fail_validation("metric", "missing");
  const json& m = j.at("metric");
  if (!m.contains("constructor")) fail_validation("metric.constructor", "missing");
  s.constructor = m.at("constructor").get<std::string>();

  if (s.constructor == "flat_torus") {
    s.dim = m.value("dim", 2);
  } else if (s.constructor == "sphere_chart") {
    // no parameters
  } else if (s.constructor == "conformal_product") {
    if (!m.contains("factor1") || !m.contains("factor2"))
      fail_validation("metric", "conformal_product needs 'factor1' and 'factor2'");
    s.factor1 = parse_factor(m.at("factor1"), "metric.factor1");
    s.factor2 = parse_factor(m.at("factor2"), "metric.factor2");
    s.f1 = m.value("f1", "0");
    s.f2 = m.value("f2", "0");
  } else if (s.constructor == "kahler_warped_torus") {
    if (!m.contains("phi")) fail_validation("metric.phi", "missing");
    s.phi = m.at("phi").get<std::string>();
    s.k_dim = m.value("k_dim", 2);
    s.orientation_flip = m.value("orientation_flip", false);
  } else if (s.constructor == "surface_conformal_torus") {
    if (!m.contains("psi")) fail_validation("metric.psi", "missing");
    s.psi = m.at("psi").get<std::string>();
  } else if (s.constructor == "expr_metric") {
    if (!m.contains("chart") || !m.contains("entries"))
      fail_validation("metric", "expr_metric needs 'chart' and 'entries'");
    s.expr_metric.axes = parse_axes(m.at("chart"), "metric.chart");
    s.expr_metric.entries = string_matrix(m.at("entries"), "metric.entries");
    if (m.contains("J")) s.expr_metric.complex_structure = string_matrix(m.at("J"), "metric.J");
    if (m.contains("lee")) s.expr_metric.lee = string_list(m.at("lee"), "metric.lee");
    if (m.contains("t1")) s.expr_metric.t1_frame = string_matrix(m.at("t1"), "metric.t1");
    if (m.contains("t2")) s.expr_metric.t2_frame = string_matrix(m.at("t2"), "metric.t2");
  } else {
    fail_validation("metric.constructor", "unknown constructor '" + s.constructor + "'");
  }

  if (j.contains("lee_form")) {
    const json& lf = j.at("lee_form");
    if (lf.is_string()) {
      const std::string mode = lf.get<std::string>();
      if (mode == "auto")
        s.lee_mode = Scenario::LeeMode::kAuto;
      else if (mode == "zero")
        s.lee_mode = Scenario::LeeMode::kZero;
      else
        fail_validation("lee_form", "expected 'auto', 'zero', or an object");
    } else if (lf.is_object()) {
      if (lf.contains("components")) {
        s.lee_mode = Scenario::LeeMode::kExplicit;
        s.lee_components = string_list(lf.at("components"), "lee_form.components");
      } else {
        s.lee_mode = Scenario::LeeMode::kAuto;
      }
      if (lf.contains("auto_plus"))
        s.lee_perturbation = string_list(lf.at("auto_plus"), "lee_form.auto_plus");
    } else {
      fail_validation("lee_form", "expected 'auto', 'zero', or an object");
    }
  }

  if (j.contains("splitting")) {
    const json& sp = j.at("splitting");
    if (sp.is_string()) {
      if (sp.get<std::string>() != "auto")
        fail_validation("splitting", "expected 'auto' or {t1, t2}");
      s.splitting_auto = true;
    } else if (sp.is_object()) {
      if (!sp.contains("t1") || !sp.contains("t2"))
        fail_validation("splitting", "needs 't1' and 't2' frames");
      s.splitting_auto = false;
      s.t1 = string_matrix(sp.at("t1"), "splitting.t1");
      s.t2 = string_matrix(sp.at("t2"), "splitting.t2");
    } else {
      fail_validation("splitting", "expected 'auto' or {t1, t2}");
    }
  }

  if (j.contains("samples")) {
    const json& sm = j.at("samples");
    if (sm.contains("grid")) {
      for (const auto& r : sm.at("grid")) s.sample_grid.push_back(r.get<int>());
    } else {
      s.sample_count = sm.value("count", 200);
      if (s.sample_count < 1) fail_validation("samples.count", "must be >= 1");
      if (sm.contains("seed")) s.sample_seed = sm.at("seed").get<std::uint64_t>();
    }
  }

  if (j.contains("quadrature_grid"))
    for (const auto& r : j.at("quadrature_grid")) s.quad_grid.push_back(r.get<int>());

  if (j.contains("loops")) {
    const json& lp = j.at("loops");
    s.loops.count = lp.value("count", 20);
    if (lp.contains("seed")) s.loops.seed = lp.at("seed").get<std::uint64_t>();
    s.loops.harmonics = lp.value("harmonics", 3);
    s.loops.amplitude = lp.value("amplitude", 0.2);
    if (s.loops.count < 1 || s.loops.harmonics < 1 || s.loops.amplitude <= 0.0)
      fail_validation("loops", "count/harmonics must be >= 1 and amplitude > 0");
  }
  if (j.contains("transport_tol"))
    s.transport_tol = require_positive(j.at("transport_tol"), "transport_tol");

  if (j.contains("checks")) {
    const json& cs = j.at("checks");
    if (!cs.is_array()) fail_validation("checks", "expected an array");
    for (std::size_t i = 0; i < cs.size(); ++i)
      s.checks.push_back(parse_check(cs[i], "checks[" + std::to_string(i) + "]"));
  }

  s.canonical_json = j.dump();

  // Fail fast: construct the bundle now (compiles every expression) and make
  // sure every requested check can actually run against it.
  const CpsMetric bundle = build_bundle(s);
  const bool has_splitting =
      !s.splitting_auto || (!bundle.t1_frame.empty() && !bundle.t2_frame.empty());
  const bool has_J = bundle.complex_structure.has_value();
  for (std::size_t i = 0; i < s.checks.size(); ++i) {
    const CheckSpec& c = s.checks[i];
    const std::string key = "checks[" + std::to_string(i) + "]";
    const bool needs_split = c.name == "derivS" || c.name == "parallel_splitting" ||
                             c.name == "curvS" || c.name == "trace_lemma" ||
                             c.name == "trace_chain" || c.name == "rank1_suite" ||
                             c.name == "holonomy";
    const bool needs_J = c.name == "kahler_parallel" || c.name == "curvS" ||
                         c.name == "trace_lemma" || c.name == "trace_chain" ||
                         c.name == "rank1_suite" || c.name == "construct_eta" ||
                         c.name == "construct_surface";
    if (needs_split && !has_splitting)
      fail_validation(key, "check '" + c.name + "' needs splitting frames (none available)");
    if (needs_J && !has_J)
      fail_validation(key, "check '" + c.name + "' needs a complex structure");
    if (c.name == "construct_surface" && bundle.chart->dim() != 2)
      fail_validation(key, "construct_surface requires a 2-dimensional chart");
    if (c.name == "rank1_suite") {
      const int rank = s.splitting_auto ? bundle.rank : static_cast<int>(s.t2.size());
      if (rank != 1) fail_validation(key, "rank1_suite requires a rank-1 splitting");
    }
    if (c.name == "geodesic") {
      const int n = bundle.chart->dim();
      if (c.start.empty() || c.velocity.empty())
        fail_validation(key, "geodesic needs 'start' and 'velocity'");
      if (static_cast<int>(c.start.size()) != n || static_cast<int>(c.velocity.size()) != n)
        fail_validation(key, "geodesic start/velocity must match the chart dimension");
      if (c.drift_axis < 0 || c.drift_axis >= n)
        fail_validation(key, "geodesic drift_axis out of range");
    }
    if (c.name == "construct_eta") {
      if (c.eta.empty() && bundle.constructor_name != "kahler_warped_torus")
        fail_validation(key, "construct_eta needs 'eta' components on this metric");
      if (c.parallel_frame.empty() && bundle.constructor_name != "kahler_warped_torus")
        fail_validation(key, "construct_eta needs a 'frame' on this metric");
      for (const auto& comp : c.eta) (void)compile(comp, bundle.chart->coord_names());
      for (const auto& row : c.parallel_frame)
        for (const auto& comp : row) (void)compile(comp, bundle.chart->coord_names());
    }
    if (c.name == "exactness" && !c.phi.empty())
      (void)compile(c.phi, bundle.chart->coord_names());
    if (c.name == "construct_surface")
      for (const auto& comp : c.xi) (void)compile(comp, bundle.chart->coord_names());
  }
  if (!s.quad_grid.empty() && static_cast<int>(s.quad_grid.size()) != bundle.chart->dim())
    fail_validation("quadrature_grid", "must match the chart dimension");
  if (!s.sample_grid.empty() && static_cast<int>(s.sample_grid.size()) != bundle.chart->dim())
    fail_validation("samples.grid", "must match the chart dimension");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string name_hint = path;
  const auto slash = name_hint.find_last_of('/');
  if (slash != std::string::npos) name_hint = name_hint.substr(slash + 1);
  const auto dot = name_hint.find_last_of('.');
  if (dot != std::string::npos) name_hint = name_hint.substr(0, dot);
  return parse_scenario(buffer.str(), name_hint);
}

CpsMetric build_bundle(const Scenario& s) {
  if (s.constructor == "flat_torus") return make_flat_torus(s.dim);
  if (s.constructor == "sphere_chart") return make_sphere_chart();
  if (s.constructor == "conformal_product")
    return make_conformal_product(s.factor1, s.factor2, s.f1, s.f2);
  if (s.constructor == "kahler_warped_torus")
    return make_kahler_warped_torus(s.phi, s.k_dim, s.orientation_flip);
  if (s.constructor == "surface_conformal_torus") return make_surface_conformal_torus(s.psi);
  if (s.constructor == "expr_metric") return make_expr_metric(s.expr_metric);
  throw ValidationError("unknown constructor '" + s.constructor + "'");
}

namespace {

VectorField normalized_field(const MetricField& g, const VectorField& x) {
  const int n = g.chart()->dim();
  return VectorField(
      g.chart(),
      [g, x, n](const Point& p) {
        JetVec xj = x.eval(p);
        const JetMatrix gm = g.eval_jets(p);
        const Jet2 inv_norm = reciprocal(sqrt(jet_dot(xj, gm, xj)));
        for (int i = 0; i < n; ++i) xj[static_cast<std::size_t>(i)] = xj[static_cast<std::size_t>(i)] * inv_norm;
        return xj;
      },
      x.jet_order());
}

struct RunContext {
  CpsMetric bundle;
  WeylData weyl;
  std::optional<SplittingS> splitting;
  std::optional<VectorField> xi;
  std::vector<Point> points;
  std::uint64_t seed = 0;
  int workers = 1;
};

RunContext make_context(const Scenario& s, const RunOptions& opts) {
  RunContext ctx;
  ctx.bundle = build_bundle(s);
  ctx.seed = opts.seed_override.value_or(s.seed);
  ctx.workers = std::max(1, opts.workers);

  ChartPtr chart = ctx.bundle.chart;
  OneFormField theta = OneFormField::zero(chart);
  switch (s.lee_mode) {
    case Scenario::LeeMode::kAuto:
      if (ctx.bundle.canonical_lee) theta = *ctx.bundle.canonical_lee;
      break;
    case Scenario::LeeMode::kZero:
      break;
    case Scenario::LeeMode::kExplicit:
      theta = OneFormField::from_expressions(chart, s.lee_components);
      break;
  }
  if (!s.lee_perturbation.empty())
    theta = form_sum(theta, OneFormField::from_expressions(chart, s.lee_perturbation));
  ctx.weyl = WeylData{ctx.bundle.metric, theta};

  std::vector<VectorField> t1 = ctx.bundle.t1_frame, t2 = ctx.bundle.t2_frame;
  if (!s.splitting_auto) {
    t1.clear();
    t2.clear();
    for (const auto& comps : s.t1) t1.push_back(VectorField::from_expressions(chart, comps));
    for (const auto& comps : s.t2) t2.push_back(VectorField::from_expressions(chart, comps));
  }
  if (!t1.empty() && !t2.empty()) {
    ctx.splitting.emplace(ctx.bundle.metric, t1, t2);
    if (static_cast<int>(t2.size()) == 1) {
      if (s.splitting_auto && ctx.bundle.xi)
        ctx.xi = ctx.bundle.xi;
      else
        ctx.xi = normalized_field(ctx.bundle.metric, t2.front());
    }
  }

  if (!s.sample_grid.empty())
    ctx.points = lattice_points(*chart, s.sample_grid);
  else
    ctx.points = sample_points(*chart, s.sample_count, s.sample_seed.value_or(ctx.seed));
  return ctx;
}

std::vector<ResidualReport> run_holonomy(const RunContext& ctx, const Scenario& s,
                                         const CheckSpec& spec, const Tolerance& tol) {
  if (!ctx.splitting) throw ValidationError("holonomy needs splitting frames");
  const Chart& chart = *ctx.bundle.chart;
  const int n = chart.dim();
  const Point base = ctx.points.front();
  const MetricSample g0 = ctx.weyl.g.eval(base);

  // g-orthonormal frame adapted to the splitting at the base point.
  std::vector<VectorField> frames = ctx.bundle.t1_frame;
  int k1 = static_cast<int>(frames.size());
  std::vector<VectorField> t2 = ctx.bundle.t2_frame;
  frames.insert(frames.end(), t2.begin(), t2.end());
  Eigen::MatrixXd frame0(n, n);
  {
    if (static_cast<int>(frames.size()) != n)
      throw ValidationError("holonomy needs a full splitting frame");
    for (int c = 0; c < n; ++c) frame0.col(c) = frames[static_cast<std::size_t>(c)].eval_values(base);
    for (int c = 0; c < n; ++c) {
      Eigen::VectorXd u = frame0.col(c);
      for (int prev = 0; prev < c; ++prev)
        u -= u.dot(g0.val * frame0.col(prev)) * frame0.col(prev);
      const double norm2 = u.dot(g0.val * u);
      if (norm2 < 1e-20) throw FrameDegenerate("holonomy frame degenerate");
      frame0.col(c) = u / std::sqrt(norm2);
    }
  }
  const std::vector<int> split = {k1, n - k1};
  const double transport_tol = s.transport_tol;

  const std::uint64_t loop_seed = s.loops.seed.value_or(derive_seed(ctx.seed, "loops"));
  Rng rng(loop_seed);
  std::vector<LoopPath> loops;
  for (int i = 0; i < s.loops.count; ++i)
    loops.push_back(fourier_loop(chart, base, s.loops.harmonics, s.loops.amplitude, rng));

  // Per-loop results, reduced in loop order afterwards.
  struct LoopResult {
    double angle = 0.0;
    double scaling = 0.0;
    double conformal = 0.0;
    double lc_orthogonal = 0.0;
    double control_angle = 0.0;
    double est_error = 0.0;
  };
  std::vector<LoopResult> results(loops.size());

  OneFormField perturbed = ctx.weyl.lee;
  if (spec.perturbed_control) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
    delta[0] = 0.1;
    perturbed = form_sum(ctx.weyl.lee, OneFormField::constant(ctx.bundle.chart, delta));
  }
  const WeylData lc{ctx.weyl.g, OneFormField::zero(ctx.bundle.chart)};
  const WeylData perturbed_weyl{ctx.weyl.g, perturbed};

  parallel_for(static_cast<int>(loops.size()), ctx.workers, [&](int i) {
    const LoopPath& loop = loops[static_cast<std::size_t>(i)];
    LoopResult r;
    const TransportResult tr = parallel_transport(ctx.weyl, loop, frame0, transport_tol, split);
    r.est_error = tr.est_error;
    for (const auto& angles : tr.principal_angles)
      if (!angles.empty()) r.angle = std::max(r.angle, angles.front());
    // Per-column length scaling against exp(-loop integral of theta).
    const double expected = std::exp(-tr.lee_integral);
    Eigen::MatrixXd gram0 = frame0.transpose() * g0.val * frame0;
    Eigen::MatrixXd gram1 = tr.end_frame.transpose() * g0.val * tr.end_frame;
    for (int c = 0; c < n; ++c)
      r.scaling = std::max(r.scaling, std::abs(std::sqrt(gram1(c, c)) - expected));
    // Conformal: normalized Gram matrices agree.
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double c0 = gram0(a, b) / std::sqrt(gram0(a, a) * gram0(b, b));
        const double c1 = gram1(a, b) / std::sqrt(gram1(a, a) * gram1(b, b));
        r.conformal = std::max(r.conformal, std::abs(c1 - c0));
      }
    // Levi-Civita transport must stay g-orthogonal.
    const TransportResult lc_tr = parallel_transport(lc, loop, frame0, transport_tol, {});
    r.lc_orthogonal = (lc_tr.end_frame.transpose() * g0.val * lc_tr.end_frame -
                       Eigen::MatrixXd::Identity(n, n))
                          .cwiseAbs()
                          .maxCoeff();
    if (spec.perturbed_control) {
      const TransportResult ctr =
          parallel_transport(perturbed_weyl, loop, frame0, transport_tol, split);
      for (const auto& angles : ctr.principal_angles)
        if (!angles.empty()) r.control_angle = std::max(r.control_angle, angles.front());
    }
    results[static_cast<std::size_t>(i)] = r;
  });

  ResidualAccumulator angle_acc, scaling_acc, conformal_acc, lc_acc, control_acc, err_acc;
  for (std::size_t i = 0; i < results.size(); ++i) {
    Eigen::VectorXd where(1);
    where << static_cast<double>(i);
    angle_acc.add(results[i].angle, where);
    scaling_acc.add(results[i].scaling, where);
    conformal_acc.add(results[i].conformal, where);
    lc_acc.add(results[i].lc_orthogonal, where);
    err_acc.add(results[i].est_error, where);
    if (spec.perturbed_control) control_acc.add(results[i].control_angle, where);
  }
  std::vector<ResidualReport> reports;
  reports.push_back(angle_acc.finalize("holonomy.reducibility",
                                       "transported T1/T2 coincide with the originals",
                                       tol(1e-5)));
  reports.push_back(scaling_acc.finalize("holonomy.length_scaling",
                                         "loop length scaling = exp(-loop integral of theta)",
                                         2.0 * transport_tol * tol.scale));
  reports.push_back(conformal_acc.finalize("holonomy.conformal",
                                           "Weyl transport preserves g-angles",
                                           2.0 * transport_tol * tol.scale));
  reports.push_back(lc_acc.finalize("holonomy.lc_orthogonal",
                                    "Levi-Civita transport is g-orthogonal",
                                    2.0 * transport_tol * tol.scale));
  reports.push_back(err_acc.finalize("holonomy.integration",
                                     "Richardson estimate below the transport tolerance",
                                     transport_tol));
  if (spec.perturbed_control) {
    ResidualReport control = control_acc.finalize(
        "holonomy.control", "perturbed Lee form breaks reducibility", 0.0);
    control.expect_min_residual = tols::kControlFloor;
    control.pass = control.max_residual >= tols::kControlFloor;
    control.notes.push_back("negative control: angles must exceed 1e-3 under theta + 0.1 ds");
    reports.push_back(control);
  }
  return reports;
}

std::vector<ResidualReport> run_geodesic(const RunContext& ctx, const CheckSpec& spec,
                                         double tol_int, const Tolerance& tol) {
  const Chart& chart = *ctx.bundle.chart;
  const int n = chart.dim();
  Eigen::VectorXd v0(n), x0(n);
  for (int i = 0; i < n; ++i) {
    x0[i] = spec.start[static_cast<std::size_t>(i)];
    v0[i] = spec.velocity[static_cast<std::size_t>(i)];
  }
  const VectorField zeta = VectorField::constant(ctx.bundle.chart, v0);

  ResidualAccumulator field_acc;
  for (const Point& p : ctx.points) {
    const ConnectionSample cs = christoffels(ctx.weyl.g, p);
    field_acc.add(vector_norm(cs.metric, covariant_derivative_vector(cs, zeta, v0)), p);
  }
  std::vector<ResidualReport> reports;
  reports.push_back(field_acc.finalize("geodesic.field", "nabla_zeta zeta = 0", tol(1e-9)));

  const GeodesicResult gr = geodesic_integrate(ctx.weyl.g, x0, v0, spec.length, tol_int);
  ResidualReport drift;
  drift.check = "geodesic.drift";
  drift.anchor = "integral curve stays on its coordinate line";
  drift.samples = static_cast<int>(gr.path.size());
  drift.max_residual = std::abs(gr.end[spec.drift_axis] - x0[spec.drift_axis]);
  drift.mean_residual = drift.max_residual;
  drift.worst_point = gr.end;
  drift.tolerance = tol(1e-6);
  drift.pass = drift.max_residual <= drift.tolerance;
  drift.notes.push_back("drift measured on unreduced coordinate " +
                        chart.coord_name(spec.drift_axis) + " over length " +
                        std::to_string(spec.length));
  reports.push_back(drift);

  ResidualReport speed;
  speed.check = "geodesic.speed";
  speed.anchor = "geodesics have constant speed";
  speed.samples = static_cast<int>(gr.path.size());
  speed.max_residual = gr.speed_drift;
  speed.mean_residual = gr.speed_drift;
  speed.worst_point = gr.end;
  speed.tolerance = std::max(1e-9, 10.0 * tol_int) * tol.scale;
  speed.pass = speed.max_residual <= speed.tolerance;
  reports.push_back(speed);
  return reports;
}

std::vector<ResidualReport> dispatch_check(const RunContext& ctx, const Scenario& s,
                                           const CheckSpec& spec, const RunOptions& opts) {
  Tolerance tol{opts.tol_scale, spec.tolerance};
  const auto& pts = ctx.points;
  if (spec.name == "weyl_axioms") {
    std::optional<OneFormField> explicit_theta;
    if (s.lee_mode == Scenario::LeeMode::kExplicit || !s.lee_perturbation.empty() ||
        (s.lee_mode == Scenario::LeeMode::kAuto && ctx.bundle.canonical_lee))
      explicit_theta = ctx.weyl.lee;
    return check_weyl_axioms(ctx.weyl.g, explicit_theta, spec.random_thetas, pts, ctx.seed, tol,
                             ctx.workers);
  }
  if (spec.name == "exactness") {
    const std::string phi = spec.phi.empty() ? "0.1*sin(2*pi*s)" : spec.phi;
    return {check_exactness(ctx.weyl.g, phi, pts, tol, ctx.workers)};
  }
  if (spec.name == "kahler_parallel")
    return check_kahler_parallel(ctx.weyl.g, *ctx.bundle.complex_structure, pts, tol,
                                 ctx.workers);
  if (spec.name == "derivS") return check_derivS(ctx.weyl, *ctx.splitting, pts, tol, ctx.workers);
  if (spec.name == "parallel_splitting")
    return check_parallel_splitting(ctx.weyl, ctx.bundle, *ctx.splitting, pts, tol, ctx.workers,
                                    spec.expect_convention_gap);
  if (spec.name == "curvS")
    return check_curvS(ctx.weyl, *ctx.splitting, *ctx.bundle.complex_structure, pts, ctx.seed,
                       tol, ctx.workers);
  if (spec.name == "trace_lemma")
    return check_trace_lemma(ctx.weyl, *ctx.splitting, *ctx.bundle.complex_structure, pts, tol,
                             ctx.workers);
  if (spec.name == "trace_chain")
    return check_trace_chain(ctx.weyl, *ctx.splitting, *ctx.bundle.complex_structure, pts,
                             s.quad_grid, tol, ctx.workers);
  if (spec.name == "ineq_la")
    return check_ineq_linear_algebra(spec.dims, spec.trials, ctx.seed, tol);
  if (spec.name == "rank1_suite") {
    if (!ctx.xi) throw ValidationError("rank1_suite needs a unit T2 section");
    const Rank1Witness witness =
        make_rank1_witness(ctx.weyl.g, *ctx.bundle.complex_structure, ctx.weyl.lee, *ctx.xi);
    return check_rank1_suite(ctx.weyl, *ctx.splitting, *ctx.bundle.complex_structure, witness,
                             pts, tol, ctx.workers);
  }
  if (spec.name == "construct_eta") {
    const int n = ctx.bundle.chart->dim();
    OneFormField eta = OneFormField::zero(ctx.bundle.chart);
    if (!spec.eta.empty()) {
      eta = OneFormField::from_expressions(ctx.bundle.chart, spec.eta);
    } else {
      Eigen::VectorXd dt = Eigen::VectorXd::Zero(n);
      dt[1] = 1.0;  // dt on the warped chart
      eta = OneFormField::constant(ctx.bundle.chart, dt);
    }
    std::vector<VectorField> frame;
    if (!spec.parallel_frame.empty()) {
      for (const auto& comps : spec.parallel_frame)
        frame.push_back(VectorField::from_expressions(ctx.bundle.chart, comps));
    } else {
      for (int i = 2; i < n; ++i) frame.push_back(VectorField::coordinate(ctx.bundle.chart, i));
    }
    std::optional<OneFormField> reference = ctx.bundle.canonical_lee;
    auto result = construct_weyl_from_eta(ctx.weyl.g, *ctx.bundle.complex_structure, eta, frame,
                                          reference, pts, tol, ctx.workers);
    return result.reports;
  }
  if (spec.name == "construct_surface") {
    VectorField xi = spec.xi.empty()
                         ? (ctx.xi ? *ctx.xi
                                   : throw ValidationError("construct_surface needs 'xi'"))
                         : VectorField::from_expressions(ctx.bundle.chart, spec.xi);
    auto result = construct_surface_weyl(ctx.weyl.g, xi, *ctx.bundle.complex_structure, pts, tol,
                                         ctx.workers);
    return result.reports;
  }
  if (spec.name == "holonomy") return run_holonomy(ctx, s, spec, tol);
  if (spec.name == "geodesic") return run_geodesic(ctx, spec, s.transport_tol, tol);
  if (spec.name == "selfcheck_oracle")
    return {selfcheck_oracle(ctx.weyl.g, ctx.bundle.constructor_name, pts, tol, ctx.workers)};
  throw ValidationError("unknown check '" + spec.name + "'");
}

}  // namespace

RunReport run_scenario(const Scenario& s, const RunOptions& opts) {
  RunContext ctx = make_context(s, opts);
  RunReport report;
  report.tool = std::string(kToolName) + " " + kVersion;
  report.scenario_name = s.name;
  report.scenario_digest = content_digest(s.canonical_json);
  report.seed = ctx.seed;
  report.tol_scale = opts.tol_scale;
  report.overall_pass = true;

  for (const CheckSpec& spec : s.checks) {
    if (!opts.only.empty() &&
        std::find(opts.only.begin(), opts.only.end(), spec.name) == opts.only.end())
      continue;
    try {
      std::vector<ResidualReport> results = dispatch_check(ctx, s, spec, opts);
      for (auto& r : results) {
        if (!ctx.bundle.notes.empty() &&
            (spec.name == "parallel_splitting" || spec.name == "derivS"))
          for (const auto& note : ctx.bundle.notes) r.notes.push_back(note);
        report.overall_pass = report.overall_pass && r.pass;
        report.checks.push_back(std::move(r));
      }
    } catch (const Error& e) {
      ResidualReport r;
      r.check = spec.name;
      r.anchor = "check aborted";
      r.pass = false;
      r.worst_point = Eigen::VectorXd::Zero(0);
      r.notes.push_back(std::string("error: ") + e.what());
      report.overall_pass = false;
      report.checks.push_back(std::move(r));
    }
  }
  return report;
}

std::vector<std::string> builtin_constructors() {
  return {"flat_torus", "sphere_chart", "conformal_product", "kahler_warped_torus",
          "surface_conformal_torus", "expr_metric"};
}

std::vector<std::string> builtin_checks() {
  return {known_check_names().begin(), known_check_names().end()};
}

RunReport run_selfcheck(std::uint64_t seed, double tol_scale, int workers) {
  RunReport report;
  report.tool = std::string(kToolName) + " " + kVersion;
  report.scenario_name = "selfcheck";
  report.scenario_digest = content_digest("selfcheck");
  report.seed = seed;
  report.tol_scale = tol_scale;
  report.overall_pass = true;

  struct Item {
    std::string label;
    CpsMetric bundle;
  };
  std::vector<Item> items;
  items.push_back({"flat_torus_2", make_flat_torus(2)});
  items.push_back({"flat_torus_4", make_flat_torus(4)});
  items.push_back({"sphere_chart", make_sphere_chart()});
  {
    FactorSpec fa, fb;
    fa.axes = {Axis{"u", 1.0, std::nullopt}};
    fa.metric_entries = {{"1"}};
    fb.axes = {Axis{"t", 1.0, std::nullopt}};
    fb.metric_entries = {{"1"}};
    items.push_back({"conformal_product",
                     make_conformal_product(fa, fb, "0.2*sin(2*pi*t)", "0.1*sin(2*pi*u)")});
  }
  items.push_back(
      {"kahler_warped_torus", make_kahler_warped_torus("0.3*sin(2*pi*s)*cos(2*pi*t)", 2)});
  items.push_back({"surface_conformal_torus",
                   make_surface_conformal_torus("0.2*sin(2*pi*s)*sin(2*pi*t)")});

  Tolerance tol{tol_scale, std::nullopt};
  for (const auto& item : items) {
    const auto pts = sample_points(*item.bundle.chart, 50, derive_seed(seed, item.label));
    ResidualReport r = selfcheck_oracle(item.bundle.metric, item.label, pts, tol, workers);
    report.overall_pass = report.overall_pass && r.pass;
    report.checks.push_back(std::move(r));
  }
  return report;
}

}  // namespace weylcps
