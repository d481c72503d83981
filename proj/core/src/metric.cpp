#include "weylcps/metric.hpp"

#include <Eigen/Cholesky>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

namespace weylcps {

namespace {

constexpr double kInverseResidualTol = 1e-12;

void check_references(const Expr& e, const std::set<std::string>& allowed,
                      const std::string& what) {
  for (const auto& v : free_variables(e)) {
    if (!allowed.count(v))
      throw ValidationError(what + " references '" + v + "', which is not a coordinate of its chart");
  }
}

JetVec chart_inputs(const Point& p) {
  const int n = static_cast<int>(p.size());
  JetVec in;
  in.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) in.push_back(Jet2::variable(n, i, p[i]));
  return in;
}

// phi(s + 1, t) = phi(s, t + 1) = phi(s, t) probed on a 32x32 lattice.
void check_doubly_periodic(const Tape& tape, const std::string& what) {
  constexpr int kProbe = 32;
  constexpr double kTol = 1e-10;
  for (int i = 0; i < kProbe; ++i) {
    for (int j = 0; j < kProbe; ++j) {
      const double s = static_cast<double>(i) / kProbe;
      const double t = static_cast<double>(j) / kProbe;
      const double base = tape.eval_value(std::array{s, t});
      const double ds = tape.eval_value(std::array{s + 1.0, t});
      const double dt = tape.eval_value(std::array{s, t + 1.0});
      if (std::abs(ds - base) > kTol || std::abs(dt - base) > kTol)
        throw PeriodicityError(what + " is not doubly periodic (period 1) at (" +
                               std::to_string(s) + ", " + std::to_string(t) + ")");
    }
  }
}

}  // namespace

MetricField MetricField::from_entries(ChartPtr chart,
                                      const std::vector<std::vector<std::string>>& entries) {
  const int n = chart->dim();
  if (static_cast<int>(entries.size()) != n)
    throw DimensionError("metric entry matrix does not match chart dimension");
  for (const auto& row : entries)
    if (static_cast<int>(row.size()) != n)
      throw DimensionError("metric entry matrix must be square");
  // Compile the upper triangle; the matrix is mirrored so symmetry is exact.
  const auto names = chart->coord_names();
  auto tapes = std::make_shared<std::vector<std::vector<Tape>>>();
  tapes->resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      (*tapes)[static_cast<std::size_t>(i)].push_back(
          compile(entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], names));
  return MetricField(chart, [tapes, n](const Point& p) {
    const JetVec in = chart_inputs(p);
    JetMatrix g(n, n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const Jet2 e = (*tapes)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - i)]
                           .eval_jet(in);
        g.at(i, j) = e;
        g.at(j, i) = e;
      }
    return g;
  });
}

MetricField MetricField::flat(ChartPtr chart) {
  const int n = chart->dim();
  return MetricField(chart, [n](const Point&) { return JetMatrix::identity(n, n); });
}

MetricSample MetricField::eval(const Point& p) const {
  MetricSample s;
  s.g = eval_jets(p);
  s.val = s.g.values();
  Eigen::LLT<Eigen::MatrixXd> llt(s.val);
  if (llt.info() != Eigen::Success)
    throw DegenerateMetric("metric is not positive-definite at the sampled point");
  s.inv = llt.solve(Eigen::MatrixXd::Identity(s.val.rows(), s.val.cols()));
  const double residual = (s.val * s.inv - Eigen::MatrixXd::Identity(s.val.rows(), s.val.cols()))
                              .cwiseAbs()
                              .maxCoeff();
  if (residual > kInverseResidualTol)
    throw DegenerateMetric("metric inverse residual " + std::to_string(residual) +
                           " exceeds 1e-12 (ill-conditioned metric)");
  return s;
}

MetricField conformal_scale(const MetricField& g, const ScalarField& phi) {
  return MetricField(g.chart(), [g, phi](const Point& p) {
    JetMatrix m = g.eval_jets(p);
    const Jet2 scale = exp(2.0 * phi.eval(p));
    for (auto& e : m.m) e = e * scale;
    return m;
  });
}

Eigen::VectorXd sharp(const MetricSample& g, const Eigen::VectorXd& omega) {
  return g.inv * omega;
}

Eigen::VectorXd flat(const MetricSample& g, const Eigen::VectorXd& x) { return g.val * x; }

double vector_norm(const MetricSample& g, const Eigen::VectorXd& x) {
  return std::sqrt(std::max(0.0, x.dot(g.val * x)));
}

double oneform_norm(const MetricSample& g, const Eigen::VectorXd& omega) {
  return std::sqrt(std::max(0.0, omega.dot(g.inv * omega)));
}

double endo_norm(const MetricSample& g, const Eigen::MatrixXd& a) {
  // tr(A^t_g A) with the g-adjoint A^t_g = g^{-1} A^t g.
  return std::sqrt(std::max(0.0, (g.inv * a.transpose() * g.val * a).trace()));
}

CpsMetric make_flat_torus(int dim) {
  if (dim < 2) throw DimensionError("flat torus needs dimension >= 2");
  std::vector<std::string> names;
  if (dim == 2) {
    names = {"s", "t"};
  } else {
    for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
  }
  ChartPtr chart = Chart::torus(names);
  CpsMetric out;
  out.chart = chart;
  out.metric = MetricField::flat(chart);
  out.constructor_name = "flat_torus";
  out.canonical_lee = OneFormField::zero(chart);
  if (dim % 2 == 0) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dim, dim);
    for (int a = 0; a + 1 < dim; a += 2) {
      j(a + 1, a) = 1.0;
      j(a, a + 1) = -1.0;
    }
    out.complex_structure = EndoField::constant(chart, j);
  }
  return out;
}

CpsMetric make_sphere_chart() {
  const double pi = std::numbers::pi_v<double>;
  auto chart = std::make_shared<Chart>(std::vector<Axis>{
      Axis{"theta", std::nullopt, std::make_pair(0.0, pi)},
      Axis{"phi", 2.0 * pi, std::nullopt}});
  CpsMetric out;
  out.chart = chart;
  out.constructor_name = "sphere_chart";
  out.metric = MetricField(chart, [](const Point& p) {
    const int n = 2;
    JetMatrix g(n, n, n);
    const Jet2 theta = Jet2::variable(n, 0, p[0]);
    const Jet2 st = sin(theta);
    g.at(0, 0) = Jet2::constant(n, 1.0);
    g.at(1, 1) = st * st;
    return g;
  });
  out.canonical_lee = OneFormField::zero(chart);
  out.complex_structure = EndoField(chart, [](const Point& p) {
    const int n = 2;
    JetMatrix j(n, n, n);
    const Jet2 theta = Jet2::variable(n, 0, p[0]);
    const Jet2 st = sin(theta);
    j.at(1, 0) = reciprocal(st);  // J d/dtheta = (1/sin) d/dphi
    j.at(0, 1) = -st;             // J d/dphi = -sin d/dtheta
    return j;
  });
  return out;
}

CpsMetric make_conformal_product(const FactorSpec& factor1, const FactorSpec& factor2,
                                 const std::string& f1, const std::string& f2) {
  const int d1 = static_cast<int>(factor1.axes.size());
  const int d2 = static_cast<int>(factor2.axes.size());
  if (d1 < 1 || d2 < 1) throw DimensionError("conformal product factors must be non-empty");

  std::vector<Axis> axes = factor1.axes;
  axes.insert(axes.end(), factor2.axes.begin(), factor2.axes.end());
  auto chart = std::make_shared<Chart>(axes);
  const int n = chart->dim();
  const auto names = chart->coord_names();

  std::set<std::string> f1_names, f2_names;
  for (int i = 0; i < d1; ++i) f1_names.insert(factor1.axes[static_cast<std::size_t>(i)].name);
  for (int i = 0; i < d2; ++i) f2_names.insert(factor2.axes[static_cast<std::size_t>(i)].name);

  auto compile_factor = [&](const FactorSpec& spec, const std::set<std::string>& allowed,
                            int d, const char* label) {
    if (static_cast<int>(spec.metric_entries.size()) != d)
      throw DimensionError(std::string(label) + " metric entry matrix does not match its chart");
    auto tapes = std::make_shared<std::vector<std::vector<Tape>>>();
    tapes->resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      if (static_cast<int>(spec.metric_entries[static_cast<std::size_t>(i)].size()) != d)
        throw DimensionError(std::string(label) + " metric entry matrix must be square");
      for (int j = i; j < d; ++j) {
        const auto& src = spec.metric_entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        ExprPtr e = parse(src);
        check_references(*e, allowed, std::string(label) + " metric entry");
        (*tapes)[static_cast<std::size_t>(i)].push_back(compile(*e, names));
      }
    }
    return tapes;
  };

  auto g1 = compile_factor(factor1, f1_names, d1, "factor1");
  auto g2 = compile_factor(factor2, f2_names, d2, "factor2");
  auto f1_tape = std::make_shared<Tape>(compile(f1, names));
  auto f2_tape = std::make_shared<Tape>(compile(f2, names));

  MetricField metric(chart, [g1, g2, f1_tape, f2_tape, d1, d2, n](const Point& p) {
    const JetVec in = chart_inputs(p);
    JetMatrix g(n, n, n);
    const Jet2 w1 = exp(2.0 * f1_tape->eval_jet(in));
    const Jet2 w2 = exp(2.0 * f2_tape->eval_jet(in));
    for (int i = 0; i < d1; ++i)
      for (int j = i; j < d1; ++j) {
        const Jet2 e = (*g1)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - i)]
                           .eval_jet(in) * w1;
        g.at(i, j) = e;
        g.at(j, i) = e;
      }
    for (int i = 0; i < d2; ++i)
      for (int j = i; j < d2; ++j) {
        const Jet2 e = (*g2)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - i)]
                           .eval_jet(in) * w2;
        g.at(d1 + i, d1 + j) = e;
        g.at(d1 + j, d1 + i) = e;
      }
    return g;
  });

  // theta(Z2) = -Z2(f1), theta(Z1) = -Z1(f2): the condition that makes both
  // factor distributions D-parallel.
  OneFormField lee(chart,
                   [f1_tape, f2_tape, d1, n](const Point& p) {
                     const JetVec in = chart_inputs(p);
                     const Jet2 f1j = f1_tape->eval_jet(in);
                     const Jet2 f2j = f2_tape->eval_jet(in);
                     JetVec th(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
                     for (int i = 0; i < n; ++i)
                       th[static_cast<std::size_t>(i)] =
                           -derivative_jet(i < d1 ? f2j : f1j, i);
                     return th;
                   },
                   1);

  // The index-swapped variant; generally fails the D-parallel condition and
  // is carried only so reports can quantify the difference.
  OneFormField lee_swapped(chart,
                           [f1_tape, f2_tape, d1, n](const Point& p) {
                             const JetVec in = chart_inputs(p);
                             const Jet2 f1j = f1_tape->eval_jet(in);
                             const Jet2 f2j = f2_tape->eval_jet(in);
                             JetVec th(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
                             for (int i = 0; i < n; ++i)
                               th[static_cast<std::size_t>(i)] =
                                   -derivative_jet(i < d1 ? f1j : f2j, i);
                             return th;
                           },
                           1);

  CpsMetric out;
  out.chart = chart;
  out.metric = metric;
  out.constructor_name = "conformal_product";
  out.canonical_lee = lee;
  out.statement_convention_lee = lee_swapped;
  for (int i = 0; i < d1; ++i) {
    out.factor1_coords.push_back(i);
    out.t1_frame.push_back(VectorField::coordinate(chart, i));
  }
  for (int i = 0; i < d2; ++i) {
    out.factor2_coords.push_back(d1 + i);
    out.t2_frame.push_back(VectorField::coordinate(chart, d1 + i));
  }
  out.rank = d2;
  out.notes.push_back(
      "lee form uses the cross-factor convention theta(Z2) = -Z2(f1), theta(Z1) = -Z1(f2); "
      "the same-factor index convention is reported separately and differs whenever "
      "d(f1 - f2) is nonzero");
  return out;
}

CpsMetric make_kahler_warped_torus(const std::string& phi, int k_dim, bool orientation_flip) {
  if (k_dim < 2 || k_dim % 2 != 0)
    throw DimensionError("warped torus K-factor dimension must be even and >= 2");
  ExprPtr phi_expr = parse(phi);
  check_references(*phi_expr, {"s", "t"}, "phi");
  const std::vector<std::string> st = {"s", "t"};
  Tape phi_st = compile(*phi_expr, st);
  check_doubly_periodic(phi_st, "phi");

  std::vector<std::string> names = {"s", "t"};
  if (k_dim == 2) {
    names.push_back("x");
    names.push_back("y");
  } else {
    for (int i = 0; i < k_dim; ++i) names.push_back("x" + std::to_string(i + 1));
  }
  ChartPtr chart = Chart::torus(names);
  const int n = chart->dim();
  auto phi_tape = std::make_shared<Tape>(compile(*phi_expr, chart->coord_names()));

  MetricField metric(chart, [phi_tape, n](const Point& p) {
    const JetVec in = chart_inputs(p);
    JetMatrix g(n, n, n);
    g.at(0, 0) = exp(-2.0 * phi_tape->eval_jet(in));
    for (int i = 1; i < n; ++i) g.at(i, i) = Jet2::constant(n, 1.0);
    return g;
  });

  const double sign = orientation_flip ? -1.0 : 1.0;
  EndoField J(chart, [phi_tape, n, sign](const Point& p) {
    const JetVec in = chart_inputs(p);
    const Jet2 phij = phi_tape->eval_jet(in);
    JetMatrix j(n, n, n);
    j.at(1, 0) = sign * exp(-phij);  // J d/ds = sign e^{-phi} d/dt
    j.at(0, 1) = -sign * exp(phij);  // J d/dt = -sign e^{phi} d/ds
    for (int a = 2; a + 1 < n; a += 2) {
      j.at(a + 1, a) = Jet2::constant(n, 1.0);
      j.at(a, a + 1) = Jet2::constant(n, -1.0);
    }
    return j;
  });

  VectorField xi(chart, [phi_tape, n](const Point& p) {
    const JetVec in = chart_inputs(p);
    JetVec v(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
    v[0] = exp(phi_tape->eval_jet(in));
    return v;
  });

  OneFormField lee(chart,
                   [phi_tape, n](const Point& p) {
                     const JetVec in = chart_inputs(p);
                     const Jet2 phij = phi_tape->eval_jet(in);
                     JetVec th(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
                     th[1] = derivative_jet(phij, 1);  // (d phi / d t) dt
                     return th;
                   },
                   1);

  CpsMetric out;
  out.chart = chart;
  out.metric = metric;
  out.constructor_name = "kahler_warped_torus";
  out.complex_structure = J;
  out.canonical_lee = lee;
  out.xi = xi;
  out.t2_frame.push_back(xi);
  for (int i = 1; i < n; ++i) out.t1_frame.push_back(VectorField::coordinate(chart, i));
  out.rank = 1;
  out.factor2_coords = {0};
  for (int i = 1; i < n; ++i) out.factor1_coords.push_back(i);
  return out;
}

CpsMetric make_surface_conformal_torus(const std::string& psi) {
  ExprPtr psi_expr = parse(psi);
  check_references(*psi_expr, {"s", "t"}, "psi");
  ChartPtr chart = Chart::torus({"s", "t"});
  Tape psi_st = compile(*psi_expr, chart->coord_names());
  check_doubly_periodic(psi_st, "psi");
  auto psi_tape = std::make_shared<Tape>(std::move(psi_st));
  const int n = 2;

  MetricField metric(chart, [psi_tape](const Point& p) {
    const JetVec in = chart_inputs(p);
    const Jet2 w = exp(2.0 * psi_tape->eval_jet(in));
    JetMatrix g(n, n, n);
    g.at(0, 0) = w;
    g.at(1, 1) = w;
    return g;
  });

  Eigen::MatrixXd j0(2, 2);
  j0 << 0.0, -1.0, 1.0, 0.0;  // J d/ds = d/dt, J d/dt = -d/ds

  VectorField xi(chart, [psi_tape](const Point& p) {
    const JetVec in = chart_inputs(p);
    JetVec v(2, Jet2::constant(n, 0.0));
    v[0] = exp(-psi_tape->eval_jet(in));
    return v;
  });

  VectorField jxi(chart, [psi_tape](const Point& p) {
    const JetVec in = chart_inputs(p);
    JetVec v(2, Jet2::constant(n, 0.0));
    v[1] = exp(-psi_tape->eval_jet(in));
    return v;
  });

  CpsMetric out;
  out.chart = chart;
  out.metric = metric;
  out.constructor_name = "surface_conformal_torus";
  out.complex_structure = EndoField::constant(chart, j0);
  out.xi = xi;
  out.t1_frame.push_back(xi);
  out.t2_frame.push_back(jxi);
  out.rank = 1;
  return out;
}

CpsMetric make_expr_metric(const ExprMetricSpec& spec) {
  auto chart = std::make_shared<Chart>(spec.axes);
  const int n = chart->dim();
  CpsMetric out;
  out.chart = chart;
  out.constructor_name = "expr_metric";
  out.metric = MetricField::from_entries(chart, spec.entries);
  const auto names = chart->coord_names();
  if (!spec.complex_structure.empty()) {
    if (static_cast<int>(spec.complex_structure.size()) != n)
      throw DimensionError("complex structure entry matrix does not match chart dimension");
    auto tapes = std::make_shared<std::vector<Tape>>();
    for (const auto& row : spec.complex_structure) {
      if (static_cast<int>(row.size()) != n)
        throw DimensionError("complex structure entry matrix must be square");
      for (const auto& src : row) tapes->push_back(compile(src, names));
    }
    out.complex_structure = EndoField(chart, [tapes, n](const Point& p) {
      const JetVec in = chart_inputs(p);
      JetMatrix j(n, n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          j.at(a, b) = (*tapes)[static_cast<std::size_t>(a * n + b)].eval_jet(in);
      return j;
    });
  }
  if (!spec.lee.empty()) out.canonical_lee = OneFormField::from_expressions(chart, spec.lee);
  auto build_frame = [&](const std::vector<std::vector<std::string>>& rows) {
    std::vector<VectorField> frame;
    for (const auto& comps : rows) frame.push_back(VectorField::from_expressions(chart, comps));
    return frame;
  };
  out.t1_frame = build_frame(spec.t1_frame);
  out.t2_frame = build_frame(spec.t2_frame);
  out.rank = static_cast<int>(out.t2_frame.size());
  return out;
}

ComplexStructureResiduals validate_complex_structure(const MetricField& g, const EndoField& J,
                                                     std::span<const Point> points) {
  ComplexStructureResiduals r;
  for (const Point& p : points) {
    const MetricSample s = g.eval(p);
    const Eigen::MatrixXd j = J.eval_values(p);
    const int n = static_cast<int>(j.rows());
    r.involution = std::max(
        r.involution, endo_norm(s, (j * j + Eigen::MatrixXd::Identity(n, n)).eval()));
    r.compatibility =
        std::max(r.compatibility, (j.transpose() * s.val * j - s.val).cwiseAbs().maxCoeff());
  }
  return r;
}

VectorField sharp_field(const MetricField& g, const OneFormField& w) {
  return VectorField(
      g.chart(),
      [g, w](const Point& p) { return jet_mul(jet_inverse(g.eval_jets(p)), w.eval(p)); },
      w.jet_order());
}

OneFormField flat_field(const MetricField& g, const VectorField& x) {
  return OneFormField(
      g.chart(), [g, x](const Point& p) { return jet_mul(g.eval_jets(p), x.eval(p)); },
      x.jet_order());
}

OneFormField form_from_endo_sharp(const MetricField& g, const EndoField& A,
                                  const OneFormField& w) {
  const int order = std::min(A.jet_order(), w.jet_order());
  return OneFormField(
      g.chart(),
      [g, A, w](const Point& p) {
        const JetMatrix gm = g.eval_jets(p);
        const JetVec sharp_w = jet_mul(jet_inverse(gm), w.eval(p));
        return jet_mul(gm, jet_mul(A.eval(p), sharp_w));
      },
      order);
}

ScalarField oneform_norm_squared_field(const MetricField& g, const OneFormField& w) {
  return ScalarField(
      g.chart(),
      [g, w](const Point& p) {
        const JetVec wv = w.eval(p);
        return jet_dot(wv, jet_inverse(g.eval_jets(p)), wv);
      },
      w.jet_order());
}

double integrate_periodic(const MetricField& g, const std::function<double(const Point&)>& f,
                          std::span<const int> res, int workers) {
  const Chart& chart = *g.chart();
  const int n = chart.dim();
  if (static_cast<int>(res.size()) != n)
    throw DimensionError("quadrature grid does not match chart dimension");
  double weight = 1.0;
  for (int i = 0; i < n; ++i) {
    if (!chart.periodic(i))
      throw NonPeriodicAxis("integration axis '" + chart.coord_name(i) + "' is not periodic");
    if (res[static_cast<std::size_t>(i)] < 1)
      throw ValidationError("quadrature resolution must be >= 1");
    weight *= *chart.axis(i).period / res[static_cast<std::size_t>(i)];
  }
  const std::vector<Point> nodes = lattice_points(chart, res);
  std::vector<double> terms(nodes.size());
  parallel_for(static_cast<int>(nodes.size()), workers, [&](int i) {
    const Point& p = nodes[static_cast<std::size_t>(i)];
    const MetricSample s = g.eval(p);
    terms[static_cast<std::size_t>(i)] = f(p) * std::sqrt(s.val.determinant());
  });
  return weight * pairwise_sum(terms);
}

double integrate_periodic(const MetricField& g, const ScalarField& f, std::span<const int> res,
                          int workers) {
  return integrate_periodic(
      g, [&f](const Point& p) { return f.eval(p).value(); }, res, workers);
}

}  // namespace weylcps
