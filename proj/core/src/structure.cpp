#include "weylcps/structure.hpp"

#include <Eigen/QR>
#include <cmath>

namespace weylcps {

namespace {

// anchors carried by the reports, in formula form
constexpr const char* kAnchorWeylCompat = "D g = -2 theta (x) g";
constexpr const char* kAnchorTorsion = "D_X Y - D_Y X - [X, Y] = 0";
constexpr const char* kAnchorExactness =
    "Weyl coefficients of (g, d phi) = Christoffels of e^{2 phi} g";
constexpr const char* kAnchorNablaJ = "nabla J = 0";
constexpr const char* kAnchorJInvolution = "J^2 = -id";
constexpr const char* kAnchorJCompat = "g(J., J.) = g(., .)";
constexpr const char* kAnchorDerivS = "nabla_X S = SX (.) theta# - S theta# (.) X";
constexpr const char* kAnchorWeylParallelS = "D_X S = 0";
constexpr const char* kAnchorSplitting = "<D_X u, v> = 0 for u in T1, v in T2";
constexpr const char* kAnchorGd = "Z2(g(X1, Y1)) = -2 theta(Z2) g(X1, Y1)";
constexpr const char* kAnchorLeeSolve =
    "theta solved from <D_{X1}X1, Z2> = 0 matches the constructor";
constexpr const char* kAnchorLeeGap =
    "cross-factor vs same-factor Lee conventions differ when d(f1 - f2) != 0";
constexpr const char* kAnchorCurvS =
    "R_{X,Y}S = SY(.)TX - SX(.)TY + STY(.)X - STX(.)Y + theta-terms";
constexpr const char* kAnchorCurvJS = "the same identity evaluated at (JX, JY)";
constexpr const char* kAnchorKahlerSym = "R_{X,Y}S = R_{JX,JY}S";
constexpr const char* kAnchorTraceI = "tr(T) = -delta theta";
constexpr const char* kAnchorTraceII =
    "tr(ST) = -delta(S theta) - tr(S)|theta|^2 + n <theta, S theta>";
constexpr const char* kAnchorTraceIII =
    "tr(JSJST) = -delta(JSJS theta) + <theta, JSJS theta> + |theta|^2 "
    "- |theta|^2 tr(JSJS) - tr(S) <theta, S theta>";
constexpr const char* kAnchorCurvYS =
    "contracted curvature identity in T, S, J, theta (vector form)";
constexpr const char* kAnchorTraceEq =
    "0 = 2(n-1)tr(T) - 2tr(S)tr(ST) - 2tr(JSJST) + 2tr(S)<theta,S theta> "
    "+ 2<theta,JSJS theta> + |theta|^2 (n^2-3n+2-tr(S)^2-tr(JSJS))";
constexpr const char* kAnchorTrace2 =
    "0 = |theta|^2 (n^2-3n+tr(S)^2+tr(JSJS)) - 2(n-2)tr(S)<theta,S theta> "
    "- 2(n-1)delta(theta) + 2tr(S)delta(S theta) + 2delta(JSJS theta)";
constexpr const char* kAnchorTrace3 =
    "0 = 2(n-2)^2 (|theta|^2 - <theta,S theta>) - 2(n-1)delta(theta) "
    "+ 2(n-2)delta(S theta) + 2delta(JSJS theta)";
constexpr const char* kAnchorStokes = "integral of a codifferential over a closed manifold is 0";
constexpr const char* kAnchorRank1Integral =
    "integral of 2(n-2)^2 (|theta|^2 - <theta,S theta>) vanishes for rank-1 splittings";
constexpr const char* kAnchorIneq = "tr(JSJS) >= -n for symmetric involutions S";
constexpr const char* kAnchorIneqEq = "tr(JSJS) = -n exactly when SJ = JS";
constexpr const char* kAnchorRankIdentity =
    "n^2-3n+(n-2r)^2-n-2(n-2)(n-2r) = 4r(r-2) for integers 2 <= r <= n/2";

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

double two_form_norm(const MetricSample& g, const Eigen::MatrixXd& omega) {
  const Eigen::MatrixXd e = orthonormal_frame(g);
  const int n = static_cast<int>(e.cols());
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = e.col(i).dot(omega * e.col(j));
      s += v * v;
    }
  return std::sqrt(s);
}

// Per-point parallel residual collection with a fixed-order reduction.
class PointSuite {
 public:
  PointSuite(std::span<const Point> pts, int n_series, int workers)
      : pts_(pts), workers_(workers), values_(static_cast<std::size_t>(n_series)) {
    for (auto& v : values_) v.assign(pts.size(), 0.0);
  }

  // fn(point_index, out_span): writes one residual per series.
  template <class Fn>
  void run(Fn&& fn) {
    const int count = static_cast<int>(pts_.size());
    parallel_for(count, workers_, [&](int i) {
      std::vector<double> out(values_.size(), 0.0);
      fn(i, out);
      for (std::size_t s = 0; s < values_.size(); ++s)
        values_[s][static_cast<std::size_t>(i)] = out[s];
    });
  }

  ResidualReport report(int series, std::string check, std::string anchor, double tol) const {
    ResidualAccumulator acc;
    for (std::size_t i = 0; i < pts_.size(); ++i)
      acc.add(values_[static_cast<std::size_t>(series)][i], pts_[i]);
    return acc.finalize(std::move(check), std::move(anchor), tol);
  }

 private:
  std::span<const Point> pts_;
  int workers_;
  std::vector<std::vector<double>> values_;
};

}  // namespace

SplittingS::SplittingS(MetricField g, std::vector<VectorField> t1, std::vector<VectorField> t2)
    : g_(std::move(g)), t1_(std::move(t1)), t2_(std::move(t2)) {
  dim_ = g_.chart()->dim();
  rank_ = static_cast<int>(t2_.size());
  const int k1 = static_cast<int>(t1_.size());
  if (k1 + rank_ != dim_)
    throw DimensionError("splitting frames must span the tangent space (got " +
                         std::to_string(k1) + "+" + std::to_string(rank_) + " of " +
                         std::to_string(dim_) + ")");
  if (rank_ < 1 || k1 < 1) throw DimensionError("both splitting factors must be non-trivial");
  if (rank_ > k1)
    throw DimensionError("rank convention requires dim(T1) >= dim(T2)");

  const MetricField gf = g_;
  const auto t1f = t1_;
  const auto t2f = t2_;
  const int n = dim_;
  const int r = rank_;
  s_ = EndoField(g_.chart(), [gf, t1f, t2f, n, r](const Point& p) {
    const JetMatrix gm = gf.eval_jets(p);
    JetMatrix frame(n, n, n);
    int col = 0;
    for (const auto& u : t1f) {
      const JetVec uj = u.eval(p);
      for (int i = 0; i < n; ++i) frame.at(i, col) = uj[static_cast<std::size_t>(i)];
      ++col;
    }
    for (const auto& u : t2f) {
      const JetVec uj = u.eval(p);
      for (int i = 0; i < n; ++i) frame.at(i, col) = uj[static_cast<std::size_t>(i)];
      ++col;
    }
    const JetMatrix e = jet_gram_schmidt(frame, gm);
    // S = sum_{T1} e e^flat - sum_{T2} e e^flat
    JetMatrix s(n, n, n);
    for (int c = 0; c < n; ++c) {
      const double sign = (c < n - r) ? 1.0 : -1.0;
      JetVec ec(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) ec[static_cast<std::size_t>(i)] = e.at(i, c);
      const JetVec ec_flat = jet_mul(gm, ec);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          s.at(i, j) += sign * ec[static_cast<std::size_t>(i)] * ec_flat[static_cast<std::size_t>(j)];
    }
    return s;
  });
}

SplittingS::Invariants SplittingS::validate(std::span<const Point> pts) const {
  Invariants inv;
  const int n = dim_;
  for (const Point& p : pts) {
    const MetricSample g = g_.eval(p);
    const Eigen::MatrixXd s = s_.eval_values(p);
    inv.involution = std::max(
        inv.involution, max_abs(s * s - Eigen::MatrixXd::Identity(n, n)));
    inv.symmetry = std::max(inv.symmetry, max_abs(g.val * s - s.transpose() * g.val));
    inv.trace = std::max(inv.trace, std::abs(s.trace() - expected_trace()));
    for (const auto& u : t1_)
      for (const auto& v : t2_) {
        const Eigen::VectorXd uv = u.eval_values(p);
        const Eigen::VectorXd vv = v.eval_values(p);
        inv.factor_angle =
            std::max(inv.factor_angle, std::abs(uv.dot(g.val * vv)) /
                                           (vector_norm(g, uv) * vector_norm(g, vv)));
      }
  }
  return inv;
}

Rank1Witness make_rank1_witness(const MetricField& g, const EndoField& J,
                                const OneFormField& theta, const VectorField& xi) {
  Rank1Witness w;
  w.xi = xi;
  w.jxi = endo_applied(J, xi);
  w.b = form_on_vector(theta, w.jxi);
  w.theta0 = form_minus_scaled(theta, w.b, flat_field(g, w.jxi));
  return w;
}

Eigen::MatrixXd symmetric_product(const MetricSample& g, const Eigen::VectorXd& X,
                                  const Eigen::VectorXd& Y) {
  const Eigen::VectorXd xf = g.val * X;
  const Eigen::VectorXd yf = g.val * Y;
  return Y * xf.transpose() + X * yf.transpose();
}

std::vector<ResidualReport> check_weyl_axioms(const MetricField& g,
                                              const std::optional<OneFormField>& theta,
                                              int random_thetas, std::span<const Point> pts,
                                              std::uint64_t seed, const Tolerance& tol,
                                              int workers) {
  ChartPtr chart = g.chart();
  const int n = chart->dim();
  std::vector<OneFormField> thetas;
  if (theta && !theta->is_zero_form()) thetas.push_back(*theta);
  for (int r = 0; r < random_thetas; ++r)
    thetas.push_back(random_lee_form(chart, derive_seed(seed, "weyl_axioms.theta." + std::to_string(r))));
  if (thetas.empty()) thetas.push_back(OneFormField::zero(chart));
  const VectorField X = random_polynomial_vector_field(chart, derive_seed(seed, "weyl_axioms.X"));
  const VectorField Y = random_polynomial_vector_field(chart, derive_seed(seed, "weyl_axioms.Y"));

  PointSuite suite(pts, 2, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    double compat = 0.0, torsion = 0.0;
    for (const auto& th : thetas) {
      const WeylSample ws = weyl_coeffs(WeylData{g, th}, p);
      const auto& gval = ws.lc.metric.val;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double v = ws.lc.dg[static_cast<std::size_t>(i)](j, k) + 2.0 * ws.theta[i] * gval(j, k);
            for (int m = 0; m < n; ++m)
              v -= ws.gamma[static_cast<std::size_t>(m)](i, j) * gval(m, k) +
                   ws.gamma[static_cast<std::size_t>(m)](i, k) * gval(j, m);
            compat = std::max(compat, std::abs(v));
          }
      const Eigen::VectorXd xv = X.eval_values(p);
      const Eigen::VectorXd yv = Y.eval_values(p);
      const Eigen::VectorXd dxy = weyl_derivative(ws, Y, xv);
      const Eigen::VectorXd dyx = weyl_derivative(ws, X, yv);
      const Eigen::VectorXd br = lie_bracket(X, Y, p);
      torsion = std::max(torsion, vector_norm(ws.lc.metric, dxy - dyx - br));
    }
    out[0] = compat;
    out[1] = torsion;
  });
  std::vector<ResidualReport> reports;
  reports.push_back(suite.report(0, "weyl_axioms.compatibility", kAnchorWeylCompat, tol(1e-9)));
  reports.push_back(suite.report(1, "weyl_axioms.torsion", kAnchorTorsion, tol(1e-9)));
  reports[0].notes.push_back(std::to_string(thetas.size()) + " Lee forms tested");
  return reports;
}

ResidualReport check_exactness(const MetricField& g, const std::string& phi_expr,
                               std::span<const Point> pts, const Tolerance& tol, int workers) {
  ChartPtr chart = g.chart();
  const int n = chart->dim();
  const ScalarField phi = ScalarField::from_expression(chart, phi_expr);
  const OneFormField dphi(
      chart,
      [phi, n](const Point& p) {
        const Jet2 pj = phi.eval(p);
        JetVec out(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = derivative_jet(pj, i);
        return out;
      },
      1);
  const MetricField scaled = conformal_scale(g, phi);
  const WeylData w{g, dphi};

  PointSuite suite(pts, 1, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const WeylSample ws = weyl_coeffs(w, p);
    const ConnectionSample cs = christoffels(scaled, p);
    double r = 0.0;
    for (int k = 0; k < n; ++k)
      r = std::max(r, max_abs(ws.gamma[static_cast<std::size_t>(k)] -
                              cs.gamma[static_cast<std::size_t>(k)]));
    out[0] = r;
  });
  return suite.report(0, "exactness", kAnchorExactness, tol(1e-8));
}

std::vector<ResidualReport> check_kahler_parallel(const MetricField& g, const EndoField& J,
                                                  std::span<const Point> pts, const Tolerance& tol,
                                                  int workers) {
  const int n = g.chart()->dim();
  PointSuite suite(pts, 3, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample cs = christoffels(g, p);
    const Eigen::MatrixXd e = orthonormal_frame(cs.metric);
    const Eigen::MatrixXd jv = J.eval_values(p);
    double nabla_j = 0.0;
    for (int i = 0; i < n; ++i)
      nabla_j = std::max(nabla_j,
                         endo_norm(cs.metric, covariant_derivative_endo(cs, J, e.col(i))));
    out[0] = nabla_j;
    out[1] = endo_norm(cs.metric, jv * jv + Eigen::MatrixXd::Identity(n, n));
    out[2] = max_abs(jv.transpose() * cs.metric.val * jv - cs.metric.val);
  });
  std::vector<ResidualReport> reports;
  reports.push_back(suite.report(0, "kahler.nabla_J", kAnchorNablaJ, tol(1e-8)));
  reports.push_back(suite.report(1, "kahler.involution", kAnchorJInvolution, tol(tols::kAlgebraic)));
  reports.push_back(suite.report(2, "kahler.compatibility", kAnchorJCompat, tol(tols::kAlgebraic)));
  return reports;
}

std::vector<ResidualReport> check_derivS(const WeylData& w, const SplittingS& S,
                                         std::span<const Point> pts, const Tolerance& tol,
                                         int workers) {
  const int n = S.dim();
  const EndoField& sf = S.field();
  PointSuite suite(pts, 2, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const WeylSample ws = weyl_coeffs(w, p);
    const ConnectionSample& cs = ws.lc;
    const Eigen::MatrixXd e = orthonormal_frame(cs.metric);
    const Eigen::MatrixXd sv = sf.eval_values(p);
    const Eigen::VectorXd theta_sharp = ws.theta_sharp;
    double r_nabla = 0.0, r_weyl = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = e.col(i);
      const Eigen::MatrixXd lhs = covariant_derivative_endo(cs, sf, x);
      const Eigen::MatrixXd rhs = symmetric_product(cs.metric, sv * x, theta_sharp) -
                                  symmetric_product(cs.metric, sv * theta_sharp, x);
      r_nabla = std::max(r_nabla, endo_norm(cs.metric, lhs - rhs));
      r_weyl = std::max(r_weyl, endo_norm(cs.metric, weyl_derivative_endo(ws, sf, x)));
    }
    out[0] = r_nabla;
    out[1] = r_weyl;
  });
  std::vector<ResidualReport> reports;
  reports.push_back(suite.report(0, "derivS.nabla_formula", kAnchorDerivS, tol(1e-8)));
  reports.push_back(suite.report(1, "derivS.weyl_parallel", kAnchorWeylParallelS, tol(1e-8)));
  return reports;
}

std::vector<ResidualReport> check_parallel_splitting(const WeylData& w, const CpsMetric& bundle,
                                                     const SplittingS& S,
                                                     std::span<const Point> pts,
                                                     const Tolerance& tol, int workers,
                                                     bool expect_convention_gap) {
  const int n = S.dim();
  const bool has_factors = !bundle.factor1_coords.empty() && !bundle.factor2_coords.empty();
  const bool has_stmt = bundle.statement_convention_lee.has_value();
  (void)S;
  PointSuite suite(pts, 4, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const WeylSample ws = weyl_coeffs(w, p);
    const ConnectionSample& cs = ws.lc;
    const Eigen::MatrixXd e = orthonormal_frame(cs.metric);

    double split = 0.0;
    auto cross_terms = [&](const std::vector<VectorField>& us, const std::vector<VectorField>& vs) {
      for (const auto& u : us) {
        const Eigen::VectorXd uv = u.eval_values(p);
        const double un = vector_norm(cs.metric, uv);
        for (const auto& v : vs) {
          const Eigen::VectorXd vv = v.eval_values(p);
          const double vn = vector_norm(cs.metric, vv);
          for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd du = weyl_derivative(ws, u, e.col(i));
            split = std::max(split, std::abs(du.dot(cs.metric.val * vv)) / (un * vn));
          }
        }
      }
    };
    cross_terms(bundle.t1_frame, bundle.t2_frame);
    cross_terms(bundle.t2_frame, bundle.t1_frame);
    out[0] = split;

    double gd = 0.0, lee_solve = 0.0, gap = 0.0;
    if (has_factors) {
      for (int z2 : bundle.factor2_coords)
        for (int x1 : bundle.factor1_coords)
          for (int y1 : bundle.factor1_coords)
            gd = std::max(gd, std::abs(cs.dg[static_cast<std::size_t>(z2)](x1, y1) +
                                       2.0 * ws.theta[z2] * cs.metric.val(x1, y1)));
      // theta(Z2) = <nabla_{X1} X1, Z2> / g(X1, X1) and symmetrically.
      auto solve_against = [&](const std::vector<int>& from, const std::vector<int>& to) {
        for (int z : to)
          for (int x : from) {
            double num = 0.0;
            for (int k = 0; k < n; ++k)
              num += cs.gamma[static_cast<std::size_t>(k)](x, x) * cs.metric.val(k, z);
            const double solved = num / cs.metric.val(x, x);
            lee_solve = std::max(lee_solve, std::abs(solved - ws.theta[z]));
          }
      };
      solve_against(bundle.factor1_coords, bundle.factor2_coords);
      solve_against(bundle.factor2_coords, bundle.factor1_coords);
    }
    out[1] = gd;
    out[2] = lee_solve;
    if (has_stmt) {
      const Eigen::VectorXd canonical = bundle.canonical_lee->eval_values(p);
      const Eigen::VectorXd swapped = bundle.statement_convention_lee->eval_values(p);
      gap = (canonical - swapped).cwiseAbs().maxCoeff();
    }
    out[3] = gap;
  });

  std::vector<ResidualReport> reports;
  reports.push_back(suite.report(0, "parallel_splitting.weyl", kAnchorSplitting, tol(1e-9)));
  if (has_factors) {
    reports.push_back(suite.report(1, "parallel_splitting.cross_derivative", kAnchorGd, tol(1e-9)));
    reports.push_back(suite.report(2, "parallel_splitting.lee_solve", kAnchorLeeSolve, tol(1e-8)));
  }
  if (has_stmt) {
    ResidualReport gap = suite.report(3, "parallel_splitting.lee_convention_gap", kAnchorLeeGap,
                                      tol(1e-8));
    if (expect_convention_gap) {
      gap.expect_min_residual = tols::kControlFloor;
      gap.pass = gap.max_residual >= tols::kControlFloor;
      gap.notes.push_back("negative control: conventions must visibly disagree here");
    } else {
      gap.pass = true;
      gap.notes.push_back("informational: gap between the two index conventions");
    }
    gap.tolerance = 0.0;
    reports.push_back(gap);
  }
  return reports;
}

namespace {

Eigen::MatrixXd curvS_rhs(const MetricSample& g, const Eigen::MatrixXd& S,
                          const Eigen::MatrixXd& T, const Eigen::VectorXd& theta_cov,
                          const Eigen::VectorXd& theta_sharp, const Eigen::VectorXd& X,
                          const Eigen::VectorXd& Y) {
  auto sp = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return symmetric_product(g, a, b);
  };
  const double thX = theta_cov.dot(X);
  const double thY = theta_cov.dot(Y);
  const double nt2 = theta_cov.dot(g.inv * theta_cov);
  const Eigen::VectorXd SX = S * X, SY = S * Y;
  const Eigen::VectorXd TX = T * X, TY = T * Y;
  const Eigen::VectorXd Sth = S * theta_sharp;
  return sp(SY, TX) - sp(SX, TY) + sp(S * TY, X) - sp(S * TX, Y) + thY * sp(SX, theta_sharp) -
         thY * sp(Sth, X) + thX * sp(Sth, Y) - thX * sp(SY, theta_sharp) -
         nt2 * (sp(SX, Y) - sp(SY, X));
}

}  // namespace

std::vector<ResidualReport> check_curvS(const WeylData& w, const SplittingS& S, const EndoField& J,
                                        std::span<const Point> pts, std::uint64_t seed,
                                        const Tolerance& tol, int workers) {
  const int n = S.dim();
  const EndoField& sf = S.field();
  // Pre-drawn random directions keep the parallel run deterministic.
  Rng rng(derive_seed(seed, "curvS.directions"));
  std::vector<Eigen::VectorXd> xs, ys;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Eigen::VectorXd x(n), y(n);
    for (int k = 0; k < n; ++k) x[k] = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < n; ++k) y[k] = rng.uniform(-1.0, 1.0);
    xs.push_back(x);
    ys.push_back(y);
  }

  PointSuite suite(pts, 3, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample cs = christoffels(w.g, p);
    const Eigen::MatrixXd sv = sf.eval_values(p);
    const Eigen::MatrixXd jv = J.eval_values(p);
    const Eigen::MatrixXd T = lee_endomorphism(cs, w.lee);
    const Eigen::VectorXd theta_cov = w.lee.eval_values(p);
    const Eigen::VectorXd theta_sharp = cs.metric.inv * theta_cov;
    const Eigen::VectorXd& X = xs[static_cast<std::size_t>(ip)];
    const Eigen::VectorXd& Y = ys[static_cast<std::size_t>(ip)];
    const Eigen::VectorXd JX = jv * X, JY = jv * Y;

    const Eigen::MatrixXd RS_xy = curvature_on_endo(curvature_operator(cs, X, Y), sv);
    const Eigen::MatrixXd RS_jxjy = curvature_on_endo(curvature_operator(cs, JX, JY), sv);
    out[0] = endo_norm(cs.metric,
                       RS_xy - curvS_rhs(cs.metric, sv, T, theta_cov, theta_sharp, X, Y));
    out[1] = endo_norm(cs.metric,
                       RS_jxjy - curvS_rhs(cs.metric, sv, T, theta_cov, theta_sharp, JX, JY));
    out[2] = endo_norm(cs.metric, RS_xy - RS_jxjy);
  });
  std::vector<ResidualReport> reports;
  reports.push_back(suite.report(0, "curvS.identity", kAnchorCurvS, tol(1e-7)));
  reports.push_back(suite.report(1, "curvS.identity_J", kAnchorCurvJS, tol(1e-7)));
  reports.push_back(suite.report(2, "curvS.kahler_symmetry", kAnchorKahlerSym, tol(1e-7)));
  return reports;
}

std::vector<ResidualReport> check_trace_lemma(const WeylData& w, const SplittingS& S,
                                              const EndoField& J, std::span<const Point> pts,
                                              const Tolerance& tol, int workers) {
  const int n = S.dim();
  const EndoField& sf = S.field();
  const EndoField jsjs = endo_product(J, endo_product(sf, endo_product(J, sf)));
  const OneFormField s_theta = form_from_endo_sharp(w.g, sf, w.lee);
  const OneFormField jsjs_theta = form_from_endo_sharp(w.g, jsjs, w.lee);

  PointSuite suite(pts, 3, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample cs = christoffels(w.g, p);
    const Eigen::MatrixXd T = lee_endomorphism(cs, w.lee);
    const Eigen::MatrixXd sv = sf.eval_values(p);
    const Eigen::MatrixXd jv = J.eval_values(p);
    const Eigen::MatrixXd jsjs_v = jv * sv * jv * sv;
    const Eigen::VectorXd theta_cov = w.lee.eval_values(p);
    const Eigen::VectorXd theta_sharp = cs.metric.inv * theta_cov;
    const double nt2 = theta_cov.dot(theta_sharp);
    const double th_S_th = theta_cov.dot(sv * theta_sharp);
    const double th_JSJS_th = theta_cov.dot(jsjs_v * theta_sharp);
    const double trS = sv.trace();

    out[0] = std::abs(T.trace() + codifferential(cs, w.lee));
    out[1] = std::abs((sv * T).trace() -
                      (-codifferential(cs, s_theta) - trS * nt2 + n * th_S_th));
    out[2] = std::abs((jsjs_v * T).trace() -
                      (-codifferential(cs, jsjs_theta) + th_JSJS_th + nt2 -
                       nt2 * jsjs_v.trace() - trS * th_S_th));
  });
  std::vector<ResidualReport> reports;
  reports.push_back(suite.report(0, "trace_lemma.i", kAnchorTraceI, tol(1e-8)));
  reports.push_back(suite.report(1, "trace_lemma.ii", kAnchorTraceII, tol(1e-7)));
  reports.push_back(suite.report(2, "trace_lemma.iii", kAnchorTraceIII, tol(1e-7)));
  return reports;
}

std::vector<ResidualReport> check_trace_chain(const WeylData& w, const SplittingS& S,
                                              const EndoField& J, std::span<const Point> pts,
                                              std::span<const int> quad_grid, const Tolerance& tol,
                                              int workers) {
  const int n = S.dim();
  const int r = S.rank();
  const EndoField& sf = S.field();
  const EndoField jsjs = endo_product(J, endo_product(sf, endo_product(J, sf)));
  const OneFormField s_theta = form_from_endo_sharp(w.g, sf, w.lee);
  const OneFormField jsjs_theta = form_from_endo_sharp(w.g, jsjs, w.lee);

  const int kCurvYS = 0, kTrace = 1, kTrace2 = 2, kTrace3 = 3, kTrS = 4, kTrJSJS = 5;
  PointSuite suite(pts, 6, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample cs = christoffels(w.g, p);
    const Eigen::MatrixXd T = lee_endomorphism(cs, w.lee);
    const Eigen::MatrixXd sv = sf.eval_values(p);
    const Eigen::MatrixXd jv = J.eval_values(p);
    const Eigen::MatrixXd jsjs_v = jv * sv * jv * sv;
    const Eigen::VectorXd theta_cov = w.lee.eval_values(p);
    const Eigen::VectorXd theta_sharp = cs.metric.inv * theta_cov;
    const Eigen::VectorXd s_th = sv * theta_sharp;
    const Eigen::VectorXd j_th = jv * theta_sharp;
    const double nt2 = theta_cov.dot(theta_sharp);
    const double th_S_th = theta_cov.dot(s_th);
    const double th_JSJS_th = theta_cov.dot(jsjs_v * theta_sharp);
    const double trS = sv.trace();
    const double trT = T.trace();
    const double trST = (sv * T).trace();
    const double trTJ = (T * jv).trace();
    const double trSTJ = (sv * T * jv).trace();
    const double trJSJST = (jsjs_v * T).trace();
    const double trJSJS = jsjs_v.trace();
    const double delta_theta = codifferential(cs, w.lee);
    const double delta_s_theta = codifferential(cs, s_theta);
    const double delta_jsjs_theta = codifferential(cs, jsjs_theta);

    const Eigen::MatrixXd E = orthonormal_frame(cs.metric);
    double curv_ys = 0.0;
    for (int c = 0; c < n; ++c) {
      const Eigen::VectorXd Y = E.col(c);
      const double thY = theta_cov.dot(Y);
      const double jthY = (cs.metric.val * Y).dot(j_th);
      const double SYth = theta_cov.dot(sv * Y);
      const double sth_th = th_S_th;
      const double sth_jth = (cs.metric.val * j_th).dot(s_th);
      const double jsjth_Y = (cs.metric.val * Y).dot(jv * (sv * j_th));
      // lhs
      Eigen::VectorXd lhs = T * (sv * Y) + trT * (sv * Y) - trS * (T * Y) +
                            (n - 1.0) * (sv * (T * Y)) - trST * Y +
                            thY * (trS * theta_sharp + (1.0 - n) * s_th) + sth_th * Y -
                            SYth * theta_sharp + nt2 * ((n - 1.0) * (sv * Y) - trS * Y);
      // rhs
      Eigen::VectorXd rhs = T * (jv * (sv * (jv * Y))) + trTJ * (sv * (jv * Y)) -
                            sv * (jv * (T * (jv * Y))) + jv * (sv * (T * (jv * Y))) -
                            trSTJ * (jv * Y) + sv * (T * Y) - jthY * (sv * j_th) +
                            jthY * (jv * s_th) - sth_jth * (jv * Y) - thY * s_th -
                            jsjth_Y * theta_sharp + nt2 * (sv * Y + jv * (sv * (jv * Y)));
      curv_ys = std::max(curv_ys, vector_norm(cs.metric, (lhs - rhs).eval()));
    }
    out[kCurvYS] = curv_ys;

    out[kTrace] = std::abs(2.0 * (n - 1.0) * trT - 2.0 * trS * trST - 2.0 * trJSJST +
                           2.0 * trS * th_S_th + 2.0 * th_JSJS_th +
                           nt2 * (n * n - 3.0 * n + 2.0 - trS * trS - trJSJS));
    out[kTrace2] = std::abs(nt2 * (n * n - 3.0 * n + trS * trS + trJSJS) -
                            2.0 * (n - 2.0) * trS * th_S_th - 2.0 * (n - 1.0) * delta_theta +
                            2.0 * trS * delta_s_theta + 2.0 * delta_jsjs_theta);
    out[kTrace3] =
        (r == 1) ? std::abs(2.0 * (n - 2.0) * (n - 2.0) * (nt2 - th_S_th) -
                            2.0 * (n - 1.0) * delta_theta + 2.0 * (n - 2.0) * delta_s_theta +
                            2.0 * delta_jsjs_theta)
                 : 0.0;
    out[kTrS] = std::abs(trS - (n - 2.0 * r));
    out[kTrJSJS] = (r == 1) ? std::abs(trJSJS - (4.0 - n)) : 0.0;
  });

  std::vector<ResidualReport> reports;
  reports.push_back(suite.report(kCurvYS, "trace_chain.curv_Y_S", kAnchorCurvYS, tol(1e-7)));
  reports.push_back(suite.report(kTrace, "trace_chain.trace", kAnchorTraceEq, tol(1e-7)));
  reports.push_back(suite.report(kTrace2, "trace_chain.trace2", kAnchorTrace2, tol(1e-7)));
  if (r == 1)
    reports.push_back(suite.report(kTrace3, "trace_chain.trace3", kAnchorTrace3, tol(1e-7)));
  reports.push_back(
      suite.report(kTrS, "trace_chain.tr_S", "tr S = n - 2r", tol(tols::kAlgebraic)));
  if (r == 1)
    reports.push_back(suite.report(kTrJSJS, "trace_chain.tr_JSJS", "tr(JSJS) = 4 - n for rank 1",
                                   tol(tols::kAlgebraic)));

  // Stokes quadratures (fully periodic charts only).
  if (!quad_grid.empty() && w.g.chart()->all_periodic()) {
    auto quad_report = [&](const char* name, const char* anchor, double value) {
      ResidualReport rep;
      rep.check = name;
      rep.anchor = anchor;
      rep.samples = 1;
      rep.max_residual = std::abs(value);
      rep.mean_residual = std::abs(value);
      rep.worst_point = Eigen::VectorXd::Zero(0);
      rep.tolerance = tol(tols::kQuadrature);
      rep.pass = rep.max_residual <= rep.tolerance;
      return rep;
    };
    const double q1 = integrate_periodic(
        w.g, [&](const Point& p) { return codifferential(christoffels(w.g, p), w.lee); },
        quad_grid, workers);
    const double q2 = integrate_periodic(
        w.g, [&](const Point& p) { return codifferential(christoffels(w.g, p), s_theta); },
        quad_grid, workers);
    const double q3 = integrate_periodic(
        w.g, [&](const Point& p) { return codifferential(christoffels(w.g, p), jsjs_theta); },
        quad_grid, workers);
    const double q4 = integrate_periodic(
        w.g,
        [&](const Point& p) {
          const MetricSample ms = w.g.eval(p);
          const Eigen::VectorXd theta_cov = w.lee.eval_values(p);
          const Eigen::VectorXd theta_sharp = ms.inv * theta_cov;
          const Eigen::MatrixXd sv = sf.eval_values(p);
          return 2.0 * (n - 2.0) * (n - 2.0) *
                 (theta_cov.dot(theta_sharp) - theta_cov.dot(sv * theta_sharp));
        },
        quad_grid, workers);
    reports.push_back(quad_report("trace_chain.stokes_delta_theta", kAnchorStokes, q1));
    reports.push_back(quad_report("trace_chain.stokes_delta_S_theta", kAnchorStokes, q2));
    reports.push_back(quad_report("trace_chain.stokes_delta_JSJS_theta", kAnchorStokes, q3));
    reports.push_back(quad_report("trace_chain.rank1_integral", kAnchorRank1Integral, q4));
  }

  // Exact integer identity behind the rank bound.
  {
    long violations = 0;
    for (long nn = 4; nn <= 40; ++nn)
      for (long rr = 2; 2 * rr <= nn; ++rr) {
        const long m = nn - 2 * rr;
        const long lhs = nn * nn - 3 * nn + m * m - nn - 2 * (nn - 2) * m;
        if (lhs != 4 * rr * (rr - 2)) ++violations;
      }
    ResidualReport rep;
    rep.check = "trace_chain.rank_identity";
    rep.anchor = kAnchorRankIdentity;
    rep.samples = 1;
    rep.max_residual = static_cast<double>(violations);
    rep.mean_residual = rep.max_residual;
    rep.worst_point = Eigen::VectorXd::Zero(0);
    rep.tolerance = 0.0;
    rep.pass = violations == 0;
    rep.notes.push_back("checked in exact integer arithmetic for all n <= 40");
    reports.push_back(rep);
  }
  return reports;
}

namespace {

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i)
    if (rmat(i, i) < 0.0) q.col(i) *= -1.0;
  return q;
}

Eigen::MatrixXd standard_complex_structure(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a + 1 < n; a += 2) {
    j(a + 1, a) = 1.0;
    j(a, a + 1) = -1.0;
  }
  return j;
}

}  // namespace

std::vector<ResidualReport> check_ineq_linear_algebra(std::span<const int> dims, int trials,
                                                      std::uint64_t seed, const Tolerance& tol) {
  ResidualAccumulator bound_acc, equality_acc;
  for (int n : dims) {
    if (n % 2 != 0) throw ValidationError("ineq_la dimensions must be even");
    Rng rng(derive_seed(seed, "ineq_la.n" + std::to_string(n)));
    const Eigen::MatrixXd j0 = standard_complex_structure(n);
    for (int t = 0; t < trials; ++t) {
      const Eigen::MatrixXd qs = random_orthogonal(n, rng);
      Eigen::VectorXd d(n);
      for (int i = 0; i < n; ++i) d[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const Eigen::MatrixXd s = qs * d.asDiagonal() * qs.transpose();
      const Eigen::MatrixXd qj = random_orthogonal(n, rng);
      const Eigen::MatrixXd jm = qj * j0 * qj.transpose();
      const double tr = (jm * s * jm * s).trace();
      Eigen::VectorXd where(2);
      where << n, t;
      bound_acc.add(std::max(0.0, -static_cast<double>(n) - tr), where);
    }
    // Equality cases: S built from the same conjugation as J, constant on the
    // J-invariant planes, so SJ = JS; plus S = +/- id.
    for (int t = 0; t < 100; ++t) {
      const Eigen::MatrixXd q = random_orthogonal(n, rng);
      Eigen::VectorXd d(n);
      for (int a = 0; a + 1 < n; a += 2) d[a] = d[a + 1] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const Eigen::MatrixXd s = q * d.asDiagonal() * q.transpose();
      const Eigen::MatrixXd jm = q * j0 * q.transpose();
      Eigen::VectorXd where(2);
      where << n, t;
      equality_acc.add(std::abs((jm * s * jm * s).trace() + n), where);
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      equality_acc.add(std::abs((jm * jm).trace() + n), where);          // S = id
      equality_acc.add(std::abs((jm * (-id) * jm * (-id)).trace() + n), where);  // S = -id
    }
  }
  std::vector<ResidualReport> reports;
  reports.push_back(bound_acc.finalize("ineq_la.bound", kAnchorIneq, tol(tols::kAlgebraic)));
  reports.push_back(
      equality_acc.finalize("ineq_la.equality", kAnchorIneqEq, tol(tols::kAlgebraic)));
  {
    long violations = 0;
    for (long nn = 4; nn <= 40; ++nn)
      for (long rr = 2; 2 * rr <= nn; ++rr) {
        const long m = nn - 2 * rr;
        if (nn * nn - 3 * nn + m * m - nn - 2 * (nn - 2) * m != 4 * rr * (rr - 2)) ++violations;
      }
    ResidualReport rep;
    rep.check = "ineq_la.rank_identity";
    rep.anchor = kAnchorRankIdentity;
    rep.samples = 1;
    rep.max_residual = static_cast<double>(violations);
    rep.mean_residual = rep.max_residual;
    rep.worst_point = Eigen::VectorXd::Zero(0);
    rep.tolerance = 0.0;
    rep.pass = violations == 0;
    reports.push_back(rep);
  }
  return reports;
}

std::vector<ResidualReport> check_rank1_suite(const WeylData& w, const SplittingS& S,
                                              const EndoField& J, const Rank1Witness& witness,
                                              std::span<const Point> pts, const Tolerance& tol,
                                              int workers) {
  if (S.rank() != 1) throw DimensionError("rank1_suite requires a rank-1 splitting");
  const int n = S.dim();
  const ScalarField theta_norm2 = oneform_norm_squared_field(w.g, w.lee);
  const ScalarField theta0_norm2 = oneform_norm_squared_field(w.g, witness.theta0);

  // series: a..j plus theta(xi) plus witness invariants
  const int kA = 0, kB = 1, kC = 2, kD = 3, kE = 4, kF = 5, kG = 6, kH = 7, kI = 8, kJ1 = 9,
            kJ2 = 10, kThetaXi = 11, kWitness = 12;
  PointSuite suite(pts, 13, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample cs = christoffels(w.g, p);
    const MetricSample& g = cs.metric;
    const Eigen::MatrixXd E = orthonormal_frame(g);
    const Eigen::MatrixXd jv = J.eval_values(p);
    const Eigen::MatrixXd T = lee_endomorphism(cs, w.lee);
    const Eigen::VectorXd theta_cov = w.lee.eval_values(p);
    const Eigen::VectorXd theta_sharp = g.inv * theta_cov;
    const Eigen::VectorXd xi = witness.xi.eval_values(p);
    const Eigen::VectorXd jxi = jv * xi;
    const Jet2 b_jet = witness.b.eval(p);
    const double b = b_jet.value();
    const double trT = T.trace();
    const double trJT = (jv * T).trace();
    const Eigen::VectorXd xi_flat = g.val * xi;
    const Eigen::VectorXd jxi_flat = g.val * jxi;
    const Eigen::VectorXd t_jxi = T * jxi;
    const Eigen::VectorXd t_xi = T * xi;

    std::vector<Eigen::VectorXd> nabla_xi(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      nabla_xi[static_cast<std::size_t>(i)] =
          covariant_derivative_vector(cs, witness.xi, E.col(i));

    // (a) nabla_X xi = <X, xi> theta#
    double ra = 0.0;
    for (int i = 0; i < n; ++i) {
      const double xdotxi = E.col(i).dot(xi_flat);
      ra = std::max(ra, vector_norm(g, (nabla_xi[static_cast<std::size_t>(i)] -
                                        xdotxi * theta_sharp).eval()));
    }
    out[kA] = ra;

    // (b) R_{X,Y} xi over frame pairs
    double rb = 0.0;
    for (int a = 0; a < n; ++a)
      for (int c = a + 1; c < n; ++c) {
        const Eigen::VectorXd X = E.col(a), Y = E.col(c);
        const Eigen::VectorXd lhs = curvature_operator(cs, X, Y) * xi;
        const double thX = theta_cov.dot(X), thY = theta_cov.dot(Y);
        const double Xxi = X.dot(xi_flat), Yxi = Y.dot(xi_flat);
        const Eigen::VectorXd rhs =
            thY * Xxi * theta_sharp - thX * Yxi * theta_sharp + Yxi * (T * X) - Xxi * (T * Y);
        rb = std::max(rb, vector_norm(g, (lhs - rhs).eval()));
      }
    out[kB] = rb;

    // (c) -theta(X) theta# + TX - <X,xi> T xi = b <JX,xi> theta# - <JX,xi> T J xi
    double rc = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd X = E.col(i);
      const double thX = theta_cov.dot(X);
      const double Xxi = X.dot(xi_flat);
      const double JXxi = (jv * X).dot(xi_flat);
      const Eigen::VectorXd lhs = -thX * theta_sharp + T * X - Xxi * t_xi;
      const Eigen::VectorXd rhs = b * JXxi * theta_sharp - JXxi * t_jxi;
      rc = std::max(rc, vector_norm(g, (lhs - rhs).eval()));
    }
    out[kC] = rc;

    // (d) T J xi = b theta# + tr(T) J xi
    out[kD] = vector_norm(g, (t_jxi - b * theta_sharp - trT * jxi).eval());

    // (e) d b = (T J xi)^flat - tr(JT) xi^flat
    const Eigen::VectorXd db = b_jet.grad();
    out[kE] = oneform_norm(g, (db - g.val * t_jxi + trJT * xi_flat).eval());

    // (f) xi(b) = -tr(JT)
    out[kF] = std::abs(xi.dot(db) + trJT);

    // (g) TX = <X,xi> T xi + theta(X) theta# - <JX,xi> tr(T) J xi
    double rg = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd X = E.col(i);
      const double thX = theta_cov.dot(X);
      const double Xxi = X.dot(xi_flat);
      const double JXxi = (jv * X).dot(xi_flat);
      rg = std::max(rg, vector_norm(g, (T * X - Xxi * t_xi - thX * theta_sharp +
                                        JXxi * trT * jxi).eval()));
    }
    out[kG] = rg;

    // (h) (1/2) d|theta|^2 = (1/2) xi(|theta|^2) xi^flat + |theta|^2 theta
    //     + b tr(T) (J xi)^flat
    const Jet2 nt = theta_norm2.eval(p);
    const Eigen::VectorXd dnt = nt.grad();
    out[kH] = oneform_norm(g, (0.5 * dnt - 0.5 * xi.dot(dnt) * xi_flat - nt.value() * theta_cov -
                               b * trT * jxi_flat).eval());

    // (i) same for theta0 = theta - b (J xi)^flat
    const Jet2 nt0 = theta0_norm2.eval(p);
    const Eigen::VectorXd dnt0 = nt0.grad();
    out[kI] = oneform_norm(g, (0.5 * dnt0 - 0.5 * xi.dot(dnt0) * xi_flat -
                               nt0.value() * theta_cov).eval());

    // (j) nabla_X xi = b <X,xi> J xi, and theta# = b J xi
    double rj = 0.0;
    for (int i = 0; i < n; ++i) {
      const double Xxi = E.col(i).dot(xi_flat);
      rj = std::max(rj, vector_norm(g, (nabla_xi[static_cast<std::size_t>(i)] -
                                        b * Xxi * jxi).eval()));
    }
    out[kJ1] = rj;
    out[kJ2] = vector_norm(g, (theta_sharp - b * jxi).eval());

    out[kThetaXi] = std::abs(theta_cov.dot(xi));

    const JetVec theta0_jets = witness.theta0.eval(p);
    const Eigen::VectorXd theta0_cov = values(theta0_jets);
    out[kWitness] = std::max({std::abs(vector_norm(g, xi) - 1.0), std::abs(theta0_cov.dot(xi)),
                              std::abs(theta0_cov.dot(jxi))});
  });

  std::vector<ResidualReport> reports;
  const double t7 = tol(1e-7);
  reports.push_back(suite.report(kA, "rank1_suite.nxi", "nabla_X xi = <X, xi> theta#", t7));
  reports.push_back(suite.report(
      kB, "rank1_suite.rxi",
      "R_{X,Y} xi = theta(Y)<X,xi> theta# - theta(X)<Y,xi> theta# + <Y,xi>TX - <X,xi>TY", t7));
  reports.push_back(suite.report(
      kC, "rank1_suite.t1",
      "-theta(X) theta# + TX - <X,xi>T xi = b <JX,xi> theta# - <JX,xi> T J xi", t7));
  reports.push_back(
      suite.report(kD, "rank1_suite.t2", "T J xi = b theta# + tr(T) J xi", t7));
  reports.push_back(
      suite.report(kE, "rank1_suite.t3", "d b = (T J xi)^flat - tr(JT) xi^flat", t7));
  reports.push_back(suite.report(kF, "rank1_suite.xib", "xi(b) = -tr(JT)", t7));
  reports.push_back(suite.report(
      kG, "rank1_suite.t4",
      "TX = <X,xi> T xi + theta(X) theta# - <JX,xi> tr(T) J xi", t7));
  reports.push_back(suite.report(
      kH, "rank1_suite.dt",
      "(1/2) d|theta|^2 = (1/2) xi(|theta|^2) xi^flat + |theta|^2 theta + b tr(T) (J xi)^flat",
      t7));
  reports.push_back(suite.report(
      kI, "rank1_suite.theta0",
      "(1/2) d|theta0|^2 = (1/2) xi(|theta0|^2) xi^flat + |theta0|^2 theta", t7));
  reports.push_back(
      suite.report(kJ1, "rank1_suite.nxi1", "nabla_X xi = b <X, xi> J xi", t7));
  reports.push_back(suite.report(kJ2, "rank1_suite.theta_sharp", "theta# = b J xi", t7));
  reports.push_back(suite.report(kThetaXi, "rank1_suite.theta_xi", "theta(xi) = 0",
                                 tol(tols::kAlgebraic)));
  reports.push_back(suite.report(kWitness, "rank1_suite.witness",
                                 "|xi| = 1, theta0(xi) = 0, theta0(J xi) = 0",
                                 tol(tols::kAlgebraic)));
  return reports;
}

ConstructionResult construct_weyl_from_eta(const MetricField& g, const EndoField& J,
                                           const OneFormField& eta,
                                           const std::vector<VectorField>& parallel_frame,
                                           const std::optional<OneFormField>& reference_theta,
                                           std::span<const Point> pts, const Tolerance& tol,
                                           int workers) {
  const int n = g.chart()->dim();
  if (static_cast<int>(parallel_frame.size()) != n - 2)
    throw DimensionError("parallel frame must span a subbundle of real codimension 2");

  const VectorField xi = endo_applied(J, sharp_field(g, eta));
  const VectorField jxi = endo_applied(J, xi);

  // Precondition residuals first; hard failures throw.
  const int kUnit = 0, kEtaE = 1, kDEta = 2, kParallel = 3;
  PointSuite pre(pts, 4, workers);
  pre.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample cs = christoffels(g, p);
    const MetricSample& ms = cs.metric;
    const JetVec eta_jets = eta.eval(p);
    const Eigen::VectorXd eta_cov = values(eta_jets);
    out[kUnit] = std::abs(oneform_norm(ms, eta_cov) - 1.0);

    double eta_e = 0.0;
    for (const auto& u : parallel_frame) {
      const Eigen::VectorXd uv = u.eval_values(p);
      eta_e = std::max(eta_e, std::abs(eta_cov.dot(uv)) / vector_norm(ms, uv));
    }
    out[kEtaE] = eta_e;

    Eigen::MatrixXd d_eta(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d_eta(i, j) = eta_jets[static_cast<std::size_t>(j)].grad(i) -
                      eta_jets[static_cast<std::size_t>(i)].grad(j);
    out[kDEta] = two_form_norm(ms, d_eta);

    const Eigen::MatrixXd E = orthonormal_frame(ms);
    const Eigen::VectorXd xiv = xi.eval_values(p);
    const Eigen::VectorXd jxiv = jxi.eval_values(p);
    double par = 0.0;
    for (const auto& u : parallel_frame) {
      const double un = vector_norm(ms, u.eval_values(p));
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd du = covariant_derivative_vector(cs, u, E.col(i));
        par = std::max(par, (std::abs(du.dot(ms.val * xiv)) + std::abs(du.dot(ms.val * jxiv))) / un);
      }
    }
    out[kParallel] = par;
  });

  ResidualReport unit = pre.report(kUnit, "construct_eta.unit_eta", "|eta| = 1",
                                   tol(tols::kAlgebraic));
  ResidualReport eta_e = pre.report(kEtaE, "construct_eta.eta_on_E", "eta|_E = 0",
                                    tol(tols::kAlgebraic));
  ResidualReport d_eta = pre.report(kDEta, "construct_eta.d_eta", "d eta = 0", tol(1e-8));
  ResidualReport parallel = pre.report(kParallel, "construct_eta.parallel_frame",
                                       "nabla E stays inside E", tol(1e-8));
  if (!unit.pass)
    throw PreconditionError("eta is not unit length (max deviation " +
                            std::to_string(unit.max_residual) + ")");
  if (!eta_e.pass)
    throw PreconditionError("eta does not vanish on the supplied subbundle frame");
  if (!d_eta.pass)
    throw NotClosed("d eta residual " + std::to_string(d_eta.max_residual) +
                    " exceeds tolerance");
  if (!parallel.pass)
    throw NotParallel("the supplied subbundle is not nabla-parallel (residual " +
                      std::to_string(parallel.max_residual) + ")");

  // alpha(X) = <nabla_X xi, J xi>; theta = J alpha with (J alpha)(X) = -alpha(JX).
  auto theta_values_at = [g, J, xi, jxi, n](const Point& p) {
    const ConnectionSample cs = christoffels(g, p);
    const Eigen::MatrixXd jv = J.eval_values(p);
    const Eigen::VectorXd jxiv = jxi.eval_values(p);
    Eigen::VectorXd alpha(n);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
      dir[i] = 1.0;
      alpha[i] = covariant_derivative_vector(cs, xi, dir).dot(cs.metric.val * jxiv);
    }
    return std::make_pair(alpha, (-jv.transpose() * alpha).eval());
  };

  OneFormField theta(
      g.chart(),
      [theta_values_at, n](const Point& p) {
        const Eigen::VectorXd th = theta_values_at(p).second;
        JetVec out(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = Jet2::constant(n, th[i]);
        return out;
      },
      1);

  const bool compare = reference_theta.has_value();
  const int kWedge = 0, kAlphaJxi = 1, kSplit = 2, kMatch = 3;
  PointSuite post(pts, 4, workers);
  post.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample cs = christoffels(g, p);
    const MetricSample& ms = cs.metric;
    const auto [alpha, th] = theta_values_at(p);
    const Eigen::VectorXd xiv = xi.eval_values(p);
    const Eigen::VectorXd jxiv = jxi.eval_values(p);
    const Eigen::VectorXd xi_flat = ms.val * xiv;

    Eigen::MatrixXd wedge(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) wedge(i, j) = alpha[i] * xi_flat[j] - alpha[j] * xi_flat[i];
    out[kWedge] = two_form_norm(ms, wedge);
    out[kAlphaJxi] = std::abs(alpha.dot(jxiv));

    // D preserves xi-perp with the constructed theta.
    const Eigen::VectorXd theta_sharp = ms.inv * th;
    const Eigen::MatrixXd E = orthonormal_frame(ms);
    const double th_xi = th.dot(xiv);
    double split = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd X = E.col(i);
      const Eigen::VectorXd d_xi = covariant_derivative_vector(cs, xi, X) + th_xi * X +
                                   th.dot(X) * xiv - X.dot(xi_flat) * theta_sharp;
      for (int c = 0; c < n; ++c) {
        // project the frame vector off xi to get Y with <Y, xi> = 0
        Eigen::VectorXd y = E.col(c) - E.col(c).dot(xi_flat) * xiv;
        const double yn = vector_norm(ms, y);
        if (yn < 1e-8) continue;
        split = std::max(split, std::abs(d_xi.dot(ms.val * y)) / yn);
      }
    }
    out[kSplit] = split;
    out[kMatch] = compare ? (th - reference_theta->eval_values(p)).cwiseAbs().maxCoeff() : 0.0;
  });

  ConstructionResult result;
  result.theta = theta;
  result.reports.push_back(unit);
  result.reports.push_back(eta_e);
  result.reports.push_back(d_eta);
  result.reports.push_back(parallel);
  result.reports.push_back(post.report(kWedge, "construct_eta.alpha_wedge_xi",
                                       "0 = d eta = -alpha ^ xi^flat", tol(1e-8)));
  result.reports.push_back(
      post.report(kAlphaJxi, "construct_eta.alpha_J_xi", "alpha(J xi) = 0", tol(1e-8)));
  result.reports.push_back(post.report(
      kSplit, "construct_eta.splitting",
      "D with Lee form J alpha preserves span(xi) and its orthogonal complement", tol(1e-8)));
  if (compare)
    result.reports.push_back(post.report(kMatch, "construct_eta.theta_match",
                                         "constructed theta matches the canonical Lee form",
                                         tol(1e-8)));
  return result;
}

ConstructionResult construct_surface_weyl(const MetricField& g, const VectorField& xi,
                                          const EndoField& J, std::span<const Point> pts,
                                          const Tolerance& tol, int workers) {
  const int n = g.chart()->dim();
  if (n != 2) throw DimensionError("surface construction requires a 2-dimensional chart");
  const VectorField jxi = endo_applied(J, xi);

  // Unit-length precondition.
  {
    double worst = 0.0;
    for (const Point& p : pts) {
      const MetricSample ms = g.eval(p);
      worst = std::max(worst, std::abs(vector_norm(ms, xi.eval_values(p)) - 1.0));
    }
    if (worst > tol(tols::kAlgebraic))
      throw PreconditionError("xi is not unit length (max deviation " + std::to_string(worst) +
                              ")");
  }

  auto theta_values_at = [g, J, xi, jxi](const Point& p) {
    const ConnectionSample cs = christoffels(g, p);
    const Eigen::MatrixXd jv = J.eval_values(p);
    const Eigen::VectorXd jxiv = jxi.eval_values(p);
    Eigen::VectorXd alpha(2);
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(2);
      dir[i] = 1.0;
      alpha[i] = covariant_derivative_vector(cs, xi, dir).dot(cs.metric.val * jxiv);
    }
    return (-jv.transpose() * alpha).eval();
  };

  OneFormField theta(
      g.chart(),
      [theta_values_at](const Point& p) {
        const Eigen::VectorXd th = theta_values_at(p);
        JetVec out(2, Jet2::constant(2, 0.0));
        for (int i = 0; i < 2; ++i) out[static_cast<std::size_t>(i)] = Jet2::constant(2, th[i]);
        return out;
      },
      1);

  PointSuite suite(pts, 2, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample cs = christoffels(g, p);
    const MetricSample& ms = cs.metric;
    const Eigen::VectorXd th = theta_values_at(p);
    const Eigen::VectorXd xiv = xi.eval_values(p);
    const Eigen::VectorXd jxiv = jxi.eval_values(p);
    const Eigen::VectorXd xi_flat = ms.val * xiv;
    const Eigen::VectorXd theta_sharp = ms.inv * th;
    const double th_xi = th.dot(xiv);
    const Eigen::MatrixXd E = orthonormal_frame(ms);
    double split = 0.0;
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXd X = E.col(i);
      const Eigen::VectorXd d_xi = covariant_derivative_vector(cs, xi, X) + th_xi * X +
                                   th.dot(X) * xiv - X.dot(xi_flat) * theta_sharp;
      split = std::max(split, std::abs(d_xi.dot(ms.val * jxiv)));
    }
    out[0] = split;
    out[1] = std::abs(vector_norm(ms, xiv) - 1.0);
  });

  ConstructionResult result;
  result.theta = theta;
  result.reports.push_back(suite.report(0, "construct_surface.splitting",
                                        "<D_X xi, J xi> = 0 with Lee form J alpha", tol(1e-8)));
  result.reports.push_back(suite.report(1, "construct_surface.unit_xi", "|xi| = 1",
                                        tol(tols::kAlgebraic)));
  return result;
}

ResidualReport selfcheck_oracle(const MetricField& g, const std::string& label,
                                std::span<const Point> pts, const Tolerance& tol, int workers) {
  const int n = g.chart()->dim();
  PointSuite suite(pts, 1, workers);
  suite.run([&](int ip, std::span<double> out) {
    const Point& p = pts[static_cast<std::size_t>(ip)];
    const ConnectionSample ad = christoffels(g, p);
    const ConnectionSample fd = christoffels_fd(g, p);
    double scale = 1.0, diff = 0.0;
    for (int k = 0; k < n; ++k) {
      scale = std::max(scale, max_abs(ad.gamma[static_cast<std::size_t>(k)]));
      diff = std::max(diff, max_abs(ad.gamma[static_cast<std::size_t>(k)] -
                                    fd.gamma[static_cast<std::size_t>(k)]));
    }
    out[0] = diff / scale;
  });
  ResidualReport rep = suite.report(0, "selfcheck." + label,
                                    "autodiff Christoffels = central-difference Christoffels "
                                    "(relative)",
                                    tol(1e-6));
  return rep;
}

}  // namespace weylcps
