#include "weylcps/holonomy.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace weylcps {

namespace {

constexpr int kInitialSteps = 32;
constexpr int kMaxHalvings = 12;

Eigen::MatrixXd gamma_contract(const std::vector<Eigen::MatrixXd>& gamma,
                               const Eigen::VectorXd& X) {
  const int n = static_cast<int>(X.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += X[i] * gamma[static_cast<std::size_t>(k)](i, j);
      m(k, j) = s;
    }
  return m;
}

}  // namespace

Point LoopPath::start() const {
  if (segments.empty()) throw ValidationError("empty loop");
  Point x;
  Eigen::VectorXd dx;
  segments.front().at(0.0, x, dx);
  return x;
}

Point LoopPath::end() const {
  if (segments.empty()) throw ValidationError("empty loop");
  Point x;
  Eigen::VectorXd dx;
  segments.back().at(1.0, x, dx);
  return x;
}

double LoopPath::closure_defect(const Chart& chart) const {
  const Point a = chart.reduce(start());
  const Point b = chart.reduce(end());
  double worst = 0.0;
  for (int i = 0; i < chart.dim(); ++i) {
    double d = std::abs(a[i] - b[i]);
    if (chart.periodic(i)) d = std::min(d, *chart.axis(i).period - d);
    worst = std::max(worst, d);
  }
  return worst;
}

LoopPath fourier_loop(const Chart& chart, const Point& base, int harmonics, double amplitude,
                      Rng& rng) {
  const int n = chart.dim();
  const double two_pi = 2.0 * std::numbers::pi_v<double>;
  // gamma_c(tau) = base_c + sum_h a_ch (cos(2 pi h tau) - 1) + b_ch sin(2 pi h tau)
  Eigen::MatrixXd a(n, harmonics), b(n, harmonics);
  for (int c = 0; c < n; ++c) {
    double budget = 0.0;
    for (int h = 0; h < harmonics; ++h) {
      a(c, h) = rng.uniform(-1.0, 1.0);
      b(c, h) = rng.uniform(-1.0, 1.0);
      budget += 2.0 * std::abs(a(c, h)) + std::abs(b(c, h));
    }
    double cap = amplitude;
    if (!chart.periodic(c)) {
      const auto& [lo, hi] = *chart.axis(c).bounds;
      const double room = std::min(base[c] - lo, hi - base[c]);
      cap = std::min(cap, 0.8 * room);
    }
    const double scale = budget > 0.0 ? cap / budget : 0.0;
    a.row(c) *= scale;
    b.row(c) *= scale;
  }
  LoopPath loop;
  loop.segments.push_back(LoopSegment{[base, a, b, harmonics, two_pi, n](double tau, Point& x,
                                                                        Eigen::VectorXd& dx) {
    x = base;
    dx = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < n; ++c)
      for (int h = 0; h < harmonics; ++h) {
        const double w = two_pi * (h + 1);
        x[c] += a(c, h) * (std::cos(w * tau) - 1.0) + b(c, h) * std::sin(w * tau);
        dx[c] += -a(c, h) * w * std::sin(w * tau) + b(c, h) * w * std::cos(w * tau);
      }
  }});
  return loop;
}

LoopPath polyline_loop(const std::vector<Point>& waypoints) {
  if (waypoints.size() < 2) throw ValidationError("polyline loop needs at least 2 waypoints");
  LoopPath loop;
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const Point from = waypoints[i];
    const Point to = waypoints[(i + 1) % waypoints.size()];
    loop.segments.push_back(LoopSegment{[from, to](double tau, Point& x, Eigen::VectorXd& dx) {
      x = from + tau * (to - from);
      dx = to - from;
    }});
  }
  return loop;
}

namespace {

// One full pass over the loop with `steps` RK4 steps per segment.
// State: frame matrix M (columns transported) and the running theta integral.
struct TransportState {
  Eigen::MatrixXd frame;
  double lee_integral = 0.0;
};

TransportState integrate_loop(const WeylData& w, const LoopPath& loop,
                              const Eigen::MatrixXd& frame0, int steps) {
  TransportState st{frame0, 0.0};
  for (const auto& seg : loop.segments) {
    const double h = 1.0 / steps;
    for (int k = 0; k < steps; ++k) {
      const double t0 = k * h;
      // classical RK4 on M' = -Gamma_D(x'(t)) M, I' = theta(x'(t))
      auto derivative = [&](double tau, const Eigen::MatrixXd& m, Eigen::MatrixXd& dm,
                            double& di) {
        Point x;
        Eigen::VectorXd dx;
        seg.at(tau, x, dx);
        const auto gamma = weyl_gamma_values(w, x);
        dm = -gamma_contract(gamma, dx) * m;
        di = w.lee.eval_values(x).dot(dx);
      };
      Eigen::MatrixXd k1, k2, k3, k4;
      double i1, i2, i3, i4;
      derivative(t0, st.frame, k1, i1);
      derivative(t0 + 0.5 * h, st.frame + 0.5 * h * k1, k2, i2);
      derivative(t0 + 0.5 * h, st.frame + 0.5 * h * k2, k3, i3);
      derivative(t0 + h, st.frame + h * k3, k4, i4);
      st.frame += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      st.lee_integral += (h / 6.0) * (i1 + 2.0 * i2 + 2.0 * i3 + i4);
    }
  }
  return st;
}

}  // namespace

TransportResult parallel_transport(const WeylData& w, const LoopPath& loop,
                                   const Eigen::MatrixXd& frame0, double tol,
                                   const std::vector<int>& subspace_split) {
  if (tol <= 0.0) throw ValidationError("transport tolerance must be positive");
  if (loop.closure_defect(*w.g.chart()) > 1e-12)
    throw ValidationError("loop endpoints do not coincide after periodic reduction");

  int steps = kInitialSteps;
  TransportState coarse = integrate_loop(w, loop, frame0, steps);
  TransportState fine;
  double err = 0.0;
  bool ok = false;
  for (int halving = 0; halving < kMaxHalvings; ++halving) {
    fine = integrate_loop(w, loop, frame0, steps * 2);
    err = (fine.frame - coarse.frame).cwiseAbs().maxCoeff() / 15.0;
    if (err < tol) {
      ok = true;
      break;
    }
    coarse = fine;
    steps *= 2;
  }
  if (!ok)
    throw ToleranceNotMet("transport error estimate " + std::to_string(err) +
                          " above tolerance after " + std::to_string(kMaxHalvings) +
                          " halvings");

  TransportResult result;
  result.end_frame = fine.frame;
  result.est_error = err;
  result.lee_integral = fine.lee_integral;
  if (!subspace_split.empty()) {
    const Eigen::MatrixXd gval = w.g.eval(loop.start()).val;
    int offset = 0;
    for (int k : subspace_split) {
      result.principal_angles.push_back(subspace_angles(frame0.middleCols(offset, k),
                                                        fine.frame.middleCols(offset, k), gval));
      offset += k;
    }
  }
  return result;
}

GeodesicResult geodesic_integrate(const MetricField& g, const Point& x0,
                                  const Eigen::VectorXd& v0, double length, double tol) {
  if (tol <= 0.0) throw ValidationError("geodesic tolerance must be positive");
  const MetricSample s0 = g.eval(x0);
  const double speed0 = vector_norm(s0, v0);
  if (speed0 <= 0.0) throw ValidationError("geodesic needs a nonzero initial velocity");
  const int n = static_cast<int>(x0.size());

  auto integrate = [&](int steps, std::vector<Point>* path, double* drift) {
    const double h = length / steps;
    Point x = x0;
    Eigen::VectorXd v = v0;
    if (path) path->push_back(x);
    auto acc = [&](const Point& xx, const Eigen::VectorXd& vv) {
      const auto gamma = lc_gamma_values(g, xx);
      return (-gamma_contract(gamma, vv) * vv).eval();
    };
    for (int k = 0; k < steps; ++k) {
      const Eigen::VectorXd k1x = v, k1v = acc(x, v);
      const Eigen::VectorXd k2x = v + 0.5 * h * k1v,
                            k2v = acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
      const Eigen::VectorXd k3x = v + 0.5 * h * k2v,
                            k3v = acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
      const Eigen::VectorXd k4x = v + h * k3v, k4v = acc(x + h * k3x, v + h * k3v);
      x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      if (path && (k + 1) % std::max(1, steps / 128) == 0) path->push_back(x);
      if (drift) *drift = std::max(*drift, std::abs(vector_norm(g.eval(x), v) - speed0));
    }
    Eigen::VectorXd state(2 * n);
    state << x, v;
    return state;
  };

  int steps = std::max(kInitialSteps, static_cast<int>(std::ceil(16.0 * length)));
  Eigen::VectorXd coarse = integrate(steps, nullptr, nullptr);
  Eigen::VectorXd fine;
  double err = 0.0;
  bool ok = false;
  for (int halving = 0; halving < kMaxHalvings; ++halving) {
    fine = integrate(steps * 2, nullptr, nullptr);
    err = (fine - coarse).cwiseAbs().maxCoeff() / 15.0;
    if (err < tol) {
      ok = true;
      break;
    }
    coarse = fine;
    steps *= 2;
  }
  if (!ok)
    throw ToleranceNotMet("geodesic error estimate " + std::to_string(err) +
                          " above tolerance after " + std::to_string(kMaxHalvings) +
                          " halvings");

  GeodesicResult result;
  result.est_error = err;
  result.speed_drift = 0.0;
  const Eigen::VectorXd final_state = integrate(steps * 2, &result.path, &result.speed_drift);
  result.end = final_state.head(n);
  result.end_velocity = final_state.tail(n);
  return result;
}

std::vector<double> subspace_angles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& gval) {
  if (A.cols() != B.cols()) throw DimensionError("subspaces must have equal dimension");
  auto orthonormalize = [&](Eigen::MatrixXd m) {
    for (int j = 0; j < m.cols(); ++j) {
      Eigen::VectorXd u = m.col(j);
      for (int prev = 0; prev < j; ++prev) u -= u.dot(gval * m.col(prev)) * m.col(prev);
      const double norm2 = u.dot(gval * u);
      if (norm2 < 1e-20) throw FrameDegenerate("dependent columns in subspace frame");
      m.col(j) = u / std::sqrt(norm2);
    }
    return m;
  };
  const Eigen::MatrixXd a = orthonormalize(A);
  const Eigen::MatrixXd b = orthonormalize(B);
  const Eigen::MatrixXd cross = a.transpose() * gval * b;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
  std::vector<double> angles;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    const double sigma = std::clamp(svd.singularValues()[i], -1.0, 1.0);
    angles.push_back(std::acos(sigma));
  }
  std::sort(angles.begin(), angles.end(), std::greater<double>());
  return angles;
}

}  // namespace weylcps
