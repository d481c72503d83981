#include "weylcps/connection.hpp"

#include <cmath>

namespace weylcps {

namespace {

// K_{lij} = d_i g_jl + d_j g_il - d_l g_ij, symmetric in (i, j).
double koszul_term(const std::vector<Eigen::MatrixXd>& dg, int l, int i, int j) {
  return dg[static_cast<std::size_t>(i)](j, l) + dg[static_cast<std::size_t>(j)](i, l) -
         dg[static_cast<std::size_t>(l)](i, j);
}

void fill_gamma(ConnectionSample& cs, int n) {
  cs.gamma.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += cs.metric.inv(k, l) * koszul_term(cs.dg, l, i, j);
        const double v = 0.5 * s;
        cs.gamma[static_cast<std::size_t>(k)](i, j) = v;
        cs.gamma[static_cast<std::size_t>(k)](j, i) = v;
      }
    }
}

}  // namespace

ConnectionSample christoffels(const MetricField& g, const Point& p) {
  ConnectionSample cs;
  cs.p = p;
  cs.metric = g.eval(p);
  const int n = static_cast<int>(cs.metric.val.rows());

  cs.dg.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int m = 0; m < n; ++m) cs.dg[static_cast<std::size_t>(m)] = cs.metric.g.grad_values(m);

  fill_gamma(cs, n);

  // d_m g^{-1} = -g^{-1} (d_m g) g^{-1}
  std::vector<Eigen::MatrixXd> dginv(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m)
    dginv[static_cast<std::size_t>(m)] =
        -cs.metric.inv * cs.dg[static_cast<std::size_t>(m)] * cs.metric.inv;

  cs.dgamma.assign(static_cast<std::size_t>(n),
                   std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n),
                                                Eigen::MatrixXd::Zero(n, n)));
  for (int m = 0; m < n; ++m) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) {
            const double dK = cs.metric.g.at(j, l).hess(i, m) + cs.metric.g.at(i, l).hess(j, m) -
                              cs.metric.g.at(i, j).hess(l, m);
            s += dginv[static_cast<std::size_t>(m)](k, l) * koszul_term(cs.dg, l, i, j) +
                 cs.metric.inv(k, l) * dK;
          }
          const double v = 0.5 * s;
          cs.dgamma[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)](i, j) = v;
          cs.dgamma[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)](j, i) = v;
        }
      }
  }
  return cs;
}

ConnectionSample christoffels_fd(const MetricField& g, const Point& p, double h_grad,
                                 double h_hess) {
  ConnectionSample cs;
  cs.p = p;
  cs.metric = g.eval(p);
  const int n = static_cast<int>(cs.metric.val.rows());

  auto value_at = [&](const Point& q) { return g.eval(q).val; };
  cs.dg.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int m = 0; m < n; ++m) {
    Point a = p, b = p;
    a[m] += h_grad;
    b[m] -= h_grad;
    cs.dg[static_cast<std::size_t>(m)] = (value_at(a) - value_at(b)) / (2.0 * h_grad);
  }
  fill_gamma(cs, n);

  // dGamma by central differences of the whole Gamma computation.
  cs.dgamma.assign(static_cast<std::size_t>(n),
                   std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n),
                                                Eigen::MatrixXd::Zero(n, n)));
  auto gamma_at = [&](const Point& q) {
    ConnectionSample tmp;
    tmp.p = q;
    tmp.metric = g.eval(q);
    tmp.dg.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
    for (int m = 0; m < n; ++m) {
      Point a = q, b = q;
      a[m] += h_grad;
      b[m] -= h_grad;
      tmp.dg[static_cast<std::size_t>(m)] = (value_at(a) - value_at(b)) / (2.0 * h_grad);
    }
    fill_gamma(tmp, n);
    return tmp.gamma;
  };
  for (int m = 0; m < n; ++m) {
    Point a = p, b = p;
    a[m] += h_hess;
    b[m] -= h_hess;
    const auto ga = gamma_at(a);
    const auto gb = gamma_at(b);
    for (int k = 0; k < n; ++k)
      cs.dgamma[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] =
          (ga[static_cast<std::size_t>(k)] - gb[static_cast<std::size_t>(k)]) / (2.0 * h_hess);
  }
  return cs;
}

WeylSample weyl_coeffs(const WeylData& w, const Point& p) {
  WeylSample ws;
  ws.lc = christoffels(w.g, p);
  const int n = static_cast<int>(ws.lc.metric.val.rows());

  const JetVec theta_jets = w.lee.eval(p);
  ws.theta.resize(n);
  ws.dtheta.resize(n, n);
  for (int i = 0; i < n; ++i) {
    ws.theta[i] = theta_jets[static_cast<std::size_t>(i)].value();
    for (int m = 0; m < n; ++m) ws.dtheta(m, i) = theta_jets[static_cast<std::size_t>(i)].grad(m);
  }
  ws.theta_sharp = ws.lc.metric.inv * ws.theta;

  ws.gamma = ws.lc.gamma;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        if (k == i) v += ws.theta[j];
        if (k == j) v += ws.theta[i];
        v -= ws.lc.metric.val(i, j) * ws.theta_sharp[k];
        ws.gamma[static_cast<std::size_t>(k)](i, j) += v;
      }

  // d_m Gamma_D = d_m Gamma + d_m(theta terms).
  std::vector<Eigen::MatrixXd> dginv(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m)
    dginv[static_cast<std::size_t>(m)] =
        -ws.lc.metric.inv * ws.lc.dg[static_cast<std::size_t>(m)] * ws.lc.metric.inv;
  ws.dgamma = ws.lc.dgamma;
  for (int m = 0; m < n; ++m) {
    Eigen::VectorXd dtheta_sharp =
        dginv[static_cast<std::size_t>(m)] * ws.theta + ws.lc.metric.inv * ws.dtheta.row(m).transpose();
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          if (k == i) v += ws.dtheta(m, j);
          if (k == j) v += ws.dtheta(m, i);
          v -= ws.lc.dg[static_cast<std::size_t>(m)](i, j) * ws.theta_sharp[k];
          v -= ws.lc.metric.val(i, j) * dtheta_sharp[k];
          ws.dgamma[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)](i, j) += v;
        }
  }
  return ws;
}

std::vector<Eigen::MatrixXd> lc_gamma_values(const MetricField& g, const Point& p) {
  ConnectionSample cs;
  cs.p = p;
  cs.metric = g.eval(p);
  const int n = static_cast<int>(cs.metric.val.rows());
  cs.dg.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int m = 0; m < n; ++m) cs.dg[static_cast<std::size_t>(m)] = cs.metric.g.grad_values(m);
  fill_gamma(cs, n);
  return cs.gamma;
}

std::vector<Eigen::MatrixXd> weyl_gamma_values(const WeylData& w, const Point& p) {
  const MetricSample g = w.g.eval(p);
  const int n = static_cast<int>(g.val.rows());
  ConnectionSample cs;
  cs.metric = g;
  cs.dg.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int m = 0; m < n; ++m) cs.dg[static_cast<std::size_t>(m)] = g.g.grad_values(m);
  fill_gamma(cs, n);
  const Eigen::VectorXd theta = w.lee.eval_values(p);
  const Eigen::VectorXd theta_sharp = g.inv * theta;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        if (k == i) v += theta[j];
        if (k == j) v += theta[i];
        v -= g.val(i, j) * theta_sharp[k];
        cs.gamma[static_cast<std::size_t>(k)](i, j) += v;
      }
  return cs.gamma;
}

namespace {

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

Eigen::VectorXd directional_values(const JetVec& field, const Eigen::VectorXd& X) {
  const int n = static_cast<int>(X.size());
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += X[i] * field[static_cast<std::size_t>(k)].grad(i);
    out[k] = s;
  }
  return out;
}

}  // namespace

Eigen::VectorXd covariant_derivative_vector(const ConnectionSample& cs, const VectorField& Y,
                                            const Eigen::VectorXd& Xval) {
  const JetVec yj = Y.eval(cs.p);
  return directional_values(yj, Xval) + gamma_contract(cs.gamma, Xval) * values(yj);
}

Eigen::VectorXd weyl_derivative(const WeylSample& ws, const VectorField& Y,
                                const Eigen::VectorXd& Xval) {
  const JetVec yj = Y.eval(ws.lc.p);
  return directional_values(yj, Xval) + gamma_contract(ws.gamma, Xval) * values(yj);
}

Eigen::VectorXd weyl_derivative(const WeylData& w, const VectorField& X, const VectorField& Y,
                                const Point& p) {
  const WeylSample ws = weyl_coeffs(w, p);
  return weyl_derivative(ws, Y, X.eval_values(p));
}

Eigen::MatrixXd nabla_oneform(const ConnectionSample& cs, const OneFormField& omega) {
  const JetVec wj = omega.eval(cs.p);
  const int n = static_cast<int>(wj.size());
  Eigen::MatrixXd a(n, n);
  const Eigen::VectorXd wv = values(wj);
  for (int i = 0; i < n; ++i)
    for (int b = 0; b < n; ++b) {
      double s = wj[static_cast<std::size_t>(b)].grad(i);
      for (int c = 0; c < n; ++c) s -= cs.gamma[static_cast<std::size_t>(c)](i, b) * wv[c];
      a(i, b) = s;
    }
  return a;
}

Eigen::VectorXd covariant_derivative_oneform(const ConnectionSample& cs, const OneFormField& omega,
                                             const Eigen::VectorXd& Xval) {
  return nabla_oneform(cs, omega).transpose() * Xval;
}

Eigen::MatrixXd covariant_derivative_endo(const ConnectionSample& cs, const EndoField& A,
                                          const Eigen::VectorXd& Xval) {
  const JetMatrix aj = A.eval(cs.p);
  const int n = aj.rows;
  Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += Xval[m] * aj.at(i, j).grad(m);
      dA(i, j) = s;
    }
  const Eigen::MatrixXd gX = gamma_contract(cs.gamma, Xval);
  const Eigen::MatrixXd av = aj.values();
  return dA + gX * av - av * gX;
}

Eigen::MatrixXd weyl_derivative_endo(const WeylSample& ws, const EndoField& A,
                                     const Eigen::VectorXd& Xval) {
  const JetMatrix aj = A.eval(ws.lc.p);
  const int n = aj.rows;
  Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += Xval[m] * aj.at(i, j).grad(m);
      dA(i, j) = s;
    }
  const Eigen::MatrixXd gX = gamma_contract(ws.gamma, Xval);
  const Eigen::MatrixXd av = aj.values();
  return dA + gX * av - av * gX;
}

Eigen::MatrixXd lee_endomorphism(const ConnectionSample& cs, const OneFormField& theta) {
  // T^i_j = g^{ib} (nabla_j theta)_b.
  return cs.metric.inv * nabla_oneform(cs, theta).transpose();
}

Eigen::MatrixXd curvature_operator(const std::vector<Eigen::MatrixXd>& gamma,
                                   const std::vector<std::vector<Eigen::MatrixXd>>& dgamma,
                                   const Eigen::VectorXd& X, const Eigen::VectorXd& Y) {
  const int n = static_cast<int>(X.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          s += X[i] * Y[j] *
               (dgamma[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)](j, l) -
                dgamma[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)](i, l));
      r(k, l) = s;
    }
  const Eigen::MatrixXd gX = gamma_contract(gamma, X);
  const Eigen::MatrixXd gY = gamma_contract(gamma, Y);
  return r + gX * gY - gY * gX;
}

Eigen::MatrixXd curvature_operator(const ConnectionSample& cs, const Eigen::VectorXd& X,
                                   const Eigen::VectorXd& Y) {
  return curvature_operator(cs.gamma, cs.dgamma, X, Y);
}

Eigen::MatrixXd weyl_curvature_operator(const WeylSample& ws, const Eigen::VectorXd& X,
                                        const Eigen::VectorXd& Y) {
  return curvature_operator(ws.gamma, ws.dgamma, X, Y);
}

Eigen::MatrixXd orthonormal_frame(const MetricSample& g) {
  const int n = static_cast<int>(g.val.rows());
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd u = e.col(j);
    for (int prev = 0; prev < j; ++prev) {
      const double proj = u.dot(g.val * e.col(prev));
      u -= proj * e.col(prev);
    }
    const double norm2 = u.dot(g.val * u);
    if (norm2 < 1e-20) throw FrameDegenerate("coordinate frame degenerate under the metric");
    e.col(j) = u / std::sqrt(norm2);
  }
  return e;
}

DiffOps differential_ops(const ConnectionSample& cs, const Eigen::MatrixXd& Jval,
                         const OneFormField& omega) {
  const int n = static_cast<int>(cs.metric.val.rows());
  const Eigen::MatrixXd A = nabla_oneform(cs, omega);
  const Eigen::MatrixXd E = orthonormal_frame(cs.metric);
  DiffOps out;
  out.d = A - A.transpose();
  out.dc = Eigen::MatrixXd::Zero(n, n);
  out.delta = 0.0;
  out.deltac = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = E.col(i);
    const Eigen::VectorXd je = Jval * e;
    const Eigen::VectorXd nabla_e = A.transpose() * e;  // (nabla_{e_i} omega)_b
    const Eigen::VectorXd je_flat = cs.metric.val * je;
    out.dc += je_flat * nabla_e.transpose() - nabla_e * je_flat.transpose();
    out.delta -= nabla_e.dot(e);
    out.deltac -= nabla_e.dot(je);
  }
  return out;
}

double codifferential(const ConnectionSample& cs, const OneFormField& omega) {
  const int n = static_cast<int>(cs.metric.val.rows());
  const Eigen::MatrixXd A = nabla_oneform(cs, omega);
  const Eigen::MatrixXd E = orthonormal_frame(cs.metric);
  double delta = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = E.col(i);
    delta -= e.dot(A.transpose() * e);
  }
  return delta;
}

}  // namespace weylcps
