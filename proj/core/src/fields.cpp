#include "weylcps/fields.hpp"

namespace weylcps {

namespace {

JetVec jets_from_tapes(const std::vector<Tape>& tapes, const Point& p) {
  const int n = static_cast<int>(p.size());
  std::vector<Jet2> inputs;
  inputs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) inputs.push_back(Jet2::variable(n, i, p[i]));
  JetVec out;
  out.reserve(tapes.size());
  for (const Tape& t : tapes) out.push_back(t.eval_jet(inputs));
  return out;
}

std::vector<Tape> compile_all(const Chart& chart, std::span<const std::string> sources) {
  const auto names = chart.coord_names();
  std::vector<Tape> tapes;
  tapes.reserve(sources.size());
  for (const auto& s : sources) tapes.push_back(compile(s, names));
  return tapes;
}

}  // namespace

ScalarField ScalarField::from_expression(ChartPtr chart, std::string_view source) {
  Tape tape = compile(source, chart->coord_names());
  return ScalarField(chart, [tape](const Point& p) {
    return tape.eval_jet_at(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  });
}

ScalarField ScalarField::constant(ChartPtr chart, double value) {
  const int n = chart->dim();
  return ScalarField(chart, [n, value](const Point&) { return Jet2::constant(n, value); });
}

VectorField VectorField::coordinate(ChartPtr chart, int k) {
  const int n = chart->dim();
  return VectorField(chart, [n, k](const Point&) {
    JetVec v(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
    v[static_cast<std::size_t>(k)] = Jet2::constant(n, 1.0);
    return v;
  });
}

VectorField VectorField::constant(ChartPtr chart, const Eigen::VectorXd& comps) {
  const int n = chart->dim();
  return VectorField(chart, [n, comps](const Point&) {
    JetVec v(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = Jet2::constant(n, comps[i]);
    return v;
  });
}

VectorField VectorField::from_expressions(ChartPtr chart, std::span<const std::string> comps) {
  if (static_cast<int>(comps.size()) != chart->dim())
    throw DimensionError("vector field component count does not match chart dimension");
  auto tapes = std::make_shared<std::vector<Tape>>(compile_all(*chart, comps));
  return VectorField(chart, [tapes](const Point& p) { return jets_from_tapes(*tapes, p); });
}

OneFormField OneFormField::zero(ChartPtr chart) {
  const int n = chart->dim();
  OneFormField f(chart, [n](const Point&) {
    return JetVec(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
  });
  return f.tagged_zero();
}

OneFormField OneFormField::constant(ChartPtr chart, const Eigen::VectorXd& comps) {
  const int n = chart->dim();
  return OneFormField(chart, [n, comps](const Point&) {
    JetVec v(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = Jet2::constant(n, comps[i]);
    return v;
  });
}

OneFormField OneFormField::from_expressions(ChartPtr chart, std::span<const std::string> comps) {
  if (static_cast<int>(comps.size()) != chart->dim())
    throw DimensionError("1-form component count does not match chart dimension");
  auto tapes = std::make_shared<std::vector<Tape>>(compile_all(*chart, comps));
  return OneFormField(chart, [tapes](const Point& p) { return jets_from_tapes(*tapes, p); });
}

EndoField EndoField::constant(ChartPtr chart, const Eigen::MatrixXd& m) {
  const int n = chart->dim();
  return EndoField(chart, [n, m](const Point&) {
    JetMatrix j(n, n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) j.at(a, b) = Jet2::constant(n, m(a, b));
    return j;
  });
}

Eigen::VectorXd lie_bracket(const VectorField& X, const VectorField& Y, const Point& p) {
  const JetVec xj = X.eval(p);
  const JetVec yj = Y.eval(p);
  const int n = static_cast<int>(xj.size());
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += xj[static_cast<std::size_t>(i)].value() * yj[static_cast<std::size_t>(k)].grad(i) -
           yj[static_cast<std::size_t>(i)].value() * xj[static_cast<std::size_t>(k)].grad(i);
    out[k] = s;
  }
  return out;
}

VectorField lie_bracket_field(const VectorField& X, const VectorField& Y) {
  ChartPtr chart = X.chart();
  const int n = chart->dim();
  return VectorField(
      chart,
      [X, Y, n](const Point& p) {
        const JetVec xj = X.eval(p);
        const JetVec yj = Y.eval(p);
        JetVec out(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
        for (int k = 0; k < n; ++k) {
          // value: X^i dY^k/di - Y^i dX^k/di; gradient needs the Hessian
          // channels of the operands, so the result is order 1.
          Jet2 sk(n, 0.0);
          for (int i = 0; i < n; ++i) {
            const Jet2& xi = xj[static_cast<std::size_t>(i)];
            const Jet2& yi = yj[static_cast<std::size_t>(i)];
            const Jet2& xk = xj[static_cast<std::size_t>(k)];
            const Jet2& yk = yj[static_cast<std::size_t>(k)];
            sk.value_ref() += xi.value() * yk.grad(i) - yi.value() * xk.grad(i);
            for (int m = 0; m < n; ++m) {
              sk.grad_ref()[m] += xi.grad(m) * yk.grad(i) + xi.value() * yk.hess(i, m) -
                                  yi.grad(m) * xk.grad(i) - yi.value() * xk.hess(i, m);
            }
          }
          out[static_cast<std::size_t>(k)] = sk;
        }
        return out;
      },
      1);
}

VectorField linear_combination(double a, const VectorField& X, double b, const VectorField& Y) {
  ChartPtr chart = X.chart();
  const int n = chart->dim();
  const int order = std::min(X.jet_order(), Y.jet_order());
  return VectorField(
      chart,
      [a, X, b, Y, n](const Point& p) {
        JetVec xj = X.eval(p);
        const JetVec yj = Y.eval(p);
        for (int i = 0; i < n; ++i) {
          xj[static_cast<std::size_t>(i)] =
              a * xj[static_cast<std::size_t>(i)] + b * yj[static_cast<std::size_t>(i)];
        }
        return xj;
      },
      order);
}

FdJet fd_oracle(const ScalarField& f, const Point& p, double h_grad, double h_hess) {
  if (h_grad <= 0.0 || h_hess <= 0.0) throw ValidationError("finite-difference step must be positive");
  const int n = static_cast<int>(p.size());
  auto value_at = [&](const Point& q) {
    // Bounded axes reject stencil points outside the chart (OutOfChart).
    return f.eval(q).value();
  };
  FdJet out;
  out.value = value_at(p);
  out.grad.resize(n);
  out.hess.resize(n, n);
  for (int i = 0; i < n; ++i) {
    Point a = p, b = p;
    a[i] += h_grad;
    b[i] -= h_grad;
    out.grad[i] = (value_at(a) - value_at(b)) / (2.0 * h_grad);
  }
  for (int i = 0; i < n; ++i) {
    Point a = p, b = p;
    a[i] += h_hess;
    b[i] -= h_hess;
    out.hess(i, i) = (value_at(a) - 2.0 * out.value + value_at(b)) / (h_hess * h_hess);
    for (int j = i + 1; j < n; ++j) {
      Point pp = p, pm = p, mp = p, mm = p;
      pp[i] += h_hess; pp[j] += h_hess;
      pm[i] += h_hess; pm[j] -= h_hess;
      mp[i] -= h_hess; mp[j] += h_hess;
      mm[i] -= h_hess; mm[j] -= h_hess;
      const double v =
          (value_at(pp) - value_at(pm) - value_at(mp) + value_at(mm)) / (4.0 * h_hess * h_hess);
      out.hess(i, j) = out.hess(j, i) = v;
    }
  }
  return out;
}

ScalarField component_field(const VectorField& v, int i) {
  return ScalarField(
      v.chart(), [v, i](const Point& p) { return v.eval(p)[static_cast<std::size_t>(i)]; },
      v.jet_order());
}

ScalarField component_field(const OneFormField& w, int i) {
  return ScalarField(
      w.chart(), [w, i](const Point& p) { return w.eval(p)[static_cast<std::size_t>(i)]; },
      w.jet_order());
}

ScalarField entry_field(const EndoField& e, int i, int j) {
  return ScalarField(
      e.chart(), [e, i, j](const Point& p) { return e.eval(p).at(i, j); }, e.jet_order());
}

VectorField endo_applied(const EndoField& A, const VectorField& X) {
  return VectorField(
      X.chart(), [A, X](const Point& p) { return jet_mul(A.eval(p), X.eval(p)); },
      std::min(A.jet_order(), X.jet_order()));
}

OneFormField endo_pullback(const EndoField& A, const OneFormField& w) {
  const int n = w.chart()->dim();
  return OneFormField(
      w.chart(),
      [A, w, n](const Point& p) {
        const JetMatrix a = A.eval(p);
        const JetVec wv = w.eval(p);
        JetVec out(static_cast<std::size_t>(n), Jet2::constant(n, 0.0));
        for (int i = 0; i < n; ++i) {
          Jet2 s = Jet2::constant(n, 0.0);
          for (int c = 0; c < n; ++c) s += wv[static_cast<std::size_t>(c)] * a.at(c, i);
          out[static_cast<std::size_t>(i)] = s;
        }
        return out;
      },
      std::min(A.jet_order(), w.jet_order()));
}

EndoField endo_product(const EndoField& A, const EndoField& B) {
  return EndoField(
      A.chart(), [A, B](const Point& p) { return jet_mul(A.eval(p), B.eval(p)); },
      std::min(A.jet_order(), B.jet_order()));
}

ScalarField form_on_vector(const OneFormField& w, const VectorField& X) {
  const int n = w.chart()->dim();
  return ScalarField(
      w.chart(),
      [w, X, n](const Point& p) {
        const JetVec wv = w.eval(p);
        const JetVec xv = X.eval(p);
        Jet2 s = Jet2::constant(n, 0.0);
        for (int i = 0; i < n; ++i)
          s += wv[static_cast<std::size_t>(i)] * xv[static_cast<std::size_t>(i)];
        return s;
      },
      std::min(w.jet_order(), X.jet_order()));
}

OneFormField form_sum(const OneFormField& a, const OneFormField& b) {
  const int n = a.chart()->dim();
  return OneFormField(
      a.chart(),
      [a, b, n](const Point& p) {
        JetVec av = a.eval(p);
        const JetVec bv = b.eval(p);
        for (int i = 0; i < n; ++i) av[static_cast<std::size_t>(i)] += bv[static_cast<std::size_t>(i)];
        return av;
      },
      std::min(a.jet_order(), b.jet_order()));
}

OneFormField form_minus_scaled(const OneFormField& a, const ScalarField& c, const OneFormField& b) {
  const int n = a.chart()->dim();
  int order = std::min({a.jet_order(), b.jet_order(), c.jet_order()});
  return OneFormField(
      a.chart(),
      [a, b, c, n](const Point& p) {
        JetVec av = a.eval(p);
        const JetVec bv = b.eval(p);
        const Jet2 cv = c.eval(p);
        for (int i = 0; i < n; ++i)
          av[static_cast<std::size_t>(i)] -= cv * bv[static_cast<std::size_t>(i)];
        return av;
      },
      order);
}

namespace {

// Smooth random component: trig terms along periodic axes, affine along
// bounded axes. Coefficients are baked in at construction.
struct SmoothComponent {
  double c0 = 0.0;
  std::vector<double> sin_coeff, cos_coeff, affine_coeff;
  std::vector<double> freq;  // 2*pi/period for periodic axes, else 0

  Jet2 eval(const Point& p) const {
    const int n = static_cast<int>(p.size());
    Jet2 s = Jet2::constant(n, c0);
    for (int j = 0; j < n; ++j) {
      const Jet2 xj = Jet2::variable(n, j, p[j]);
      if (freq[static_cast<std::size_t>(j)] != 0.0) {
        const Jet2 arg = freq[static_cast<std::size_t>(j)] * xj;
        s += sin_coeff[static_cast<std::size_t>(j)] * sin(arg) +
             cos_coeff[static_cast<std::size_t>(j)] * cos(arg);
      } else {
        s += affine_coeff[static_cast<std::size_t>(j)] * xj;
      }
    }
    return s;
  }
};

SmoothComponent random_component(const Chart& chart, Rng& rng, double amplitude) {
  const int n = chart.dim();
  SmoothComponent c;
  c.c0 = rng.uniform(-amplitude, amplitude);
  for (int j = 0; j < n; ++j) {
    c.sin_coeff.push_back(rng.uniform(-amplitude, amplitude));
    c.cos_coeff.push_back(rng.uniform(-amplitude, amplitude));
    c.affine_coeff.push_back(rng.uniform(-amplitude, amplitude));
    if (chart.periodic(j))
      c.freq.push_back(2.0 * 3.14159265358979323846 / *chart.axis(j).period);
    else
      c.freq.push_back(0.0);
  }
  return c;
}

}  // namespace

OneFormField random_lee_form(ChartPtr chart, std::uint64_t seed, double amplitude) {
  Rng rng(seed);
  const int n = chart->dim();
  auto comps = std::make_shared<std::vector<SmoothComponent>>();
  for (int i = 0; i < n; ++i) comps->push_back(random_component(*chart, rng, amplitude));
  return OneFormField(chart, [comps, n](const Point& p) {
    JetVec out;
    out.reserve(static_cast<std::size_t>(n));
    for (const auto& c : *comps) out.push_back(c.eval(p));
    return out;
  });
}

VectorField random_polynomial_vector_field(ChartPtr chart, std::uint64_t seed, double amplitude) {
  Rng rng(seed);
  const int n = chart->dim();
  // comp_i = c0 + sum_j c_j x_j + sum_{j<=k} q_jk x_j x_k
  struct Poly {
    double c0;
    std::vector<double> lin;
    std::vector<double> quad;  // packed upper triangle
  };
  auto polys = std::make_shared<std::vector<Poly>>();
  for (int i = 0; i < n; ++i) {
    Poly poly;
    poly.c0 = rng.uniform(-amplitude, amplitude);
    for (int j = 0; j < n; ++j) poly.lin.push_back(rng.uniform(-amplitude, amplitude));
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) poly.quad.push_back(rng.uniform(-amplitude, amplitude));
    polys->push_back(std::move(poly));
  }
  return VectorField(chart, [polys, n](const Point& p) {
    JetVec out;
    out.reserve(static_cast<std::size_t>(n));
    std::vector<Jet2> x;
    for (int j = 0; j < n; ++j) x.push_back(Jet2::variable(n, j, p[j]));
    for (const auto& poly : *polys) {
      Jet2 s = Jet2::constant(n, poly.c0);
      for (int j = 0; j < n; ++j) s += poly.lin[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
      int q = 0;
      for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k, ++q)
          s += poly.quad[static_cast<std::size_t>(q)] * x[static_cast<std::size_t>(j)] *
               x[static_cast<std::size_t>(k)];
      out.push_back(s);
    }
    return out;
  });
}

}  // namespace weylcps
