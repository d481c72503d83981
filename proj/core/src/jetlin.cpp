#include "weylcps/jetlin.hpp"

#include <cmath>

#include "weylcps/errors.hpp"

namespace weylcps {

JetMatrix JetMatrix::identity(int n, int dim) {
  JetMatrix r(n, n, dim);
  for (int i = 0; i < n; ++i) r.at(i, i) = Jet2::constant(dim, 1.0);
  return r;
}

Eigen::MatrixXd JetMatrix::values() const {
  Eigen::MatrixXd v(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) v(i, j) = at(i, j).value();
  return v;
}

Eigen::MatrixXd JetMatrix::grad_values(int k) const {
  Eigen::MatrixXd v(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) v(i, j) = at(i, j).grad(k);
  return v;
}

JetMatrix jet_mul(const JetMatrix& a, const JetMatrix& b) {
  if (a.cols != b.rows) throw DimensionError("jet matrix product shape mismatch");
  const int dim = a.m.empty() ? 0 : a.m[0].dim();
  JetMatrix r(a.rows, b.cols, dim);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      Jet2 s = Jet2::constant(dim, 0.0);
      for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(k, j);
      r.at(i, j) = s;
    }
  return r;
}

JetVec jet_mul(const JetMatrix& a, const JetVec& x) {
  if (a.cols != static_cast<int>(x.size())) throw DimensionError("jet matrix-vector mismatch");
  const int dim = a.m.empty() ? 0 : a.m[0].dim();
  JetVec r(static_cast<std::size_t>(a.rows), Jet2::constant(dim, 0.0));
  for (int i = 0; i < a.rows; ++i) {
    Jet2 s = Jet2::constant(dim, 0.0);
    for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * x[static_cast<std::size_t>(k)];
    r[static_cast<std::size_t>(i)] = s;
  }
  return r;
}

JetMatrix jet_add(const JetMatrix& a, const JetMatrix& b) {
  JetMatrix r = a;
  for (std::size_t i = 0; i < r.m.size(); ++i) r.m[i] += b.m[i];
  return r;
}

JetMatrix jet_sub(const JetMatrix& a, const JetMatrix& b) {
  JetMatrix r = a;
  for (std::size_t i = 0; i < r.m.size(); ++i) r.m[i] -= b.m[i];
  return r;
}

JetMatrix jet_scale(const JetMatrix& a, const Jet2& c) {
  JetMatrix r = a;
  for (auto& e : r.m) e = e * c;
  return r;
}

JetMatrix jet_transpose(const JetMatrix& a) {
  JetMatrix r(a.cols, a.rows, a.m.empty() ? 0 : a.m[0].dim());
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) r.at(j, i) = a.at(i, j);
  return r;
}

Jet2 jet_trace(const JetMatrix& a) {
  const int dim = a.m.empty() ? 0 : a.m[0].dim();
  Jet2 s = Jet2::constant(dim, 0.0);
  for (int i = 0; i < a.rows && i < a.cols; ++i) s += a.at(i, i);
  return s;
}

JetMatrix jet_inverse(const JetMatrix& a) {
  if (a.rows != a.cols) throw DimensionError("jet inverse of non-square matrix");
  const int n = a.rows;
  const int dim = a.m.empty() ? 0 : a.m[0].dim();
  JetMatrix w = a;
  JetMatrix inv = JetMatrix::identity(n, dim);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(w.at(col, col).value());
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(w.at(r, col).value());
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-300) throw DegenerateMetric("singular matrix in jet inverse");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(w.at(pivot, j), w.at(col, j));
        std::swap(inv.at(pivot, j), inv.at(col, j));
      }
    }
    const Jet2 d = reciprocal(w.at(col, col));
    for (int j = 0; j < n; ++j) {
      w.at(col, j) = w.at(col, j) * d;
      inv.at(col, j) = inv.at(col, j) * d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet2 f = w.at(r, col);
      if (f.value() == 0.0 && f.grad().isZero(0.0)) continue;
      for (int j = 0; j < n; ++j) {
        w.at(r, j) -= f * w.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

Jet2 jet_dot(const JetVec& x, const JetMatrix& g, const JetVec& y) {
  const int dim = g.m.empty() ? 0 : g.m[0].dim();
  Jet2 s = Jet2::constant(dim, 0.0);
  for (int i = 0; i < g.rows; ++i)
    for (int j = 0; j < g.cols; ++j)
      s += x[static_cast<std::size_t>(i)] * g.at(i, j) * y[static_cast<std::size_t>(j)];
  return s;
}

JetMatrix jet_gram_schmidt(const JetMatrix& vectors, const JetMatrix& g) {
  const int n = vectors.rows;
  const int k = vectors.cols;
  const int dim = vectors.m.empty() ? 0 : vectors.m[0].dim();
  JetMatrix out = vectors;
  auto column = [&](const JetMatrix& m, int j) {
    JetVec c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = m.at(i, j);
    return c;
  };
  for (int j = 0; j < k; ++j) {
    JetVec u = column(out, j);
    for (int prev = 0; prev < j; ++prev) {
      const JetVec e = column(out, prev);
      const Jet2 proj = jet_dot(u, g, e);
      for (int i = 0; i < n; ++i)
        u[static_cast<std::size_t>(i)] -= proj * e[static_cast<std::size_t>(i)];
    }
    Jet2 norm2 = jet_dot(u, g, u);
    if (norm2.value() < 1e-20)
      throw FrameDegenerate("Gram-Schmidt collapsed: dependent frame vectors");
    const Jet2 inv_norm = reciprocal(sqrt(norm2));
    for (int i = 0; i < n; ++i) out.at(i, j) = u[static_cast<std::size_t>(i)] * inv_norm;
  }
  (void)dim;
  return out;
}

Eigen::VectorXd values(const JetVec& v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i].value();
  return out;
}

}  // namespace weylcps
