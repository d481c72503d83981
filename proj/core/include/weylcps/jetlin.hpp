// Small dense linear algebra over Jet2 scalars. Derived fields (splitting
// involutions, Lee forms, unit frames) are assembled from metric entries with
// these routines, so their first derivatives propagate automatically.
#pragma once

#include <vector>

#include "weylcps/jet.hpp"

namespace weylcps {

using JetVec = std::vector<Jet2>;

struct JetMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Jet2> m;

  JetMatrix() = default;
  JetMatrix(int r, int c, int dim)
      : rows(r), cols(c), m(static_cast<std::size_t>(r) * c, Jet2::constant(dim, 0.0)) {}

  Jet2& at(int i, int j) { return m[static_cast<std::size_t>(i) * cols + j]; }
  const Jet2& at(int i, int j) const { return m[static_cast<std::size_t>(i) * cols + j]; }

  static JetMatrix identity(int n, int dim);

  Eigen::MatrixXd values() const;
  // grad_values(k): matrix of d(entry)/d(coord k).
  Eigen::MatrixXd grad_values(int k) const;
};

JetMatrix jet_mul(const JetMatrix& a, const JetMatrix& b);
JetVec jet_mul(const JetMatrix& a, const JetVec& x);
JetMatrix jet_add(const JetMatrix& a, const JetMatrix& b);
JetMatrix jet_sub(const JetMatrix& a, const JetMatrix& b);
JetMatrix jet_scale(const JetMatrix& a, const Jet2& c);
JetMatrix jet_transpose(const JetMatrix& a);
Jet2 jet_trace(const JetMatrix& a);

// Gauss-Jordan with partial pivoting on the value channel.
// Throws DegenerateMetric when a pivot value underflows.
JetMatrix jet_inverse(const JetMatrix& a);

// <x, y> with respect to a metric matrix G (jets).
Jet2 jet_dot(const JetVec& x, const JetMatrix& g, const JetVec& y);

// Modified Gram-Schmidt on the columns of `vectors` with respect to metric
// `g`; returns g-orthonormal columns. Throws FrameDegenerate on collapse.
JetMatrix jet_gram_schmidt(const JetMatrix& vectors, const JetMatrix& g);

Eigen::VectorXd values(const JetVec& v);

}  // namespace weylcps
