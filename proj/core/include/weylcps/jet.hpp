// Second-order forward-mode scalar: value, gradient, and Hessian with respect
// to the chart coordinates. The Hessian is stored as a packed upper triangle,
// so its symmetry is structural rather than numerical.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "weylcps/errors.hpp"

namespace weylcps {

class Jet2 {
 public:
  Jet2() = default;

  Jet2(int dim, double value)
      : n_(dim),
        val_(value),
        grad_(Eigen::VectorXd::Zero(dim)),
        hess_(Eigen::VectorXd::Zero(packed_size(dim))) {}

  static Jet2 constant(int dim, double value) { return Jet2(dim, value); }

  static Jet2 variable(int dim, int index, double value) {
    Jet2 j(dim, value);
    j.grad_[index] = 1.0;
    return j;
  }

  int dim() const { return n_; }
  double value() const { return val_; }
  const Eigen::VectorXd& grad() const { return grad_; }
  double grad(int i) const { return grad_[i]; }

  // Packed upper-triangle access; (i, j) is symmetrized by construction.
  double hess(int i, int j) const { return hess_[packed_index(i, j)]; }
  const Eigen::VectorXd& hess_packed() const { return hess_; }

  Eigen::MatrixXd hess_matrix() const {
    Eigen::MatrixXd h(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) h(i, j) = h(j, i) = hess(i, j);
    return h;
  }

  double& value_ref() { return val_; }
  Eigen::VectorXd& grad_ref() { return grad_; }
  double& hess_ref(int i, int j) { return hess_[packed_index(i, j)]; }

  static int packed_size(int n) { return n * (n + 1) / 2; }

  int packed_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i + 1) / 2 + j;
  }

  Jet2& operator+=(const Jet2& o) {
    val_ += o.val_;
    grad_ += o.grad_;
    hess_ += o.hess_;
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    val_ -= o.val_;
    grad_ -= o.grad_;
    hess_ -= o.hess_;
    return *this;
  }
  Jet2& operator*=(double c) {
    val_ *= c;
    grad_ *= c;
    hess_ *= c;
    return *this;
  }

  friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
  friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
  friend Jet2 operator-(Jet2 a) { return a *= -1.0; }
  friend Jet2 operator+(Jet2 a, double c) {
    a.val_ += c;
    return a;
  }
  friend Jet2 operator+(double c, Jet2 a) {
    a.val_ += c;
    return a;
  }
  friend Jet2 operator-(Jet2 a, double c) {
    a.val_ -= c;
    return a;
  }
  friend Jet2 operator-(double c, const Jet2& a) { return -a + c; }
  friend Jet2 operator*(Jet2 a, double c) { return a *= c; }
  friend Jet2 operator*(double c, Jet2 a) { return a *= c; }

  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r(a.n_, a.val_ * b.val_);
    r.grad_ = a.val_ * b.grad_ + b.val_ * a.grad_;
    r.hess_ = a.val_ * b.hess_ + b.val_ * a.hess_;
    int k = 0;
    for (int i = 0; i < a.n_; ++i)
      for (int j = i; j < a.n_; ++j, ++k)
        r.hess_[k] += a.grad_[i] * b.grad_[j] + a.grad_[j] * b.grad_[i];
    return r;
  }

  friend Jet2 operator/(const Jet2& a, const Jet2& b) {
    if (b.val_ == 0.0) throw DomainError("division by zero");
    return a * reciprocal(b);
  }
  friend Jet2 operator/(const Jet2& a, double c) {
    if (c == 0.0) throw DomainError("division by zero");
    Jet2 r = a;
    return r *= 1.0 / c;
  }
  friend Jet2 operator/(double c, const Jet2& b) {
    if (b.val_ == 0.0) throw DomainError("division by zero");
    return reciprocal(b) * c;
  }

  // u(f) for scalar u with first/second derivatives at f.value().
  friend Jet2 chain(const Jet2& f, double u, double du, double ddu) {
    Jet2 r(f.n_, u);
    r.grad_ = du * f.grad_;
    r.hess_ = du * f.hess_;
    int k = 0;
    for (int i = 0; i < f.n_; ++i)
      for (int j = i; j < f.n_; ++j, ++k) r.hess_[k] += ddu * f.grad_[i] * f.grad_[j];
    return r;
  }

  friend Jet2 reciprocal(const Jet2& f) {
    if (f.val_ == 0.0) throw DomainError("division by zero");
    const double u = 1.0 / f.val_;
    return chain(f, u, -u * u, 2.0 * u * u * u);
  }

 private:
  int n_ = 0;
  double val_ = 0.0;
  Eigen::VectorXd grad_;
  Eigen::VectorXd hess_;
};

inline Jet2 sin(const Jet2& f) {
  const double s = std::sin(f.value()), c = std::cos(f.value());
  return chain(f, s, c, -s);
}

inline Jet2 cos(const Jet2& f) {
  const double s = std::sin(f.value()), c = std::cos(f.value());
  return chain(f, c, -s, -c);
}

inline Jet2 exp(const Jet2& f) {
  const double e = std::exp(f.value());
  return chain(f, e, e, e);
}

inline Jet2 log(const Jet2& f) {
  if (f.value() <= 0.0) throw DomainError("log of non-positive argument");
  const double x = f.value();
  return chain(f, std::log(x), 1.0 / x, -1.0 / (x * x));
}

inline Jet2 sqrt(const Jet2& f) {
  if (f.value() <= 0.0) throw DomainError("sqrt of non-positive argument");
  const double u = std::sqrt(f.value());
  const double du = 0.5 / u;
  return chain(f, u, du, -0.5 * du / f.value());
}

inline Jet2 tanh(const Jet2& f) {
  const double u = std::tanh(f.value());
  const double du = 1.0 - u * u;
  return chain(f, u, du, -2.0 * u * du);
}

// Power with a literal real exponent (the only form the grammar admits).
inline Jet2 pow(const Jet2& f, double p) {
  const double x = f.value();
  const bool integral = p == std::floor(p);
  if (!integral && x < 0.0) throw DomainError("fractional power of negative base");
  if (x == 0.0) {
    if (p < 0.0) throw DomainError("negative power of zero");
    if (!integral && p < 2.0 && p != 0.0 && p != 1.0)
      throw DomainError("power of zero with unbounded derivative");
  }
  if (p == 0.0) return Jet2::constant(f.dim(), 1.0);
  double u = std::pow(x, p);
  double du, ddu;
  if (x == 0.0) {
    du = (p == 1.0) ? 1.0 : 0.0;
    ddu = (p == 2.0) ? 2.0 : 0.0;
  } else {
    du = p * std::pow(x, p - 1.0);
    ddu = p * (p - 1.0) * std::pow(x, p - 2.0);
  }
  return chain(f, u, du, ddu);
}

// The i-th derivative of f as a jet one order down: value = df/dx_i,
// gradient = Hessian row i, Hessian channel zeroed (not trustworthy).
inline Jet2 derivative_jet(const Jet2& f, int i) {
  Jet2 r(f.dim(), f.grad(i));
  for (int m = 0; m < f.dim(); ++m) r.grad_ref()[m] = f.hess(i, m);
  return r;
}

// Same domain policy for plain-double evaluation, so the value channel used by
// the finite-difference oracle fails exactly where jet evaluation fails.
namespace scalar_ops {

inline double log_checked(double x) {
  if (x <= 0.0) throw DomainError("log of non-positive argument");
  return std::log(x);
}

inline double sqrt_checked(double x) {
  if (x <= 0.0) throw DomainError("sqrt of non-positive argument");
  return std::sqrt(x);
}

inline double div_checked(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return a / b;
}

inline double pow_checked(double x, double p) {
  const bool integral = p == std::floor(p);
  if (!integral && x < 0.0) throw DomainError("fractional power of negative base");
  if (x == 0.0 && p < 0.0) throw DomainError("negative power of zero");
  return std::pow(x, p);
}

}  // namespace scalar_ops

}  // namespace weylcps
