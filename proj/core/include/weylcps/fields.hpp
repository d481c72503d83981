// Smooth fields on a chart: scalars, vectors, 1-forms, endomorphisms.
// Every field is an immutable closure from (reduced) points to jet-valued
// components; evaluation is reentrant and deterministic.
//
// jet_order records how many derivative channels are trustworthy: tape-backed
// and closed-form fields carry exact order 2; fields obtained by consuming a
// derivative (canonical Lee forms, brackets) carry order 1 and their Hessian
// channel must not be consumed downstream.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "weylcps/chart.hpp"
#include "weylcps/expr.hpp"
#include "weylcps/jetlin.hpp"

namespace weylcps {

class ScalarField {
 public:
  using Fn = std::function<Jet2(const Point&)>;

  ScalarField() = default;
  ScalarField(ChartPtr chart, Fn fn, int jet_order = 2)
      : chart_(std::move(chart)), fn_(std::move(fn)), order_(jet_order) {}

  static ScalarField from_expression(ChartPtr chart, std::string_view source);
  static ScalarField constant(ChartPtr chart, double value);

  Jet2 eval(const Point& p) const { return fn_(chart_->reduce(p)); }
  // Evaluation without periodic reduction (periodicity probes).
  Jet2 eval_raw(const Point& p) const { return fn_(p); }

  const ChartPtr& chart() const { return chart_; }
  int jet_order() const { return order_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  ChartPtr chart_;
  Fn fn_;
  int order_ = 2;
};

class VectorField {
 public:
  using Fn = std::function<JetVec(const Point&)>;

  VectorField() = default;
  VectorField(ChartPtr chart, Fn fn, int jet_order = 2)
      : chart_(std::move(chart)), fn_(std::move(fn)), order_(jet_order) {}

  static VectorField coordinate(ChartPtr chart, int k);
  static VectorField constant(ChartPtr chart, const Eigen::VectorXd& comps);
  static VectorField from_expressions(ChartPtr chart, std::span<const std::string> comps);

  JetVec eval(const Point& p) const { return fn_(chart_->reduce(p)); }
  Eigen::VectorXd eval_values(const Point& p) const { return values(eval(p)); }

  const ChartPtr& chart() const { return chart_; }
  int jet_order() const { return order_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  ChartPtr chart_;
  Fn fn_;
  int order_ = 2;
};

class OneFormField {
 public:
  using Fn = std::function<JetVec(const Point&)>;

  OneFormField() = default;
  OneFormField(ChartPtr chart, Fn fn, int jet_order = 2)
      : chart_(std::move(chart)), fn_(std::move(fn)), order_(jet_order) {}

  static OneFormField zero(ChartPtr chart);
  static OneFormField constant(ChartPtr chart, const Eigen::VectorXd& comps);
  static OneFormField from_expressions(ChartPtr chart, std::span<const std::string> comps);

  JetVec eval(const Point& p) const { return fn_(chart_->reduce(p)); }
  Eigen::VectorXd eval_values(const Point& p) const { return values(eval(p)); }

  const ChartPtr& chart() const { return chart_; }
  int jet_order() const { return order_; }
  bool valid() const { return static_cast<bool>(fn_); }
  bool is_zero_form() const { return zero_tag_; }

  OneFormField tagged_zero() const {
    OneFormField f = *this;
    f.zero_tag_ = true;
    return f;
  }

 private:
  ChartPtr chart_;
  Fn fn_;
  int order_ = 2;
  bool zero_tag_ = false;
};

class EndoField {
 public:
  using Fn = std::function<JetMatrix(const Point&)>;

  EndoField() = default;
  EndoField(ChartPtr chart, Fn fn, int jet_order = 2)
      : chart_(std::move(chart)), fn_(std::move(fn)), order_(jet_order) {}

  static EndoField constant(ChartPtr chart, const Eigen::MatrixXd& m);

  JetMatrix eval(const Point& p) const { return fn_(chart_->reduce(p)); }
  Eigen::MatrixXd eval_values(const Point& p) const { return eval(p).values(); }

  const ChartPtr& chart() const { return chart_; }
  int jet_order() const { return order_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  ChartPtr chart_;
  Fn fn_;
  int order_ = 2;
};

// [X, Y] at p: (dY)X - (dX)Y from the gradient channels.
Eigen::VectorXd lie_bracket(const VectorField& X, const VectorField& Y, const Point& p);

// [X, Y] as a field (jet order drops to 1).
VectorField lie_bracket_field(const VectorField& X, const VectorField& Y);

// Algebraic combination a*X + b*Y.
VectorField linear_combination(double a, const VectorField& X, double b, const VectorField& Y);

// Central finite differences of the value channel: the independent oracle.
struct FdJet {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

inline constexpr double kFdStepGradient = 1e-5;
inline constexpr double kFdStepHessian = 1e-4;

FdJet fd_oracle(const ScalarField& f, const Point& p, double h_grad = kFdStepGradient,
                double h_hess = kFdStepHessian);

// Component i of a vector/one-form field as a scalar field (value channel
// only; used to aim the oracle at derived fields).
ScalarField component_field(const VectorField& v, int i);
ScalarField component_field(const OneFormField& w, int i);
ScalarField entry_field(const EndoField& e, int i, int j);

// Field algebra (jet order is the minimum of the operands').
VectorField endo_applied(const EndoField& A, const VectorField& X);       // A X
OneFormField endo_pullback(const EndoField& A, const OneFormField& w);    // (A^t w)_i = w_a A^a_i
EndoField endo_product(const EndoField& A, const EndoField& B);           // A B
ScalarField form_on_vector(const OneFormField& w, const VectorField& X);  // w(X)
OneFormField form_sum(const OneFormField& a, const OneFormField& b);
// a - c * b
OneFormField form_minus_scaled(const OneFormField& a, const ScalarField& c, const OneFormField& b);

// Deterministic smooth random fields for property checks: trigonometric
// components along periodic axes, affine along bounded axes.
OneFormField random_lee_form(ChartPtr chart, std::uint64_t seed, double amplitude = 0.3);
// Components are degree-2 polynomials in the coordinates.
VectorField random_polynomial_vector_field(ChartPtr chart, std::uint64_t seed,
                                           double amplitude = 0.5);

}  // namespace weylcps
