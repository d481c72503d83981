// Metric fields, complex structures, the builtin metric constructors, and
// periodic quadrature.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weylcps/fields.hpp"

namespace weylcps {

struct MetricSample {
  JetMatrix g;          // symmetric entries with order-2 jets
  Eigen::MatrixXd val;  // g at the point
  Eigen::MatrixXd inv;  // g^{-1} at the point
};

class MetricField {
 public:
  using Fn = std::function<JetMatrix(const Point&)>;

  MetricField() = default;
  MetricField(ChartPtr chart, Fn fn) : chart_(std::move(chart)), fn_(std::move(fn)) {}

  static MetricField from_entries(ChartPtr chart,
                                  const std::vector<std::vector<std::string>>& entries);
  static MetricField flat(ChartPtr chart);

  // Positive-definiteness is checked at every evaluation (Cholesky), and the
  // cached inverse satisfies |g*inv - id| <= 1e-12.
  MetricSample eval(const Point& p) const;
  JetMatrix eval_jets(const Point& p) const { return fn_(chart_->reduce(p)); }

  const ChartPtr& chart() const { return chart_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  ChartPtr chart_;
  Fn fn_;
};

// e^{2*phi} g
MetricField conformal_scale(const MetricField& g, const ScalarField& phi);

// Musical isomorphisms at a sampled point.
Eigen::VectorXd sharp(const MetricSample& g, const Eigen::VectorXd& omega);
Eigen::VectorXd flat(const MetricSample& g, const Eigen::VectorXd& x);

// g-norms at a point.
double vector_norm(const MetricSample& g, const Eigen::VectorXd& x);
double oneform_norm(const MetricSample& g, const Eigen::VectorXd& omega);
// Frobenius norm of an endomorphism in a g-orthonormal frame.
double endo_norm(const MetricSample& g, const Eigen::MatrixXd& a);

// A constructed metric family: the metric plus whatever canonical structure
// the constructor provides (complex structure, splitting frames, Lee form).
struct CpsMetric {
  ChartPtr chart;
  MetricField metric;
  std::string constructor_name;

  std::optional<EndoField> complex_structure;
  std::optional<OneFormField> canonical_lee;
  // The alternative index convention for the product Lee form; kept around so
  // reports can document how far it drifts from the canonical one.
  std::optional<OneFormField> statement_convention_lee;
  std::vector<VectorField> t1_frame, t2_frame;
  int rank = 0;
  std::vector<int> factor1_coords, factor2_coords;
  std::optional<VectorField> xi;  // canonical unit section of T2 (rank-1 cases)
  std::vector<std::string> notes;
};

struct FactorSpec {
  std::vector<Axis> axes;
  std::vector<std::vector<std::string>> metric_entries;  // expressions over the factor coords
};

// Flat torus (ds_1^2 + ... + ds_n^2, all periods 1); standard complex
// structure on consecutive coordinate pairs when the dimension is even.
CpsMetric make_flat_torus(int dim);

// Round-sphere chart g = d(theta)^2 + sin(theta)^2 d(phi)^2 on
// theta in (0, pi), phi periodic with period 2 pi.
CpsMetric make_sphere_chart();

// Block metric e^{2 f1} g1 + e^{2 f2} g2 on the product chart, with the
// canonical Lee form theta(Z2) = -Z2(f1), theta(Z1) = -Z1(f2).
CpsMetric make_conformal_product(const FactorSpec& factor1, const FactorSpec& factor2,
                                 const std::string& f1, const std::string& f2);

// e^{-2 phi} ds^2 + dt^2 + flat T^k, phi doubly periodic in (s, t);
// J(e^phi d/ds) = d/dt (or the opposite with orientation_flip), unit field
// xi = e^phi d/ds, Lee form (d phi/d t) dt.
CpsMetric make_kahler_warped_torus(const std::string& phi, int k_dim,
                                   bool orientation_flip = false);

// e^{2 psi}(ds^2 + dt^2) on T^2 with the standard rotation J and unit field
// xi = e^{-psi} d/ds.
CpsMetric make_surface_conformal_torus(const std::string& psi);

// User-supplied expression metric on an explicit chart, with optional
// expression-valued complex structure / Lee form / splitting frames.
struct ExprMetricSpec {
  std::vector<Axis> axes;
  std::vector<std::vector<std::string>> entries;
  std::vector<std::vector<std::string>> complex_structure;  // optional, row-major
  std::vector<std::string> lee;                             // optional
  std::vector<std::vector<std::string>> t1_frame, t2_frame; // optional
};
CpsMetric make_expr_metric(const ExprMetricSpec& spec);

// Residuals of J^2 + id and g(J., J.) - g(., .) over the sample points
// (max over points, entries measured in the g-induced norms).
struct ComplexStructureResiduals {
  double involution = 0.0;
  double compatibility = 0.0;
};
ComplexStructureResiduals validate_complex_structure(const MetricField& g, const EndoField& J,
                                                     std::span<const Point> points);

// Metric-dependent field algebra.
VectorField sharp_field(const MetricField& g, const OneFormField& w);
OneFormField flat_field(const MetricField& g, const VectorField& x);
// (A w#)^flat: apply an endomorphism to the sharp of a 1-form, then flatten.
OneFormField form_from_endo_sharp(const MetricField& g, const EndoField& A,
                                  const OneFormField& w);
// |w|_g^2 as a scalar field.
ScalarField oneform_norm_squared_field(const MetricField& g, const OneFormField& w);

// Tensor-product rectangle rule of f * sqrt(det g) over a fully periodic
// chart; spectrally accurate for smooth periodic integrands. Axis resolution
// 1 samples the axis at 0 with weight = period (for integrands constant along
// that axis). Throws NonPeriodicAxis if any axis is bounded.
double integrate_periodic(const MetricField& g, const std::function<double(const Point&)>& f,
                          std::span<const int> res, int workers = 1);
double integrate_periodic(const MetricField& g, const ScalarField& f, std::span<const int> res,
                          int workers = 1);

}  // namespace weylcps
