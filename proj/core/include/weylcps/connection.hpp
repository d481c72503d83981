// Levi-Civita and Weyl connection coefficients, covariant derivatives,
// curvature operators, and the differential operators d, delta, d^c, delta^c.
#pragma once

#include <vector>

#include "weylcps/metric.hpp"

namespace weylcps {

// A metric plus a Lee form: determines the Weyl connection
// D_X Y = nabla_X Y + theta(Y) X + theta(X) Y - <X, Y> theta#.
struct WeylData {
  MetricField g;
  OneFormField lee;  // may be the zero form (D = nabla)
};

// Levi-Civita data at one point. gamma[k](i,j) = Gamma^k_ij is exactly
// symmetric in (i,j); dgamma[m][k](i,j) = d_m Gamma^k_ij feeds curvature.
struct ConnectionSample {
  Point p;
  MetricSample metric;
  std::vector<Eigen::MatrixXd> dg;  // dg[m](i,j) = d_m g_ij
  std::vector<Eigen::MatrixXd> gamma;
  std::vector<std::vector<Eigen::MatrixXd>> dgamma;
};

ConnectionSample christoffels(const MetricField& g, const Point& p);

// Independent oracle: same Koszul formula but with every derivative of g taken
// by central differences of the value channel.
ConnectionSample christoffels_fd(const MetricField& g, const Point& p,
                                 double h_grad = kFdStepGradient,
                                 double h_hess = kFdStepHessian);

// Weyl coefficients on top of the Levi-Civita ones.
struct WeylSample {
  ConnectionSample lc;
  Eigen::VectorXd theta;        // theta_i values
  Eigen::MatrixXd dtheta;       // (m, i) = d_m theta_i
  Eigen::VectorXd theta_sharp;  // g^{ij} theta_j
  std::vector<Eigen::MatrixXd> gamma;  // Weyl Gamma_D
  std::vector<std::vector<Eigen::MatrixXd>> dgamma;
};

WeylSample weyl_coeffs(const WeylData& w, const Point& p);

// Gamma_D values only (fast path for transport integration).
std::vector<Eigen::MatrixXd> weyl_gamma_values(const WeylData& w, const Point& p);
std::vector<Eigen::MatrixXd> lc_gamma_values(const MetricField& g, const Point& p);

// nabla_X Y (values) for fields; dY from the gradient channel of Y.
Eigen::VectorXd covariant_derivative_vector(const ConnectionSample& cs, const VectorField& Y,
                                            const Eigen::VectorXd& Xval);
// D_X Y (values).
Eigen::VectorXd weyl_derivative(const WeylSample& ws, const VectorField& Y,
                                const Eigen::VectorXd& Xval);
Eigen::VectorXd weyl_derivative(const WeylData& w, const VectorField& X, const VectorField& Y,
                                const Point& p);

// (nabla_a omega)_b as a matrix A(a, b).
Eigen::MatrixXd nabla_oneform(const ConnectionSample& cs, const OneFormField& omega);
// (nabla_X omega) values.
Eigen::VectorXd covariant_derivative_oneform(const ConnectionSample& cs, const OneFormField& omega,
                                             const Eigen::VectorXd& Xval);
// nabla_X of an endomorphism field: dA(X) + [Gamma(X), A].
Eigen::MatrixXd covariant_derivative_endo(const ConnectionSample& cs, const EndoField& A,
                                          const Eigen::VectorXd& Xval);
// Same under the Weyl connection: dA(X) + [Gamma_D(X), A].
Eigen::MatrixXd weyl_derivative_endo(const WeylSample& ws, const EndoField& A,
                                     const Eigen::VectorXd& Xval);

// T = nabla theta as an endomorphism: T X = nabla_X theta#.
Eigen::MatrixXd lee_endomorphism(const ConnectionSample& cs, const OneFormField& theta);

// R(X, Y) as an endomorphism (matrix), curvature convention
// R_{X,Y} = nabla_X nabla_Y - nabla_Y nabla_X - nabla_{[X,Y]}.
Eigen::MatrixXd curvature_operator(const std::vector<Eigen::MatrixXd>& gamma,
                                   const std::vector<std::vector<Eigen::MatrixXd>>& dgamma,
                                   const Eigen::VectorXd& X, const Eigen::VectorXd& Y);
Eigen::MatrixXd curvature_operator(const ConnectionSample& cs, const Eigen::VectorXd& X,
                                   const Eigen::VectorXd& Y);
Eigen::MatrixXd weyl_curvature_operator(const WeylSample& ws, const Eigen::VectorXd& X,
                                        const Eigen::VectorXd& Y);

// (R_{X,Y} S)(Z) = R_{X,Y}(S Z) - S(R_{X,Y} Z): the commutator action.
inline Eigen::MatrixXd curvature_on_endo(const Eigen::MatrixXd& R, const Eigen::MatrixXd& S) {
  return R * S - S * R;
}

// g-orthonormal frame from the coordinate frame by modified Gram-Schmidt
// (columns, deterministic order).
Eigen::MatrixXd orthonormal_frame(const MetricSample& g);

// d, delta, d^c, delta^c of a 1-form at a point. Conventions:
//   d omega (X,Y) = (nabla_X omega)(Y) - (nabla_Y omega)(X)
//   delta omega   = -sum_i (nabla_{e_i} omega)(e_i)
//   d^c omega     = sum_i (J e_i)^flat wedge nabla_{e_i} omega
//   delta^c omega = -sum_i (nabla_{e_i} omega)(J e_i)
// with (a wedge b)(X, Y) = a(X) b(Y) - a(Y) b(X).
struct DiffOps {
  Eigen::MatrixXd d;    // antisymmetric matrix of d omega
  Eigen::MatrixXd dc;   // antisymmetric matrix of d^c omega
  double delta = 0.0;
  double deltac = 0.0;
};
DiffOps differential_ops(const ConnectionSample& cs, const Eigen::MatrixXd& Jval,
                         const OneFormField& omega);

// delta only, J not required.
double codifferential(const ConnectionSample& cs, const OneFormField& omega);

}  // namespace weylcps
