// Splitting involutions and the residual suites certifying the connection,
// curvature, trace, and rank-1 identities on conformal product structures.
#pragma once

#include <optional>
#include <span>

#include "weylcps/connection.hpp"
#include "weylcps/report.hpp"

namespace weylcps {

// Default tolerance ladder: each derivative order loses roughly two digits.
namespace tols {
inline constexpr double kAlgebraic = 1e-10;        // pointwise algebra, musical maps
inline constexpr double kFirstDerivative = 1e-8;   // single-nabla identities
inline constexpr double kCurvature = 1e-7;         // second-derivative identities
inline constexpr double kQuadrature = 1e-10;       // Stokes integrals
inline constexpr double kControlFloor = 1e-3;      // negative controls must exceed this
}  // namespace tols

// Per-check tolerance resolution: scenario override wins, then the default,
// both multiplied by the exploratory scale factor.
struct Tolerance {
  double scale = 1.0;
  std::optional<double> override_value;
  double operator()(double def) const { return (override_value ? *override_value : def) * scale; }
};

// The orthogonal involution +id on T1, -id on T2, induced by frame fields.
// The frames are g-orthonormalized pointwise, so S carries first-derivative
// jets wherever the metric and frames do.
class SplittingS {
 public:
  SplittingS(MetricField g, std::vector<VectorField> t1, std::vector<VectorField> t2);

  const EndoField& field() const { return s_; }
  int dim() const { return dim_; }
  int rank() const { return rank_; }
  int expected_trace() const { return dim_ - 2 * rank_; }

  struct Invariants {
    double involution = 0.0;   // |S^2 - id|
    double symmetry = 0.0;     // |g(S., .) - g(., S.)|
    double trace = 0.0;        // |tr S - (n - 2r)|
    double factor_angle = 0.0; // max |<u, v>| between T1 and T2 frame vectors
  };
  Invariants validate(std::span<const Point> pts) const;

 private:
  MetricField g_;
  std::vector<VectorField> t1_, t2_;
  EndoField s_;
  int dim_ = 0;
  int rank_ = 0;
};

// Unit section of T2 with the derived fields the rank-1 arguments use.
struct Rank1Witness {
  VectorField xi;
  VectorField jxi;      // J xi
  ScalarField b;        // theta(J xi)
  OneFormField theta0;  // theta - b (J xi)^flat
};

Rank1Witness make_rank1_witness(const MetricField& g, const EndoField& J,
                                const OneFormField& theta, const VectorField& xi);

// (X (.) Y)(Z) = <X, Z> Y + <Y, Z> X.
Eigen::MatrixXd symmetric_product(const MetricSample& g, const Eigen::VectorXd& X,
                                  const Eigen::VectorXd& Y);

// --- residual suites -------------------------------------------------------

// Dg = -2 theta (x) g and torsion-freeness, over `random_thetas` seeded random
// Lee forms (plus the supplied one if any).
std::vector<ResidualReport> check_weyl_axioms(const MetricField& g,
                                              const std::optional<OneFormField>& theta,
                                              int random_thetas, std::span<const Point> pts,
                                              std::uint64_t seed, const Tolerance& tol,
                                              int workers);

// Weyl coefficients of (g, d phi) against Christoffels of e^{2 phi} g.
ResidualReport check_exactness(const MetricField& g, const std::string& phi_expr,
                               std::span<const Point> pts, const Tolerance& tol, int workers);

// nabla J, J^2 + id, and metric compatibility of J.
std::vector<ResidualReport> check_kahler_parallel(const MetricField& g, const EndoField& J,
                                                  std::span<const Point> pts, const Tolerance& tol,
                                                  int workers);

// nabla_X S = SX (.) theta# - S theta# (.) X, and D_X S = 0.
std::vector<ResidualReport> check_derivS(const WeylData& w, const SplittingS& S,
                                         std::span<const Point> pts, const Tolerance& tol,
                                         int workers);

// |<D_X U, V>| across the splitting; the cross-factor derivative identity on
// product charts; the Lee form solved from the D-parallel condition against
// the constructor's; the gap to the index-swapped convention.
std::vector<ResidualReport> check_parallel_splitting(const WeylData& w, const CpsMetric& bundle,
                                                     const SplittingS& S,
                                                     std::span<const Point> pts,
                                                     const Tolerance& tol, int workers,
                                                     bool expect_convention_gap);

// R_{X,Y} S expressed through S, T = nabla theta, and theta; its (JX, JY)
// variant; and the Kaehler symmetry R_{X,Y} S = R_{JX,JY} S.
std::vector<ResidualReport> check_curvS(const WeylData& w, const SplittingS& S, const EndoField& J,
                                        std::span<const Point> pts, std::uint64_t seed,
                                        const Tolerance& tol, int workers);

// Trace identities: tr(T) = -delta theta; tr(ST); tr(JSJST).
std::vector<ResidualReport> check_trace_lemma(const WeylData& w, const SplittingS& S,
                                              const EndoField& J, std::span<const Point> pts,
                                              const Tolerance& tol, int workers);

// The contracted curvature identity, the two scalar trace identities, the
// rank-1 variant, the Stokes quadratures, and the integer rank identity.
std::vector<ResidualReport> check_trace_chain(const WeylData& w, const SplittingS& S,
                                              const EndoField& J, std::span<const Point> pts,
                                              std::span<const int> quad_grid, const Tolerance& tol,
                                              int workers);

// tr(JSJS) >= -n over random (S, J) pairs; equality for commuting pairs;
// exact integer identity 4r(r-2).
std::vector<ResidualReport> check_ineq_linear_algebra(std::span<const int> dims, int trials,
                                                      std::uint64_t seed, const Tolerance& tol);

// Sub-checks (a)-(j) of the rank-1 analysis plus theta(xi) = 0.
std::vector<ResidualReport> check_rank1_suite(const WeylData& w, const SplittingS& S,
                                              const EndoField& J, const Rank1Witness& witness,
                                              std::span<const Point> pts, const Tolerance& tol,
                                              int workers);

// Weyl structure from a closed unit 1-form eta vanishing on a nabla-parallel
// complex subbundle: xi = J eta#, alpha(X) = <nabla_X xi, J xi>, theta = J alpha
// with (J alpha)(X) = -alpha(JX). Throws NotClosed / NotParallel /
// PreconditionError when the hypotheses fail.
struct ConstructionResult {
  OneFormField theta;
  std::vector<ResidualReport> reports;
};
ConstructionResult construct_weyl_from_eta(const MetricField& g, const EndoField& J,
                                           const OneFormField& eta,
                                           const std::vector<VectorField>& parallel_frame,
                                           const std::optional<OneFormField>& reference_theta,
                                           std::span<const Point> pts, const Tolerance& tol,
                                           int workers);

// Surface version: any unit field xi on an oriented 2-torus works.
ConstructionResult construct_surface_weyl(const MetricField& g, const VectorField& xi,
                                          const EndoField& J, std::span<const Point> pts,
                                          const Tolerance& tol, int workers);

// Autodiff Christoffels against the central-difference oracle (relative).
ResidualReport selfcheck_oracle(const MetricField& g, const std::string& label,
                                std::span<const Point> pts, const Tolerance& tol, int workers);

}  // namespace weylcps
