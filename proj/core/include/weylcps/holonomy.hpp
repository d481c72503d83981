// Parallel transport of frames along loops under the Levi-Civita or Weyl
// connection, geodesic integration, and principal angles between subspaces.
#pragma once

#include <functional>
#include <vector>

#include "weylcps/connection.hpp"

namespace weylcps {

// Piecewise-smooth closed curve: each segment maps tau in [0, 1] to a point
// and its tangent. Coordinates are kept unreduced along the path; fields
// reduce internally.
struct LoopSegment {
  std::function<void(double tau, Point& x, Eigen::VectorXd& dx)> at;
};

struct LoopPath {
  std::vector<LoopSegment> segments;

  Point start() const;
  Point end() const;
  // Max distance between endpoints after periodic reduction.
  double closure_defect(const Chart& chart) const;
};

// Smooth random closed curve: truncated Fourier series per coordinate with
// the given number of harmonics, total amplitude bounded to stay in-chart.
LoopPath fourier_loop(const Chart& chart, const Point& base, int harmonics, double amplitude,
                      Rng& rng);

// Straight segments through the listed waypoints, closed back to the first.
LoopPath polyline_loop(const std::vector<Point>& waypoints);

struct TransportResult {
  Eigen::MatrixXd end_frame;
  double est_error = 0.0;    // Richardson estimate on the end frame
  double lee_integral = 0.0; // loop integral of theta
  // Principal angles between each transported subspace and its original,
  // descending, one vector per subspace of the supplied split.
  std::vector<std::vector<double>> principal_angles;
};

// Integrates v' = -Gamma_D(gamma') v with classical 4th-order steps, halving
// the step until the Richardson error estimate is below tol (at most 12
// halvings, then ToleranceNotMet). `subspace_split` partitions the frame
// columns into subspaces whose drift is measured.
TransportResult parallel_transport(const WeylData& w, const LoopPath& loop,
                                   const Eigen::MatrixXd& frame0, double tol,
                                   const std::vector<int>& subspace_split = {});

struct GeodesicResult {
  std::vector<Point> path;        // sampled trajectory (unreduced coordinates)
  Point end;
  Eigen::VectorXd end_velocity;
  double est_error = 0.0;
  double speed_drift = 0.0;       // max | |v|_g - |v0|_g | along the way
};

GeodesicResult geodesic_integrate(const MetricField& g, const Point& x0,
                                  const Eigen::VectorXd& v0, double length, double tol);

// Principal angles between the column spans of A and B with respect to g,
// descending order.
std::vector<double> subspace_angles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& gval);

}  // namespace weylcps
