// Residual reports for individual checks and the canonical run report.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace weylcps {

struct ResidualReport {
  std::string check;   // e.g. "rank1_suite.t2"
  std::string anchor;  // the identity being certified, in formula form
  int samples = 0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  Eigen::VectorXd worst_point;
  double tolerance = 0.0;
  bool pass = false;
  // Negative controls: pass means the residual *exceeded* this floor.
  double expect_min_residual = 0.0;
  std::vector<std::string> notes;
};

// Accumulates per-sample residuals with a deterministic, order-independent
// reduction (samples are added in index order by the caller).
class ResidualAccumulator {
 public:
  void add(double residual, const Eigen::VectorXd& where);
  ResidualReport finalize(std::string check, std::string anchor, double tolerance) const;

 private:
  std::vector<double> residuals_;
  double max_ = 0.0;
  Eigen::VectorXd worst_;
};

struct RunReport {
  std::string tool;
  std::string scenario_name;
  std::string scenario_digest;
  std::uint64_t seed = 0;
  double tol_scale = 1.0;
  bool overall_pass = true;
  std::vector<ResidualReport> checks;
};

// Canonical serialization: sorted keys, stable float formatting; identical
// runs produce byte-identical files. Wall time is deliberately not part of
// the report payload.
std::string serialize_report(const RunReport& report);

// Atomic write (temp file + rename).
void emit_report(const RunReport& report, const std::string& path);

// FNV-1a 64-bit content hash, hex-encoded.
std::string content_digest(const std::string& bytes);

}  // namespace weylcps
