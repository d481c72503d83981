#include "weylcps/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "weylcps/chart.hpp"
#include "weylcps/errors.hpp"

namespace weylcps {

void ResidualAccumulator::add(double residual, const Eigen::VectorXd& where) {
  residuals_.push_back(residual);
  if (residuals_.size() == 1 || residual > max_) {
    max_ = residual;
    worst_ = where;
  }
}

ResidualReport ResidualAccumulator::finalize(std::string check, std::string anchor,
                                             double tolerance) const {
  ResidualReport r;
  r.check = std::move(check);
  r.anchor = std::move(anchor);
  r.samples = static_cast<int>(residuals_.size());
  r.max_residual = residuals_.empty() ? 0.0 : max_;
  r.mean_residual =
      residuals_.empty() ? 0.0 : pairwise_sum(residuals_) / static_cast<double>(residuals_.size());
  r.worst_point = worst_;
  r.tolerance = tolerance;
  r.pass = r.max_residual <= tolerance;
  return r;
}

namespace {

using nlohmann::json;

json to_json(const ResidualReport& r) {
  json j;
  j["check"] = r.check;
  j["anchor"] = r.anchor;
  j["samples"] = r.samples;
  j["max_residual"] = r.max_residual;
  j["mean_residual"] = r.mean_residual;
  std::vector<double> wp(r.worst_point.data(), r.worst_point.data() + r.worst_point.size());
  j["worst_point"] = wp;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  if (r.expect_min_residual > 0.0) j["expect_min_residual"] = r.expect_min_residual;
  j["notes"] = r.notes;
  return j;
}

}  // namespace

std::string serialize_report(const RunReport& report) {
  json j;
  j["tool"] = report.tool;
  j["scenario"] = report.scenario_name;
  j["scenario_digest"] = report.scenario_digest;
  j["seed"] = report.seed;
  j["tol_scale"] = report.tol_scale;
  j["overall_pass"] = report.overall_pass;
  json checks = json::array();
  for (const auto& c : report.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  return j.dump(2) + "\n";
}

void emit_report(const RunReport& report, const std::string& path) {
  namespace fs = std::filesystem;
  const std::string payload = serialize_report(report);
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << payload;
    if (!out) throw Error("failed writing report to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace weylcps
