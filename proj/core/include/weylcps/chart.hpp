// Coordinate charts: dimensions, coordinate names, periodic axes, bounds,
// deterministic sample-point generation, and the run-wide RNG.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weylcps/errors.hpp"

namespace weylcps {

using Point = Eigen::VectorXd;

struct Axis {
  std::string name;
  std::optional<double> period;                    // set for torus coordinates
  std::optional<std::pair<double, double>> bounds; // set for open ranges
};

class Chart {
 public:
  explicit Chart(std::vector<Axis> axes);

  // Common constructions.
  static std::shared_ptr<const Chart> torus(std::vector<std::string> names,
                                            double period = 1.0);
  static std::shared_ptr<const Chart> box(std::vector<std::string> names,
                                          std::vector<std::pair<double, double>> bounds);

  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  const std::string& coord_name(int i) const { return axes_[static_cast<std::size_t>(i)].name; }
  std::vector<std::string> coord_names() const;
  bool periodic(int i) const { return axes_[static_cast<std::size_t>(i)].period.has_value(); }
  bool all_periodic() const;
  int coord_index(const std::string& name) const;  // -1 if absent

  // Periodic coordinates reduced into [0, period); bounded coordinates are
  // checked against their range (OutOfChart outside).
  Point reduce(const Point& p) const;

  std::string describe() const;

 private:
  std::vector<Axis> axes_;
};

using ChartPtr = std::shared_ptr<const Chart>;

// Deterministic, portable PRNG (splitmix64 core). Distribution mapping is
// hand-rolled so streams are bit-stable across platforms and library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {  // Box-Muller, one value per call
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

// Derive a child seed for a named subtask of a run (FNV-1a over the label).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// Low-discrepancy (Halton) sample points, seed-offset, rounded to a dyadic
// grid so that shifting by whole periods reproduces points bit-exactly.
// Bounded axes are sampled with an interior margin.
std::vector<Point> sample_points(const Chart& chart, int count, std::uint64_t seed);

// Tensor-product lattice with the given per-axis resolution (node k at
// offset k/res of the period; bounded axes use the interior of the range).
std::vector<Point> lattice_points(const Chart& chart, std::span<const int> res);

// Deterministic parallel map: results land in a preallocated slot per index,
// so the outcome is independent of the worker count.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

// Pairwise (tree) summation in fixed index order.
double pairwise_sum(std::span<const double> values);

}  // namespace weylcps
