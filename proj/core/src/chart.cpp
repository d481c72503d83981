#include "weylcps/chart.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace weylcps {

Chart::Chart(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.size() < 2) throw DimensionError("chart dimension must be at least 2");
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const Axis& a = axes_[i];
    if (a.name.empty()) throw ValidationError("chart coordinate name must be non-empty");
    if (a.period && *a.period <= 0.0) throw ValidationError("chart period must be positive");
    if (a.bounds && a.bounds->first >= a.bounds->second)
      throw ValidationError("chart bounds must be an increasing pair");
    if (!a.period && !a.bounds)
      throw ValidationError("axis '" + a.name + "' needs a period or bounds");
    for (std::size_t j = 0; j < i; ++j)
      if (axes_[j].name == a.name)
        throw ValidationError("duplicate coordinate name '" + a.name + "'");
  }
}

std::shared_ptr<const Chart> Chart::torus(std::vector<std::string> names, double period) {
  std::vector<Axis> axes;
  for (auto& n : names) axes.push_back(Axis{std::move(n), period, std::nullopt});
  return std::make_shared<Chart>(std::move(axes));
}

std::shared_ptr<const Chart> Chart::box(std::vector<std::string> names,
                                        std::vector<std::pair<double, double>> bounds) {
  if (names.size() != bounds.size()) throw DimensionError("names/bounds size mismatch");
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < names.size(); ++i)
    axes.push_back(Axis{std::move(names[i]), std::nullopt, bounds[i]});
  return std::make_shared<Chart>(std::move(axes));
}

std::vector<std::string> Chart::coord_names() const {
  std::vector<std::string> out;
  out.reserve(axes_.size());
  for (const auto& a : axes_) out.push_back(a.name);
  return out;
}

bool Chart::all_periodic() const {
  for (const auto& a : axes_)
    if (!a.period) return false;
  return true;
}

int Chart::coord_index(const std::string& name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].name == name) return static_cast<int>(i);
  return -1;
}

Point Chart::reduce(const Point& p) const {
  if (p.size() != dim()) throw DimensionError("point dimension does not match chart");
  Point q = p;
  for (int i = 0; i < dim(); ++i) {
    const Axis& a = axes_[static_cast<std::size_t>(i)];
    if (a.period) {
      const double period = *a.period;
      double x = q[i];
      // Exact when x = r + k*period is representable; floor subtraction then
      // recovers r with no rounding.
      x -= period * std::floor(x / period);
      if (x >= period) x = 0.0;
      q[i] = x;
    } else {
      const auto& [lo, hi] = *a.bounds;
      if (!(q[i] >= lo && q[i] <= hi))
        throw OutOfChart("coordinate '" + a.name + "' = " + std::to_string(q[i]) +
                         " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  }
  return q;
}

std::string Chart::describe() const {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < dim(); ++i) {
    if (i) os << ", ";
    os << coord_name(i);
    const Axis& a = axes_[static_cast<std::size_t>(i)];
    if (a.period)
      os << " mod " << *a.period;
    else
      os << " in (" << a.bounds->first << ", " << a.bounds->second << ")";
  }
  os << ")";
  return os.str();
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
  }
  return r;
}

// Snap to multiples of 2^-20: cheap to reduce bit-exactly across periods and
// far below every tolerance in play.
double dyadic(double x) { return std::round(x * 1048576.0) / 1048576.0; }

}  // namespace

std::vector<Point> sample_points(const Chart& chart, int count, std::uint64_t seed) {
  const int n = chart.dim();
  const std::uint64_t start = 17 + (seed % 65521) * 131;
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Point p(n);
    for (int i = 0; i < n; ++i) {
      const double u = halton(start + static_cast<std::uint64_t>(k),
                              kPrimes[i % (sizeof(kPrimes) / sizeof(int))]);
      const Axis& a = chart.axis(i);
      if (a.period) {
        double x = dyadic(u * *a.period);
        if (x >= *a.period) x = 0.0;
        p[i] = x;
      } else {
        const auto& [lo, hi] = *a.bounds;
        const double margin = 0.05 * (hi - lo);
        p[i] = lo + margin + u * (hi - lo - 2.0 * margin);
      }
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

std::vector<Point> lattice_points(const Chart& chart, std::span<const int> res) {
  const int n = chart.dim();
  if (static_cast<int>(res.size()) != n)
    throw DimensionError("lattice resolution list does not match chart dimension");
  long total = 1;
  for (int r : res) {
    if (r < 1) throw ValidationError("lattice resolution must be >= 1");
    total *= r;
  }
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(total));
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (long t = 0; t < total; ++t) {
    Point p(n);
    for (int i = 0; i < n; ++i) {
      const Axis& a = chart.axis(i);
      const double u = static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                       static_cast<double>(res[static_cast<std::size_t>(i)]);
      if (a.period) {
        p[i] = u * *a.period;
      } else {
        const auto& [lo, hi] = *a.bounds;
        const double margin = 0.05 * (hi - lo);
        p[i] = lo + margin + u * (hi - lo - 2.0 * margin);
      }
    }
    pts.push_back(std::move(p));
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < res[static_cast<std::size_t>(i)]) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return pts;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || count < 2 * workers) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (int i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace weylcps
