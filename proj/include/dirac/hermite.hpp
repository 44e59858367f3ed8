#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace dirac {

/// Location of x inside a uniform grid on [0, 1] extended periodically.
struct GridCell {
  double period_index;  // floor(x)
  std::size_t i;        // cell index in [0, intervals)
  double u;             // local coordinate in [0, 1)
};

inline GridCell locate(double x, std::size_t intervals) {
  const double n = std::floor(x);
  const double pos = (x - n) * static_cast<double>(intervals);
  std::size_t i = static_cast<std::size_t>(pos);
  if (i >= intervals) i = intervals - 1;
  return {n, i, pos - static_cast<double>(i)};
}

/// Cubic Hermite interpolant of a quantity sampled (value and slope) on a
/// uniform grid of [0, 1], continued by f(x + n) = f(x) + n * drift.
/// Periodic quantities have drift 0; unwrapped angles carry their winding.
class PeriodicHermite {
 public:
  PeriodicHermite() = default;
  PeriodicHermite(std::vector<double> values, std::vector<double> slopes, double drift)
      : f_(std::move(values)), d_(std::move(slopes)), drift_(drift),
        intervals_(f_.size() - 1), h_(1.0 / static_cast<double>(f_.size() - 1)) {}

  double operator()(const GridCell& c) const {
    const double u = c.u;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    return h00 * f_[c.i] + h10 * h_ * d_[c.i] + h01 * f_[c.i + 1] + h11 * h_ * d_[c.i + 1] +
           c.period_index * drift_;
  }

  double derivative(const GridCell& c) const {
    const double u = c.u;
    const double u2 = u * u;
    const double g00 = (6.0 * u2 - 6.0 * u) / h_;
    const double g10 = 3.0 * u2 - 4.0 * u + 1.0;
    const double g01 = (-6.0 * u2 + 6.0 * u) / h_;
    const double g11 = 3.0 * u2 - 2.0 * u;
    return g00 * f_[c.i] + g10 * d_[c.i] + g01 * f_[c.i + 1] + g11 * d_[c.i + 1];
  }

  double operator()(double x) const { return (*this)(locate(x, intervals_)); }
  double derivative(double x) const { return derivative(locate(x, intervals_)); }

  std::size_t intervals() const { return intervals_; }
  double drift() const { return drift_; }

 private:
  std::vector<double> f_;
  std::vector<double> d_;
  double drift_ = 0.0;
  std::size_t intervals_ = 0;
  double h_ = 0.0;
};

}  // namespace dirac
