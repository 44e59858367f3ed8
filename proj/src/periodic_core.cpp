#include "dirac/periodic_core.hpp"

#include <cmath>
#include <numbers>

#include "dirac/error.hpp"

namespace dirac {

void IntegratorSpec::validate() const {
  auto ok_tol = [](double t) { return std::isfinite(t) && t > 0.0 && t <= 1e-4; };
  if (!ok_tol(rel_tol)) throw ConfigError("rel_tol must lie in (0, 1e-4]");
  if (!ok_tol(abs_tol)) throw ConfigError("abs_tol must lie in (0, 1e-4]");
  if (!(max_step > 0.0) || !std::isfinite(max_step)) throw ConfigError("max_step must be > 0");
  if (!(dense_output_stride > 0.0) || !std::isfinite(dense_output_stride)) {
    throw ConfigError("dense_output_stride must be > 0");
  }
}

std::vector<double> output_grid(double x0, double x1, double stride) {
  std::vector<double> grid{x0};
  if (x0 == x1) return grid;
  const double dir = x1 > x0 ? 1.0 : -1.0;
  double x = x0;
  for (;;) {
    const double dx = stride * std::max(1.0, std::abs(x));
    const double next = x + dir * dx;
    if (dir * (x1 - next) <= 0.5 * dx) break;
    grid.push_back(next);
    x = next;
  }
  grid.push_back(x1);
  return grid;
}

double PeriodicCoefficient::operator()(double x) const {
  const double t = x - std::floor(x);
  const double w = 2.0 * std::numbers::pi * t;
  double sum = 0.5 * a0;
  for (std::size_t n = 0; n < cos_coeffs.size(); ++n) {
    sum += cos_coeffs[n] * std::cos(static_cast<double>(n + 1) * w);
  }
  for (std::size_t n = 0; n < sin_coeffs.size(); ++n) {
    sum += sin_coeffs[n] * std::sin(static_cast<double>(n + 1) * w);
  }
  return sum;
}

double PeriodicCoefficient::derivative(double x) const {
  const double t = x - std::floor(x);
  const double w = 2.0 * std::numbers::pi * t;
  double sum = 0.0;
  for (std::size_t n = 0; n < cos_coeffs.size(); ++n) {
    const double f = 2.0 * std::numbers::pi * static_cast<double>(n + 1);
    sum -= f * cos_coeffs[n] * std::sin(static_cast<double>(n + 1) * w);
  }
  for (std::size_t n = 0; n < sin_coeffs.size(); ++n) {
    const double f = 2.0 * std::numbers::pi * static_cast<double>(n + 1);
    sum += f * sin_coeffs[n] * std::cos(static_cast<double>(n + 1) * w);
  }
  return sum;
}

bool PeriodicCoefficient::is_zero() const {
  auto zero = [](const std::vector<double>& v) {
    for (double c : v) {
      if (c != 0.0) return false;
    }
    return true;
  };
  return a0 == 0.0 && zero(cos_coeffs) && zero(sin_coeffs);
}

void PeriodicCoefficient::validate() const {
  if (!std::isfinite(a0)) throw ConfigError("a0 must be finite");
  for (double c : cos_coeffs) {
    if (!std::isfinite(c)) throw ConfigError("cos coefficients must be finite");
  }
  for (double c : sin_coeffs) {
    if (!std::isfinite(c)) throw ConfigError("sin coefficients must be finite");
  }
}

double eval_coefficient(const PeriodicCoefficient& c, double x) { return c(x); }

RealState2 unperturbed_rhs(const DiracCoefficients& c, double lambda, double x, RealState2 y) {
  return dirac_rhs(c.p(x), c.q(x), lambda, y);
}

RealState2 perturbed_rhs(const DiracCoefficients& c, double V_at_x, double lambda, double x,
                         RealState2 y) {
  return dirac_rhs(c.p(x) + V_at_x, c.q(x), lambda, y);
}

RealState2 perturbed_rhs(const DiracCoefficients& c, const std::function<double(double)>& V,
                         double lambda, double x, RealState2 y) {
  return perturbed_rhs(c, V(x), lambda, x, y);
}

Trajectory integrate(const Rhs2& system, double x0, double x1, RealState2 y0,
                     const IntegratorSpec& spec) {
  if (!std::isfinite(y0.y1) || !std::isfinite(y0.y2)) {
    throw NonFiniteState("initial state must be finite");
  }
  Propagator<Vec<2>> prop(spec);
  auto rhs = [&system](double x, const Vec<2>& y, Vec<2>& d) {
    const RealState2 r = system(x, {y[0], y[1]});
    d = {r.y1, r.y2};
  };
  Trajectory out;
  Vec<2> y{y0.y1, y0.y2};
  const auto grid = output_grid(x0, x1, spec.dense_output_stride);
  out.reserve(grid.size());
  out.push_back({x0, y0});
  for (std::size_t i = 1; i < grid.size(); ++i) {
    prop.advance(rhs, y, grid[i - 1], grid[i]);
    out.push_back({grid[i], {y[0], y[1]}});
  }
  return out;
}

}  // namespace dirac
