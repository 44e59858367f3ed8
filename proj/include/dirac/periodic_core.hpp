#pragma once

#include <functional>
#include <vector>

#include "dirac/ode.hpp"

namespace dirac {

/// Period-1 real function a0/2 + sum_n (c_n cos 2 pi n x + s_n sin 2 pi n x), n >= 1.
struct PeriodicCoefficient {
  double a0 = 0.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;

  double operator()(double x) const;
  double derivative(double x) const;
  double mean() const { return 0.5 * a0; }
  bool is_zero() const;
  /// Throws ConfigError on non-finite entries.
  void validate() const;

  static PeriodicCoefficient constant(double value) { return {2.0 * value, {}, {}}; }
};

double eval_coefficient(const PeriodicCoefficient& c, double x);

/// The pair (p, q) of the potential matrix [[p, q], [q, -p]].
struct DiracCoefficients {
  PeriodicCoefficient p;
  PeriodicCoefficient q;

  void validate() const {
    p.validate();
    q.validate();
  }
};

struct RealState2 {
  double y1 = 0.0;
  double y2 = 0.0;
};

// [[0,-1],[1,0]] y' + [[p+V, q], [q, -p-V]] y = lambda y, solved for y':
//   y1' = -q y1 + (lambda + p + V) y2
//   y2' = (p + V - lambda) y1 + q y2
inline RealState2 dirac_rhs(double p, double q, double lambda, RealState2 y) {
  return {-q * y.y1 + (lambda + p) * y.y2, (p - lambda) * y.y1 + q * y.y2};
}

RealState2 unperturbed_rhs(const DiracCoefficients& c, double lambda, double x, RealState2 y);

/// Same system with p replaced by p + V(x) in the potential matrix.
RealState2 perturbed_rhs(const DiracCoefficients& c, double V_at_x, double lambda, double x,
                         RealState2 y);
RealState2 perturbed_rhs(const DiracCoefficients& c, const std::function<double(double)>& V,
                         double lambda, double x, RealState2 y);

struct TrajectoryPoint {
  double x;
  RealState2 y;
};
using Trajectory = std::vector<TrajectoryPoint>;
using Rhs2 = std::function<RealState2(double, RealState2)>;

/// Dense trajectory on output_grid(x0, x1, spec.dense_output_stride).
Trajectory integrate(const Rhs2& system, double x0, double x1, RealState2 y0,
                     const IntegratorSpec& spec);

}  // namespace dirac
