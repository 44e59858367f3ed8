#pragma once

// Polar coordinates of a real solution y relative to the Floquet frame:
//   rho = (2 / omega) (conj(g1) y2 - conj(g2) y1),  y = Im(rho g),
//   R = |rho|, eta = arg rho, theta_j = eta + gamma_j, xi = 2 theta1 + Gamma2.

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dirac/floquet.hpp"

namespace dirac {

struct PrueferState {
  double R = 1.0;
  double eta = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double xi = 0.0;
};

/// eta is unwrapped against eta_prev when given, otherwise placed in (0, 2 pi].
PrueferState to_prufer(RealState2 y, const FloquetFrame& f, double x,
                       std::optional<double> eta_prev = std::nullopt);

RealState2 from_prufer(const PrueferState& s, const FloquetFrame& f, double x);

/// Fills theta1, theta2 and xi from (R, eta).
PrueferState state_from_eta(double R, double eta, const FloquetFrame& f, double x);
/// Fills eta, theta1 and theta2 from (R, xi), with theta1 = (xi - Gamma2) / 2.
PrueferState state_from_xi(double R, double xi, const FloquetFrame& f, double x);

struct TripleRates {
  double dlnR;
  double dtheta1;
  double dtheta2;
};

/// R'/R and theta_j' from the three-variable system (cross-check path).
TripleRates prufer_rhs(const PrueferState& s, double V, const FloquetFrame& f, double x);

struct PairRates {
  double dlnR;
  double dxi;
};

/// R'/R = (V / omega) Psi sin xi and
/// xi' = 2 kappa + delta' - (2 V / omega) (|g1|^2 - |g2|^2 - Psi cos xi).
PairRates R_xi_rhs(const PrueferState& s, double V, const FloquetFrame& f, double x);

// The production integrators carry zeta = xi - 2 kappa x - delta(x), which
// stays bounded, instead of xi itself.
inline double xi_from_zeta(const FloquetFrame& f, double x, double zeta) {
  return zeta + 2.0 * f.exponent() * x + f.delta(x);
}
inline double zeta_from_xi(const FloquetFrame& f, double x, double xi) {
  return xi - 2.0 * f.exponent() * x - f.delta(x);
}

/// (ln R)' and zeta' for potential value V.
inline PairRates zeta_rates(const FloquetFrame& f, double x, double V, double zeta) {
  const FrameSample s = f.sample(x);
  const double xi = zeta + 2.0 * f.exponent() * x + s.delta;
  const double w = V / f.omega();
  return {w * s.psi * std::sin(xi), -2.0 * w * (s.abs2_g1 - s.abs2_g2 - s.psi * std::cos(xi))};
}

struct PrueferPoint {
  double x;
  double ln_R;
  PrueferState state;
};
using PrueferTrajectory = std::vector<PrueferPoint>;

/// Integrates (ln R, zeta) for a given potential, output on output_grid.
PrueferTrajectory integrate_pair(const FloquetFrame& f, const std::function<double(double)>& V,
                                 double x0, double x1, const PrueferState& s0,
                                 const IntegratorSpec& spec);

/// Integrates (ln R, eta) through the three-variable system, same grid.
PrueferTrajectory integrate_triple(const FloquetFrame& f, const std::function<double(double)>& V,
                                   double x0, double x1, const PrueferState& s0,
                                   const IntegratorSpec& spec);

/// Columns: x, R, ln_R, eta, theta1, theta2, xi.
void write_trajectory_csv(std::ostream& os, const PrueferTrajectory& traj);

}  // namespace dirac
