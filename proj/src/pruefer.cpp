#include "dirac/pruefer.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dirac/error.hpp"

namespace dirac {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double nearest_branch(double angle, double ref) {
  return ref + std::remainder(angle - ref, kTwoPi);
}

}  // namespace

PrueferState to_prufer(RealState2 y, const FloquetFrame& f, double x,
                       std::optional<double> eta_prev) {
  if (y.y1 == 0.0 && y.y2 == 0.0) throw ZeroSolution("to_prufer: y = (0, 0) has no polar form");
  const cplx rho = (2.0 / f.omega()) * (std::conj(f.g1(x)) * y.y2 - std::conj(f.g2(x)) * y.y1);
  double eta = std::arg(rho);
  if (eta_prev) {
    eta = nearest_branch(eta, *eta_prev);
  } else if (eta <= 0.0) {
    eta += kTwoPi;
  }
  return state_from_eta(std::abs(rho), eta, f, x);
}

RealState2 from_prufer(const PrueferState& s, const FloquetFrame& f, double x) {
  return {s.R * std::sqrt(f.abs2_g1(x)) * std::sin(s.theta1),
          s.R * std::sqrt(f.abs2_g2(x)) * std::sin(s.theta2)};
}

PrueferState state_from_eta(double R, double eta, const FloquetFrame& f, double x) {
  PrueferState s;
  s.R = R;
  s.eta = eta;
  s.theta1 = eta + f.gamma1(x);
  s.theta2 = eta + f.gamma2(x);
  s.xi = 2.0 * s.theta1 + f.Gamma2(x);
  return s;
}

PrueferState state_from_xi(double R, double xi, const FloquetFrame& f, double x) {
  const double theta1 = 0.5 * (xi - f.Gamma2(x));
  PrueferState s = state_from_eta(R, theta1 - f.gamma1(x), f, x);
  s.xi = xi;
  return s;
}

TripleRates prufer_rhs(const PrueferState& s, double V, const FloquetFrame& f, double x) {
  const auto [gp1, gp2] = f.gamma_prime(x);
  const double a1 = f.abs2_g1(x);
  const double a2 = f.abs2_g2(x);
  const double w = V / f.omega();
  const double s1 = std::sin(s.theta1);
  const double s2 = std::sin(s.theta2);
  const double turn = 2.0 * w * (a1 * s1 * s1 - a2 * s2 * s2);
  return {w * (a1 * std::sin(2.0 * s.theta1) - a2 * std::sin(2.0 * s.theta2)), gp1 - turn,
          gp2 - turn};
}

PairRates R_xi_rhs(const PrueferState& s, double V, const FloquetFrame& f, double x) {
  const FrameSample fs = f.sample(x);
  const double w = V / f.omega();
  return {w * fs.psi * std::sin(s.xi),
          2.0 * f.exponent() + fs.delta_prime -
              2.0 * w * (fs.abs2_g1 - fs.abs2_g2 - fs.psi * std::cos(s.xi))};
}

PrueferTrajectory integrate_pair(const FloquetFrame& f, const std::function<double(double)>& V,
                                 double x0, double x1, const PrueferState& s0,
                                 const IntegratorSpec& spec) {
  Propagator<Vec<2>> prop(spec);
  auto rhs = [&](double x, const Vec<2>& s, Vec<2>& d) {
    const PairRates r = zeta_rates(f, x, V(x), s[1]);
    d = {r.dlnR, r.dxi};
  };
  Vec<2> s{std::log(s0.R), zeta_from_xi(f, x0, s0.xi)};
  PrueferTrajectory out;
  double x = x0;
  double eta = s0.eta;
  for (double xg : output_grid(x0, x1, spec.dense_output_stride)) {
    prop.advance(rhs, s, x, xg);
    x = xg;
    PrueferState st = state_from_xi(std::exp(s[0]), xi_from_zeta(f, x, s[1]), f, x);
    // theta1 is only fixed mod pi by xi; keep eta continuous
    const double shift = std::numbers::pi * std::round((eta - st.eta) / std::numbers::pi);
    st.eta += shift;
    st.theta1 += shift;
    st.theta2 += shift;
    eta = st.eta;
    out.push_back({x, s[0], st});
  }
  return out;
}

PrueferTrajectory integrate_triple(const FloquetFrame& f, const std::function<double(double)>& V,
                                   double x0, double x1, const PrueferState& s0,
                                   const IntegratorSpec& spec) {
  Propagator<Vec<2>> prop(spec);
  auto rhs = [&](double x, const Vec<2>& s, Vec<2>& d) {
    const PrueferState st = state_from_eta(1.0, s[1], f, x);
    const TripleRates r = prufer_rhs(st, V(x), f, x);
    d = {r.dlnR, r.dtheta1 - f.gamma_prime(x).first};
  };
  Vec<2> s{std::log(s0.R), s0.eta};
  PrueferTrajectory out;
  double x = x0;
  for (double xg : output_grid(x0, x1, spec.dense_output_stride)) {
    prop.advance(rhs, s, x, xg);
    x = xg;
    out.push_back({x, s[0], state_from_eta(std::exp(s[0]), s[1], f, x)});
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const PrueferTrajectory& traj) {
  os << "x,R,ln_R,eta,theta1,theta2,xi\n";
  for (const PrueferPoint& p : traj) {
    fmt::print(os, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", p.x, p.state.R,
               p.ln_R, p.state.eta, p.state.theta1, p.state.theta2, p.state.xi);
  }
}

}  // namespace dirac
