#include "dirac/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dirac/error.hpp"
#include "dirac/kernels.hpp"

namespace dirac {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Both columns of the fundamental matrix, stacked as (u1, u2, w1, w2).
auto fundamental_rhs(const DiracCoefficients& c, double lambda) {
  return [&c, lambda](double x, const Vec<4>& s, Vec<4>& d) {
    const double p = c.p(x);
    const double q = c.q(x);
    const RealState2 du = dirac_rhs(p, q, lambda, {s[0], s[1]});
    const RealState2 dw = dirac_rhs(p, q, lambda, {s[2], s[3]});
    d = {du.y1, du.y2, dw.y1, dw.y2};
  };
}

std::vector<Vec<4>> fundamental_on_grid(const DiracCoefficients& c, double lambda,
                                        std::size_t intervals, const IntegratorSpec& spec) {
  Propagator<Vec<4>> prop(spec);
  auto rhs = fundamental_rhs(c, lambda);
  std::vector<Vec<4>> out(intervals + 1);
  Vec<4> s{1.0, 0.0, 0.0, 1.0};
  out[0] = s;
  const double h = 1.0 / static_cast<double>(intervals);
  for (std::size_t i = 1; i <= intervals; ++i) {
    prop.advance(rhs, s, static_cast<double>(i - 1) * h, static_cast<double>(i) * h);
    out[i] = s;
  }
  return out;
}

double wrap_pi(double a) {
  // into (-pi, pi]
  a = std::remainder(a, kTwoPi);
  return a <= -std::numbers::pi ? a + kTwoPi : a;
}

std::vector<double> unwrap_phases(const std::vector<double>& raw, const char* what) {
  std::vector<double> out(raw.size());
  if (raw.empty()) return out;
  out[0] = raw[0];
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const double step = wrap_pi(raw[i] - raw[i - 1]);
    if (std::abs(step) >= 0.5 * std::numbers::pi) {
      std::ostringstream msg;
      msg << what << " jumps by " << step << " rad between grid points " << i - 1 << " and " << i
          << "; refine the period grid";
      throw UnwrapJump(msg.str());
    }
    out[i] = out[i - 1] + step;
  }
  return out;
}

double round_to_turns(double a) { return kTwoPi * std::round(a / kTwoPi); }

}  // namespace

Monodromy monodromy(const DiracCoefficients& c, double lambda, const IntegratorSpec& spec) {
  Propagator<Vec<4>> prop(spec);
  Vec<4> s{1.0, 0.0, 0.0, 1.0};
  prop.advance(fundamental_rhs(c, lambda), s, 0.0, 1.0);
  // columns are the images of e1 and e2
  return {{s[0], s[2], s[1], s[3]}, lambda};
}

Quasimomentum quasimomentum(const Monodromy& mono) {
  const double half = 0.5 * mono.trace();
  if (std::abs(half) <= 1.0) return std::acos(half);
  return GapIndicator{std::abs(half) - 1.0};
}

std::vector<double> BandStructure::edges() const {
  std::vector<double> out;
  for (const Band& b : bands) {
    if (b.lower_is_edge) out.push_back(b.a);
    if (b.upper_is_edge) out.push_back(b.b);
  }
  return out;
}

BandStructure band_scan(const DiracCoefficients& c, double lambda_lo, double lambda_hi,
                        double resolution, const IntegratorSpec& spec) {
  if (!(resolution > 0.0)) throw ConfigError("band scan resolution must be > 0");
  BandStructure out;
  out.scan_range = {lambda_lo, lambda_hi};
  out.resolution = resolution;
  if (!(lambda_hi > lambda_lo)) return out;

  const auto n = static_cast<std::size_t>(std::ceil((lambda_hi - lambda_lo) / resolution)) + 1;
  out.lambdas.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.lambdas[i] = std::min(lambda_hi, lambda_lo + static_cast<double>(i) * resolution);
  }
  out.traces = kernels::trace_scan_parallel(c, out.lambdas, spec);

  // Tolerance for |trace/2| = 1 touching points (closed gaps, k = 0 or pi).
  constexpr double touch = 1e-9;
  std::vector<char> in(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = std::abs(0.5 * out.traces[i]) - 1.0 <= touch;

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (in[i] != in[i - 1] && in[i] != in[i + 1]) {
      std::ostringstream msg;
      msg << "isolated " << (in[i] ? "band" : "gap") << " sample at lambda = " << out.lambdas[i]
          << "; a feature narrower than 2 * resolution is suspected, reduce the resolution";
      throw ScanTooCoarse(msg.str());
    }
  }

  auto excess = [&](double lambda) { return std::abs(0.5 * monodromy(c, lambda, spec).trace()) - 1.0; };
  auto refine = [&](double inside, double outside) {
    const double tol = 1e-6 * resolution;
    while (std::abs(outside - inside) > tol) {
      const double mid = 0.5 * (inside + outside);
      if (excess(mid) <= touch) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return 0.5 * (inside + outside);
  };

  std::size_t i = 0;
  while (i < n) {
    if (!in[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && in[j + 1]) ++j;
    Band band{};
    band.lower_is_edge = i > 0;
    band.upper_is_edge = j + 1 < n;
    band.a = band.lower_is_edge ? refine(out.lambdas[i], out.lambdas[i - 1]) : out.lambdas[i];
    band.b = band.upper_is_edge ? refine(out.lambdas[j], out.lambdas[j + 1]) : out.lambdas[j];
    // direction from the arccos branch between the two innermost samples
    const std::size_t lo = i + (j - i) / 4;
    const std::size_t hi = std::max(lo + 1, j - (j - i) / 4);
    if (hi <= j) {
      const double k_lo = std::acos(std::clamp(0.5 * out.traces[lo], -1.0, 1.0));
      const double k_hi = std::acos(std::clamp(0.5 * out.traces[hi], -1.0, 1.0));
      band.k_direction = k_hi >= k_lo ? 1 : -1;
    } else {
      band.k_direction = 1;
    }
    out.bands.push_back(band);
    i = j + 1;
  }
  return out;
}

FloquetSolution floquet_solution(const DiracCoefficients& c, double lambda,
                                 const IntegratorSpec& spec, const FloquetOptions& opt) {
  if (opt.grid_intervals < 8) throw ConfigError("period grid needs at least 8 intervals");
  const auto phi = fundamental_on_grid(c, lambda, opt.grid_intervals, spec);
  const Vec<4>& end = phi.back();
  const double m11 = end[0], m21 = end[1], m12 = end[2], m22 = end[3];
  const double half = 0.5 * (m11 + m22);
  if (std::abs(half) > 1.0) {
    std::ostringstream msg;
    msg << "lambda = " << lambda << " lies in a spectral gap (|trace/2| - 1 = " << std::abs(half) - 1.0
        << ")";
    throw GapEnergy(msg.str());
  }
  const double k = std::acos(half);
  if (k < opt.edge_margin || k > std::numbers::pi - opt.edge_margin) {
    std::ostringstream msg;
    msg << "quasimomentum " << k << " at lambda = " << lambda << " is within " << opt.edge_margin
        << " of a band edge";
    throw BandEdge(msg.str());
  }

  const cplx mu = std::polar(1.0, k);
  cplx va[2] = {cplx(m12, 0.0), mu - m11};
  cplx vb[2] = {mu - m22, cplx(m21, 0.0)};
  const double na = std::sqrt(std::norm(va[0]) + std::norm(va[1]));
  const double nb = std::sqrt(std::norm(vb[0]) + std::norm(vb[1]));
  const double scale = std::abs(m11) + std::abs(m12) + std::abs(m21) + std::abs(m22);
  cplx v[2];
  double nv;
  if (na >= nb) {
    v[0] = va[0], v[1] = va[1], nv = na;
  } else {
    v[0] = vb[0], v[1] = vb[1], nv = nb;
  }
  if (nv < 1e-10 * scale) throw DegenerateEigenvector("monodromy eigenvector is ill-conditioned");
  v[0] /= nv;
  v[1] /= nv;
  const std::size_t lead = std::abs(v[0]) > 1e-14 ? 0 : 1;
  const cplx rot = std::conj(v[lead]) / std::abs(v[lead]);
  v[0] *= rot;
  v[1] *= rot;
  v[lead] = cplx(v[lead].real(), 0.0);

  FloquetSolution sol;
  sol.coefficients = c;
  sol.lambda = lambda;
  sol.k = k;
  sol.exponent = k;
  sol.intervals = opt.grid_intervals;
  const std::size_t n = phi.size();
  sol.g1.resize(n);
  sol.g2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec<4>& s = phi[i];
    sol.g1[i] = s[0] * v[0] + s[2] * v[1];
    sol.g2[i] = s[1] * v[0] + s[3] * v[1];
  }
  double omega = 2.0 * std::imag(std::conj(sol.g1[0]) * sol.g2[0]);
  if (std::abs(omega) < 1e-12) throw DegenerateEigenvector("Wronskian of the Floquet pair vanishes");
  if (omega < 0.0) {
    for (auto& g : sol.g1) g = std::conj(g);
    for (auto& g : sol.g2) g = std::conj(g);
    sol.exponent = -k;
    omega = -omega;
  }
  sol.omega = omega;
  sol.dg1.resize(n);
  sol.dg2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sol.x(i);
    const double p = c.p(x);
    const double q = c.q(x);
    sol.dg1[i] = -q * sol.g1[i] + (lambda + p) * sol.g2[i];
    sol.dg2[i] = (p - lambda) * sol.g1[i] + q * sol.g2[i];
  }
  return sol;
}

DerivedPeriodicData derived_data(const FloquetSolution& sol) {
  const std::size_t n = sol.g1.size();
  DerivedPeriodicData d;
  d.x.resize(n);
  d.abs_g1.resize(n);
  d.abs_g2.resize(n);
  std::vector<double> raw1(n), raw2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.x[i] = sol.x(i);
    d.abs_g1[i] = std::abs(sol.g1[i]);
    d.abs_g2[i] = std::abs(sol.g2[i]);
    raw1[i] = std::arg(sol.g1[i]);
    raw2[i] = std::arg(sol.g2[i]);
  }
  d.gamma1 = unwrap_phases(raw1, "arg g1");
  d.gamma2 = unwrap_phases(raw2, "arg g2");

  const double kappa = sol.exponent;
  const double omega = sol.omega;
  const double lambda = sol.lambda;
  d.phi1.resize(n);
  d.phi2.resize(n);
  d.Gamma1.resize(n);
  d.Psi.resize(n);
  std::vector<double> raw_Gamma2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.phi1[i] = d.gamma1[i] - kappa * d.x[i];
    d.phi2[i] = d.gamma2[i] - kappa * d.x[i];
    // sin(gamma2 - gamma1) > 0 when omega > 0, so the difference stays in (0, pi)
    const double diff = d.gamma2[i] - d.gamma1[i];
    d.Gamma1[i] = 2.0 * (diff - kTwoPi * std::floor(diff / kTwoPi));
    const double a1 = d.abs_g1[i] * d.abs_g1[i];
    const double a2 = d.abs_g2[i] * d.abs_g2[i];
    d.Psi[i] = std::sqrt(std::max(0.0, a1 * a1 + a2 * a2 - 2.0 * a1 * a2 * std::cos(d.Gamma1[i])));
    raw_Gamma2[i] = std::atan2(-a2 * std::sin(d.Gamma1[i]), a1 - a2 * std::cos(d.Gamma1[i]));
  }
  d.Gamma2 = unwrap_phases(raw_Gamma2, "Gamma2");
  d.delta.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.delta[i] = 2.0 * d.phi1[i] + d.Gamma2[i];

  d.d_abs2_g1.resize(n);
  d.d_abs2_g2.resize(n);
  d.d_gamma1.resize(n);
  d.d_gamma2.resize(n);
  d.d_Psi.resize(n);
  d.d_Gamma2.resize(n);
  d.d_delta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const cplx g1 = sol.g1[i], g2 = sol.g2[i], dg1 = sol.dg1[i], dg2 = sol.dg2[i];
    const double p = sol.coefficients.p(d.x[i]);
    const double a1 = std::norm(g1);
    const double a2 = std::norm(g2);
    const double da1 = 2.0 * std::real(std::conj(g1) * dg1);
    const double da2 = 2.0 * std::real(std::conj(g2) * dg2);
    d.d_abs2_g1[i] = da1;
    d.d_abs2_g2[i] = da2;
    d.d_gamma1[i] = omega * (lambda + p) / (2.0 * a1);
    d.d_gamma2[i] = omega * (lambda - p) / (2.0 * a2);
    // Psi exp(i Gamma2) = |g1|^2 - z^2 / |g1|^2 with z = conj(g1) g2
    const cplx z = std::conj(g1) * g2;
    const cplx dz = std::conj(dg1) * g2 + std::conj(g1) * dg2;
    const cplx G = a1 - z * z / a1;
    const cplx dG = da1 - (2.0 * z * dz * a1 - z * z * da1) / (a1 * a1);
    const double psi2 = std::norm(G);
    d.d_Psi[i] = std::real(std::conj(G) * dG) / std::sqrt(psi2);
    d.d_Gamma2[i] = std::imag(std::conj(G) * dG) / psi2;
    d.d_delta[i] = 2.0 * d.d_gamma1[i] - 2.0 * kappa + d.d_Gamma2[i];
  }

  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) sum += d.Psi[i];
  d.psi_mean = sum / static_cast<double>(n - 1);
  return d;
}

std::pair<double, double> gamma_derivative(const FloquetSolution& sol,
                                           const DerivedPeriodicData& data, double x) {
  const double t = x - std::floor(x);
  const double pos = t * static_cast<double>(sol.intervals);
  const double idx = std::round(pos);
  if (std::abs(pos - idx) > 1e-6) {
    throw std::invalid_argument("gamma_derivative expects a period-grid abscissa");
  }
  const auto i = static_cast<std::size_t>(idx) % sol.intervals;
  const double p = sol.coefficients.p(x);
  const double a1 = data.abs_g1[i] * data.abs_g1[i];
  const double a2 = data.abs_g2[i] * data.abs_g2[i];
  return {sol.omega * (sol.lambda + p) / (2.0 * a1), sol.omega * (sol.lambda - p) / (2.0 * a2)};
}

FloquetFrame::FloquetFrame(FloquetSolution sol, DerivedPeriodicData data)
    : sol_(std::move(sol)), data_(std::move(data)), intervals_(sol_.intervals) {
  const std::size_t n = data_.x.size();
  const std::size_t last = n - 1;
  const double kappa = sol_.exponent;

  auto periodic = [&](std::vector<double> v, std::vector<double> s) {
    v[last] = v[0];
    s[last] = s[0];
    return PeriodicHermite(std::move(v), std::move(s), 0.0);
  };
  auto winding = [&](std::vector<double> v, std::vector<double> s, double base) {
    const double drift = base + round_to_turns(v[last] - v[0] - base);
    v[last] = v[0] + drift;
    s[last] = s[0];
    return PeriodicHermite(std::move(v), std::move(s), drift);
  };

  std::vector<double> a1(n), a2(n);
  for (std::size_t i = 0; i < n; ++i) {
    a1[i] = data_.abs_g1[i] * data_.abs_g1[i];
    a2[i] = data_.abs_g2[i] * data_.abs_g2[i];
    max_norm2_ = std::max(max_norm2_, a1[i] + a2[i]);
  }
  abs2_g1_ = periodic(a1, data_.d_abs2_g1);
  abs2_g2_ = periodic(a2, data_.d_abs2_g2);
  psi_ = periodic(data_.Psi, data_.d_Psi);
  delta_ = winding(data_.delta, data_.d_delta, 0.0);
  gamma1_ = winding(data_.gamma1, data_.d_gamma1, kappa);
  gamma2_ = winding(data_.gamma2, data_.d_gamma2, kappa);
  Gamma2_ = winding(data_.Gamma2, data_.d_Gamma2, 0.0);

  // g on [0, 1] with the Floquet multiplier closing the last node exactly
  const cplx mult = std::polar(1.0, kappa);
  auto part = [&](const std::vector<cplx>& g, const std::vector<cplx>& dg, bool imag_part) {
    std::vector<double> v(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      const cplx gi = i == last ? mult * g[0] : g[i];
      const cplx di = i == last ? mult * dg[0] : dg[i];
      v[i] = imag_part ? gi.imag() : gi.real();
      s[i] = imag_part ? di.imag() : di.real();
    }
    return PeriodicHermite(std::move(v), std::move(s), 0.0);
  };
  re_g1_ = part(sol_.g1, sol_.dg1, false);
  im_g1_ = part(sol_.g1, sol_.dg1, true);
  re_g2_ = part(sol_.g2, sol_.dg2, false);
  im_g2_ = part(sol_.g2, sol_.dg2, true);
}

cplx FloquetFrame::g1(double x) const {
  GridCell c = locate(x, intervals_);
  const double n = c.period_index;
  c.period_index = 0.0;
  return cplx(re_g1_(c), im_g1_(c)) * std::polar(1.0, sol_.exponent * n);
}

cplx FloquetFrame::g2(double x) const {
  GridCell c = locate(x, intervals_);
  const double n = c.period_index;
  c.period_index = 0.0;
  return cplx(re_g2_(c), im_g2_(c)) * std::polar(1.0, sol_.exponent * n);
}

std::pair<double, double> FloquetFrame::gamma_prime(double x) const {
  const double p = sol_.coefficients.p(x);
  const GridCell c = locate(x, intervals_);
  return {sol_.omega * (sol_.lambda + p) / (2.0 * abs2_g1_(c)),
          sol_.omega * (sol_.lambda - p) / (2.0 * abs2_g2_(c))};
}

std::shared_ptr<const FloquetFrame> make_frame(const DiracCoefficients& c, double lambda,
                                               const IntegratorSpec& spec,
                                               const FloquetOptions& opt) {
  FloquetSolution sol = floquet_solution(c, lambda, spec, opt);
  DerivedPeriodicData data = derived_data(sol);
  return std::make_shared<const FloquetFrame>(std::move(sol), std::move(data));
}

}  // namespace dirac
