#include "dirac/verify.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "dirac/error.hpp"
#include "dirac/kernels.hpp"

namespace dirac {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string piece_id(const PotentialPiece& p) {
  return fmt::format("{}[{:.10g},{:.10g}]", side_name(p.side), p.a, p.x_end);
}

struct LineFit {
  double slope;
  double intercept;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {slope, my - slope * mx};
}

template <class F>
double sup_running_integral(const F& f, double x0, double x1, double panel, bool parallel) {
  const kernels::PanelGrid grid{x0, x1, panel};
  const auto panels = parallel ? kernels::panel_integrals_parallel(f, grid)
                               : kernels::panel_integrals_serial(f, grid);
  const auto running = kernels::prefix_sum(panels);
  double sup = 0.0;
  for (double v : running) sup = std::max(sup, std::abs(v));
  return sup;
}

void finish_products(OscCheck& r) {
  r.product.clear();
  for (std::size_t i = 0; i < r.x0_list.size(); ++i) {
    r.product.push_back(r.sup_integral[i] * std::pow(r.x0_list[i], r.beta));
  }
  const auto [lo, hi] = std::minmax_element(r.product.begin(), r.product.end());
  r.spread = *lo > 0.0 ? *hi / *lo : INFINITY;
  r.growth = r.product.front() > 0.0 ? r.product.back() / r.product.front() : INFINITY;
}

// Cumulative int_0^x dt / (1 + t^beta) on unit panels, for general beta.
class DriftIntegral {
 public:
  DriftIntegral(double beta, double x_max) : beta_(beta) {
    const auto n = static_cast<std::size_t>(std::ceil(x_max)) + 1;
    const auto f = [this](double t) { return 1.0 / (1.0 + std::pow(t, beta_)); };
    std::vector<double> panels(n);
    for (std::size_t j = 0; j < n; ++j) {
      panels[j] = kernels::gauss_panel(f, static_cast<double>(j), static_cast<double>(j + 1));
    }
    table_ = kernels::prefix_sum(panels);
  }

  double operator()(double x) const {
    const double j = std::floor(x);
    const auto f = [this](double t) { return 1.0 / (1.0 + std::pow(t, beta_)); };
    return table_[static_cast<std::size_t>(j)] + kernels::gauss_panel(f, j, x);
  }

 private:
  double beta_;
  std::vector<double> table_;
};

// y-system with the piece potential for several initial states sharing the
// piece phase; ln R of each solution (relative to the first abscissa) is read
// through to_prufer. Abscissae may run either way.
std::vector<std::vector<double>> full_system_ln_R(const PotentialPiece& piece, double zeta_piece0,
                                                  const FloquetFrame& frame,
                                                  const std::vector<PrueferState>& s0,
                                                  const std::vector<double>& xs,
                                                  const IntegratorSpec& spec) {
  const PieceField field = piece.field();
  const DiracCoefficients& c = frame.solution().coefficients;
  const double lambda = frame.lambda();
  const std::size_t m = s0.size();
  auto rhs = [&](double x, const std::vector<double>& s, std::vector<double>& d) {
    const FrameSample fs = piece.frame->sample(x);
    const double xi = s[0] + 2.0 * piece.frame->exponent() * x + fs.delta;
    const double V = field.potential(x, xi);
    d[0] = -2.0 * V / piece.frame->omega() * (fs.abs2_g1 - fs.abs2_g2 - fs.psi * std::cos(xi));
    const double p = c.p(x) + V, q = c.q(x);
    for (std::size_t j = 0; j < m; ++j) {
      const RealState2 dy = dirac_rhs(p, q, lambda, {s[1 + 2 * j], s[2 + 2 * j]});
      d[1 + 2 * j] = dy.y1;
      d[2 + 2 * j] = dy.y2;
    }
  };
  std::vector<double> s(1 + 2 * m);
  s[0] = zeta_piece0;
  for (std::size_t j = 0; j < m; ++j) {
    const RealState2 y0 = from_prufer(s0[j], frame, xs.front());
    s[1 + 2 * j] = y0.y1;
    s[2 + 2 * j] = y0.y2;
  }
  Propagator<std::vector<double>> prop(spec);
  std::vector<std::vector<double>> out(m);
  std::vector<double> log_scale(m, 0.0), first(m, 0.0);
  double x = xs.front();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    prop.advance(rhs, s, x, xs[i]);
    x = xs[i];
    for (std::size_t j = 0; j < m; ++j) {
      double& y1 = s[1 + 2 * j];
      double& y2 = s[2 + 2 * j];
      const double lr = log_scale[j] + std::log(to_prufer({y1, y2}, frame, x).R);
      if (i == 0) first[j] = lr;
      out[j].push_back(lr - first[j]);
      const double norm = std::hypot(y1, y2);
      y1 /= norm;
      y2 /= norm;
      log_scale[j] += std::log(norm);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- oscillatory

OscCheck drift_check(double a, double beta1, double beta2,
                              const std::vector<double>& x0_list, double x_max, Trig trig,
                              double factor, bool parallel) {
  if (!(beta1 > 0.0 && beta2 > 0.0 && beta1 + beta2 > 1.0 && beta2 > 0.5 && a != 0.0)) {
    throw HypothesisViolated(
        fmt::format("need beta1, beta2 > 0, beta1 + beta2 > 1, beta2 > 1/2 and a != 0 (got a = "
                    "{}, beta1 = {}, beta2 = {})",
                    a, beta1, beta2));
  }
  if (x0_list.empty()) throw ConfigError("x0 list is empty");
  OscCheck r;
  r.kind = "drift";
  r.gamma_description = fmt::format("theta' = a + 1/(1 + x^{})", beta1);
  r.trig = trig;
  r.a = a;
  r.beta = std::min({beta2, beta1 + beta2 - 1.0, 2.0 * beta2 - 1.0});
  r.x_max = x_max;
  r.x0_list = x0_list;
  r.factor = factor;
  const double panel = std::min(kTwoPi / std::abs(a), 1.0) / 8.0;

  std::function<double(double)> drift;
  std::shared_ptr<DriftIntegral> table;
  if (beta1 == 1.0) {
    drift = [](double x) { return std::log1p(x); };
  } else if (beta1 == 2.0) {
    drift = [](double x) { return std::atan(x); };
  } else {
    table = std::make_shared<DriftIntegral>(beta1, x_max);
    drift = [table](double x) { return (*table)(x); };
  }
  for (double x0 : x0_list) {
    if (!(x0 > 0.0 && x0 < x_max)) throw ConfigError("need 0 < x0 < x_max");
    const auto f = [&](double t) {
      const double th = a * t + drift(t);
      return (trig == Trig::sine ? std::sin(th) : std::cos(th)) / std::pow(t, beta2);
    };
    r.sup_integral.push_back(sup_running_integral(f, x0, x_max, panel, parallel));
  }
  finish_products(r);
  r.passed = r.spread <= factor;
  return r;
}

OscCheck periodic_check(const std::function<double(double)>& Gamma,
                              const std::function<double(double)>& gamma, double a,
                              const std::vector<double>& x0_list, double x_max,
                              const std::string& description, bool resonant_control,
                              double factor, bool parallel) {
  const double dist = std::abs(a - kTwoPi * std::round(a / kTwoPi));
  if (dist < 1e-3 && !resonant_control) {
    throw ResonantFrequency(
        fmt::format("a = {} lies within 1e-3 of 2 pi Z; the estimate needs a outside 2 pi Z", a));
  }
  if (x0_list.empty()) throw ConfigError("x0 list is empty");
  OscCheck r;
  r.kind = resonant_control ? "control" : "periodic";
  r.gamma_description = description;
  r.a = a;
  r.beta = 1.0;
  r.x_max = x_max;
  r.x0_list = x0_list;
  r.factor = factor;
  const double rate = std::max(std::abs(a), 1.0);
  const double panel = std::min(kTwoPi / rate, 1.0) / 16.0;
  for (double x0 : x0_list) {
    if (!(x0 > 0.0 && x0 < x_max)) throw ConfigError("need 0 < x0 < x_max");
    const auto f = [&](double t) {
      return Gamma(t) * std::sin(a * t + gamma(t) + std::log(t)) / t;
    };
    r.sup_integral.push_back(sup_running_integral(f, x0, x_max, panel, parallel));
  }
  finish_products(r);
  r.passed = resonant_control ? r.growth > 10.0 : r.spread <= factor;
  return r;
}

OscCheck periodic_check(const FloquetFrame& frame, double a,
                              const std::vector<double>& x0_list, double x_max, double factor,
                              bool parallel) {
  const double dist = std::abs(a - kTwoPi * std::round(a / kTwoPi));
  if (dist < 1e-3) {
    throw ResonantFrequency(
        fmt::format("a = {} lies within 1e-3 of 2 pi Z; the estimate needs a outside 2 pi Z", a));
  }
  if (x0_list.empty()) throw ConfigError("x0 list is empty");
  OscCheck r;
  r.kind = "periodic";
  r.gamma_description = fmt::format("Gamma = Psi, gamma = delta at lambda = {}", frame.lambda());
  r.a = a;
  r.beta = 1.0;
  r.x_max = x_max;
  r.x0_list = x0_list;
  r.factor = factor;
  double max_rate = 0.0;
  for (double d : frame.data().d_delta) max_rate = std::max(max_rate, std::abs(d));
  const double panel = std::min(kTwoPi / (std::abs(a) + max_rate), 1.0) / 16.0;
  for (double x0 : x0_list) {
    if (!(x0 > 0.0 && x0 < x_max)) throw ConfigError("need 0 < x0 < x_max");
    const auto f = [&](double t) {
      return frame.psi(t) * std::sin(a * t + frame.delta(t) + std::log(t)) / t;
    };
    r.sup_integral.push_back(sup_running_integral(f, x0, x_max, panel, parallel));
  }
  finish_products(r);
  r.passed = r.spread <= factor;
  return r;
}

void enforce(const OscCheck& r) {
  if (r.passed) return;
  if (r.kind == "control") {
    throw BoundViolated(fmt::format("resonant control grew only {:.3g}x; the test is insensitive",
                                    r.growth));
  }
  throw BoundViolated(fmt::format("{} products spread by {:.3g} > {}", r.kind, r.spread,
                                  r.factor));
}

// ---------------------------------------------------------------- decay

DecayReport decay_check(const EmbeddingTarget& target, const PotentialPiece& piece,
                        const IntegratorSpec& spec, const DecayOptions& opt) {
  DecayReport r;
  r.lambda = target.lambda;
  r.piece_id = piece_id(piece);
  r.a = piece.a;
  r.x_end = piece.x_end;
  r.b = piece.b;
  r.C = piece.C;
  r.slope_limit = -opt.slope_factor * opt.decay_exponent;

  PotentialPiece own = piece;
  own.target = 0;
  const std::vector<EmbeddingTarget> one{target};
  TargetStates st;
  st.ln_R = {0.0};
  st.zeta = {zeta_from_xi(*target.frame, piece.field().start(), piece.xi0)};
  std::vector<double> xs, lr;
  xs.reserve(piece.x_grid.size());
  lr.reserve(piece.x_grid.size());
  advance_across_piece(own, one, st, spec, [&](double x, const TargetStates& s) {
    xs.push_back(x);
    lr.push_back(s.ln_R[0]);
  });
  r.sample_count = xs.size();

  std::vector<double> L(xs.size());
  r.additive_C = -INFINITY;
  r.max_rise = -INFINITY;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    L[i] = std::log((std::abs(xs[i]) - piece.b) / (piece.a - piece.b));
    r.additive_C = std::max(r.additive_C, lr[i] + opt.decay_exponent * L[i]);
    r.max_rise = std::max(r.max_rise, lr[i]);
  }
  const LineFit fit = least_squares(L, lr);
  r.slope = fit.slope;
  r.intercept = fit.intercept;
  r.c_bound = opt.safety * std::exp(r.additive_C);

  if (opt.dual_path) {
    // backwards from x_end, where the decaying solution is the attracting one
    std::vector<double> rev(xs.rbegin(), xs.rend());
    const double zeta_end = st.zeta[0];
    const double xi_end = xi_from_zeta(*piece.frame, xs.back(), zeta_end);
    const PrueferState s_end = state_from_xi(1.0, xi_end, *target.frame, xs.back());
    const auto back = full_system_ln_R(piece, zeta_end, *target.frame, {s_end}, rev, spec)[0];
    double err = 0.0;
    for (std::size_t i = 0; i < rev.size(); ++i) {
      const std::size_t k = xs.size() - 1 - i;
      err = std::max(err, std::abs(back[i] - (lr[k] - lr.back())));
    }
    r.dual_path_error = err;
  }

  const std::size_t stride = std::max<std::size_t>(1, xs.size() / std::max<std::size_t>(opt.keep_samples, 1));
  for (std::size_t i = 0; i < xs.size(); i += stride) {
    r.x.push_back(xs[i]);
    r.ln_R.push_back(lr[i]);
  }
  if (r.x.back() != xs.back()) {
    r.x.push_back(xs.back());
    r.ln_R.push_back(lr.back());
  }

  std::vector<std::string> why;
  if (r.sample_count < 100) why.push_back(fmt::format("only {} samples", r.sample_count));
  if (!(r.slope <= r.slope_limit)) why.push_back(fmt::format("slope {:.4g} > {:.4g}", r.slope, r.slope_limit));
  if (r.max_rise > opt.rise_tolerance) why.push_back(fmt::format("ln R rises by {:.3g}", r.max_rise));
  if (opt.dual_path && !(r.dual_path_error <= opt.dual_tolerance)) {
    why.push_back(fmt::format("dual-path mismatch {:.3g}", r.dual_path_error));
  }
  r.passed = why.empty();
  for (const auto& w : why) r.message += (r.message.empty() ? "" : "; ") + w;
  return r;
}

void enforce(const DecayReport& r) {
  if (!r.passed) {
    throw DecayTooSlow(fmt::format("lambda = {} on {}: {}", r.lambda, r.piece_id, r.message));
  }
}

// ---------------------------------------------------------------- stability

StabilityReport stability_check(const EmbeddingTarget& bystander, const PotentialPiece& piece,
                                const IntegratorSpec& spec, const StabilityOptions& opt) {
  if (bystander.frame == piece.frame || bystander.lambda == piece.lambda) {
    throw HypothesisViolated("stability_check needs a bystander different from the piece target");
  }
  if (opt.phases == 0) throw ConfigError("stability_check needs at least one phase");
  StabilityReport r;
  r.lambda = piece.lambda;
  r.lambda_j = bystander.lambda;
  r.piece_id = piece_id(piece);
  r.limit = opt.limit;
  r.worst_ratio = 0.0;

  // all phases share one integration of the piece phase
  PotentialPiece foreign = piece;
  foreign.target = opt.phases;  // no owner among the copies
  const std::vector<EmbeddingTarget> copies(opt.phases, bystander);
  const double x0 = piece.field().start();
  std::vector<PrueferState> s0;
  TargetStates st;
  for (std::size_t m = 0; m < opt.phases; ++m) {
    const double eta0 = kTwoPi * static_cast<double>(m) / static_cast<double>(opt.phases);
    s0.push_back(state_from_eta(1.0, eta0, *bystander.frame, x0));
    st.ln_R.push_back(0.0);
    st.zeta.push_back(zeta_from_xi(*bystander.frame, x0, s0.back().xi));
  }
  std::vector<double> xs;
  std::vector<std::vector<double>> lr(opt.phases);
  advance_across_piece(foreign, copies, st, spec, [&](double x, const TargetStates& s) {
    xs.push_back(x);
    for (std::size_t m = 0; m < opt.phases; ++m) lr[m].push_back(s.ln_R[m]);
  });
  for (std::size_t m = 0; m < opt.phases; ++m) {
    const auto it = std::max_element(lr[m].begin(), lr[m].end());
    const double ratio = std::exp(*it);
    r.ratio_per_phase.push_back(ratio);
    if (ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.worst_phase = s0[m].eta;
      r.worst_x = xs[static_cast<std::size_t>(it - lr[m].begin())];
    }
  }
  if (opt.dual_path) {
    const double zeta_piece0 = zeta_from_xi(*piece.frame, x0, piece.xi0);
    const auto fwd = full_system_ln_R(piece, zeta_piece0, *bystander.frame, s0, xs, spec);
    for (std::size_t m = 0; m < opt.phases; ++m) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        r.dual_path_error = std::max(r.dual_path_error, std::abs(fwd[m][i] - lr[m][i]));
      }
    }
  }
  std::vector<std::string> why;
  if (!(r.worst_ratio <= opt.limit)) {
    why.push_back(fmt::format("worst ratio {:.4g} > {} at eta0 = {:.4g}, x = {:.10g}",
                              r.worst_ratio, opt.limit, r.worst_phase, r.worst_x));
  }
  if (opt.dual_path && !(r.dual_path_error <= opt.dual_tolerance)) {
    why.push_back(fmt::format("dual-path mismatch {:.3g}", r.dual_path_error));
  }
  r.passed = why.empty();
  for (const auto& w : why) r.message += (r.message.empty() ? "" : "; ") + w;
  return r;
}

void enforce(const StabilityReport& r) {
  if (!r.passed) {
    throw StabilityViolated(fmt::format("bystander lambda = {} on {} (target {}): {}", r.lambda_j,
                                        r.piece_id, r.lambda, r.message));
  }
}

// ---------------------------------------------------------------- non-embedding

double nonembedding_constant(const FloquetFrame& frame) { return frame.max_norm2() / frame.omega(); }

NonembeddingReport nonembedding_check(const FloquetFrame& frame, const FeedbackPotential& V,
                                      double epsilon, double x0, double x_max,
                                      const IntegratorSpec& spec, const std::string& description,
                                      double tolerance, bool dual_path) {
  if (!(x0 > 0.0 && x_max > x0)) throw ConfigError("need 0 < x0 < x_max");
  NonembeddingReport r;
  r.lambda = frame.lambda();
  r.epsilon = epsilon;
  r.C = nonembedding_constant(frame);
  r.exponent = r.C * epsilon;
  r.x0 = x0;
  r.x_max = x_max;
  r.potential = description;
  r.tolerance = tolerance;
  if (!(r.exponent < 0.5)) {
    throw HypothesisViolated(fmt::format("C eps = {} must be below 1/2", r.exponent));
  }

  auto rhs = [&](double x, const Vec<2>& s, Vec<2>& d) {
    const double xi = xi_from_zeta(frame, x, s[1]);
    const PairRates pr = zeta_rates(frame, x, V(x, xi), s[1]);
    d = {pr.dlnR, pr.dxi};
  };
  const auto xs = output_grid(x0, x_max, spec.dense_output_stride);
  Propagator<Vec<2>> prop(spec);
  Vec<2> s{0.0, zeta_from_xi(frame, x0, 0.5 * std::numbers::pi)};
  std::vector<double> lr;
  double x = x0;
  r.min_margin = INFINITY;
  for (double xg : xs) {
    prop.advance(rhs, s, x, xg);
    x = xg;
    lr.push_back(s[0]);
    const double margin = std::exp(s[0] + r.exponent * std::log(x / x0));
    if (margin < r.min_margin) {
      r.min_margin = margin;
      r.worst_x = x;
    }
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double h = xs[i] - xs[i - 1];
    r.l2_actual += 0.5 * h * (std::exp(2.0 * lr[i]) + std::exp(2.0 * lr[i - 1]));
    const double lo = std::pow(xs[i] / x0, -2.0 * r.exponent);
    const double lo_prev = std::pow(xs[i - 1] / x0, -2.0 * r.exponent);
    r.l2_lower += 0.5 * h * (lo + lo_prev) * (1.0 - tolerance) * (1.0 - tolerance);
  }

  if (dual_path) {
    const DiracCoefficients& c = frame.solution().coefficients;
    auto yrhs = [&](double xx, const Vec<2>& y, Vec<2>& d) {
      const double xi = to_prufer({y[0], y[1]}, frame, xx).xi;
      const RealState2 dy = dirac_rhs(c.p(xx) + V(xx, xi), c.q(xx), frame.lambda(), {y[0], y[1]});
      d = {dy.y1, dy.y2};
    };
    const RealState2 y0 = from_prufer(state_from_xi(1.0, 0.5 * std::numbers::pi, frame, x0), frame, x0);
    Vec<2> y{y0.y1, y0.y2};
    Propagator<Vec<2>> yprop(spec);
    double xx = x0;
    double log_scale = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      yprop.advance(yrhs, y, xx, xs[i]);
      xx = xs[i];
      const double ly = log_scale + std::log(to_prufer({y[0], y[1]}, frame, xx).R);
      r.dual_path_error = std::max(r.dual_path_error, std::abs(ly - lr[i]));
      const double norm = std::hypot(y[0], y[1]);
      y[0] /= norm;
      y[1] /= norm;
      log_scale += std::log(norm);
    }
  }

  std::vector<std::string> why;
  if (!(r.min_margin >= 1.0 - tolerance)) {
    why.push_back(fmt::format("R (x/x0)^(C eps) / R(x0) drops to {:.6g} at x = {:.6g}", r.min_margin,
                              r.worst_x));
  }
  if (dual_path && !(r.dual_path_error <= 1e-6)) {
    why.push_back(fmt::format("dual-path mismatch {:.3g}", r.dual_path_error));
  }
  r.passed = why.empty();
  for (const auto& w : why) r.message += (r.message.empty() ? "" : "; ") + w;
  return r;
}

void enforce(const NonembeddingReport& r) {
  if (!r.passed) throw BoundViolated(fmt::format("lambda = {}: {}", r.lambda, r.message));
}

// ---------------------------------------------------------------- schedule runs

ScheduleRun run_schedule(const SynthesisSchedule& s, const IntegratorSpec& spec) {
  ScheduleRun run;
  run.owner = s.owner;
  run.N = s.N;
  const std::size_t nt = s.targets.size();
  const std::size_t steps = s.owner.size();
  std::exception_ptr failure;
#pragma omp parallel for schedule(static, 1)
  for (int k = 0; k < 2; ++k) {
    try {
      const Side side = k == 0 ? Side::plus : Side::minus;
      SideTrace& tr = run.sides[k];
      tr.side = side;
      tr.piece_l2.assign(nt, std::vector<double>(steps, 0.0));
      tr.ln_R_end.assign(nt, std::vector<double>(steps, 0.0));
      TargetStates st = initial_states(s.targets, side, s.options.a0);
      for (std::size_t r = 0; r < steps; ++r) {
        const PotentialPiece& piece = s.pieces[2 * r + static_cast<std::size_t>(k)];
        double x_prev = piece.field().start();
        std::vector<double> prev = st.ln_R;
        advance_across_piece(piece, s.targets, st, spec, [&](double x, const TargetStates& cur) {
          const double h = std::abs(x - x_prev);
          for (std::size_t n = 0; n < nt; ++n) {
            tr.piece_l2[n][r] += 0.5 * h * (std::exp(2.0 * cur.ln_R[n]) + std::exp(2.0 * prev[n]));
          }
          prev = cur.ln_R;
          x_prev = x;
        });
        tr.x_end.push_back(piece.field().stop());
        for (std::size_t n = 0; n < nt; ++n) tr.ln_R_end[n][r] = st.ln_R[n];
      }
    } catch (...) {
#pragma omp critical(run_schedule_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return run;
}

std::vector<TailVerdict> l2_tail_estimate(const ScheduleRun& run,
                                          const std::vector<EmbeddingTarget>& targets) {
  const std::size_t steps = run.owner.size();
  // cycles start where the round robin returns to target 0
  std::vector<std::size_t> starts;
  for (std::size_t r = 0; r < steps; ++r) {
    if (run.owner[r] == 0) starts.push_back(r);
  }
  std::vector<TailVerdict> out;
  for (const SideTrace& tr : run.sides) {
    for (std::size_t n = 0; n < targets.size(); ++n) {
      TailVerdict v;
      v.target = n;
      v.lambda = targets[n].lambda;
      v.side = tr.side;
      bool seen = false;
      for (std::size_t c = 0; c < starts.size(); ++c) {
        const std::size_t begin = starts[c];
        const std::size_t end = c + 1 < starts.size() ? starts[c + 1] : steps;
        if (end - begin != run.N[begin]) continue;  // truncated cycle
        bool owns = false;
        double sum = 0.0;
        for (std::size_t r = begin; r < end; ++r) {
          owns = owns || run.owner[r] == n;
          sum += tr.piece_l2[n][r];
        }
        seen = seen || owns;
        if (seen) v.cycle_sums.push_back(sum);
      }
      if (v.cycle_sums.size() < 3) {
        throw InconclusiveTail(fmt::format(
            "target {} (lambda = {}) has {} complete cycles on the {} side; need 3", n, v.lambda,
            v.cycle_sums.size(), side_name(tr.side)));
      }
      std::vector<double> idx, logs;
      v.max_ratio = 0.0;
      for (std::size_t c = 0; c < v.cycle_sums.size(); ++c) {
        idx.push_back(static_cast<double>(c));
        logs.push_back(std::log(v.cycle_sums[c]));
        if (c > 0) v.max_ratio = std::max(v.max_ratio, v.cycle_sums[c] / v.cycle_sums[c - 1]);
      }
      v.fitted_ratio = std::exp(least_squares(idx, logs).slope);
      v.embedded_candidate = v.max_ratio <= 0.5;  // every cycle at least halves
      v.message = fmt::format("{} cycles, fitted ratio {:.4g}, largest step ratio {:.4g}",
                              v.cycle_sums.size(), v.fitted_ratio, v.max_ratio);
      out.push_back(std::move(v));
    }
  }
  return out;
}

// ---------------------------------------------------------------- calibration

CalibrationReport calibrate_targets(std::vector<EmbeddingTarget>& targets,
                                    const IntegratorSpec& spec, const CalibrationOptions& opt) {
  CalibrationReport rep;
  DecayOptions dopt;
  dopt.decay_exponent = opt.decay_exponent;
  dopt.safety = opt.safety;
  dopt.dual_path = false;
  StabilityOptions sopt;
  sopt.phases = opt.phases;
  sopt.dual_path = false;
  sopt.limit = INFINITY;

  auto probe = [&](const EmbeddingTarget& t, std::size_t index, double d) {
    const double a = opt.b + d;
    const double x_end = std::max(opt.b + opt.probe_ratio * d, a + 8.0 * opt.taper_width);
    return make_piece(t, index, Side::plus, a, opt.b, x_end,
                      0.5 * std::numbers::pi, t.C, opt.taper_width, spec);
  };

  for (std::size_t i = 0; i < targets.size(); ++i) {
    EmbeddingTarget& t = targets[i];
    const double d_min = 2.0 * t.C / t.k;
    const double d = std::max(opt.a - opt.b, 2.0 * d_min);
    const PotentialPiece piece = probe(t, i, d);
    const DecayReport dr = decay_check(t, piece, spec, dopt);
    rep.c_bound.push_back(dr.c_bound);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      if (j == i) continue;
      rep.growth = std::max(rep.growth, stability_check(targets[j], piece, spec, sopt).worst_ratio);
    }
    // smallest probed a - b with every bystander below the stability limit
    double k_probe = d_min;
    for (int step = 0; step < 40; ++step, k_probe *= 1.5) {
      const PotentialPiece pk = probe(t, i, k_probe);
      bool ok = true;
      for (std::size_t j = 0; j < targets.size() && ok; ++j) {
        if (j != i) ok = stability_check(targets[j], pk, spec, sopt).worst_ratio <= opt.stability_limit;
      }
      if (ok) break;
    }
    rep.K.push_back(2.0 * k_probe);
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    targets[i].c_bound = rep.c_bound[i];
    targets[i].K = rep.K[i];
  }
  return rep;
}

// ---------------------------------------------------------------- full suite

EnvelopeReport piece_envelope_check(const SynthesisSchedule& s) {
  EnvelopeReport r;
  r.kind = "piece";
  for (const PotentialPiece& p : s.pieces) {
    for (std::size_t i = 0; i < p.x_grid.size(); ++i) {
      const double v = std::abs(p.V_grid[i]) * (std::abs(p.x_grid[i]) - p.b) / (p.omega * p.C);
      ++r.samples;
      if (v > r.max_ratio) {
        r.max_ratio = v;
        r.worst_x = p.x_grid[i];
      }
    }
  }
  r.passed = r.max_ratio <= 1.0 + 1e-12;
  return r;
}

EnvelopeReport h_envelope_check(const SynthesisSchedule& s) {
  EnvelopeReport r;
  r.kind = "h";
  if (!s.options.h) return r;
  for (const PotentialPiece& p : s.pieces) {
    for (std::size_t i = 0; i < p.x_grid.size(); ++i) {
      const double ax = std::abs(p.x_grid[i]);
      const double v = std::abs(p.V_grid[i]) * (1.0 + ax) / std::abs(s.options.h(ax));
      ++r.samples;
      if (v > r.max_ratio) {
        r.max_ratio = v;
        r.worst_x = p.x_grid[i];
      }
    }
  }
  r.passed = r.max_ratio <= 1.0;
  return r;
}

ScheduleVerification verify_schedule(const SynthesisSchedule& s, const IntegratorSpec& spec,
                                     const VerifyOptions& opt) {
  ScheduleVerification out;
  struct Job {
    std::size_t piece;
    std::size_t bystander;  // == targets.size() for the decay job
  };
  const std::size_t nt = s.targets.size();
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < s.pieces.size(); ++i) {
    const PotentialPiece& p = s.pieces[i];
    jobs.push_back({i, nt});
    for (std::size_t j = 0; j < std::min(p.active, nt); ++j) {
      if (j != p.target) jobs.push_back({i, j});
    }
  }
  std::vector<DecayReport> decay(jobs.size());
  std::vector<StabilityReport> stab(jobs.size());
  const auto count = static_cast<long long>(jobs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) if (opt.parallel)
  for (long long q = 0; q < count; ++q) {
    try {
      const Job& job = jobs[static_cast<std::size_t>(q)];
      const PotentialPiece& p = s.pieces[job.piece];
      if (job.bystander == nt) {
        decay[static_cast<std::size_t>(q)] = decay_check(s.targets[p.target], p, spec, opt.decay);
      } else {
        stab[static_cast<std::size_t>(q)] = stability_check(s.targets[job.bystander], p, spec, opt.stability);
      }
    } catch (...) {
#pragma omp critical(verify_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (std::size_t q = 0; q < jobs.size(); ++q) {
    if (jobs[q].bystander == nt) {
      out.decay.push_back(std::move(decay[q]));
    } else {
      out.stability.push_back(std::move(stab[q]));
    }
  }

  out.passed = true;
  try {
    out.tails = l2_tail_estimate(run_schedule(s, spec), s.targets);
  } catch (const InconclusiveTail& e) {
    TailVerdict v;
    v.message = e.what();
    out.tails.push_back(v);
  }
  out.envelopes.push_back(piece_envelope_check(s));
  if (s.options.mode == ScheduleMode::growing) out.envelopes.push_back(h_envelope_check(s));

  for (const auto& d : out.decay) out.passed = out.passed && d.passed;
  for (const auto& st : out.stability) out.passed = out.passed && st.passed;
  for (const auto& t : out.tails) out.passed = out.passed && t.embedded_candidate;
  for (const auto& e : out.envelopes) out.passed = out.passed && e.passed;
  return out;
}

}  // namespace dirac
