#include "dirac/synth.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>

#include "dirac/error.hpp"

namespace dirac {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r >= kTwoPi ? 0.0 : r;
}

std::vector<double> piece_samples(double a, double x_end, double spacing, std::size_t max_samples) {
  const double len = x_end - a;
  const double step = std::max(spacing, len / static_cast<double>(std::max<std::size_t>(max_samples, 2)));
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(len / step - 1e-9)));
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out[i] = a + len * static_cast<double>(i) / static_cast<double>(n);
  out[n] = x_end;
  return out;
}

struct StepPlan {
  std::vector<double> T;
  std::vector<std::size_t> N;
  std::vector<std::size_t> owner;
};

bool envelope_fits(const std::vector<EmbeddingTarget>& targets, std::size_t active, double T,
                   double b, const std::function<double(double)>& h) {
  for (std::size_t n = 0; n < active; ++n) {
    const EmbeddingTarget& t = targets[n];
    if (t.omega * t.C * (1.0 + T) / (T - b) > std::abs(h(T))) return false;
  }
  return true;
}

StepPlan plan_steps(const std::vector<EmbeddingTarget>& targets, const ScheduleOptions& opt) {
  const bool growing = opt.mode == ScheduleMode::growing;
  const std::size_t total = targets.size();
  StepPlan plan;
  plan.T.push_back(opt.a0);
  std::size_t active = growing ? 1 : total;
  if (growing && !envelope_fits(targets, 1, opt.a0, opt.b, opt.h)) {
    std::ostringstream msg;
    msg << "first target violates |V|(1+|x|) <= |h| already at a0 = " << opt.a0
        << " (omega C = " << targets[0].omega * targets[0].C << ", h(a0) = " << opt.h(opt.a0)
        << "); increase a0";
    throw EnvelopeViolation(msg.str());
  }
  std::size_t pos = 0;
  std::size_t cycles = 0;
  for (;;) {
    const double T = plan.T.back();
    if (growing && pos == 0 && active < total && cycles >= opt.min_cycles_per_stage &&
        envelope_fits(targets, active + 1, T, opt.b, opt.h)) {
      ++active;
      cycles = 0;
    }
    double c_bound = 0.0;
    for (std::size_t n = 0; n < active; ++n) c_bound = std::max(c_bound, targets[n].c_bound);
    const double r = piece_ratio(c_bound, opt.growth, opt.decay_exponent, active);
    const double next = std::max(opt.b + r * (T - opt.b), T + 8.0 * opt.taper_width);
    if (next > opt.x_max) break;
    plan.T.push_back(next);
    plan.N.push_back(active);
    plan.owner.push_back(pos);
    if (++pos == active) {
      pos = 0;
      ++cycles;
      const bool last_stage = !growing || active == total;
      if (opt.stop_after_cycles > 0 && last_stage && cycles >= opt.stop_after_cycles) break;
    }
  }
  std::vector<char> served(total, 0);
  for (std::size_t o : plan.owner) served[o] = 1;
  for (std::size_t n = 0; n < total; ++n) {
    if (!served[n]) {
      std::ostringstream msg;
      msg << "x_max = " << opt.x_max << " is reached before target " << n << " (lambda = "
          << targets[n].lambda << ") receives a piece";
      throw HorizonTooShort(msg.str());
    }
  }
  return plan;
}

std::vector<PotentialPiece> build_side(const std::vector<EmbeddingTarget>& targets,
                                       const StepPlan& plan, Side side,
                                       const ScheduleOptions& opt, const IntegratorSpec& spec) {
  std::vector<PotentialPiece> out;
  TargetStates states = initial_states(targets, side, opt.a0);
  for (std::size_t r = 0; r < plan.owner.size(); ++r) {
    const std::size_t n = plan.owner[r];
    const EmbeddingTarget& t = targets[n];
    const double x = side_sign(side) * plan.T[r];
    const double xi0 = wrap_2pi(xi_from_zeta(*t.frame, x, states.zeta[n]));
    PotentialPiece piece = make_piece(t, n, side, plan.T[r], opt.b, plan.T[r + 1], xi0, t.C,
                                      opt.taper_width, spec, opt.sample_spacing, opt.max_samples);
    piece.active = plan.N[r];
    if (opt.mode == ScheduleMode::growing) {
      for (std::size_t i = 0; i < piece.x_grid.size(); ++i) {
        const double ax = std::abs(piece.x_grid[i]);
        if (std::abs(piece.V_grid[i]) * (1.0 + ax) > std::abs(opt.h(ax))) {
          std::ostringstream msg;
          msg << "|V|(1+|x|) = " << std::abs(piece.V_grid[i]) * (1.0 + ax) << " exceeds |h| = "
              << std::abs(opt.h(ax)) << " at x = " << piece.x_grid[i];
          throw EnvelopeViolation(msg.str());
        }
      }
    }
    advance_across_piece(piece, targets, states, spec);
    out.push_back(std::move(piece));
  }
  return out;
}

}  // namespace

const char* side_name(Side s) { return s == Side::plus ? "plus" : "minus"; }

std::vector<EmbeddingTarget> check_nonresonance(const std::vector<double>& lambdas,
                                                const DiracCoefficients& c,
                                                const IntegratorSpec& spec,
                                                const NonresonanceOptions& opt) {
  std::vector<EmbeddingTarget> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    EmbeddingTarget t;
    t.lambda = lambda;
    t.frame = make_frame(c, lambda, spec, opt.floquet);
    t.k = t.frame->k();
    t.omega = t.frame->omega();
    t.C = choose_C(t.frame->psi_mean(), opt.decay_exponent, opt.decay_margin);
    out.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i; j < out.size(); ++j) {
      const double ki = out[i].k, kj = out[j].k;
      if (i != j && std::abs(ki - kj) < opt.margin) {
        std::ostringstream msg;
        msg << "targets " << i << " and " << j << " (lambda = " << out[i].lambda << ", "
            << out[j].lambda << ") have quasimomenta " << ki << " and " << kj
            << " closer than the margin " << opt.margin;
        throw ResonantPair(i, j, ResonantPair::Condition::equal_quasimomenta, msg.str());
      }
      if (std::abs(ki + kj - std::numbers::pi) < opt.margin) {
        std::ostringstream msg;
        msg << "targets " << i << " and " << j << " (lambda = " << out[i].lambda << ", "
            << out[j].lambda << ") have k_i + k_j = " << ki + kj << ", within " << opt.margin
            << " of pi";
        throw ResonantPair(i, j, ResonantPair::Condition::sum_equals_pi, msg.str());
      }
    }
  }
  return out;
}

double choose_C(double psi_mean, double decay_exponent, double margin) {
  if (!(psi_mean > 0.0)) throw ConfigError("mean of Psi must be positive");
  return 2.0 * (decay_exponent + margin) / psi_mean;
}

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double f = std::exp(-1.0 / t);
  const double g = std::exp(-1.0 / (1.0 - t));
  return f / (f + g);
}

double PieceField::window(double x) const {
  const double u = side_sign(side) * x;
  if (u < a || u > x_end) return 0.0;
  if (taper_width <= 0.0) return 1.0;
  return smooth_step((u - a) / taper_width) * smooth_step((x_end - u) / taper_width);
}

double PieceField::dzeta(double x, double zeta) const {
  const FrameSample s = frame->sample(x);
  const double xi = zeta + 2.0 * frame->exponent() * x + s.delta;
  return window(x) * 2.0 * C * std::sin(xi) / denom(x) *
         (s.abs2_g1 - s.abs2_g2 - s.psi * std::cos(xi));
}

namespace {

// Integrates the (windowed) phase equation over the sample abscissae.
std::vector<double> phase_on_grid(const PieceField& field, const std::vector<double>& grid,
                                  double xi0, const IntegratorSpec& spec) {
  std::vector<double> xi;
  xi.reserve(grid.size());
  Propagator<Vec<1>> prop(spec);
  auto rhs = [&field](double x, const Vec<1>& s, Vec<1>& d) { d[0] = field.dzeta(x, s[0]); };
  double x = field.start();
  Vec<1> s{zeta_from_xi(*field.frame, x, xi0)};
  for (double xg : grid) {
    prop.advance(rhs, s, x, xg);
    x = xg;
    xi.push_back(xg == field.start() ? xi0 : field.xi(x, s[0]));
  }
  return xi;
}

}  // namespace

XiTrajectory solve_xi(const EmbeddingTarget& target, double a, double b, double xi0, double x_end,
                      Side side, const IntegratorSpec& spec, double sample_spacing,
                      std::size_t max_samples) {
  if (!(x_end > a)) throw ConfigError("solve_xi needs x_end > a");
  if (!(a > b)) throw ConfigError("solve_xi needs a > b");
  if (2.0 * target.C / (a - b) > target.k) {
    std::ostringstream msg;
    msg << "2C/(a-b) = " << 2.0 * target.C / (a - b) << " exceeds k = " << target.k
        << " for lambda = " << target.lambda << "; move the piece out to a - b >= "
        << 2.0 * target.C / target.k;
    throw EnvelopeTooLarge(msg.str());
  }
  const PieceField field{target.frame.get(), side, a, x_end, b, target.C, 0.0};
  const double sgn = side_sign(side);
  XiTrajectory out;
  for (double u : piece_samples(a, x_end, sample_spacing, max_samples)) out.x.push_back(sgn * u);
  out.xi = phase_on_grid(field, out.x, xi0, spec);
  return out;
}

PieceField PotentialPiece::field() const {
  return {frame.get(), side, a, x_end, b, C, taper_width};
}

bool PotentialPiece::covers(double x) const {
  const double u = side_sign(side) * x;
  return u >= a && u <= x_end;
}

PotentialPiece piece_potential(const EmbeddingTarget& target, const XiTrajectory& traj, Side side,
                               double a, double b, double x_end, double xi0) {
  PotentialPiece p;
  p.side = side;
  p.lambda = target.lambda;
  p.a = a;
  p.x_end = x_end;
  p.b = b;
  p.xi0 = xi0;
  p.C = target.C;
  p.omega = target.omega;
  p.frame = target.frame;
  p.x_grid = traj.x;
  p.xi_grid = traj.xi;
  const PieceField f = p.field();
  p.V_grid.resize(traj.x.size());
  for (std::size_t i = 0; i < traj.x.size(); ++i) p.V_grid[i] = f.raw_potential(traj.x[i], traj.xi[i]);
  return p;
}

PotentialPiece smooth_compact(PotentialPiece piece, double taper_width, const IntegratorSpec& spec) {
  if (!(taper_width > 0.0)) throw ConfigError("taper width must be > 0");
  if (taper_width > 0.25 * (piece.x_end - piece.a)) {
    std::ostringstream msg;
    msg << "taper width " << taper_width << " exceeds a quarter of the piece length "
        << piece.x_end - piece.a;
    throw PieceTooShort(msg.str());
  }
  piece.taper_width = taper_width;
  const PieceField f = piece.field();
  // the window enters the phase equation too, so the target solution stays locked to xi
  piece.xi_grid = phase_on_grid(f, piece.x_grid, piece.xi0, spec);
  for (std::size_t i = 0; i < piece.x_grid.size(); ++i) {
    piece.V_grid[i] = f.potential(piece.x_grid[i], piece.xi_grid[i]);
  }
  return piece;
}

PotentialPiece make_piece(const EmbeddingTarget& target, std::size_t target_index, Side side,
                          double a, double b, double x_end, double xi0, double C,
                          double taper_width, const IntegratorSpec& spec, double sample_spacing,
                          std::size_t max_samples) {
  EmbeddingTarget t = target;
  t.C = C;
  const XiTrajectory traj = solve_xi(t, a, b, xi0, x_end, side, spec, sample_spacing, max_samples);
  PotentialPiece p =
      smooth_compact(piece_potential(t, traj, side, a, b, x_end, xi0), taper_width, spec);
  p.target = target_index;
  return p;
}

double piece_ratio(double c_bound, double growth, double decay_exponent, std::size_t active) {
  if (!(c_bound > 0.0) || !(growth >= 1.0) || !(decay_exponent > 0.0) || active == 0) {
    throw ConfigError("ratio rule needs c_bound > 0, growth >= 1, D > 0 and N >= 1");
  }
  const double factor = c_bound * std::pow(growth, static_cast<double>(active) - 1.0);
  return std::max(std::pow(2.0 * factor, 1.0 / decay_exponent), 1.0 + 1e-6);
}

TargetStates initial_states(const std::vector<EmbeddingTarget>& targets, Side side, double a0) {
  TargetStates s;
  const double x = side_sign(side) * a0;
  for (const EmbeddingTarget& t : targets) {
    s.ln_R.push_back(0.0);
    s.zeta.push_back(zeta_from_xi(*t.frame, x, 0.5 * std::numbers::pi));
  }
  return s;
}

void advance_across_piece(const PotentialPiece& piece, const std::vector<EmbeddingTarget>& targets,
                          TargetStates& states, const IntegratorSpec& spec,
                          const std::function<void(double, const TargetStates&)>& observe) {
  const std::size_t n = targets.size();
  const PieceField field = piece.field();
  // The owner's solution has exactly the piece phase; integrating it as a
  // separate state would excite the growing solution.
  const std::size_t owner =
      piece.target < n && targets[piece.target].frame == piece.frame ? piece.target : n;
  std::vector<double> y(1 + 2 * n);
  y[0] = zeta_from_xi(*piece.frame, field.start(), piece.xi0);
  for (std::size_t i = 0; i < n; ++i) {
    y[1 + 2 * i] = states.ln_R[i];
    y[2 + 2 * i] = states.zeta[i];
  }
  auto rhs = [&](double x, const std::vector<double>& s, std::vector<double>& d) {
    const FrameSample fs = piece.frame->sample(x);
    const double xi = s[0] + 2.0 * piece.frame->exponent() * x + fs.delta;
    const double sin_xi = std::sin(xi);
    const double V = field.window(x) * field.raw_potential(x, xi);
    d[0] = -2.0 * V / piece.frame->omega() * (fs.abs2_g1 - fs.abs2_g2 - fs.psi * std::cos(xi));
    for (std::size_t i = 0; i < n; ++i) {
      if (i == owner) {
        d[1 + 2 * i] = V / piece.frame->omega() * fs.psi * sin_xi;
        d[2 + 2 * i] = d[0];
        continue;
      }
      const PairRates r = zeta_rates(*targets[i].frame, x, V, s[2 + 2 * i]);
      d[1 + 2 * i] = r.dlnR;
      d[2 + 2 * i] = r.dxi;
    }
  };
  Propagator<std::vector<double>> prop(spec);
  double x = field.start();
  for (double xg : piece.x_grid) {
    prop.advance(rhs, y, x, xg);
    x = xg;
    if (observe) {
      for (std::size_t i = 0; i < n; ++i) {
        states.ln_R[i] = y[1 + 2 * i];
        states.zeta[i] = y[2 + 2 * i];
      }
      observe(x, states);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    states.ln_R[i] = y[1 + 2 * i];
    states.zeta[i] = y[2 + 2 * i];
  }
}

SynthesisSchedule schedule(const std::vector<EmbeddingTarget>& targets, const ScheduleOptions& opt,
                           const IntegratorSpec& spec) {
  if (targets.empty()) throw ConfigError("schedule needs at least one target");
  if (!(opt.a0 > opt.b)) throw ConfigError("a0 must exceed b");
  if (!(opt.x_max > opt.a0)) throw ConfigError("x_max must exceed a0");
  if (opt.mode == ScheduleMode::growing && !opt.h) {
    throw ConfigError("growing mode needs an envelope function h");
  }
  for (std::size_t n = 0; n < targets.size(); ++n) {
    if (opt.a0 - opt.b < targets[n].K) {
      std::ostringstream msg;
      msg << "a0 - b = " << opt.a0 - opt.b << " is below K = " << targets[n].K << " for target "
          << n << " (lambda = " << targets[n].lambda << ")";
      throw ConfigError(msg.str());
    }
  }

  const StepPlan plan = plan_steps(targets, opt);
  std::vector<PotentialPiece> sides[2];
  std::exception_ptr failure;
  // the two half-lines are independent
#pragma omp parallel for schedule(static, 1)
  for (int s = 0; s < 2; ++s) {
    try {
      sides[s] = build_side(targets, plan, s == 0 ? Side::plus : Side::minus, opt, spec);
    } catch (...) {
#pragma omp critical(schedule_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  SynthesisSchedule out;
  out.targets = targets;
  out.T = plan.T;
  out.N = plan.N;
  out.owner = plan.owner;
  out.options = opt;
  for (std::size_t r = 0; r < plan.owner.size(); ++r) {
    out.pieces.push_back(std::move(sides[0][r]));
    out.pieces.push_back(std::move(sides[1][r]));
  }
  return out;
}

SynthesizedPotential::SynthesizedPotential(std::vector<PotentialPiece> pieces, double a0,
                                           IntegratorSpec spec)
    : pieces_(std::move(pieces)), a0_(a0), spec_(spec) {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    (pieces_[i].side == Side::plus ? plus_ : minus_).push_back(i);
  }
  auto by_a = [this](std::size_t l, std::size_t r) { return pieces_[l].a < pieces_[r].a; };
  std::sort(plus_.begin(), plus_.end(), by_a);
  std::sort(minus_.begin(), minus_.end(), by_a);
}

std::optional<std::size_t> SynthesizedPotential::find(double x) const {
  const auto& idx = x >= 0.0 ? plus_ : minus_;
  const double u = std::abs(x);
  auto it = std::upper_bound(idx.begin(), idx.end(), u,
                             [this](double v, std::size_t i) { return v < pieces_[i].a; });
  if (it == idx.begin()) return std::nullopt;
  const std::size_t i = *std::prev(it);
  if (pieces_[i].covers(x)) return i;
  return std::nullopt;
}

double SynthesizedPotential::operator()(double x) const {
  if (std::abs(x) < a0_) return 0.0;
  const auto hit = find(x);
  if (!hit) return 0.0;
  const PotentialPiece& p = pieces_[*hit];
  const double u = std::abs(x);
  // last stored sample at or inside x, then a short re-integration
  auto it = std::upper_bound(p.x_grid.begin(), p.x_grid.end(), u,
                             [](double v, double g) { return v < std::abs(g); });
  const auto j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - p.x_grid.begin() - 1));
  if (p.x_grid[j] == x) return p.V_grid[j];
  const PieceField f = p.field();
  Propagator<Vec<1>> prop(spec_);
  Vec<1> s{zeta_from_xi(*p.frame, p.x_grid[j], p.xi_grid[j])};
  prop.advance([&f](double t, const Vec<1>& z, Vec<1>& d) { d[0] = f.dzeta(t, z[0]); }, s,
               p.x_grid[j], x);
  return f.potential(x, f.xi(x, s[0]));
}

SynthesizedPotential assemble(const SynthesisSchedule& s, const IntegratorSpec& spec) {
  for (Side side : {Side::plus, Side::minus}) {
    std::vector<const PotentialPiece*> v;
    for (const PotentialPiece& p : s.pieces) {
      if (p.side == side) v.push_back(&p);
    }
    std::sort(v.begin(), v.end(), [](auto* l, auto* r) { return l->a < r->a; });
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i]->a < s.options.a0 || !(v[i]->x_end > v[i]->a)) {
        throw OverlapDetected("piece outside [a0, inf) or empty on the " + std::string(side_name(side)) + " side");
      }
      if (i + 1 < v.size() && v[i]->x_end > v[i + 1]->a) {
        std::ostringstream msg;
        msg << side_name(side) << " pieces [" << v[i]->a << ", " << v[i]->x_end << "] and ["
            << v[i + 1]->a << ", " << v[i + 1]->x_end << "] overlap";
        throw OverlapDetected(msg.str());
      }
    }
  }
  return SynthesizedPotential(s.pieces, s.options.a0, spec);
}

}  // namespace dirac
