#pragma once

// Phase-locked 1/x potentials that force a chosen generalized eigenfunction
// to decay like a power, and the round-robin schedule that interleaves them.
//
// On a plus-side piece [a, x_end] the phase obeys
//   xi' = 2 kappa + delta' + (2 C sin xi / (x - b)) (|g1|^2 - |g2|^2 - Psi cos xi)
// and V = -omega C sin xi / (x - b); the minus side uses x + b and runs
// from -a outward to -x_end.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dirac/floquet.hpp"
#include "dirac/pruefer.hpp"

namespace dirac {

enum class Side { plus, minus };

const char* side_name(Side s);
inline double side_sign(Side s) { return s == Side::plus ? 1.0 : -1.0; }

struct EmbeddingTarget {
  double lambda = 0.0;
  double k = 0.0;
  double omega = 0.0;
  double C = 0.0;
  std::shared_ptr<const FloquetFrame> frame;
  // Measured by calibration; defaults are used until then.
  double c_bound = 2.0;  // R(x1) <= c_bound ((x1 - b) / (x0 - b))^-D R(x0)
  double K = 0.0;        // minimal admissible a - b
};

struct NonresonanceOptions {
  double margin = 0.02;  // minimal distance of k_i - k_j and k_i + k_j - pi from 0
  double decay_exponent = 100.0;
  double decay_margin = 5.0;
  FloquetOptions floquet;
};

/// Builds targets after checking every pair (i <= j) for |k_i - k_j| and
/// |k_i + k_j - pi| >= margin. Throws ResonantPair or BandEdge.
std::vector<EmbeddingTarget> check_nonresonance(const std::vector<double>& lambdas,
                                                const DiracCoefficients& c,
                                                const IntegratorSpec& spec,
                                                const NonresonanceOptions& opt = {});

/// C = 2 (D + margin) / mean(Psi).
double choose_C(double psi_mean, double decay_exponent = 100.0, double margin = 5.0);

/// Phase equation of one piece, written for the bounded variable
/// zeta = xi - 2 kappa x - delta(x). V carries the taper window.
struct PieceField {
  const FloquetFrame* frame = nullptr;
  Side side = Side::plus;
  double a = 0.0;      // |x| at the inner end
  double x_end = 0.0;  // |x| at the outer end
  double b = 0.0;
  double C = 0.0;
  double taper_width = 0.0;  // 0 disables the window

  double denom(double x) const { return side == Side::plus ? x - b : x + b; }
  double start() const { return side_sign(side) * a; }
  double stop() const { return side_sign(side) * x_end; }
  double xi(double x, double zeta) const { return xi_from_zeta(*frame, x, zeta); }
  double window(double x) const;
  double dzeta(double x, double zeta) const;
  double raw_potential(double x, double xi) const { return -frame->omega() * C * std::sin(xi) / denom(x); }
  double potential(double x, double xi) const { return window(x) * raw_potential(x, xi); }
};

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t);

struct XiTrajectory {
  std::vector<double> x;
  std::vector<double> xi;
};

/// Integrates the phase equation from xi(+-a) = xi0 to +-x_end on the given
/// sampling. Throws EnvelopeTooLarge if 2C / (a - b) > k.
XiTrajectory solve_xi(const EmbeddingTarget& target, double a, double b, double xi0, double x_end,
                      Side side, const IntegratorSpec& spec, double sample_spacing = 0.05,
                      std::size_t max_samples = 20000);

struct PotentialPiece {
  Side side = Side::plus;
  std::size_t target = 0;  // index into the schedule's target list
  double lambda = 0.0;
  double a = 0.0;
  double x_end = 0.0;
  double b = 0.0;
  double xi0 = 0.0;
  double C = 0.0;
  double omega = 0.0;
  double taper_width = 0.0;
  std::size_t active = 1;  // N at the step that produced this piece
  std::vector<double> x_grid;
  std::vector<double> xi_grid;
  std::vector<double> V_grid;
  std::shared_ptr<const FloquetFrame> frame;

  PieceField field() const;
  /// True if x lies on this side with a <= |x| <= x_end.
  bool covers(double x) const;
};

/// Raw piece from a phase trajectory: V = -omega C sin xi / (+-x - b).
PotentialPiece piece_potential(const EmbeddingTarget& target, const XiTrajectory& traj, Side side,
                               double a, double b, double x_end, double xi0);

/// Applies the exp(-1/t) window with plateau [a + w, x_end - w]. The window
/// multiplies the coupling in the phase equation as well, so xi is re-solved
/// from xi0. Throws PieceTooShort if w > (x_end - a) / 4.
PotentialPiece smooth_compact(PotentialPiece piece, double taper_width,
                              const IntegratorSpec& spec = {});

/// solve_xi + piece_potential + smooth_compact with the target's C replaced
/// by `C`; this is the single path used by the scheduler and by manifests.
PotentialPiece make_piece(const EmbeddingTarget& target, std::size_t target_index, Side side,
                          double a, double b, double x_end, double xi0, double C,
                          double taper_width, const IntegratorSpec& spec,
                          double sample_spacing = 0.05, std::size_t max_samples = 20000);

enum class ScheduleMode { finite, growing };

struct ScheduleOptions {
  ScheduleMode mode = ScheduleMode::finite;
  double a0 = 1e4;
  double x_max = 2e4;
  double b = 0.0;
  double decay_exponent = 100.0;  // D in the ratio rule
  double growth = 2.0;            // bystander factor per foreign piece
  double taper_width = 1.0;
  double sample_spacing = 0.05;
  std::size_t max_samples = 20000;
  // Stop at the end of a cycle once the last stage has this many cycles (0: fill x_max).
  std::size_t stop_after_cycles = 0;
  // growing mode
  std::function<double(double)> h;
  std::string h_name;
  std::size_t min_cycles_per_stage = 3;
};

/// Minimal ratio r with c_bound growth^(N-1) r^-D <= 1/2.
double piece_ratio(double c_bound, double growth, double decay_exponent, std::size_t active);

/// Running (ln R, zeta) of every target on one side.
struct TargetStates {
  std::vector<double> ln_R;
  std::vector<double> zeta;
};

/// Initial state at +-a0: R = 1, xi = pi/2.
TargetStates initial_states(const std::vector<EmbeddingTarget>& targets, Side side, double a0);

/// Advances every target across one piece together with the piece's own
/// phase; the owning target (same frame) follows the piece phase exactly. `observe(x, states)` runs at each sample abscissa of the piece.
void advance_across_piece(const PotentialPiece& piece, const std::vector<EmbeddingTarget>& targets,
                          TargetStates& states, const IntegratorSpec& spec,
                          const std::function<void(double, const TargetStates&)>& observe = {});

struct SynthesisSchedule {
  std::vector<EmbeddingTarget> targets;
  std::vector<PotentialPiece> pieces;  // plus and minus pieces for step r at 2r, 2r + 1
  std::vector<double> T;               // breakpoints, |x|
  std::vector<std::size_t> N;          // active targets per step
  std::vector<std::size_t> owner;      // target index per step
  ScheduleOptions options;
};

/// Round-robin construction; see ScheduleOptions. Throws HorizonTooShort,
/// EnvelopeViolation (growing mode) or ConfigError.
SynthesisSchedule schedule(const std::vector<EmbeddingTarget>& targets, const ScheduleOptions& opt,
                           const IntegratorSpec& spec);

class SynthesizedPotential {
 public:
  SynthesizedPotential(std::vector<PotentialPiece> pieces, double a0, IntegratorSpec spec);

  /// Smoothed V(x); zero on (-a0, a0) and outside every piece.
  double operator()(double x) const;
  const std::vector<PotentialPiece>& pieces() const { return pieces_; }
  double a0() const { return a0_; }
  /// Index of the piece covering x, if any.
  std::optional<std::size_t> find(double x) const;

 private:
  std::vector<PotentialPiece> pieces_;
  double a0_;
  IntegratorSpec spec_;
  std::vector<std::size_t> plus_, minus_;  // piece indices sorted by a
};

/// Throws OverlapDetected if two pieces on one side share interior points.
SynthesizedPotential assemble(const SynthesisSchedule& s, const IntegratorSpec& spec);

}  // namespace dirac
