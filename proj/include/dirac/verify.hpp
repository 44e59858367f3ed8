#pragma once

// Numerical checks of the decay, stability and oscillatory-integral bounds.
// Every check returns a report with a `passed` flag; enforce() turns a
// failed report into the matching exception.

#include <functional>
#include <string>
#include <vector>

#include "dirac/synth.hpp"

namespace dirac {

// ---------------------------------------------------------------- oscillatory

enum class Trig { sine, cosine };

struct OscCheck {
  std::string kind;  // "drift", "periodic" or "control"
  std::string gamma_description;
  Trig trig = Trig::sine;
  double a = 0.0;
  double beta = 1.0;  // exponent applied to x0 in the product
  double x_max = 0.0;
  std::vector<double> x0_list;
  std::vector<double> sup_integral;  // sup_{x0 <= x <= x_max} |int_x0^x ...|
  std::vector<double> product;       // sup_integral * x0^beta
  double spread = 0.0;               // max(product) / min(product)
  double growth = 0.0;               // product.back() / product.front()
  double factor = 4.0;
  bool passed = false;
};

/// theta' = a + 1 / (1 + x^beta1), integrand sin(theta) / t^beta2 (or cos).
/// Passes if the products stay within `factor` of each other.
OscCheck drift_check(double a, double beta1, double beta2,
                              const std::vector<double>& x0_list, double x_max,
                              Trig trig = Trig::sine, double factor = 4.0, bool parallel = true);

/// theta = a x + gamma(x) + ln x, integrand Gamma(t) sin(theta) / t.
/// Throws ResonantFrequency when a is within 1e-3 of 2 pi Z unless
/// `resonant_control` is set, in which case the check passes iff the
/// products grow by more than 10x (the estimate must fail there).
OscCheck periodic_check(const std::function<double(double)>& Gamma,
                              const std::function<double(double)>& gamma, double a,
                              const std::vector<double>& x0_list, double x_max,
                              const std::string& description, bool resonant_control = false,
                              double factor = 4.0, bool parallel = true);

/// Periodic check with Gamma = Psi and gamma = delta of the target frame.
OscCheck periodic_check(const FloquetFrame& frame, double a,
                              const std::vector<double>& x0_list, double x_max,
                              double factor = 4.0, bool parallel = true);

void enforce(const OscCheck& r);

// ---------------------------------------------------------------- decay

struct DecayOptions {
  double decay_exponent = 100.0;  // D
  double slope_factor = 0.95;     // pass if slope <= -slope_factor * D
  double safety = 2.0;            // multiplier on the measured C_bound
  double rise_tolerance = 1e-6;   // allowed ln R(x) - ln R(a)
  bool dual_path = true;
  double dual_tolerance = 1e-6;   // on |Delta ln R| between the two paths
  std::size_t keep_samples = 400;  // stored in the report
};

struct DecayReport {
  double lambda = 0.0;
  std::string piece_id;
  double a = 0.0, x_end = 0.0, b = 0.0, C = 0.0;
  std::size_t sample_count = 0;
  std::vector<double> x, ln_R;  // thinned copy for the report
  double slope = 0.0;           // fit of ln R against ln((|x| - b) / (a - b))
  double intercept = 0.0;
  double additive_C = 0.0;  // max of ln R(x) - ln R(a) + D ln((|x| - b) / (a - b))
  double max_rise = 0.0;    // max of ln R(x) - ln R(a)
  double c_bound = 0.0;     // safety * exp(additive_C)
  double dual_path_error = 0.0;
  double slope_limit = 0.0;
  bool passed = false;
  std::string message;
};

/// Integrates the owning target across the piece from R(a) = 1 and fits the
/// power-law slope. The cross-check integrates the full system backwards
/// from x_end (forwards, the decaying solution is the unstable one).
DecayReport decay_check(const EmbeddingTarget& target, const PotentialPiece& piece,
                        const IntegratorSpec& spec, const DecayOptions& opt = {});

void enforce(const DecayReport& r);

// ---------------------------------------------------------------- stability

struct StabilityOptions {
  std::size_t phases = 8;  // eta0 = 2 pi m / phases
  double limit = 2.0;
  bool dual_path = true;
  double dual_tolerance = 1e-6;
};

struct StabilityReport {
  double lambda = 0.0;    // piece target
  double lambda_j = 0.0;  // bystander
  std::string piece_id;
  double worst_ratio = 0.0;  // sup R_j(x) / R_j(x0)
  double worst_phase = 0.0;
  double worst_x = 0.0;
  std::vector<double> ratio_per_phase;
  double dual_path_error = 0.0;
  double limit = 2.0;
  bool passed = false;
  std::string message;
};

/// Throws HypothesisViolated if the bystander shares the piece's frame.
StabilityReport stability_check(const EmbeddingTarget& bystander, const PotentialPiece& piece,
                                const IntegratorSpec& spec, const StabilityOptions& opt = {});

void enforce(const StabilityReport& r);

// ---------------------------------------------------------------- non-embedding

struct NonembeddingReport {
  double lambda = 0.0;
  double epsilon = 0.0;
  double C = 0.0;  // max(|g1|^2 + |g2|^2) / omega
  double exponent = 0.0;  // C epsilon
  double x0 = 0.0, x_max = 0.0;
  std::string potential;
  double min_margin = 0.0;  // min of R(x) (x / x0)^(C eps) / R(x0)
  double worst_x = 0.0;
  double l2_actual = 0.0;   // int R^2 over [x0, x_max] (trapezoid on the samples)
  double l2_lower = 0.0;    // same integral of the lower bound
  double dual_path_error = 0.0;
  double tolerance = 1e-3;
  bool passed = false;
  std::string message;
};

/// Potential that may depend on the solution's own phase xi (state feedback).
using FeedbackPotential = std::function<double(double x, double xi)>;

/// Constant in |V| <= eps / x => |ln R'| <= C eps / x.
double nonembedding_constant(const FloquetFrame& frame);

NonembeddingReport nonembedding_check(const FloquetFrame& frame, const FeedbackPotential& V,
                                      double epsilon, double x0, double x_max,
                                      const IntegratorSpec& spec, const std::string& description,
                                      double tolerance = 1e-3, bool dual_path = true);

void enforce(const NonembeddingReport& r);

// ---------------------------------------------------------------- schedule runs

/// ln R of every target along one side of an assembled schedule.
struct SideTrace {
  Side side = Side::plus;
  std::vector<std::vector<double>> piece_l2;  // [target][step], int R^2 over the piece
  std::vector<double> x_end;                  // per step, signed
  std::vector<std::vector<double>> ln_R_end;  // [target][step]
};

struct ScheduleRun {
  std::vector<std::size_t> owner;
  std::vector<std::size_t> N;
  SideTrace sides[2];  // plus, minus
};

ScheduleRun run_schedule(const SynthesisSchedule& s, const IntegratorSpec& spec);

struct TailVerdict {
  std::size_t target = 0;
  double lambda = 0.0;
  Side side = Side::plus;
  std::vector<double> cycle_sums;
  double fitted_ratio = 0.0;
  double max_ratio = 0.0;  // largest consecutive ratio
  bool embedded_candidate = false;
  std::string message;
};

/// Cycle sums of int R^2 from the first cycle where the target owns a piece.
/// The verdict is positive if every consecutive ratio is at most 1/2.
/// Throws InconclusiveTail if fewer than 3 complete cycles exist.
std::vector<TailVerdict> l2_tail_estimate(const ScheduleRun& run,
                                          const std::vector<EmbeddingTarget>& targets);

// ---------------------------------------------------------------- calibration

struct CalibrationOptions {
  double a = 1e3;             // probe activation point (|x|)
  double b = 0.0;
  double probe_ratio = 1.05;  // x_end = b + probe_ratio (a - b)
  double decay_exponent = 100.0;
  double safety = 2.0;
  double stability_limit = 1.5;  // bystander factor required at a - b >= K
  double taper_width = 1.0;
  std::size_t phases = 8;
};

struct CalibrationReport {
  std::vector<double> c_bound;    // per target (already multiplied by safety)
  std::vector<double> K;          // per target
  double growth = 1.0;            // worst bystander factor seen in the probes
};

/// Measures C_bound and K for every target and stores them in `targets`.
CalibrationReport calibrate_targets(std::vector<EmbeddingTarget>& targets,
                                    const IntegratorSpec& spec, const CalibrationOptions& opt = {});

// ---------------------------------------------------------------- full suite

struct EnvelopeReport {
  std::string kind;  // "piece" or "h"
  double max_ratio = 0.0;  // max |V| (|x| - b) / (omega C)  or  max |V| (1 + |x|) / |h|
  double worst_x = 0.0;
  std::size_t samples = 0;
  bool passed = false;
};

EnvelopeReport piece_envelope_check(const SynthesisSchedule& s);
EnvelopeReport h_envelope_check(const SynthesisSchedule& s);

struct ScheduleVerification {
  std::vector<DecayReport> decay;
  std::vector<StabilityReport> stability;
  std::vector<TailVerdict> tails;
  std::vector<EnvelopeReport> envelopes;
  bool passed = false;
};

struct VerifyOptions {
  DecayOptions decay;
  StabilityOptions stability;
  bool parallel = true;
};

ScheduleVerification verify_schedule(const SynthesisSchedule& s, const IntegratorSpec& spec,
                                     const VerifyOptions& opt = {});

}  // namespace dirac
