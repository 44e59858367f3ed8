#pragma once

// Adaptive one-step integration with exact landing on requested abscissae.
//
// The Runge-Kutta-Fehlberg 7(8) tableau comes from Boost.Odeint; step-size
// control, direction handling and failure detection live here so that every
// caller sees the same deterministic contract.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "dirac/error.hpp"

namespace dirac {

struct IntegratorSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.25;
  double dense_output_stride = 1e-2;

  /// Throws ConfigError unless both tolerances lie in (0, 1e-4] and the
  /// step bounds are positive.
  void validate() const;
};

template <std::size_t N>
using Vec = std::array<double, N>;

template <class State>
class Propagator {
 public:
  explicit Propagator(const IntegratorSpec& spec) : spec_(spec) { spec_.validate(); }

  /// Advances `y` from `x` to `x_target` (either direction). `rhs(x, y, dydx)`
  /// must write the derivative into `dydx`. The last accepted step size is
  /// carried over to the next call.
  template <class Rhs>
  void advance(Rhs&& rhs, State& y, double x, double x_target) {
    if (x_target == x) return;
    const double dir = x_target > x ? 1.0 : -1.0;
    double h = h_hint_ > 0.0 ? h_hint_ : std::min(spec_.max_step, 1e-2);
    auto system = [&rhs](const State& s, State& d, double t) { rhs(t, s, d); };

    State trial = y;
    State err = y;
    int consecutive_rejects = 0;
    while (dir * (x_target - x) > 0.0) {
      const double h_try = std::min(h, spec_.max_step);
      const double remaining = std::abs(x_target - x);
      const bool lands = h_try >= remaining * (1.0 - 1e-12);
      const double h_step = lands ? remaining : h_try;
      if (!lands && h_step < 1e-13 * std::max(1.0, std::abs(x))) {
        throw StepSizeUnderflow("step size underflow at x = " + std::to_string(x));
      }
      trial = y;
      stepper_.do_step(system, trial, x, dir * h_step, err);

      double norm = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(trial[i]) || !std::isfinite(err[i])) {
          finite = false;
          break;
        }
        const double scale =
            spec_.abs_tol + spec_.rel_tol * std::max(std::abs(y[i]), std::abs(trial[i]));
        norm = std::max(norm, std::abs(err[i]) / scale);
      }
      if (!finite) {
        if (++consecutive_rejects > 60) {
          throw NonFiniteState("state left the finite range near x = " + std::to_string(x));
        }
        h = 0.1 * h_step;
        continue;
      }
      if (norm <= 1.0) {
        y = trial;
        x = lands ? x_target : x + dir * h_step;
        ++accepted_;
        consecutive_rejects = 0;
        const double grow =
            norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -1.0 / 8.0), 0.2, 5.0);
        double next = h_step * grow;
        // a landing step is truncated, not a sign of stiffness
        if (lands) next = std::max(next, h_try);
        h = std::min(next, spec_.max_step);
        h_hint_ = h;
      } else {
        ++rejected_;
        if (++consecutive_rejects > 200) {
          throw StepSizeUnderflow("step controller stalled at x = " + std::to_string(x));
        }
        h = h_step * std::clamp(0.9 * std::pow(norm, -1.0 / 8.0), 0.1, 0.9);
      }
    }
  }

  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }
  const IntegratorSpec& spec() const { return spec_; }

 private:
  IntegratorSpec spec_;
  double h_hint_ = 0.0;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  boost::numeric::odeint::runge_kutta_fehlberg78<State> stepper_;
};

/// Output abscissae from x0 to x1 with spacing stride * max(1, |x|):
/// uniform near the origin, geometric far out. Both endpoints included.
std::vector<double> output_grid(double x0, double x1, double stride);

}  // namespace dirac
