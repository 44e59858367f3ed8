#pragma once

// Data-parallel inner loops. Every kernel has a serial reference with the
// same signature; the OpenMP variant writes into per-index slots, so both
// produce bit-identical results regardless of thread count.

#include <array>
#include <cstddef>
#include <exception>
#include <vector>

#include "dirac/periodic_core.hpp"

namespace dirac::kernels {

/// Monodromy trace at each lambda.
std::vector<double> trace_scan_serial(const DiracCoefficients& c, const std::vector<double>& lambdas,
                                      const IntegratorSpec& spec);
std::vector<double> trace_scan_parallel(const DiracCoefficients& c,
                                        const std::vector<double>& lambdas,
                                        const IntegratorSpec& spec);

/// 8-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kGaussNodes{
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussWeights{
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

/// Panels [x0 + j L, x0 + (j+1) L] covering [x0, x1]; the last one is clipped.
struct PanelGrid {
  double x0;
  double x1;
  double length;

  std::size_t count() const;
  double start(std::size_t j) const { return x0 + static_cast<double>(j) * length; }
  double end(std::size_t j) const;
};

template <class F>
double gauss_panel(const F& f, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double sum = 0.0;
  for (std::size_t n = 0; n < kGaussNodes.size(); ++n) {
    sum += kGaussWeights[n] * f(mid + half * kGaussNodes[n]);
  }
  return sum * half;
}

template <class F>
std::vector<double> panel_integrals_serial(const F& f, const PanelGrid& grid) {
  const std::size_t n = grid.count();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = gauss_panel(f, grid.start(j), grid.end(j));
  return out;
}

template <class F>
std::vector<double> panel_integrals_parallel(const F& f, const PanelGrid& grid) {
  const std::size_t n = grid.count();
  std::vector<double> out(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < count; ++j) {
    const auto u = static_cast<std::size_t>(j);
    out[u] = gauss_panel(f, grid.start(u), grid.end(u));
  }
  return out;
}

/// Running integral at panel boundaries: out[0] = 0, out[j+1] = out[j] + panel[j].
std::vector<double> prefix_sum(const std::vector<double>& panels);

}  // namespace dirac::kernels
