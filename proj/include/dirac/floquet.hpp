#pragma once

#include <array>
#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dirac/hermite.hpp"
#include "dirac/periodic_core.hpp"

namespace dirac {

using cplx = std::complex<double>;

/// Real fundamental matrix over one period, row-major.
struct Monodromy {
  std::array<double, 4> m{};
  double lambda = 0.0;

  double trace() const { return m[0] + m[3]; }
  double det() const { return m[0] * m[3] - m[1] * m[2]; }
};

/// Returned by quasimomentum() for energies in a spectral gap; carries |trace/2| - 1.
struct GapIndicator {
  double excess;
};

using Quasimomentum = std::variant<double, GapIndicator>;

struct Band {
  double a;
  double b;
  int k_direction;  // +1 if k increases with lambda across the band, -1 otherwise
  bool lower_is_edge;
  bool upper_is_edge;
};

struct BandStructure {
  std::vector<Band> bands;
  std::pair<double, double> scan_range{0.0, 0.0};
  double resolution = 0.0;
  std::vector<double> lambdas;  // scan samples
  std::vector<double> traces;

  /// Interior band edges (|trace/2| = 1 crossings), ascending.
  std::vector<double> edges() const;
};

struct FloquetOptions {
  std::size_t grid_intervals = 4096;
  double edge_margin = 0.05;  // k must lie in (margin, pi - margin)
};

/// Complex Floquet solution g on [0, 1] with g(x + 1) = exp(i exponent) g(x).
///
/// `k` is the quasimomentum in (0, pi). `exponent` is +k or -k: the solution
/// is conjugated when needed so that omega = 2 Im(conj(g1) g2) is positive.
struct FloquetSolution {
  DiracCoefficients coefficients;
  double lambda = 0.0;
  double k = 0.0;
  double exponent = 0.0;
  double omega = 0.0;
  std::size_t intervals = 0;
  std::vector<cplx> g1, g2;    // on x_i = i / intervals, i = 0..intervals
  std::vector<cplx> dg1, dg2;  // g' = A(x) g at the same nodes
  std::string normalization = "unit-norm eigenvector, first component real positive, omega > 0";

  double x(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(intervals); }
};

/// Quantities assembled from g on the period grid; angles are unwrapped.
struct DerivedPeriodicData {
  std::vector<double> x;
  std::vector<double> abs_g1, abs_g2;
  std::vector<double> gamma1, gamma2;
  std::vector<double> phi1, phi2;
  std::vector<double> Gamma1, Psi, Gamma2, delta;
  // analytic slopes at the same nodes
  std::vector<double> d_abs2_g1, d_abs2_g2, d_gamma1, d_gamma2, d_Psi, d_Gamma2, d_delta;
  double psi_mean = 0.0;
};

Monodromy monodromy(const DiracCoefficients& c, double lambda, const IntegratorSpec& spec);

Quasimomentum quasimomentum(const Monodromy& mono);

BandStructure band_scan(const DiracCoefficients& c, double lambda_lo, double lambda_hi,
                        double resolution, const IntegratorSpec& spec);

FloquetSolution floquet_solution(const DiracCoefficients& c, double lambda,
                                 const IntegratorSpec& spec, const FloquetOptions& opt = {});

DerivedPeriodicData derived_data(const FloquetSolution& sol);

/// (gamma1', gamma2') at a grid abscissa, from omega (lambda +- p) / (2 |g_j|^2).
std::pair<double, double> gamma_derivative(const FloquetSolution& sol,
                                           const DerivedPeriodicData& data, double x);

/// Values needed by the amplitude/phase equations at one abscissa.
struct FrameSample {
  double abs2_g1;
  double abs2_g2;
  double psi;
  double delta;
  double delta_prime;
};

/// Floquet solution plus derived data, evaluable at any real x.
class FloquetFrame {
 public:
  FloquetFrame(FloquetSolution sol, DerivedPeriodicData data);

  FrameSample sample(double x) const {
    const GridCell c = locate(x, intervals_);
    return {abs2_g1_(c), abs2_g2_(c), psi_(c), delta_(c), delta_.derivative(c)};
  }

  cplx g1(double x) const;
  cplx g2(double x) const;
  double abs2_g1(double x) const { return abs2_g1_(x); }
  double abs2_g2(double x) const { return abs2_g2_(x); }
  double gamma1(double x) const { return gamma1_(x); }
  double gamma2(double x) const { return gamma2_(x); }
  double Gamma2(double x) const { return Gamma2_(x); }
  double psi(double x) const { return psi_(x); }
  double delta(double x) const { return delta_(x); }
  double delta_prime(double x) const { return delta_.derivative(x); }
  /// gamma_j' from the closed form omega (lambda +- p) / (2 |g_j|^2).
  std::pair<double, double> gamma_prime(double x) const;

  double lambda() const { return sol_.lambda; }
  double k() const { return sol_.k; }
  double exponent() const { return sol_.exponent; }
  double omega() const { return sol_.omega; }
  double psi_mean() const { return data_.psi_mean; }
  /// max over the period of |g1|^2 + |g2|^2
  double max_norm2() const { return max_norm2_; }
  const FloquetSolution& solution() const { return sol_; }
  const DerivedPeriodicData& data() const { return data_; }

 private:
  FloquetSolution sol_;
  DerivedPeriodicData data_;
  std::size_t intervals_;
  PeriodicHermite abs2_g1_, abs2_g2_, psi_, delta_, gamma1_, gamma2_, Gamma2_;
  PeriodicHermite re_g1_, im_g1_, re_g2_, im_g2_;
  double max_norm2_ = 0.0;
};

std::shared_ptr<const FloquetFrame> make_frame(const DiracCoefficients& c, double lambda,
                                               const IntegratorSpec& spec,
                                               const FloquetOptions& opt = {});

}  // namespace dirac
