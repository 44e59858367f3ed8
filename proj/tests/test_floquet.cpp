#include <cmath>
#include <numbers>
#include <variant>

#include <doctest.h>

#include "dirac/error.hpp"
#include "dirac/floquet.hpp"
#include "dirac/kernels.hpp"

using namespace dirac;

namespace {

constexpr double pi = std::numbers::pi;

DiracCoefficients mass(double m) { return {PeriodicCoefficient::constant(m), {}}; }

DiracCoefficients wavy() { return {{0.3, {0.5}, {0.2}}, {0.0, {0.1}, {0.4}}}; }

double wrap(double a) { return std::remainder(a, 2.0 * pi); }

}  // namespace

TEST_SUITE("floquet") {
  TEST_CASE("free monodromy is the rotation by lambda") {
    for (double lambda : {-2.5, -0.3, 0.7, 1.9, 4.0}) {
      const Monodromy m = monodromy({}, lambda, {});
      CHECK(m.m[0] == doctest::Approx(std::cos(lambda)).epsilon(1e-9));
      CHECK(m.m[1] == doctest::Approx(std::sin(lambda)).epsilon(1e-9));
      CHECK(m.m[2] == doctest::Approx(-std::sin(lambda)).epsilon(1e-9));
      CHECK(m.m[3] == doctest::Approx(std::cos(lambda)).epsilon(1e-9));
      CHECK(std::abs(m.det() - 1.0) < 1e-8);
    }
  }

  TEST_CASE("constant mass trace: cos in bands, cosh in the gap") {
    const double m = 1.0;
    for (double lambda : {1.5, 2.0, -3.0}) {
      const double t = monodromy(mass(m), lambda, {}).trace();
      CHECK(std::abs(t - 2.0 * std::cos(std::sqrt(lambda * lambda - m * m))) < 1e-8);
    }
    for (double lambda : {0.0, 0.5, -0.9}) {
      const double t = monodromy(mass(m), lambda, {}).trace();
      CHECK(std::abs(t - 2.0 * std::cosh(std::sqrt(m * m - lambda * lambda))) < 1e-8);
    }
    CHECK(std::abs(monodromy(wavy(), 0.8, {}).det() - 1.0) < 1e-8);
  }

  TEST_CASE("quasimomentum examples") {
    const Quasimomentum k = quasimomentum(monodromy({}, pi / 3, {}));
    REQUIRE(std::holds_alternative<double>(k));
    CHECK(std::get<double>(k) == doctest::Approx(pi / 3).epsilon(1e-9));

    const Quasimomentum r = quasimomentum(monodromy({}, pi / 2, {}));
    REQUIRE(std::holds_alternative<double>(r));
    CHECK(std::get<double>(r) == doctest::Approx(pi / 2).epsilon(1e-9));

    const Quasimomentum gap = quasimomentum(monodromy(mass(1.0), 0.5, {}));
    REQUIRE(std::holds_alternative<GapIndicator>(gap));
    CHECK(std::get<GapIndicator>(gap).excess ==
          doctest::Approx(std::cosh(std::sqrt(0.75)) - 1.0).epsilon(1e-8));
  }

  TEST_CASE("band scans") {
    const BandStructure free = band_scan({}, -2.0, 2.0, 0.01, {});
    CHECK(free.bands.size() == 1);
    CHECK(free.edges().empty());

    const double res = 0.01;
    const BandStructure gapped = band_scan(mass(1.0), -3.0, 3.0, res, {});
    const auto edges = gapped.edges();
    REQUIRE(edges.size() == 2);
    CHECK(std::abs(edges[0] + 1.0) <= res);
    CHECK(std::abs(edges[1] - 1.0) <= res);
    for (std::size_t i = 1; i < gapped.bands.size(); ++i) {
      CHECK(gapped.bands[i - 1].b < gapped.bands[i].a);
    }
    for (const Band& b : gapped.bands) CHECK(b.a < b.b);

    CHECK(band_scan({}, 1.0, 1.0, 0.01, {}).bands.empty());
    CHECK_THROWS_AS(band_scan({}, 0.0, 1.0, 0.0, {}), ConfigError);
  }

  TEST_CASE("a scan too coarse for a narrow band is flagged") {
    // mass 1 puts a gap of width 2 near 0; a 3.0 step straddles it
    CHECK_THROWS_AS(band_scan(mass(1.0), -3.2, 3.2, 1.05, {}), ScanTooCoarse);
  }

  TEST_CASE("|trace/2| approaches 1 monotonically near an edge") {
    const double res = 0.01;
    double prev = 0.0;
    for (int i = 10; i >= 1; --i) {
      const double lambda = 1.0 + i * res / 10.0;
      const double v = std::abs(0.5 * monodromy(mass(1.0), lambda, {}).trace());
      if (i < 10) CHECK(v > prev);
      prev = v;
    }
    CHECK(prev < 1.0);
  }

  TEST_CASE("free Floquet solution at pi/3") {
    const FloquetSolution sol = floquet_solution({}, pi / 3, {});
    CHECK(sol.k == doctest::Approx(pi / 3).epsilon(1e-10));
    CHECK(sol.omega == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i <= sol.intervals; i += 64) {
      CHECK(std::abs(sol.g1[i]) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
      CHECK(std::abs(sol.g2[i]) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
      CHECK(std::abs(wrap(std::arg(sol.g2[i]) - std::arg(sol.g1[i]) - pi / 2)) < 1e-9);
    }
    const cplx mult = std::polar(1.0, sol.exponent);
    CHECK(std::abs(sol.g1.back() - mult * sol.g1.front()) < 1e-10);
    CHECK(std::abs(sol.g2.back() - mult * sol.g2.front()) < 1e-10);
    // first component of the eigenvector is real positive
    CHECK(sol.g1.front().real() > 0.0);
    CHECK(std::abs(sol.g1.front().imag()) < 1e-14);
  }

  TEST_CASE("Floquet invariants on a periodic dataset") {
    for (const auto& [c, lambda] : {std::pair{mass(1.0), 2.0}, std::pair{wavy(), 1.7}}) {
      const FloquetSolution sol = floquet_solution(c, lambda, {});
      CHECK(sol.omega > 0.0);
      CHECK(sol.k > 0.0);
      CHECK(sol.k < pi);
      double worst = 0.0;
      for (std::size_t i = 0; i <= sol.intervals; ++i) {
        const double w = 2.0 * std::imag(std::conj(sol.g1[i]) * sol.g2[i]);
        worst = std::max(worst, std::abs(w - sol.omega));
        CHECK(std::abs(sol.g1[i]) > 0.0);
        CHECK(std::abs(sol.g2[i]) > 0.0);
      }
      CHECK(worst <= 1e-8 * sol.omega);
      const cplx mult = std::polar(1.0, sol.exponent);
      const double g0 = std::sqrt(std::norm(sol.g1.front()) + std::norm(sol.g2.front()));
      const double miss = std::sqrt(std::norm(sol.g1.back() - mult * sol.g1.front()) +
                                    std::norm(sol.g2.back() - mult * sol.g2.front()));
      CHECK(miss <= 1e-8 * g0);
    }
  }

  TEST_CASE("energies outside the admissible band interior are refused") {
    CHECK_THROWS_AS(floquet_solution(mass(1.0), 0.5, {}), GapEnergy);
    // free: k = lambda, so lambda = 0.01 is within the 0.05 edge margin
    CHECK_THROWS_AS(floquet_solution({}, 0.01, {}), BandEdge);
    CHECK_THROWS_AS(floquet_solution({}, pi - 0.02, {}), BandEdge);
  }

  TEST_CASE("free derived data") {
    const auto frame = make_frame({}, pi / 3, {});
    const DerivedPeriodicData& d = frame->data();
    for (std::size_t i = 0; i < d.x.size(); i += 128) {
      CHECK(std::abs(wrap(d.Gamma1[i] - pi)) < 1e-9);
      CHECK(d.Psi[i] == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::abs(wrap(d.Gamma2[i])) < 1e-9);
      CHECK(std::abs(wrap(d.delta[i])) < 1e-9);
    }
    CHECK(frame->psi_mean() == doctest::Approx(1.0).epsilon(1e-9));
    const auto [d1, d2] = gamma_derivative(frame->solution(), d, 0.25);
    CHECK(d1 == doctest::Approx(pi / 3).epsilon(1e-9));
    CHECK(d2 == doctest::Approx(pi / 3).epsilon(1e-9));
  }

  TEST_CASE("algebraic identities of the derived data") {
    for (const auto& [c, lambda] : {std::pair{mass(1.0), 2.0}, std::pair{wavy(), 1.7}}) {
      const auto frame = make_frame(c, lambda, {});
      const DerivedPeriodicData& d = frame->data();
      const std::size_t n = d.x.size() - 1;
      double min_psi = 1e300;
      for (std::size_t i = 0; i <= n; ++i) {
        const double a1 = d.abs_g1[i] * d.abs_g1[i];
        const double a2 = d.abs_g2[i] * d.abs_g2[i];
        min_psi = std::min(min_psi, d.Psi[i]);
        CHECK(std::abs(d.Psi[i] * d.Psi[i] - (a1 * a1 + a2 * a2 - 2.0 * a1 * a2 * std::cos(d.Gamma1[i]))) < 1e-10);
        CHECK(std::abs(std::sin(d.Gamma2[i]) * d.Psi[i] + a2 * std::sin(d.Gamma1[i])) < 1e-10);
        CHECK(std::abs(std::cos(d.Gamma2[i]) * d.Psi[i] - (a1 - a2 * std::cos(d.Gamma1[i]))) < 1e-10);
        const double w = 2.0 * d.abs_g1[i] * d.abs_g2[i] * std::sin(d.gamma2[i] - d.gamma1[i]);
        CHECK(std::abs(w - frame->omega()) < 1e-8 * frame->omega());
      }
      CHECK(min_psi > 0.0);
      // periodic parts agree at both ends of the period, mod 2 pi
      CHECK(std::abs(wrap(d.phi1[n] - d.phi1[0])) < 1e-8);
      CHECK(std::abs(wrap(d.phi2[n] - d.phi2[0])) < 1e-8);
      CHECK(std::abs(wrap(d.Gamma1[n] - d.Gamma1[0])) < 1e-8);
      CHECK(std::abs(wrap(d.Gamma2[n] - d.Gamma2[0])) < 1e-8);
      CHECK(std::abs(wrap(d.delta[n] - d.delta[0])) < 1e-8);
    }
  }

  TEST_CASE("gamma slopes match finite differences") {
    const auto frame = make_frame(wavy(), 1.7, {});
    const DerivedPeriodicData& d = frame->data();
    const FloquetSolution& sol = frame->solution();
    const std::size_t n = d.x.size() - 1;
    const double h = 1.0 / static_cast<double>(n);
    for (std::size_t i = 2; i + 2 <= n; i += 37) {
      const auto [e1, e2] = gamma_derivative(sol, d, d.x[i]);
      // five-point stencil on the unwrapped angles
      auto fd = [&](const std::vector<double>& g) {
        return (-g[i + 2] + 8.0 * g[i + 1] - 8.0 * g[i - 1] + g[i - 2]) / (12.0 * h);
      };
      CHECK(std::abs(fd(d.gamma1) - e1) <= 1e-6 * (1.0 + std::abs(e1)));
      CHECK(std::abs(fd(d.gamma2) - e2) <= 1e-6 * (1.0 + std::abs(e2)));
    }
  }

  TEST_CASE("frame evaluation is periodic in the periodic parts") {
    const auto f = make_frame(wavy(), 1.7, {});
    for (double x : {0.13, 2.71, -4.4, 1234.5}) {
      CHECK(f->psi(x + 1.0) == doctest::Approx(f->psi(x)).epsilon(1e-12));
      CHECK(f->delta(x + 1.0) == doctest::Approx(f->delta(x)).epsilon(1e-10));
      CHECK(std::abs(f->gamma1(x + 1.0) - f->gamma1(x) - f->exponent()) < 1e-9);
      const double h = 1e-5;
      CHECK(f->delta_prime(x) == doctest::Approx((f->delta(x + h) - f->delta(x - h)) / (2 * h)).epsilon(1e-5));
    }
  }

  TEST_CASE("serial and parallel trace scans agree bit for bit") {
    std::vector<double> lambdas;
    for (int i = 0; i < 40; ++i) lambdas.push_back(-3.0 + 0.15 * i);
    const auto a = kernels::trace_scan_serial(wavy(), lambdas, {});
    const auto b = kernels::trace_scan_parallel(wavy(), lambdas, {});
    CHECK(a == b);
  }
}
