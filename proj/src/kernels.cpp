#include "dirac/kernels.hpp"

#include <cmath>

#include "dirac/floquet.hpp"

namespace dirac::kernels {

std::vector<double> trace_scan_serial(const DiracCoefficients& c, const std::vector<double>& lambdas,
                                      const IntegratorSpec& spec) {
  std::vector<double> out(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) out[i] = monodromy(c, lambdas[i], spec).trace();
  return out;
}

std::vector<double> trace_scan_parallel(const DiracCoefficients& c,
                                        const std::vector<double>& lambdas,
                                        const IntegratorSpec& spec) {
  std::vector<double> out(lambdas.size());
  std::exception_ptr failure;
  const auto count = static_cast<long long>(lambdas.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long long i = 0; i < count; ++i) {
    try {
      const auto u = static_cast<std::size_t>(i);
      out[u] = monodromy(c, lambdas[u], spec).trace();
    } catch (...) {
#pragma omp critical(trace_scan_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::size_t PanelGrid::count() const {
  if (!(x1 > x0)) return 0;
  return static_cast<std::size_t>(std::ceil((x1 - x0) / length - 1e-9));
}

double PanelGrid::end(std::size_t j) const {
  const double e = x0 + static_cast<double>(j + 1) * length;
  return e > x1 || j + 1 == count() ? x1 : e;
}

std::vector<double> prefix_sum(const std::vector<double>& panels) {
  std::vector<double> out(panels.size() + 1, 0.0);
  // Neumaier-compensated so that long sums of alternating panels stay exact
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t j = 0; j < panels.size(); ++j) {
    const double v = panels[j];
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
    out[j + 1] = sum + comp;
  }
  return out;
}

}  // namespace dirac::kernels
