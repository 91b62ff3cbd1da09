#pragma once

// Test-only reference computations. None of these call into the quadrature
// or solver paths they are used to check.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "bcec/constellation.hpp"

namespace oracle {

using cplx = std::complex<double>;

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

inline double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::size_t draw_index(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng), acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (r < acc) return i;
  }
  return probs.size() - 1;
}

/// Monte Carlo estimate (nats) of I(x_j; y) for y = sqrt(z)(sqrt(Pj) x_j + sqrt(Pm) x_m) + w
/// with discrete x_j, x_m and w ~ CN(0,1).
inline Estimate mc_mi_with_interference(const bcec::Constellation& own, const bcec::Constellation& intf, double z,
                                        double pj, double pm, std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const double aj = std::sqrt(z * pj), am = std::sqrt(z * pm);
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> num(intf.size()), den(own.size() * intf.size());
  for (std::int64_t s = 0; s < n; ++s) {
    const std::size_t i = draw_index(own.probs(), rng);
    const std::size_t k = draw_index(intf.probs(), rng);
    const cplx w(g(rng), g(rng));
    const cplx y = aj * own.symbols()[i] + am * intf.symbols()[k] + w;
    std::size_t idx = 0;
    for (std::size_t a = 0; a < own.size(); ++a) {
      for (std::size_t b = 0; b < intf.size(); ++b, ++idx) {
        const double lf = std::log(own.probs()[a] * intf.probs()[b]) - std::norm(y - aj * own.symbols()[a] - am * intf.symbols()[b]);
        den[idx] = lf;
        if (a == i) num[b] = std::log(intf.probs()[b]) - std::norm(y - aj * own.symbols()[a] - am * intf.symbols()[b]);
      }
    }
    const double v = log_sum_exp(num) - log_sum_exp(den);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  return {mean, std::sqrt(var / n)};
}

/// Monte Carlo estimate (nats) of single-user I(x; sqrt(s) x + w).
inline Estimate mc_mi_conditional(const bcec::Constellation& c, double s, std::int64_t n, std::uint64_t seed) {
  const auto dummy = bcec::Constellation::custom({1.0, -1.0}, {0.5, 0.5});
  return mc_mi_with_interference(c, dummy, 1.0, s, 0.0, n, seed);
}

/// Central finite difference.
template <class F>
double central_diff(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
