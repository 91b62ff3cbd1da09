#include <cmath>
#include <random>
#include <stdexcept>

#include "bcec/fading.hpp"
#include "bcec/parallel.hpp"
#include "doctest.h"

using namespace bcec;

namespace {

// Rician power moments by Monte Carlo from the complex-Gaussian definition of
// h, independent of the chi-square parametrization used by the library.
double mc_mean(double K, double omega, int n, std::uint64_t seed, int power) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const double nu = std::sqrt(K / (K + 1.0) * omega), sigma = std::sqrt(omega / (2.0 * (K + 1.0)));
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double re = nu + sigma * g(rng), im = sigma * g(rng);
    s += std::pow(re * re + im * im, power);
  }
  return s / n;
}

}  // namespace

TEST_CASE("Rician spec validation and dB conversion") {
  CHECK(RicianSpec::from_dB(0.0).K == doctest::Approx(1.0));
  CHECK(RicianSpec::from_dB(-6.88).K == doctest::Approx(std::pow(10.0, -0.688)));
  CHECK_THROWS_AS((RicianSpec{-1.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((RicianSpec{1.0, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS(build_grid({}, {}, 4, GridMethod::quantile), std::invalid_argument);
}

TEST_CASE("K = 0 is exponential") {
  const RicianSpec s{0.0, 2.0};
  for (double z : {0.1, 1.0, 3.0}) {
    CHECK(s.cdf(z) == doctest::Approx(1.0 - std::exp(-z / 2.0)).epsilon(1e-13));
    CHECK(s.pdf(z) == doctest::Approx(std::exp(-z / 2.0) / 2.0).epsilon(1e-13));
  }
  // Exponential slice means: E[z; z <= x] = omega (1 - e^{-x/omega}) - x e^{-x/omega}.
  const double x = 1.7;
  CHECK(s.partial_mean(x) == doctest::Approx(2.0 * (1.0 - std::exp(-x / 2.0)) - x * std::exp(-x / 2.0)).epsilon(1e-12));
  const auto nodes = quantile_nodes(RicianSpec{0.0, 1.0}, 2);
  CHECK(nodes[0] == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-9));
  CHECK(0.5 * (nodes[0] + nodes[1]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Rician moments match the complex-Gaussian definition") {
  for (double K : {0.2, 3.0, 7.0}) {
    const RicianSpec s{K, 1.3};
    CHECK(std::abs(mc_mean(K, 1.3, 400000, 3, 1) - 1.3) < 1e-2);
    CHECK(std::abs(mc_mean(K, 1.3, 400000, 4, 2) - s.second_moment()) / s.second_moment() < 1e-2);
    // Sampler agrees with the CDF.
    std::mt19937_64 rng(9);
    int below = 0;
    const double med = s.quantile(0.5);
    for (int i = 0; i < 100000; ++i) below += s.sample(rng) <= med;
    CHECK(std::abs(below / 1e5 - 0.5) < 5e-3);
  }
}

TEST_CASE("quantile inverts the CDF") {
  for (double K : {0.0, 0.2, 7.0, 200.0}) {
    const RicianSpec s{K, 1.0};
    for (double u : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-9}) {
      const double q = s.quantile(u);
      if (u > 0.5)
        CHECK(std::abs(s.ccdf(q) - (1.0 - u)) <= 1e-10 * (1.0 - u) + 1e-14);
      else
        CHECK(std::abs(s.cdf(q) - u) <= 1e-10 * u + 1e-15);
    }
  }
}

TEST_CASE("quantile grid preserves moments") {
  for (double K : {0.0, 0.2, 3.0, 7.0}) {
    const RicianSpec s{K, 1.0};
    const auto g = build_grid(s, s, 64, GridMethod::quantile);
    CHECK(g.size() == 64 * 64);
    CHECK(std::abs(expect(g, [](double z1, double) { return z1; }) - 1.0) < 1e-9);
    // Conditional-mean nodes drop the within-slice variance, which is largest
    // for the heavy exponential-like tail of small K.
    const double tol = K >= 3.0 ? 5e-3 : 1e-2;
    CHECK(std::abs(expect(g, [](double, double z2) { return z2 * z2; }) / s.second_moment() - 1.0) < tol);
  }
}

TEST_CASE("K = 0 slice means match the exponential closed form") {
  // Slice [a, b) of Exp(1) has E[z 1{a <= z < b}] = (1 + a) e^{-a} - (1 + b) e^{-b}.
  const int n = 64;
  const auto nodes = quantile_nodes(RicianSpec{0.0, 1.0}, n);
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = -std::log1p(-static_cast<double>(i) / n);
    const double b = i + 1 == n ? INFINITY : -std::log1p(-static_cast<double>(i + 1) / n);
    const double mean = n * ((1.0 + a) * std::exp(-a) - (std::isinf(b) ? 0.0 : (1.0 + b) * std::exp(-b)));
    CHECK(nodes[i] == doctest::Approx(mean).epsilon(1e-9));
    m2 += mean * mean / n;
  }
  const auto g = build_grid({}, {}, n, GridMethod::quantile);
  CHECK(expect(g, [](double z1, double) { return z1 * z1; }) == doctest::Approx(m2).epsilon(1e-9));
}

TEST_CASE("grid examples") {
  const auto urban = RicianSpec::from_dB(-6.88);
  const auto g = build_grid(urban, urban, 40, GridMethod::quantile);
  CHECK(std::abs(expect(g, [](double z1, double) { return z1; }) - 1.0) < 1e-3);
  CHECK(expect(g, [](double, double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(expect(g, [](double a, double b) { return a * b; }) - 1.0) < 1e-2);

  const RicianSpec los{1e6, 1.0};
  const auto nodes = quantile_nodes(los, 16);
  for (double z : nodes) CHECK(std::abs(z - 1.0) < 1e-2);
  for (std::size_t i = 1; i < nodes.size(); ++i) CHECK(nodes[i] > nodes[i - 1]);

  // Axes strictly increasing, weights uniform.
  for (std::size_t i = 1; i < g.axis1.size(); ++i) CHECK(g.axis1[i] > g.axis1[i - 1]);
  CHECK(g.weight.front() == doctest::Approx(1.0 / 1600.0));
}

TEST_CASE("Monte Carlo and quantile grids agree on a smooth functional") {
  const RicianSpec a{3.0, 1.0}, b{0.5, 2.0};
  auto f = [](double z1, double z2) { return std::log1p(z1) * std::exp(-0.3 * z2); };
  const auto q = build_grid(a, b, 64, GridMethod::quantile);
  const auto mc = build_grid(a, b, 300, GridMethod::monte_carlo, 17);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < mc.size(); ++i) {
    const double v = f(mc.z1[i], mc.z2[i]);
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(mc.size());
  const double se = std::sqrt((s2 / n - (s / n) * (s / n)) / n);
  CHECK(std::abs(expect(q, f) - expect(mc, f)) < 3.0 * se);
  // Same seed, same grid.
  const auto mc2 = build_grid(a, b, 300, GridMethod::monte_carlo, 17);
  CHECK(mc2.z1 == mc.z1);
  CHECK(mc2.z2 == mc.z2);
}

TEST_CASE("expect reports the offending node") {
  const auto g = build_grid({}, {}, 8, GridMethod::quantile);
  CHECK_THROWS_WITH_AS(expect(g, [](double z1, double) { return z1 > 2.0 ? NAN : 1.0; }),
                       doctest::Contains("fading node"), std::domain_error);
}

TEST_CASE("slice_index agrees with the quantile edges") {
  const RicianSpec s{1.5, 1.0};
  const auto nodes = quantile_nodes(s, 20);
  for (int i = 0; i < 20; ++i) CHECK(slice_index(s, 20, nodes[i]) == i);
}

TEST_CASE("parallel_for is order independent and propagates errors") {
  std::vector<double> v(1000);
  parallel_for(v.size(), [&](std::size_t i) { v[i] = 1.0 / (1.0 + i); }, 4);
  std::vector<double> w(1000);
  parallel_for(w.size(), [&](std::size_t i) { w[i] = 1.0 / (1.0 + i); }, 1);
  CHECK(pairwise_sum(v) == pairwise_sum(w));
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3),
                  std::runtime_error);
}
