#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bcec/effcap.hpp"
#include "bcec/power_alloc.hpp"
#include "doctest.h"

using namespace bcec;

namespace {

const QuadratureSpec kQuad{};

InputPair pair_of(const char* a, const char* b) { return {parse_input(a), parse_input(b)}; }

DecodingBoundary analytic(DecodingRule r) {
  DecodingBoundary b;
  b.rule = r;
  return b;
}

struct Setup {
  FadingGrid grid;
  AllocationProblem prob;
};

Setup make_setup(const InputPair& in, int n, double lambda1, double theta, double p_bar = 1.0) {
  Setup s;
  s.grid = build_grid(RicianSpec{0.0, 1.0}, RicianSpec{0.0, 1.0}, n, GridMethod::quantile, 1);
  s.prob.grid = &s.grid;
  s.prob.boundary = analytic(DecodingRule::strongest_last);
  s.prob.inputs = in;
  s.prob.qos.theta1 = s.prob.qos.theta2 = theta;
  s.prob.p_bar = p_bar;
  s.prob.lambda1 = lambda1;
  return s;
}

// Classic water filling for a single user: P(z) = max(0, nu - 1/z) with
// E{P} = p_bar, level found by bisection.
std::vector<double> water_fill(const std::vector<double>& z, const std::vector<double>& w, double p_bar) {
  auto used = [&](double nu) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += w[i] * std::max(0.0, nu - 1.0 / z[i]);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  while (used(hi) < p_bar) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (used(m) < p_bar ? lo : hi) = m;
  }
  std::vector<double> P(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) P[i] = std::max(0.0, lo - 1.0 / z[i]);
  return P;
}

std::vector<double> cell_weights(const PowerPolicy& p) {
  std::vector<double> w;
  for (const auto& c : p.cells) w.push_back(c.weight);
  return w;
}

}  // namespace

TEST_CASE("effective capacity: closed forms and limits") {
  const std::vector<double> w{0.25, 0.25, 0.5};
  CHECK(effective_capacity(0.01, 1, 100, {2.0, 2.0, 2.0}, w) == doctest::Approx(2.0).epsilon(1e-14));
  const std::vector<double> r{1.0, 2.0, 3.0};
  const double mean = 0.25 + 0.5 + 1.5;
  CHECK(effective_capacity(0.0, 1, 100, r, w) == doctest::Approx(mean).epsilon(1e-15));
  CHECK(effective_capacity(1e-9, 1, 100, r, w) == doctest::Approx(mean).epsilon(1e-15));
  const double beta = 1.0;
  const double direct = -std::log(0.25 * std::exp(-1.0) + 0.25 * std::exp(-2.0) + 0.5 * std::exp(-3.0)) / beta;
  CHECK(effective_capacity(0.01, 1, 100, r, w) == doctest::Approx(direct).epsilon(1e-14));
  // Small theta: a = E r - beta Var r / 2 + O(beta^2).
  const double var = 0.25 * 1 + 0.25 * 4 + 0.5 * 9 - mean * mean;
  CHECK(effective_capacity_beta(1e-5, r, w) == doctest::Approx(mean - 0.5e-5 * var).epsilon(1e-9));
  // Large theta: tends to the minimum without overflow.
  CHECK(effective_capacity_beta(1e6, r, w) == doctest::Approx(1.0 + std::log(4.0) / 1e6).epsilon(1e-12));
  CHECK(effective_capacity_beta(1e300, r, w) == doctest::Approx(1.0));
  CHECK_THROWS_AS(effective_capacity_beta(-1.0, r, w), std::invalid_argument);
  CHECK_THROWS_AS(effective_capacity_beta(1.0, {1.0}, w), std::invalid_argument);
  CHECK_THROWS_AS(effective_capacity_beta(1.0, {1.0, NAN, 1.0}, w), std::domain_error);
}

TEST_CASE("effective capacity: Jensen and monotonicity in theta") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> r(20), w(20, 0.05);
    for (auto& x : r) x = u(rng);
    double prev = effective_capacity_beta(0.0, r, w);
    for (double beta : {0.01, 0.1, 1.0, 10.0}) {
      const double a = effective_capacity_beta(beta, r, w);
      CHECK(a <= prev + 1e-12);
      CHECK(a >= *std::min_element(r.begin(), r.end()) - 1e-12);
      prev = a;
    }
  }
}

TEST_CASE("rate sensitivity matches finite differences") {
  const auto in = pair_of("bpsk", "qpsk");
  for (Region reg : {Region::Z, Region::Zc}) {
    const Cell c{0, 1.4, 0.8, 1.0, reg};
    const double P1 = 0.9, P2 = 0.6, h = 1e-5;
    const auto s = rate_sensitivity(c, P1, P2, in, kQuad);
    const auto p1 = rate_sensitivity(c, P1 + h, P2, in, kQuad), m1 = rate_sensitivity(c, P1 - h, P2, in, kQuad);
    const auto p2 = rate_sensitivity(c, P1, P2 + h, in, kQuad), m2 = rate_sensitivity(c, P1, P2 - h, in, kQuad);
    CHECK(s.dr1_dP1 == doctest::Approx((p1.r1 - m1.r1) / (2 * h)).epsilon(1e-5));
    CHECK(s.dr2_dP1 == doctest::Approx((p1.r2 - m1.r2) / (2 * h)).epsilon(1e-5));
    CHECK(s.dr1_dP2 == doctest::Approx((p2.r1 - m2.r1) / (2 * h)).epsilon(1e-5));
    CHECK(s.dr2_dP2 == doctest::Approx((p2.r2 - m2.r2) / (2 * h)).epsilon(1e-5));
  }
  // Gaussian closed form in Z: r2 = log2(1 + z2 P2 / (1 + z2 P1)).
  const Cell c{0, 2.0, 0.5, 1.0, Region::Z};
  const auto s = rate_sensitivity(c, 1.0, 2.0, InputPair{}, kQuad);
  const double ln2 = std::numbers::ln2;
  CHECK(s.dr2_dP1 == doctest::Approx(-0.5 * 0.5 * 2.0 / ((1 + 0.5 * 3.0) * (1 + 0.5)) / ln2).epsilon(1e-12));
  CHECK(s.dr2_dP2 == doctest::Approx(0.5 / (1 + 0.5 * 3.0) / ln2).epsilon(1e-12));
  CHECK(s.dr1_dP2 == 0.0);
}

TEST_CASE("node solver: cutoff, silent user and residuals") {
  const auto in = pair_of("bpsk", "bpsk");
  NodeParams np;
  np.beta1 = np.beta2 = 1.0;
  const Cell cz{0, 1.5, 0.7, 1.0, Region::Z};
  np.epsilon = 1e3;
  auto r = solve_node(cz, np, in, kQuad);
  CHECK(r.P1 == 0.0);
  CHECK(r.P2 == 0.0);

  np.epsilon = 0.2;
  np.lambda1 = 1.0;
  np.lambda2 = 0.0;
  const Cell czc{0, 0.7, 1.5, 1.0, Region::Zc};
  r = solve_node(czc, np, in, kQuad);
  CHECK(r.P1 > 0.0);
  CHECK(r.P2 == 0.0);

  np.lambda1 = np.lambda2 = 0.5;
  for (const Cell& c : {cz, czc}) {
    r = solve_node(c, np, in, kQuad);
    const auto k = kkt_residuals(c, r.P1, r.P2, np, in, kQuad);
    CHECK(kkt_violation(k, r.P1, r.P2) < 1e-5);
  }
  np.epsilon = -1.0;
  CHECK_THROWS_AS(solve_node(cz, np, in, kQuad), std::invalid_argument);
}

TEST_CASE("node solver: total power is nonincreasing in epsilon") {
  const auto in = pair_of("qpsk", "bpsk");
  NodeParams np;
  const Cell c{0, 1.2, 2.5, 1.0, Region::Zc};
  double prev = std::numeric_limits<double>::infinity();
  for (double e = 0.01; e < 10.0; e *= 1.5) {
    np.epsilon = e;
    const auto r = solve_node(c, np, in, kQuad);
    CHECK(r.P1 + r.P2 <= prev + 1e-9);
    prev = r.P1 + r.P2;
  }
}

TEST_CASE("node solver: flat ridge at equal gains and weights, beta = 0") {
  NodeParams np;
  np.beta1 = np.beta2 = 0.0;
  np.lambda1 = np.lambda2 = 0.5;
  np.epsilon = 0.25;
  // Gaussian, z1 = z2 = 1: F = 0.5 log2(1 + P1 + P2) - eps (P1 + P2), so only the sum is pinned.
  const Cell c{0, 1.0, 1.0, 1.0, Region::Z};
  const auto g = solve_node(c, np, InputPair{}, kQuad);
  CHECK(g.P1 + g.P2 == doctest::Approx(0.5 / (0.25 * std::numbers::ln2) - 1.0).epsilon(1e-6));

  // BPSK at a weak diagonal node: nearly flat along P1 + P2.
  const auto in = pair_of("bpsk", "bpsk");
  np.epsilon = 0.0627;
  for (double z : {0.05268, 0.3, 1.0}) {
    for (Region reg : {Region::Z, Region::Zc}) {
      const Cell cb{0, z, z, 1.0, reg};
      const auto r = solve_node(cb, np, in, kQuad);
      CHECK(kkt_violation(kkt_residuals(cb, r.P1, r.P2, np, in, kQuad), r.P1, r.P2) < 1e-5);
    }
  }
}

TEST_CASE("single-user limit reduces to water filling") {
  auto s = make_setup(InputPair{}, 10, 1.0, 1e-9);
  const auto pol = run_algorithm1(s.prob);
  std::vector<double> z1;
  for (const auto& c : pol.cells) z1.push_back(c.z1);
  const auto wf = water_fill(z1, cell_weights(pol), 1.0);
  for (std::size_t i = 0; i < pol.cells.size(); ++i) {
    CHECK(pol.P1[i] == doctest::Approx(wf[i]).epsilon(1e-3).scale(1.0));
    CHECK(pol.P2[i] == 0.0);
  }
  CHECK(std::abs(pol.diag.power_error) <= 1e-3);
}

TEST_CASE("BPSK policy: KKT, power budget, symmetry and optimality") {
  auto s = make_setup(pair_of("bpsk", "bpsk"), 8, 0.5, 0.01);
  const auto t0 = std::chrono::steady_clock::now();
  const auto pol = run_algorithm1(s.prob);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("8x8 BPSK policy: " << secs << " s, psi iterations " << pol.diag.psi_iterations << ", eps evaluations "
                              << pol.diag.epsilon_evaluations);
  CHECK(pol.diag.max_kkt_violation < 1e-5);
  CHECK(std::abs(pol.diag.power_error) <= 1e-3);
  CHECK(pol.a1 == doctest::Approx(pol.a2).epsilon(1e-6));

  // Mirror symmetry: the Z half of a tie node matches the Zc half with users swapped,
  // and off-diagonal nodes match their transposes.
  for (std::size_t i = 0; i < pol.cells.size(); ++i) {
    for (std::size_t j = 0; j < pol.cells.size(); ++j) {
      const auto &a = pol.cells[i], &b = pol.cells[j];
      if (a.z1 == b.z2 && a.z2 == b.z1 && a.region != b.region) {
        CHECK(pol.P1[i] == doctest::Approx(pol.P2[j]).epsilon(1e-5));
        CHECK(pol.P2[i] == doctest::Approx(pol.P1[j]).epsilon(1e-5));
      }
    }
  }

  // Random feasible perturbations, rescaled to the same average power, never beat the policy.
  const double best = policy_objective(s.prob, pol.cells, pol.P1, pol.P2);
  CHECK(best == doctest::Approx(0.5 * (pol.a1 + pol.a2)).epsilon(1e-8));
  const double used = pol.average_power();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  int worse = 0;
  for (int t = 0; t < 100; ++t) {
    auto P1 = pol.P1, P2 = pol.P2;
    for (std::size_t i = 0; i < P1.size(); ++i) {
      P1[i] = std::max(0.0, P1[i] * (1.0 + u(rng)) + (P1[i] == 0.0 ? 0.01 * std::abs(u(rng)) : 0.0));
      P2[i] = std::max(0.0, P2[i] * (1.0 + u(rng)) + (P2[i] == 0.0 ? 0.01 * std::abs(u(rng)) : 0.0));
    }
    double tot = 0.0;
    for (std::size_t i = 0; i < P1.size(); ++i) tot += pol.cells[i].weight * (P1[i] + P2[i]);
    for (std::size_t i = 0; i < P1.size(); ++i) {
      P1[i] *= used / tot;
      P2[i] *= used / tot;
    }
    worse += policy_objective(s.prob, pol.cells, P1, P2) <= best + 1e-9;
  }
  CHECK(worse == 100);
}

TEST_CASE("policy: tiny budget, determinism, thread count and monotonicity check") {
  auto s = make_setup(pair_of("qpsk", "bpsk"), 8, 0.3, 0.01, 1e-6);
  const auto tiny = run_algorithm1(s.prob);
  CHECK(tiny.a1 + tiny.a2 < 1e-4);
  CHECK(std::abs(tiny.diag.power_error) <= 1e-3);

  s.prob.p_bar = 2.0;
  SolverOptions one;
  one.threads = 1;
  SolverOptions two;
  two.threads = 2;
  const auto a = run_algorithm1(s.prob, one), b = run_algorithm1(s.prob, two), c = run_algorithm1(s.prob, one);
  CHECK(a.P1 == c.P1);
  CHECK(a.P2 == c.P2);
  CHECK(a.P1 == b.P1);
  CHECK(a.P2 == b.P2);
  CHECK(a.epsilon == b.epsilon);

  // A warm start from the solution reproduces it.
  const auto w = run_algorithm1(s.prob, one, &a);
  CHECK(w.a1 == doctest::Approx(a.a1).epsilon(1e-4));
  CHECK(w.a2 == doctest::Approx(a.a2).epsilon(1e-4));
  CHECK(w.diag.epsilon_evaluations < a.diag.epsilon_evaluations);

  s.prob.lambda1 = 1.5;
  CHECK_THROWS_AS(run_algorithm1(s.prob), std::invalid_argument);
}

TEST_CASE("monotonicity assertion on the KKT equations") {
  SolverOptions opt;
  opt.check_monotone = true;
  auto d = make_setup(pair_of("qpsk", "bpsk"), 8, 0.3, 0.01, 2.0);
  const auto checked = run_algorithm1(d.prob, opt);
  const auto plain = run_algorithm1(d.prob);
  CHECK(checked.P1 == plain.P1);
  CHECK(checked.P2 == plain.P2);
  // Past the root the equation need not keep decreasing: strong discrete
  // interference becomes partly resolvable and the weak user's rate recovers.
  const Cell c{0, 0.208627, 1.69315, 1.0, Region::Zc};
  const auto a = rate_sensitivity(c, 1.0, 3.0, d.prob.inputs, kQuad), b = rate_sensitivity(c, 1.0, 5.0, d.prob.inputs, kQuad);
  CHECK(a.dr1_dP2 < 0.0);
  CHECK(b.dr1_dP2 > 0.0);
}

TEST_CASE("node solver reaches the brute-force maximum of the node Lagrangian") {
  // Includes a node where plain alternation cycles between two corners.
  struct Case {
    Cell cell;
    NodeParams np;
    const char* a;
    const char* b;
  };
  NodeParams cyc;
  cyc.epsilon = 0.2363666658;
  cyc.psi1 = 1.0;
  cyc.psi2 = 0.5763345;
  cyc.lambda1 = 0.25;
  cyc.lambda2 = 0.75;
  std::vector<Case> cases{{{0, 3.26229, 3.26229, 1.0, Region::Z}, cyc, "bpsk", "bpsk"}};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const char* names[] = {"bpsk", "qpsk", "16qam", "gaussian"};
  for (int t = 0; t < 6; ++t) {
    NodeParams np;
    np.epsilon = 0.05 + 0.3 * u(rng);
    np.psi1 = 0.3 + 0.7 * u(rng);
    np.psi2 = 0.3 + 0.7 * u(rng);
    np.lambda1 = u(rng);
    np.lambda2 = 1.0 - np.lambda1;
    const Cell c{0, 0.1 + 4.0 * u(rng), 0.1 + 4.0 * u(rng), 1.0, u(rng) < 0.5 ? Region::Z : Region::Zc};
    cases.push_back({c, np, names[t % 4], names[(t + 1) % 3]});
  }
  for (const auto& k : cases) {
    const auto in = pair_of(k.a, k.b);
    const auto r = solve_node(k.cell, k.np, in, kQuad);
    const double got = node_lagrangian(k.cell, r.P1, r.P2, k.np, in, kQuad);
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 120; ++i) {
      for (int j = 0; j <= 120; ++j) {
        best = std::max(best, node_lagrangian(k.cell, 6.0 * i / 120, 6.0 * j / 120, k.np, in, kQuad));
      }
    }
    CHECK(got >= best - 1e-9);
  }
}
