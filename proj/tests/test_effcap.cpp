#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bcec/effcap.hpp"
#include "doctest.h"

using namespace bcec;

namespace {

RegionConfig small_config(const char* input, DecodingRule rule = DecodingRule::strongest_last) {
  RegionConfig c;
  c.fading1 = c.fading2 = RicianSpec::from_dB(-6.88);
  c.n_per_dim = 8;
  c.inputs = {parse_input(input), parse_input(input)};
  c.rule = rule;
  return c;
}

// Single-user effective-capacity-optimal power for r = log2(1 + zP):
// P(z) = (c^{1/(b+1)} z^{-b/(b+1)} - 1/z)^+ with b = beta / ln 2, level c set by
// the budget.
double single_user_effcap(const FadingGrid& grid, double beta, double p_bar) {
  const double b = beta / std::numbers::ln2;
  auto power = [&](double c, double z) { return std::max(0.0, std::pow(c, 1.0 / (b + 1)) * std::pow(z, -b / (b + 1)) - 1.0 / z); };
  auto used = [&](double c) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) s += grid.weight[i] * power(c, grid.z1[i]);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  while (used(hi) < p_bar) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (used(m) < p_bar ? lo : hi) = m;
  }
  double e = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) e += grid.weight[i] * std::pow(1.0 + grid.z1[i] * power(lo, grid.z1[i]), -b);
  return -std::log(e) / beta;
}

}  // namespace

TEST_CASE("region: lambda1 = 1 endpoint is the single-user effective capacity") {
  auto c = small_config("gaussian");
  const auto r = region_boundary(c, {1.0});
  REQUIRE(r.endpoints.size() == 1);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].lambda1 == doctest::Approx(1.0 - kLambdaMin));
  const auto grid = build_grid(c.fading1, c.fading2, c.n_per_dim, c.grid_method, c.seed);
  const double oracle = single_user_effcap(grid, c.qos.beta1(), c.p_bar);
  CHECK(r.endpoints[0].a1 == doctest::Approx(oracle).epsilon(1e-3));
  CHECK(r.endpoints[0].a2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("region: symmetric BPSK sweep is concave, symmetric and below the ergodic rates") {
  auto c = small_config("bpsk");
  const auto r = region_boundary(c, {0.0, 0.25, 0.5, 0.75, 1.0});
  REQUIRE(r.points.size() == 5);
  CHECK(r.endpoints.size() == 2);
  CHECK(r.warnings.empty());
  for (const auto& p : r.points) {
    CHECK(p.status == "ok");
    CHECK(p.rule == "strongest_last");
    CHECK(p.a1 >= 0.0);
    CHECK(p.a2 >= 0.0);
    CHECK(p.a1 <= p.mean_r1 + 1e-9);
    CHECK(p.a2 <= p.mean_r2 + 1e-9);
  }
  CHECK(std::abs(r.points[2].a1 - r.points[2].a2) < 1e-3);
  CHECK(r.points[1].a1 == doctest::Approx(r.points[3].a2).epsilon(1e-3));
  for (std::size_t i = 1; i < r.points.size(); ++i) CHECK(r.points[i].a1 >= r.points[i - 1].a1 - 1e-6);
  CHECK(r.concave);
  CHECK(r.concavity_violation <= 1e-4);
}

TEST_CASE("region: stricter QoS shrinks both effective capacities") {
  double prev1 = std::numeric_limits<double>::infinity(), prev2 = prev1;
  for (double theta : {0.001, 0.01, 0.1}) {
    auto c = small_config("qpsk");
    c.qos.theta1 = c.qos.theta2 = theta;
    const auto r = region_boundary(c, {0.5});
    CHECK(r.points[0].a1 <= prev1 + 1e-6);
    CHECK(r.points[0].a2 <= prev2 + 1e-6);
    prev1 = r.points[0].a1;
    prev2 = r.points[0].a2;
  }
}

TEST_CASE("region: Gaussian inputs dominate 16-QAM, which dominates BPSK") {
  double prev = std::numeric_limits<double>::infinity();
  for (const char* in : {"gaussian", "16qam", "bpsk"}) {
    const auto r = region_boundary(small_config(in), {0.5});
    const double s = r.points[0].a1 + r.points[0].a2;
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("region: theorem2 coupling and unequal QoS exponents") {
  auto c = small_config("bpsk", DecodingRule::theorem2);
  const auto grid = build_grid(c.fading1, c.fading2, c.n_per_dim, c.grid_method, c.seed);
  const auto sl = solve_operating_point(small_config("bpsk"), grid, 0.25);
  const auto t2 = solve_operating_point(c, grid, 0.25);
  // The coupled point is kept only when it improves on the strongest-last split.
  CHECK(0.25 * t2.policy.a1 + 0.75 * t2.policy.a2 >= 0.25 * sl.policy.a1 + 0.75 * sl.policy.a2 - 1e-12);
  CHECK(t2.coupling_iterations >= 1);

  c.qos.theta2 = 0.02;
  std::string w;
  CHECK(effective_rule(c, &w) == DecodingRule::strongest_last);
  CHECK(w.find("strongest_last") != std::string::npos);
  const auto r = region_boundary(c, {0.5});
  CHECK(r.rule == DecodingRule::strongest_last);
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.points[0].rule == "strongest_last");
}

TEST_CASE("region: argument validation") {
  auto c = small_config("bpsk");
  CHECK_THROWS_AS(region_boundary(c, {}), std::invalid_argument);
  CHECK_THROWS_AS(region_boundary(c, {0.5, 0.25}), std::invalid_argument);
  CHECK_THROWS_AS(region_boundary(c, {1.5}), std::invalid_argument);
  c.n_per_dim = 4;
  CHECK_THROWS_AS(region_boundary(c, {0.5}), std::invalid_argument);
  const auto s = default_lambda_sweep();
  CHECK(s.size() == 21);
  CHECK(s.front() == 0.0);
  CHECK(s.back() == 1.0);
}

TEST_CASE("policy powers interpolate node values") {
  const auto grid = build_grid(RicianSpec{}, RicianSpec{}, 8, GridMethod::quantile, 1);
  DecodingBoundary b;
  PowerPolicy p;
  p.cells = build_cells(grid, b);
  for (const auto& c : p.cells) {
    p.P1.push_back(c.z1 + 2.0 * c.z2);
    p.P2.push_back(1.0);
  }
  const auto ctx = policy_powers(p, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(ctx(grid.z1[k], grid.z2[k]).first == doctest::Approx(grid.z1[k] + 2.0 * grid.z2[k]).epsilon(1e-12));
  }
  // Bilinear interpolation reproduces an affine field between nodes and clamps outside.
  const double z1 = 0.5 * (grid.axis1[2] + grid.axis1[3]), z2 = 0.3 * grid.axis2[4] + 0.7 * grid.axis2[5];
  CHECK(ctx(z1, z2).first == doctest::Approx(z1 + 2.0 * z2).epsilon(1e-12));
  CHECK(ctx(1e9, 0.0).first == doctest::Approx(grid.axis1.back() + 2.0 * grid.axis2.front()).epsilon(1e-12));
  CHECK(ctx(z1, z2).second == doctest::Approx(1.0));
}

TEST_CASE("frontier concavity measure") {
  std::vector<RegionPoint> pts(3);
  pts[0].a1 = 0.0, pts[0].a2 = 1.0;
  pts[1].a1 = 0.6, pts[1].a2 = 0.8;
  pts[2].a1 = 1.0, pts[2].a2 = 0.0;
  CHECK(frontier_concavity_violation(pts) < 0.0);
  pts[1].a1 = 0.3, pts[1].a2 = 0.3;
  CHECK(frontier_concavity_violation(pts) > 0.1);
  pts[1].status = "failed";
  CHECK(frontier_concavity_violation(pts) == 0.0);
}
