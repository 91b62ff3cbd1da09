#pragma once

// Effective capacity of a buffer served at rate r(z) per frame:
//
//   a = -1 / (theta T B) ln E{ e^{-theta T B r(z)} }   [bits/s/Hz],
//
// and the region boundary traced by maximizing lambda1 a1 + lambda2 a2.

#include <cstdint>
#include <string>
#include <vector>

#include "bcec/decoding_region.hpp"
#include "bcec/fading.hpp"
#include "bcec/power_alloc.hpp"

namespace bcec {

/// Below this theta the analytic limit E{r} is returned.
inline constexpr double kThetaLimit = 1e-8;

double effective_capacity(double theta, double T, double B, const std::vector<double>& rates,
                          const std::vector<double>& weights);

double effective_capacity(double theta, double T, double B, const std::vector<double>& rates, const FadingGrid& grid);

/// Same with beta = theta T B given directly; beta = 0 returns E{r}.
double effective_capacity_beta(double beta, const std::vector<double>& rates, const std::vector<double>& weights);

/// Sweep weights 0 and 1 are replaced by these to keep both buffers in the objective.
inline constexpr double kLambdaMin = 1e-3;

struct RegionConfig {
  RicianSpec fading1;
  RicianSpec fading2;
  int n_per_dim = 40;
  GridMethod grid_method = GridMethod::quantile;
  std::uint64_t seed = 1;
  InputPair inputs;
  QoSParams qos;
  double p_bar = 1.0;  // watts
  DecodingRule rule = DecodingRule::theorem2;
  BoundaryOptions boundary{0.0, 1e-8, 64};  // z_max = 0 selects the 99.9th percentile of z1
  int coupling_max_iter = 5;
  double coupling_tol = 0.01;  // relative L-infinity movement of z1_star
  QuadratureSpec quad;
  SolverOptions solver;

  void validate() const;
};

/// Rule actually used: theorem2 needs theta1 == theta2 and falls back to
/// strongest_last otherwise.
DecodingRule effective_rule(const RegionConfig& cfg, std::string* warning = nullptr);

/// Boundary solver options with z_max resolved.
BoundaryOptions resolved_boundary_options(const RegionConfig& cfg);

/// Per-node powers of a policy, interpolated bilinearly on the quantile axes
/// and clamped outside them.
PowerContext policy_powers(const PowerPolicy& policy, const FadingGrid& grid);

struct OperatingPoint {
  PowerPolicy policy;
  DecodingBoundary boundary;  // boundary.rule is the rule of the returned policy
  int coupling_iterations = 0;
  bool coupling_converged = true;
  double coupling_movement = 0.0;
  std::vector<std::string> notes;  // slices that kept their previous threshold
};

/// Optimal policy for one weight. Under theorem2 the policy and boundary are
/// refit alternately, starting from the strongest-last split, until the
/// boundary moves by less than coupling_tol. A slice whose gap crosses zero
/// more than once keeps its previous threshold. The coupled point is returned
/// only if its objective beats the strongest-last start.
OperatingPoint solve_operating_point(const RegionConfig& cfg, const FadingGrid& grid, double lambda1,
                                     const OperatingPoint* warm = nullptr);

struct RegionPoint {
  double lambda1 = 0.0;
  double a1 = 0.0, a2 = 0.0;            // bits/s/Hz
  double mean_r1 = 0.0, mean_r2 = 0.0;  // ergodic rates, bits/s/Hz
  double epsilon = 0.0;
  int iters = 0;  // psi iterations of the final policy
  int coupling_iters = 0;
  std::string rule;            // decoding rule of the reported policy
  std::string status = "ok";  // ok, coupling_unconverged, failed
  std::string message;
  std::string policy_ref;
};

struct RegionResult {
  DecodingRule rule = DecodingRule::strongest_last;
  std::vector<RegionPoint> points;     // one per requested weight, sorted by lambda1
  std::vector<RegionPoint> endpoints;  // exact lambda1 = 0 / 1 runs when requested
  std::vector<std::string> warnings;
  double concavity_violation = 0.0;    // worst normalized upward turn of the frontier
  bool concave = true;
};

std::vector<double> default_lambda_sweep(int n = 21);

/// Solves each weight from a cold start, so a point does not depend on the
/// rest of the sweep. Failed weights are kept with status "failed" and a warning.
RegionResult region_boundary(const RegionConfig& cfg, const std::vector<double>& lambdas);

/// Largest normalized counterclockwise turn along points sorted by a1, as
/// cross(p1 - p0, p2 - p1) / (|p1 - p0| |p2 - p1|). Nonpositive for a concave frontier.
double frontier_concavity_violation(const std::vector<RegionPoint>& points);

}  // namespace bcec
