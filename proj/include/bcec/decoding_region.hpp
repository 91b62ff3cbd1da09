#pragma once

// Decoding-order regions and instantaneous rates.
//
// In region Z the order is (2,1): receiver 1 removes x2 before decoding x1,
// receiver 2 decodes x2 with x1 as interference. Region Zc is the mirror
// image. A point belongs to Z iff z1 >= z1_star(z2).

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bcec/awgn_info.hpp"
#include "bcec/constellation.hpp"

namespace bcec {

struct InputPair {
  Input x1 = Input::gaussian();
  Input x2 = Input::gaussian();
};

enum class Region { Z, Zc };

enum class DecodingRule { theorem2, strongest_last, fixed_order_12, fixed_order_21 };

DecodingRule parse_decoding_rule(const std::string& name);
std::string to_string(DecodingRule r);
std::string to_string(Region r);

struct RatePair {
  double r1 = 0.0;  // bits/s/Hz
  double r2 = 0.0;
};

struct DecodingBoundary {
  DecodingRule rule = DecodingRule::strongest_last;
  std::vector<double> z2_samples;    // increasing; used by rule = theorem2
  std::vector<double> z1_star;       // >= 0 or +infinity
  std::vector<double> residual_nats; // |g(z1_star)|, 0 for analytic rules or sentinels

  /// Boundary at z2: exact for analytic rules, interpolated between samples
  /// for theorem2 (linear between finite samples, nearest sample next to a
  /// sentinel, clamped outside the sampled range).
  double z1_star_at(double z2) const;
  Region region(double z1, double z2) const;
  /// True where the boundary passes exactly through (z1, z2), so that both
  /// orders are optimal and the point is split between them.
  bool is_tie(double z1, double z2) const;
};

/// Rates in nats for the given order.
std::pair<double, double> rates_nats(Region region, double z1, double z2, double P1, double P2, const InputPair& in,
                                     const QuadratureSpec& quad);

RatePair rates(double z1, double z2, double P1, double P2, const InputPair& in, const DecodingBoundary& boundary,
               const QuadratureSpec& quad);

/// I(x1, x2; y1, y2) in bits. Exact: with a common symbol seen through both
/// receivers, maximum-ratio combining is a sufficient statistic, so this is
/// I(x1, x2; sqrt(z1 + z2) s + w) for the superposed symbol s.
double joint_mutual_info(double z1, double z2, double P1, double P2, const InputPair& in, const QuadratureSpec& quad);

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Seeded Monte Carlo estimate of the same quantity from both receiver
/// outputs, in bits. Uses quad.mc_samples draws (at least 1000).
McEstimate joint_mutual_info_mc(double z1, double z2, double P1, double P2, const InputPair& in,
                                const QuadratureSpec& quad);

/// Powers (P1, P2) in force at a fading point.
using PowerContext = std::function<std::pair<double, double>(double z1, double z2)>;

PowerContext constant_powers(double P1, double P2);

/// g(z1) = I(x1,x2;y1,y2) - I(x1;y1|x2) - I(x2;y2|x1) in nats.
double theorem2_gap(double z1, double z2, const PowerContext& powers, const InputPair& in, const QuadratureSpec& quad);

struct BoundaryRoot {
  double z1_star = 0.0;   // +infinity when g >= 0 on the whole bracket
  double residual = 0.0;  // |g(z1_star)| for finite interior roots
};

struct BoundaryOptions {
  double z_max = 10.0;     // bracket [0, z_max]
  double root_tol = 1e-8;  // on z1
  int scan_points = 64;    // sign-change scan mesh
};

/// Root of theorem2_gap along z1 for fixed z2. With no sign change the slice
/// is all Zc (g >= 0, returns +infinity) or all Z (g < 0, returns 0). Throws
/// NumericError listing the crossings if the scan sees more than one.
BoundaryRoot solve_boundary(double z2, const PowerContext& powers, const InputPair& in, const QuadratureSpec& quad,
                            const BoundaryOptions& opt);

DecodingBoundary build_boundary(const std::vector<double>& z2_samples, DecodingRule rule, const PowerContext& powers,
                                const InputPair& in, const QuadratureSpec& quad, const BoundaryOptions& opt,
                                int threads = 0);

}  // namespace bcec
