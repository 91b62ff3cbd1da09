#pragma once

// Rician block fading for the two receivers. The power gain z = |h|^2 is a
// scaled non-central chi-square with two degrees of freedom:
//
//   z = mean_power / (2 (K + 1)) * X,   X ~ chi'^2(2, 2K).
//
// The two users fade independently.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace bcec {

struct RicianSpec {
  double K = 0.0;           // line-of-sight to scattered power ratio, linear
  double mean_power = 1.0;  // E{z}

  static RicianSpec from_dB(double K_dB, double mean_power = 1.0);
  void validate() const;

  double cdf(double z) const;
  double ccdf(double z) const;
  double pdf(double z) const;
  /// Inverse CDF by bisection on the CDF, to 1e-13 relative in z.
  double quantile(double u) const;
  /// E{z^2} in closed form.
  double second_moment() const;
  /// E{z 1{z <= x}}.
  double partial_mean(double x) const;
  double sample(std::mt19937_64& rng) const;
};

enum class GridMethod { quantile, monte_carlo };

GridMethod parse_grid_method(const std::string& name);
std::string to_string(GridMethod m);

/// Nodes of the (z1, z2) fading space with joint probability weights.
/// Quantile grids are products of the per-axis nodes; node (a, b) sits at flat
/// index a * axis2.size() + b. Monte Carlo grids have empty axes.
struct FadingGrid {
  GridMethod method = GridMethod::quantile;
  std::vector<double> axis1, axis2;
  std::vector<double> z1, z2, weight;

  std::size_t size() const { return weight.size(); }
  void validate() const;
};

/// Conditional means of n equiprobable slices of the marginal, increasing.
std::vector<double> quantile_nodes(const RicianSpec& spec, int n);

/// Index of the equiprobable slice (out of n) containing z.
int slice_index(const RicianSpec& spec, int n, double z);

FadingGrid build_grid(const RicianSpec& spec1, const RicianSpec& spec2, int n_per_dim, GridMethod method,
                      std::uint64_t seed = 1);

/// Sum of w_i f(z1_i, z2_i), pairwise. Throws std::domain_error naming the
/// node if f is not finite there.
double expect(const FadingGrid& grid, const std::function<double(double, double)>& f);

/// Same, for values already evaluated at every node.
double expect_values(const FadingGrid& grid, const std::vector<double>& values);

}  // namespace bcec
