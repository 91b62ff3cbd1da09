#pragma once

// Information measures of the superposed observation
//
//   y_j = sqrt(z_j) (sqrt(P_j) x_j + sqrt(P_m) x_m) + w_j,   w_j ~ CN(0, 1).
//
// The channel phase is dropped: both signal terms share h_j, so a common
// rotation leaves every quantity here unchanged and only z_j = |h_j|^2 enters.
// Internally everything is in nats; the *_bits wrappers convert at the
// boundary.

#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bcec/constellation.hpp"

namespace bcec {

/// gauss_hermite: fixed tensor rule with nodes_per_dim points per real
/// dimension. panel: per-point Gauss-Legendre panels graded around the
/// pairwise decision midpoints; keeps relative accuracy of small MMSE and
/// MI-deficit values at high SNR. Non-separable alphabets always use the
/// Gauss-Hermite tensor rule.
enum class QuadratureMethod { gauss_hermite, panel };

struct QuadratureSpec {
  QuadratureMethod method = QuadratureMethod::gauss_hermite;
  int nodes_per_dim = 48;
  std::int64_t mc_samples = 200000;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Gauss-Hermite rule rescaled to integrate against N(0, 1/2): the law of one
/// real component of CN(0, 1) noise. Weights sum to one.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached per node count; thread-safe.
const GaussHermiteRule& gauss_hermite(int n);

struct LinkState {
  double z = 0.0;       // channel power gain |h_j|^2
  double p_own = 0.0;   // P_j
  double p_int = 0.0;   // P_m, power of the superposed interfering symbol
  Input own = Input::gaussian();
  Input interferer = Input::gaussian();

  void validate() const;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by d_mi_dP_unconditional at P_j = 0 < P_m.
class SingularDerivative : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Second-order statistics of the superposed observation, all in nats.
struct SuperposedStats {
  double mi_own = 0.0;    // I(x_j; y_j) with x_m marginalized
  double deficit_own = std::numeric_limits<double>::infinity();  // H(x_j) - mi_own
  double mi_pair = 0.0;   // I(x_j, x_m; y_j)
  double mmse_own = 0.0;  // E|x_j - E[x_j|y]|^2
  double mmse_int = 0.0;  // E|x_m - E[x_m|y]|^2
  double cross = 0.0;     // Re E{(x_j - xhat_j)(x_m - xhat_m)^*} = Re E{x_j x_m^* - xhat_j xhat_m^*}
};

struct ConditionalStats {
  double mi = 0.0;    // nats
  double mmse = 0.0;
  double deficit = std::numeric_limits<double>::infinity();  // H(x) - mi, infinite for Gaussian input
};

/// Single-user statistics of u = sqrt(s) x + w.
ConditionalStats conditional_stats(const Input& input, double snr, const QuadratureSpec& quad);

/// Full superposed statistics for link.own against link.interferer.
SuperposedStats superposed_stats(const LinkState& link, const QuadratureSpec& quad);

// I(x_j; y_j | x_m): depends only on z_j P_j.
double mi_conditional_nats(const LinkState& link, const QuadratureSpec& quad);
double mi_conditional(const LinkState& link, const QuadratureSpec& quad);  // bits

// I(x_j; y_j) with the interfering symbol treated as noise.
double mi_with_interference_nats(const LinkState& link, const QuadratureSpec& quad);
double mi_with_interference(const LinkState& link, const QuadratureSpec& quad);  // bits

// H(x_j) - I, computed without cancellation so that it keeps relative
// precision near saturation. Infinite for Gaussian inputs.
double mi_deficit_conditional_nats(const LinkState& link, const QuadratureSpec& quad);
double mi_deficit_with_interference_nats(const LinkState& link, const QuadratureSpec& quad);

double mmse_conditional(const LinkState& link, const QuadratureSpec& quad);
double mmse_with_interference(const LinkState& link, const QuadratureSpec& quad);

enum class EstimateTarget { own, interferer };

/// Posterior mean E[x | y] of the selected symbol under the superposed model.
std::complex<double> mmse_estimate(std::complex<double> y, const LinkState& link, EstimateTarget which);

/// dI(x_j;y_j|x_m)/dP_j = z_j MMSE(x_j;y_j|x_m), nats per watt.
double d_mi_dP_conditional(const LinkState& link, const QuadratureSpec& quad);

/// dI(x_j;y_j)/dP_j = z_j MMSE(x_j;y_j) + z_j sqrt(P_m/P_j) Re E{x_j x_m^* - xhat_j xhat_m^*},
/// nats per watt. Throws SingularDerivative when P_j = 0 < P_m.
double d_mi_dP_unconditional(const LinkState& link, const QuadratureSpec& quad);

/// As above, but at P_j = 0 < P_m falls back to a one-sided finite difference
/// of mi_with_interference_nats.
double d_mi_dP_unconditional_or_fd(const LinkState& link, const QuadratureSpec& quad);

}  // namespace bcec
