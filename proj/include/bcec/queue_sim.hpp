#pragma once

// Monte Carlo check of the effective-capacity model: two transmit buffers
// with constant arrivals, served per frame by the policy's rates under fresh
// iid fading, and the empirical decay rate of the queue-length tail.

#include <cstdint>
#include <vector>

#include "bcec/fading.hpp"
#include "bcec/power_alloc.hpp"

namespace bcec {

struct QueueTrace {
  std::uint64_t frames = 0;
  std::vector<double> queue_samples;  // bits, after each frame
  double arrival_rate = 0.0;          // bits per frame
  double service_mean = 0.0;          // bits per frame, empirical
  double drift = 0.0;                 // bits per frame over the final half
  bool stable = true;
  std::vector<double> thresholds;  // bits
  std::vector<std::uint64_t> overflow_counts;

  void validate() const;
};

struct QueueSimConfig {
  RicianSpec fading1, fading2;
  QoSParams qos;               // T and B convert rates to bits per frame
  double arrival1 = 0.0;       // bits/s/Hz
  double arrival2 = 0.0;
  std::uint64_t n_frames = 1000000;
  std::uint64_t seed = 1;
};

/// Lindley recursion Q <- max(0, Q + a T B - r T B) for both users. Each frame
/// draws (z1, z2) from the Rician marginals and is served at the rates of the
/// grid node whose equiprobable slices contain the draw (quantile grids), or
/// of a node drawn by weight (Monte Carlo grids). A node split by the decoding
/// boundary picks either half with its weight share. A queue whose level rises
/// over the final half by more than three standard deviations of a driftless
/// walk is flagged unstable.
std::pair<QueueTrace, QueueTrace> simulate(const PowerPolicy& policy, const FadingGrid& grid,
                                           const QueueSimConfig& cfg);

/// Number of samples with Q >= q for each threshold.
std::vector<std::uint64_t> overflow_counts(const std::vector<double>& samples, const std::vector<double>& thresholds);

/// Default thresholds: 25 points from q_hi / 4 to q_hi, where q_hi leaves 1% of
/// the samples (at least 100) at or above it. Empty if the queue never reaches
/// a positive level.
std::vector<double> default_thresholds(const std::vector<double>& samples);

struct ThetaEstimate {
  double theta = 0.0;           // 1/bit
  double ci_halfwidth = 0.0;    // 95% normal half-width from the regression residuals;
                                // ignores the autocorrelation of queue samples
  int thresholds_used = 0;
};

/// Least-squares slope of ln Pr(Q >= q) against q over thresholds with at
/// least 50 exceedances. Fills the trace's thresholds and counts. Throws
/// NumericError("insufficient tail mass") with fewer than 3 usable thresholds.
ThetaEstimate estimate_theta(QueueTrace& trace, const std::vector<double>& thresholds = {});

struct QueueValidationRow {
  int user = 1;
  double arrival_rate = 0.0;  // bits/s/Hz
  double theta_target = 0.0;
  double theta_hat = 0.0;     // NaN if the tail estimate failed
  double ci_halfwidth = 0.0;
  bool stable = true;
  std::uint64_t seed = 0;
  std::uint64_t frames = 0;
  std::vector<double> thresholds;  // bits
  std::vector<std::uint64_t> overflow_counts;
};

/// Simulates the policy with arrivals factor * a_j for each seed, one
/// replication per seed in parallel, and estimates both tail exponents.
std::vector<QueueValidationRow> validate_queue(const PowerPolicy& policy, const FadingGrid& grid,
                                               const QueueSimConfig& base, double factor,
                                               const std::vector<std::uint64_t>& seeds, int threads = 0);

}  // namespace bcec
