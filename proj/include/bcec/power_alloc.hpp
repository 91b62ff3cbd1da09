#pragma once

// Optimal power allocation for fixed decoding regions.
//
// For weights lambda_j and normalizers psi_j the per-node Lagrangian is
//
//   F(P1, P2) = sum_j (lambda_j / psi_j) (1 - e^{-beta_j r_j}) / beta_j - eps (P1 + P2),
//
// with beta_j = theta_j T B and rates in bits/s/Hz. Its stationarity
// conditions are the KKT equations solved per node; an outer search fits eps
// to the average power budget and a fixed point on psi_j = E{e^{-beta_j r_j}}
// closes the loop.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bcec/awgn_info.hpp"
#include "bcec/decoding_region.hpp"
#include "bcec/fading.hpp"

namespace bcec {

struct QoSParams {
  double theta1 = 0.01;  // 1/bit
  double theta2 = 0.01;
  double T = 1.0;        // frame duration, s
  double B = 100.0;      // bandwidth, Hz

  double beta1() const { return theta1 * T * B; }
  double beta2() const { return theta2 * T * B; }
  void validate() const;
};

/// One fading node, or half of it when the decoding boundary passes exactly
/// through the node and both orders share it.
struct Cell {
  std::size_t node = 0;
  double z1 = 0.0;
  double z2 = 0.0;
  double weight = 0.0;
  Region region = Region::Z;
};

std::vector<Cell> build_cells(const FadingGrid& grid, const DecodingBoundary& boundary);

/// Multipliers fixed during one node solve.
struct NodeParams {
  double epsilon = 1.0;
  double psi1 = 1.0;
  double psi2 = 1.0;
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  double beta1 = 1.0;
  double beta2 = 1.0;

  void validate() const;
};

/// Rates (bits/s/Hz) and their power derivatives (bits/s/Hz per watt) at one cell.
struct RateSensitivity {
  double r1 = 0.0, r2 = 0.0;
  double dr1_dP1 = 0.0, dr1_dP2 = 0.0;
  double dr2_dP1 = 0.0, dr2_dP2 = 0.0;
};

RateSensitivity rate_sensitivity(const Cell& cell, double P1, double P2, const InputPair& in,
                                 const QuadratureSpec& quad);

struct KktResiduals {
  double res1 = 0.0;  // dF/dP1
  double res2 = 0.0;  // dF/dP2
};

/// Left sides of the node's KKT equations minus eps.
KktResiduals kkt_residuals(const Cell& cell, double P1, double P2, const NodeParams& np, const InputPair& in,
                           const QuadratureSpec& quad);

/// Per-node objective F(P1, P2).
double node_lagrangian(const Cell& cell, double P1, double P2, const NodeParams& np, const InputPair& in,
                       const QuadratureSpec& quad);

/// Violation of the KKT conditions: |dF/dP| where P > 0, max(dF/dP, 0) where P = 0.
double kkt_violation(const KktResiduals& r, double P1, double P2);

struct SolverOptions {
  double eps_inner = 0.0;  // node fixed-point tolerance on powers; 0 selects 1e-6 max(1, P_bar)
  double psi_tol = 1e-4;
  double power_tol = 1e-3;  // relative tightness of the average power constraint
  int max_inner = 200;
  int max_outer = 50;
  int max_epsilon_evals = 200;
  double eps_lo = 1e-6;  // initial multiplier bracket
  double eps_hi = 1e3;
  bool check_monotone = false;  // sample each root bracket and reject non-monotone equations
  int threads = 0;
};

/// Per-cell solver state reused between calls: warm start and memoized
/// rate evaluations.
class NodeSolver {
 public:
  NodeSolver(Cell cell, const InputPair* in, const QuadratureSpec* quad);

  struct Result {
    double P1 = 0.0;
    double P2 = 0.0;
    int iterations = 0;
  };

  /// Alternating solve: the interference-limited user's equation given the
  /// other power, then the cancelling user's equation, until both powers move
  /// by at most eps_inner. Negative solutions are clamped to zero. The result
  /// is then checked against the global maximum of F along each coordinate;
  /// if either improves, or the alternation does not settle, the solve
  /// continues as coordinate ascent with global line maximization. With
  /// verify = false the global check is skipped after a settled alternation.
  Result solve(const NodeParams& np, const SolverOptions& opt, double eps_inner, bool verify = true);

  RateSensitivity evaluate(double P1, double P2);
  const Cell& cell() const { return cell_; }
  /// Power scale of the coordinate scans, normally the average power budget.
  void set_scale(double p) { scale_ = p; }
  void set_start(double P1, double P2) {
    start1_ = P1;
    start2_ = P2;
  }

 private:
  Cell cell_;
  const InputPair* in_;
  const QuadratureSpec* quad_;
  double start1_ = 0.0, start2_ = 0.0;
  double scale_ = 1.0;
  struct Entry {
    std::uint64_t k1, k2;
    RateSensitivity v;
  };
  std::vector<Entry> cache_;
  std::size_t cache_next_ = 0;
};

/// Convenience wrapper: solve one cell from a cold start.
NodeSolver::Result solve_node(const Cell& cell, const NodeParams& np, const InputPair& in, const QuadratureSpec& quad,
                              const SolverOptions& opt = {}, double p_bar = 1.0);

struct PolicyDiagnostics {
  int psi_iterations = 0;
  int epsilon_evaluations = 0;
  int max_inner_iterations = 0;
  bool damped = false;
  double max_kkt_violation = 0.0;
  double power_error = 0.0;  // (E{P1+P2} - P_bar) / P_bar
  std::vector<std::string> trace;
};

struct AllocationProblem {
  const FadingGrid* grid = nullptr;
  DecodingBoundary boundary;
  InputPair inputs;
  QoSParams qos;
  double p_bar = 1.0;
  double lambda1 = 0.5;
  QuadratureSpec quad;
};

struct PowerPolicy {
  std::vector<Cell> cells;
  std::vector<double> P1, P2;  // per cell, watts
  std::vector<double> r1, r2;  // per cell, bits/s/Hz
  double epsilon = 0.0;
  double psi1 = 1.0, psi2 = 1.0;
  double lambda1 = 0.5, lambda2 = 0.5;
  double p_bar = 0.0;
  double a1 = 0.0, a2 = 0.0;  // effective capacities, bits/s/Hz
  PolicyDiagnostics diag;

  double average_power() const;
};

/// Nested iteration: psi fixed point outside, multiplier search on log eps in
/// the middle, node solves inside. An optional previous policy on the same
/// cells seeds powers, eps and psi.
PowerPolicy run_algorithm1(const AllocationProblem& prob, const SolverOptions& opt = {},
                           const PowerPolicy* warm = nullptr);

/// Objective lambda1 a1 + lambda2 a2 of arbitrary per-cell powers.
double policy_objective(const AllocationProblem& prob, const std::vector<Cell>& cells, const std::vector<double>& P1,
                        const std::vector<double>& P2);

}  // namespace bcec
