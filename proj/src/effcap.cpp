#include "bcec/effcap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "bcec/parallel.hpp"

namespace bcec {

double effective_capacity_beta(double beta, const std::vector<double>& rates, const std::vector<double>& weights) {
  if (rates.size() != weights.size() || rates.empty()) throw std::invalid_argument("rate field does not match weights");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
  std::vector<double> t(rates.size());
  double mass = 0.0, rmin = rates[0];
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!std::isfinite(rates[i])) throw std::domain_error("non-finite rate in effective capacity");
    mass += weights[i];
    rmin = std::min(rmin, rates[i]);
  }
  if (beta == 0.0) {
    for (std::size_t i = 0; i < rates.size(); ++i) t[i] = weights[i] * rates[i];
    return pairwise_sum(t) / mass;
  }
  // Log-sum-exp around the smallest rate, which dominates the expectation.
  for (std::size_t i = 0; i < rates.size(); ++i) t[i] = weights[i] * std::exp(-beta * (rates[i] - rmin));
  return rmin - std::log(pairwise_sum(t) / mass) / beta;
}

double effective_capacity(double theta, double T, double B, const std::vector<double>& rates,
                          const std::vector<double>& weights) {
  if (!(theta >= 0.0) || !(T > 0.0) || !(B > 0.0)) throw std::invalid_argument("invalid QoS parameters");
  return effective_capacity_beta(theta < kThetaLimit ? 0.0 : theta * T * B, rates, weights);
}

double effective_capacity(double theta, double T, double B, const std::vector<double>& rates, const FadingGrid& grid) {
  return effective_capacity(theta, T, B, rates, grid.weight);
}

}  // namespace bcec

namespace bcec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DecodingBoundary analytic_boundary(DecodingRule rule) {
  DecodingBoundary b;
  b.rule = rule;
  return b;
}

// Relative L-infinity movement of z1_star from b to a at the samples of a.
double boundary_movement(const DecodingBoundary& a, const DecodingBoundary& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.z1_star.size(); ++i) {
    const double x = a.z1_star[i], y = b.z1_star_at(a.z2_samples[i]);
    if (x == y) continue;
    if (std::isinf(x) || std::isinf(y)) return kInf;
    m = std::max(m, std::abs(x - y) / std::max(1.0, std::abs(y)));
  }
  return m;
}

// Index i with axis[i] <= z <= axis[i + 1] and the weight of axis[i + 1].
std::pair<std::size_t, double> bracket(const std::vector<double>& axis, double z) {
  if (axis.size() == 1 || z <= axis.front()) return {0, 0.0};
  if (z >= axis.back()) return {axis.size() - 2, 1.0};
  const auto it = std::upper_bound(axis.begin(), axis.end(), z);
  const std::size_t i = static_cast<std::size_t>(it - axis.begin()) - 1;
  return {i, (z - axis[i]) / (axis[i + 1] - axis[i])};
}

std::string policy_ref(double lambda1) {
  std::ostringstream os;
  os.precision(17);
  os << "lambda1=" << lambda1;
  return os.str();
}

RegionPoint make_point(double lambda1, const OperatingPoint& op) {
  RegionPoint p;
  const auto& pol = op.policy;
  p.lambda1 = lambda1;
  p.a1 = pol.a1;
  p.a2 = pol.a2;
  std::vector<double> t1(pol.cells.size()), t2(pol.cells.size());
  for (std::size_t i = 0; i < pol.cells.size(); ++i) {
    t1[i] = pol.cells[i].weight * pol.r1[i];
    t2[i] = pol.cells[i].weight * pol.r2[i];
  }
  p.mean_r1 = pairwise_sum(t1);
  p.mean_r2 = pairwise_sum(t2);
  p.epsilon = pol.epsilon;
  p.iters = pol.diag.psi_iterations;
  p.coupling_iters = op.coupling_iterations;
  p.rule = to_string(op.boundary.rule);
  if (op.boundary.rule == DecodingRule::theorem2 && !op.coupling_converged) {
    p.status = "coupling_unconverged";
    std::ostringstream os;
    os << "boundary still moved by " << op.coupling_movement << " after " << op.coupling_iterations << " refits";
    p.message = os.str();
  }
  p.policy_ref = policy_ref(lambda1);
  return p;
}

}  // namespace

void RegionConfig::validate() const {
  fading1.validate();
  fading2.validate();
  if (n_per_dim < 8) throw std::invalid_argument("fading grid needs n_per_dim >= 8");
  qos.validate();
  quad.validate();
  if (!(p_bar > 0.0) || !std::isfinite(p_bar)) throw std::invalid_argument("average power must be positive");
  if (!(boundary.z_max >= 0.0) || !(boundary.root_tol > 0.0) || boundary.scan_points < 2)
    throw std::invalid_argument("invalid boundary options");
  if (coupling_max_iter < 1 || !(coupling_tol > 0.0)) throw std::invalid_argument("invalid coupling options");
}

DecodingRule effective_rule(const RegionConfig& cfg, std::string* warning) {
  if (cfg.rule == DecodingRule::theorem2 && cfg.qos.theta1 != cfg.qos.theta2) {
    if (warning != nullptr)
      *warning = "theta1 != theta2: optimal decoding regions unknown, using rule strongest_last";
    return DecodingRule::strongest_last;
  }
  return cfg.rule;
}

BoundaryOptions resolved_boundary_options(const RegionConfig& cfg) {
  BoundaryOptions o = cfg.boundary;
  if (o.z_max == 0.0) o.z_max = cfg.fading1.quantile(0.999);
  return o;
}

PowerContext policy_powers(const PowerPolicy& policy, const FadingGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> p1(n, 0.0), p2(n, 0.0), w(n, 0.0);
  for (std::size_t i = 0; i < policy.cells.size(); ++i) {
    const auto& c = policy.cells[i];
    p1[c.node] += c.weight * policy.P1[i];
    p2[c.node] += c.weight * policy.P2[i];
    w[c.node] += c.weight;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (w[k] > 0.0) {
      p1[k] /= w[k];
      p2[k] /= w[k];
    }
  }
  if (grid.method == GridMethod::quantile && !grid.axis1.empty() && !grid.axis2.empty()) {
    return [a1 = grid.axis1, a2 = grid.axis2, p1, p2](double z1, double z2) {
      const auto [i, u] = bracket(a1, z1);
      const auto [j, v] = bracket(a2, z2);
      const std::size_t nb = a2.size();
      const std::size_t i1 = std::min(i + 1, a1.size() - 1), j1 = std::min(j + 1, nb - 1);
      auto at = [&](const std::vector<double>& p) {
        return (1 - u) * ((1 - v) * p[i * nb + j] + v * p[i * nb + j1]) +
               u * ((1 - v) * p[i1 * nb + j] + v * p[i1 * nb + j1]);
      };
      return std::pair{at(p1), at(p2)};
    };
  }
  // Scattered nodes: nearest neighbour.
  return [z1s = grid.z1, z2s = grid.z2, p1, p2](double z1, double z2) {
    std::size_t best = 0;
    double d = kInf;
    for (std::size_t k = 0; k < z1s.size(); ++k) {
      const double e = (z1s[k] - z1) * (z1s[k] - z1) + (z2s[k] - z2) * (z2s[k] - z2);
      if (e < d) {
        d = e;
        best = k;
      }
    }
    return std::pair{p1[best], p2[best]};
  };
}

OperatingPoint solve_operating_point(const RegionConfig& cfg, const FadingGrid& grid, double lambda1,
                                     const OperatingPoint* warm) {
  AllocationProblem prob;
  prob.grid = &grid;
  prob.inputs = cfg.inputs;
  prob.qos = cfg.qos;
  prob.p_bar = cfg.p_bar;
  prob.lambda1 = lambda1;
  prob.quad = cfg.quad;
  const DecodingRule rule = effective_rule(cfg);
  const PowerPolicy* warm_policy = warm != nullptr ? &warm->policy : nullptr;

  OperatingPoint op;
  prob.boundary = analytic_boundary(rule == DecodingRule::theorem2 ? DecodingRule::strongest_last : rule);
  op.boundary = prob.boundary;
  op.policy = run_algorithm1(prob, cfg.solver, warm_policy);
  if (rule != DecodingRule::theorem2) return op;

  const auto z2s = grid.method == GridMethod::quantile ? grid.axis2 : quantile_nodes(cfg.fading2, cfg.n_per_dim);
  const auto bopt = resolved_boundary_options(cfg);
  OperatingPoint cp;
  cp.policy = op.policy;
  cp.coupling_converged = false;
  for (int k = 1; k <= cfg.coupling_max_iter; ++k) {
    DecodingBoundary b;
    b.rule = DecodingRule::theorem2;
    b.z2_samples = z2s;
    b.z1_star.assign(z2s.size(), 0.0);
    b.residual_nats.assign(z2s.size(), 0.0);
    std::vector<std::string> failed(z2s.size());
    const auto powers = policy_powers(cp.policy, grid);
    parallel_for(
        z2s.size(),
        [&](std::size_t i) {
          try {
            const auto r = solve_boundary(z2s[i], powers, cfg.inputs, cfg.quad, bopt);
            b.z1_star[i] = r.z1_star;
            b.residual_nats[i] = r.residual;
          } catch (const NumericError& e) {
            b.z1_star[i] = prob.boundary.z1_star_at(z2s[i]);
            failed[i] = e.what();
          }
        },
        cfg.solver.threads);
    for (std::size_t i = 0; i < z2s.size(); ++i) {
      if (!failed[i].empty()) cp.notes.push_back("refit " + std::to_string(k) + ", kept previous threshold: " + failed[i]);
    }
    cp.coupling_movement = boundary_movement(b, prob.boundary);
    prob.boundary = std::move(b);
    cp.policy = run_algorithm1(prob, cfg.solver, &cp.policy);
    cp.coupling_iterations = k;
    if (cp.coupling_movement < cfg.coupling_tol) {
      cp.coupling_converged = true;
      break;
    }
  }
  cp.boundary = prob.boundary;
  auto objective = [&](const PowerPolicy& p) { return p.lambda1 * p.a1 + p.lambda2 * p.a2; };
  if (objective(cp.policy) > objective(op.policy)) return cp;
  op.coupling_iterations = cp.coupling_iterations;
  op.coupling_movement = cp.coupling_movement;
  op.notes = std::move(cp.notes);
  op.notes.push_back("strongest-last split kept: coupled theorem2 split did not improve the objective");
  return op;
}

std::vector<double> default_lambda_sweep(int n) {
  if (n < 2) throw std::invalid_argument("lambda sweep needs at least two points");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
  return v;
}

double frontier_concavity_violation(const std::vector<RegionPoint>& points) {
  std::vector<std::pair<double, double>> p;
  for (const auto& q : points) {
    if (q.status != "failed") p.emplace_back(q.a1, q.a2);
  }
  std::stable_sort(p.begin(), p.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  double worst = -kInf;
  for (std::size_t i = 2; i < p.size(); ++i) {
    const double ux = p[i - 1].first - p[i - 2].first, uy = p[i - 1].second - p[i - 2].second;
    const double vx = p[i].first - p[i - 1].first, vy = p[i].second - p[i - 1].second;
    const double nu = std::hypot(ux, uy), nv = std::hypot(vx, vy);
    if (nu < 1e-12 || nv < 1e-12) continue;
    worst = std::max(worst, (ux * vy - uy * vx) / (nu * nv));
  }
  return std::isinf(worst) ? 0.0 : worst;
}

RegionResult region_boundary(const RegionConfig& cfg, const std::vector<double>& lambdas) {
  cfg.validate();
  if (lambdas.empty()) throw std::invalid_argument("empty lambda sweep");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0 && lambdas[i] <= 1.0)) throw std::invalid_argument("lambda1 values must lie in [0, 1]");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw std::invalid_argument("lambda1 values must be increasing");
  }
  RegionResult res;
  std::string warning;
  res.rule = effective_rule(cfg, &warning);
  if (!warning.empty()) res.warnings.push_back(warning);

  const auto grid = build_grid(cfg.fading1, cfg.fading2, cfg.n_per_dim, cfg.grid_method, cfg.seed);
  auto attempt = [&](double lambda1, std::vector<RegionPoint>& out) {
    try {
      const auto op = solve_operating_point(cfg, grid, lambda1);
      out.push_back(make_point(lambda1, op));
      if (!out.back().message.empty()) res.warnings.push_back(out.back().policy_ref + ": " + out.back().message);
      for (const auto& n : op.notes) res.warnings.push_back(out.back().policy_ref + ": " + n);
    } catch (const NumericError& e) {
      RegionPoint p;
      p.lambda1 = lambda1;
      p.status = "failed";
      p.message = e.what();
      p.policy_ref = policy_ref(lambda1);
      res.warnings.push_back(p.policy_ref + " failed: " + p.message);
      out.push_back(std::move(p));
    }
  };
  for (double l : lambdas) {
    attempt(std::clamp(l, kLambdaMin, 1.0 - kLambdaMin), res.points);
    if (l == 0.0 || l == 1.0) attempt(l, res.endpoints);
  }
  res.concavity_violation = frontier_concavity_violation(res.points);
  res.concave = res.concavity_violation <= 1e-4;
  if (!res.concave) {
    std::ostringstream os;
    os << "frontier not concave: normalized turn " << res.concavity_violation;
    res.warnings.push_back(os.str());
  }
  return res;
}

}  // namespace bcec
