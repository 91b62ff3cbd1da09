#include "bcec/power_alloc.hpp"

#include <algorithm>
#include <bit>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bcec/effcap.hpp"
#include "bcec/parallel.hpp"

namespace bcec {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr std::size_t kCacheSize = 256;

// Rounds to 30 mantissa bits (relative step below 1e-9) so that nearby
// queries share one evaluation.
double quantize(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  int e = 0;
  const double m = std::frexp(x, &e);
  return std::ldexp(std::nearbyint(std::ldexp(m, 30)), e - 30);
}

LinkState make_link(double z, double p_own, double p_int, const Input& own, const Input& intf) {
  LinkState l;
  l.z = z;
  l.p_own = p_own;
  l.p_int = p_int;
  l.own = own;
  l.interferer = intf;
  return l;
}

// (1 - e^{-beta r}) / beta, continuous at beta = 0.
double utility(double beta, double r) { return beta > 0.0 ? -std::expm1(-beta * r) / beta : r; }

double zero_power_mmse(const Input& x) { return x.is_gaussian() ? 1.0 : 1.0 - std::norm(x.constellation().mean()); }

std::string describe(const Cell& c) {
  std::ostringstream os;
  os << "node " << c.node << " (z1=" << c.z1 << ", z2=" << c.z2 << ", region " << to_string(c.region) << ")";
  return os.str();
}

}  // namespace

void QoSParams::validate() const {
  if (!(theta1 >= 0.0) || !(theta2 >= 0.0) || !std::isfinite(theta1) || !std::isfinite(theta2))
    throw std::invalid_argument("QoS exponents must be finite and >= 0");
  if (!(T > 0.0) || !(B > 0.0) || !std::isfinite(T) || !std::isfinite(B))
    throw std::invalid_argument("frame duration and bandwidth must be positive");
}

void NodeParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be positive");
  if (!(psi1 > 0.0 && psi1 <= 1.0) || !(psi2 > 0.0 && psi2 <= 1.0))
    throw std::invalid_argument("psi must lie in (0, 1]");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  if (!(beta1 >= 0.0) || !(beta2 >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
}

std::vector<Cell> build_cells(const FadingGrid& grid, const DecodingBoundary& boundary) {
  std::vector<Cell> cells;
  cells.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double z1 = grid.z1[i], z2 = grid.z2[i], w = grid.weight[i];
    if (boundary.is_tie(z1, z2)) {
      cells.push_back({i, z1, z2, 0.5 * w, Region::Z});
      cells.push_back({i, z1, z2, 0.5 * w, Region::Zc});
    } else {
      cells.push_back({i, z1, z2, w, boundary.region(z1, z2)});
    }
  }
  return cells;
}

RateSensitivity rate_sensitivity(const Cell& cell, double P1, double P2, const InputPair& in,
                                 const QuadratureSpec& quad) {
  if (!(P1 >= 0.0 && P2 >= 0.0) || !std::isfinite(P1) || !std::isfinite(P2))
    throw std::invalid_argument("powers must be finite and nonnegative");
  // Orient: user s cancels the other symbol, user n decodes through it.
  const bool z = cell.region == Region::Z;
  const double zs = z ? cell.z1 : cell.z2, zn = z ? cell.z2 : cell.z1;
  const double Ps = z ? P1 : P2, Pn = z ? P2 : P1;
  const Input& xs = z ? in.x1 : in.x2;
  const Input& xn = z ? in.x2 : in.x1;

  double rs = 0.0, drs = zs * zero_power_mmse(xs);
  if (Ps > 0.0 && zs > 0.0) {
    const auto c = conditional_stats(xs, zs * Ps, quad);
    rs = c.mi;
    drs = zs * c.mmse;
  }

  double rn = 0.0, drn_n = 0.0, drn_s = 0.0;
  if (zn > 0.0) {
    if (Pn == 0.0) {
      drn_n = Ps == 0.0 ? zn * zero_power_mmse(xn) : d_mi_dP_unconditional_or_fd(make_link(zn, 0.0, Ps, xn, xs), quad);
    } else if (Ps == 0.0) {
      const auto c = conditional_stats(xn, zn * Pn, quad);
      rn = c.mi;
      drn_n = zn * c.mmse;
      drn_s = d_mi_dP_unconditional_or_fd(make_link(zn, 0.0, Pn, xs, xn), quad) - zn * zero_power_mmse(xs);
    } else {
      // r_n = I(x_s; y_n) + I(x_n; y_n | x_s) - I(x_s; y_n | x_n), so
      // dr_n/dP_s = dI(x_s; y_n)/dP_s - z_n mmse(x_s; y_n | x_n).
      const auto st = superposed_stats(make_link(zn, Pn, Ps, xn, xs), quad);
      rn = st.mi_own;
      drn_n = zn * (st.mmse_own + std::sqrt(Ps / Pn) * st.cross);
      const double d_is = zn * (st.mmse_int + std::sqrt(Pn / Ps) * st.cross);
      drn_s = d_is - zn * conditional_stats(xs, zn * Ps, quad).mmse;
    }
  }

  RateSensitivity r;
  if (z) {
    r.r1 = rs / kLn2;
    r.r2 = rn / kLn2;
    r.dr1_dP1 = drs / kLn2;
    r.dr2_dP2 = drn_n / kLn2;
    r.dr2_dP1 = drn_s / kLn2;
  } else {
    r.r1 = rn / kLn2;
    r.r2 = rs / kLn2;
    r.dr1_dP1 = drn_n / kLn2;
    r.dr1_dP2 = drn_s / kLn2;
    r.dr2_dP2 = drs / kLn2;
  }
  return r;
}

namespace {

KktResiduals residuals_from(const RateSensitivity& s, const NodeParams& np) {
  const double c1 = np.lambda1 / np.psi1 * std::exp(-np.beta1 * s.r1);
  const double c2 = np.lambda2 / np.psi2 * std::exp(-np.beta2 * s.r2);
  return {c1 * s.dr1_dP1 + c2 * s.dr2_dP1 - np.epsilon, c1 * s.dr1_dP2 + c2 * s.dr2_dP2 - np.epsilon};
}

}  // namespace

KktResiduals kkt_residuals(const Cell& cell, double P1, double P2, const NodeParams& np, const InputPair& in,
                           const QuadratureSpec& quad) {
  return residuals_from(rate_sensitivity(cell, P1, P2, in, quad), np);
}

double node_lagrangian(const Cell& cell, double P1, double P2, const NodeParams& np, const InputPair& in,
                       const QuadratureSpec& quad) {
  const auto s = rate_sensitivity(cell, P1, P2, in, quad);
  return np.lambda1 / np.psi1 * utility(np.beta1, s.r1) + np.lambda2 / np.psi2 * utility(np.beta2, s.r2) -
         np.epsilon * (P1 + P2);
}

double kkt_violation(const KktResiduals& r, double P1, double P2) {
  const double v1 = P1 > 0.0 ? std::abs(r.res1) : std::max(r.res1, 0.0);
  const double v2 = P2 > 0.0 ? std::abs(r.res2) : std::max(r.res2, 0.0);
  return std::max(v1, v2);
}

NodeSolver::NodeSolver(Cell cell, const InputPair* in, const QuadratureSpec* quad)
    : cell_(cell), in_(in), quad_(quad) {}

RateSensitivity NodeSolver::evaluate(double P1, double P2) {
  const double q1 = quantize(P1), q2 = quantize(P2);
  const std::uint64_t k1 = std::bit_cast<std::uint64_t>(q1), k2 = std::bit_cast<std::uint64_t>(q2);
  for (const auto& e : cache_) {
    if (e.k1 == k1 && e.k2 == k2) return e.v;
  }
  const auto v = rate_sensitivity(cell_, q1, q2, *in_, *quad_);
  if (cache_.size() < kCacheSize) {
    cache_.push_back({k1, k2, v});
  } else {
    cache_[cache_next_] = {k1, k2, v};
    cache_next_ = (cache_next_ + 1) % kCacheSize;
  }
  return v;
}

NodeSolver::Result NodeSolver::solve(const NodeParams& np, const SolverOptions& opt, double eps_inner, bool verify) {
  np.validate();
  double P[2] = {start1_, start2_};
  // Coordinate roots are refined well below the fixed-point tolerance.
  auto root_tol = [&](double a, double b) { return std::max(1e-12 * std::max(std::abs(a), std::abs(b)), 1e-3 * eps_inner); };

  // Root in P[j] of dF/dP_j with the other power held fixed.
  auto solve_coord = [&](int j) {
    auto f = [&](double x) {
      double q[2] = {P[0], P[1]};
      q[j] = x;
      const auto r = residuals_from(evaluate(q[0], q[1]), np);
      return j == 0 ? r.res1 : r.res2;
    };
    const double f0 = f(0.0);
    if (f0 <= 0.0) return 0.0;
    double lo = 0.0, flo = f0;
    const double hint = P[j];
    double hi = hint > 0.0 ? hint : 1.0, fhi = f(hi);
    double grow = hint > 0.0 ? 1.25 : 4.0;
    while (fhi > 0.0) {
      lo = hi;
      flo = fhi;
      hi *= grow;
      grow = 4.0;
      if (hi > 1e15) throw NumericError("no power upper bracket at " + describe(cell_));
      fhi = f(hi);
    }
    if (lo == 0.0 && hint > 0.0) {
      const double t = 0.8 * hi, ft = f(t);
      if (ft > 0.0) {
        lo = t;
        flo = ft;
      } else {
        hi = t;
        fhi = ft;
      }
    }
    if (fhi == 0.0) return hi;
    if (opt.check_monotone) {
      // Strictly decreasing up to the root and no second crossing up to hi.
      double prev = f0;
      bool crossed = false;
      for (int k = 1; k <= 16; ++k) {
        const double x = hi * k / 16.0, fk = f(x);
        const bool bad = crossed ? fk > 0.0 : (fk > 0.0 && !(fk < prev));
        if (bad) {
          std::ostringstream os;
          os << "KKT equation for P" << (j + 1) << " not decreasing at " << describe(cell_) << " near P=" << x;
          throw NumericError(os.str());
        }
        crossed = crossed || fk <= 0.0;
        prev = fk;
      }
    }
    std::uintmax_t iters = 100;
    auto tol = [&](double a, double b) { return std::abs(b - a) <= root_tol(a, b); };
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (a + b);
  };

  auto lagrangian = [&](double q0, double q1) {
    const auto v = evaluate(q0, q1);
    return np.lambda1 / np.psi1 * utility(np.beta1, v.r1) + np.lambda2 / np.psi2 * utility(np.beta2, v.r2) -
           np.epsilon * (q0 + q1);
  };

  // Global maximizer of F along P[j]: every downward crossing of dF/dP_j on a
  // geometric mesh is refined, and the best of those and P_j = 0 is kept.
  auto best_coord = [&](int j) {
    auto f = [&](double x) {
      double q[2] = {P[0], P[1]};
      q[j] = x;
      const auto r = residuals_from(evaluate(q[0], q[1]), np);
      return j == 0 ? r.res1 : r.res2;
    };
    auto value = [&](double x) {
      double q[2] = {P[0], P[1]};
      q[j] = x;
      return lagrangian(q[0], q[1]);
    };
    const double base = 1e-3 * std::max({scale_, P[j], 1e-12});
    double best = 0.0, best_v = value(0.0);
    double xa = 0.0, fa = f(0.0);
    for (int k = 0;; ++k) {
      const double xb = base * std::ldexp(1.0, k), fb = f(xb);
      if (fa > 0.0 && fb <= 0.0) {
        std::uintmax_t iters = 100;
        auto tol = [&](double u, double v) { return std::abs(v - u) <= root_tol(u, v); };
        const auto [u, v] = fb == 0.0 ? std::pair{xb, xb} : boost::math::tools::toms748_solve(f, xa, xb, fa, fb, tol, iters);
        const double x = 0.5 * (u + v), vx = value(x);
        if (vx > best_v) {
          best = x;
          best_v = vx;
        }
      }
      xa = xb;
      fa = fb;
      if (k >= 16 && fb <= 0.0) break;
      if (xb > 1e15) throw NumericError("no power upper bracket at " + describe(cell_));
    }
    return best;
  };

  // Z: user 2 decodes through x1, so its equation is solved first; Zc mirrors.
  const int first = cell_.region == Region::Z ? 1 : 0;
  auto finish = [&](int it) {
    start1_ = P[0];
    start2_ = P[1];
    return Result{P[0], P[1], it};
  };
  // Fast local alternation, then a global check of both coordinates. Any
  // improvement switches to global coordinate ascent, which cannot cycle.
  const int fast_limit = std::min(opt.max_inner, 30);
  int it = 0;
  bool settled = false;
  while (it < fast_limit) {
    ++it;
    const double old0 = P[0], old1 = P[1];
    P[first] = solve_coord(first);
    P[1 - first] = solve_coord(1 - first);
    if (std::abs(P[0] - old0) <= eps_inner && std::abs(P[1] - old1) <= eps_inner) {
      settled = true;
      break;
    }
  }
  if (settled) {
    if (!verify) return finish(it);
    const double v0 = lagrangian(P[0], P[1]);
    bool improved = false;
    for (int j : {first, 1 - first}) {
      const double old = P[j];
      P[j] = best_coord(j);
      if (lagrangian(P[0], P[1]) > v0 + 1e-12 * std::abs(v0) + 1e-15) {
        improved = true;
      } else {
        P[j] = old;
      }
    }
    if (!improved) return finish(it);
  }
  // Coordinate sweeps zigzag along a nearly flat ridge (equal weights, small
  // beta, z1 close to z2). A line search along the sweep displacement follows it.
  auto pattern_move = [&](double d0, double d1) {
    auto along = [&](double t) { return lagrangian(std::max(P[0] + t * d0, 0.0), std::max(P[1] + t * d1, 0.0)); };
    const double v0 = along(0.0);
    double t_prev = 0.0, t = 1.0, v = along(t);
    if (!(v > v0)) return;
    double t_next = 2.0, v_next = along(t_next);
    while (v_next > v && t_next < 1e9) {
      t_prev = t;
      t = t_next;
      v = v_next;
      t_next *= 2.0;
      v_next = along(t_next);
    }
    const auto [tb, nv] =
        boost::math::tools::brent_find_minima([&](double s) { return -along(s); }, t_prev, t_next, 40);
    const double ts = -nv > v ? tb : t;
    P[0] = std::max(P[0] + ts * d0, 0.0);
    P[1] = std::max(P[1] + ts * d1, 0.0);
  };
  while (it < opt.max_inner) {
    ++it;
    const double old0 = P[0], old1 = P[1];
    P[first] = best_coord(first);
    P[1 - first] = best_coord(1 - first);
    if (std::abs(P[0] - old0) <= eps_inner && std::abs(P[1] - old1) <= eps_inner) return finish(it);
    pattern_move(P[0] - old0, P[1] - old1);
  }
  std::ostringstream os;
  os << "inner power iteration did not converge in " << opt.max_inner << " steps at " << describe(cell_);
  throw NumericError(os.str());
}

NodeSolver::Result solve_node(const Cell& cell, const NodeParams& np, const InputPair& in, const QuadratureSpec& quad,
                              const SolverOptions& opt, double p_bar) {
  NodeSolver s(cell, &in, &quad);
  s.set_scale(p_bar);
  const double tol = opt.eps_inner > 0.0 ? opt.eps_inner : 1e-6 * std::max(1.0, p_bar);
  return s.solve(np, opt, tol);
}

double PowerPolicy::average_power() const {
  std::vector<double> t(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) t[i] = cells[i].weight * (P1[i] + P2[i]);
  return pairwise_sum(t);
}

namespace {

std::vector<double> weights_of(const std::vector<Cell>& cells) {
  std::vector<double> w(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) w[i] = cells[i].weight;
  return w;
}

double psi_of(double beta, const std::vector<double>& r, const std::vector<double>& w) {
  std::vector<double> t(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) t[i] = w[i] * std::exp(-beta * r[i]);
  return std::clamp(pairwise_sum(t), std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

PowerPolicy run_algorithm1(const AllocationProblem& prob, const SolverOptions& opt, const PowerPolicy* warm) {
  if (prob.grid == nullptr) throw std::invalid_argument("allocation problem has no fading grid");
  prob.grid->validate();
  prob.qos.validate();
  prob.quad.validate();
  if (!(prob.p_bar > 0.0) || !std::isfinite(prob.p_bar)) throw std::invalid_argument("average power must be positive");
  if (!(prob.lambda1 >= 0.0 && prob.lambda1 <= 1.0)) throw std::invalid_argument("lambda1 must lie in [0, 1]");

  PowerPolicy pol;
  pol.cells = build_cells(*prob.grid, prob.boundary);
  const std::size_t n = pol.cells.size();
  const auto w = weights_of(pol.cells);
  pol.lambda1 = prob.lambda1;
  pol.lambda2 = 1.0 - prob.lambda1;
  pol.p_bar = prob.p_bar;
  pol.P1.assign(n, 0.0);
  pol.P2.assign(n, 0.0);
  const double eps_inner = opt.eps_inner > 0.0 ? opt.eps_inner : 1e-6 * std::max(1.0, prob.p_bar);

  std::vector<NodeSolver> solvers;
  solvers.reserve(n);
  for (const auto& c : pol.cells) {
    solvers.emplace_back(c, &prob.inputs, &prob.quad);
    solvers.back().set_scale(prob.p_bar);
  }

  NodeParams np;
  np.lambda1 = pol.lambda1;
  np.lambda2 = pol.lambda2;
  np.beta1 = prob.qos.theta1 < kThetaLimit ? 0.0 : prob.qos.beta1();
  np.beta2 = prob.qos.theta2 < kThetaLimit ? 0.0 : prob.qos.beta2();
  double log_eps = 0.5 * (std::log(opt.eps_lo) + std::log(opt.eps_hi));
  bool have_warm = false;
  double warm_step = 0.25;  // initial log-eps step when a previous eps is known
  if (warm != nullptr && warm->cells.size() == n) {
    have_warm = true;
    for (std::size_t i = 0; i < n; ++i) solvers[i].set_start(warm->P1[i], warm->P2[i]);
    np.psi1 = warm->psi1;
    np.psi2 = warm->psi2;
    log_eps = std::log(warm->epsilon);
  }

  auto& diag = pol.diag;
  double evaluated_at = std::numeric_limits<double>::quiet_NaN();
  auto total_power = [&](double le, bool verify) {
    np.epsilon = std::exp(le);
    std::vector<int> iters(n, 0);
    parallel_for(
        n,
        [&](std::size_t i) {
          const auto r = solvers[i].solve(np, opt, eps_inner, verify);
          pol.P1[i] = r.P1;
          pol.P2[i] = r.P2;
          iters[i] = r.iterations;
        },
        opt.threads);
    ++diag.epsilon_evaluations;
    for (int k : iters) diag.max_inner_iterations = std::max(diag.max_inner_iterations, k);
    evaluated_at = le;
    return pol.average_power();
  };

  // Multiplier search: E{P1 + P2} is nonincreasing in eps. Bracket in log eps,
  // then Illinois false position until the budget is met.
  auto fit_epsilon = [&](bool global) {
    const double target = prob.p_bar;
    const double stop = 0.1 * opt.power_tol * target;
    double a, ha, b, hb;
    double x = log_eps, hx = total_power(x, global) - target;
    if (std::abs(hx) <= stop) return;
    const double step0 = have_warm ? warm_step : 0.5 * (std::log(opt.eps_hi) - std::log(opt.eps_lo));
    double step = step0;
    // a: too much power (h > 0), b: too little (h < 0).
    if (hx > 0.0) {
      a = x;
      ha = hx;
      for (;;) {
        b = a + step;
        hb = total_power(b, global) - target;
        if (std::abs(hb) <= stop) return;
        if (hb < 0.0) break;
        a = b;
        ha = hb;
        step *= 2.0;
        if (b > std::log(1e300)) throw NumericError("no multiplier bracket: power stays above budget");
      }
    } else {
      b = x;
      hb = hx;
      for (;;) {
        a = b - step;
        ha = total_power(a, global) - target;
        if (std::abs(ha) <= stop) return;
        if (ha > 0.0) break;
        b = a;
        hb = ha;
        step *= 2.0;
        if (a < std::log(1e-300)) throw NumericError("no multiplier bracket: budget cannot be used up");
      }
    }
    int side = 0;
    for (int it = 0; it < opt.max_epsilon_evals; ++it) {
      double m = (a * hb - b * ha) / (hb - ha);
      if (!(m > a && m < b)) m = 0.5 * (a + b);
      const double hm = total_power(m, global) - target;
      if (std::abs(hm) <= stop) return;
      if (hm > 0.0) {
        a = m;
        ha = hm;
        if (side == 1) hb *= 0.5;
        side = 1;
      } else {
        b = m;
        hb = hm;
        if (side == -1) ha *= 0.5;
        side = -1;
      }
      if (b - a < 1e-13 * std::max(1.0, std::abs(a))) {
        // Jump in the power curve: settle on the feasible side.
        if (evaluated_at != b) total_power(b, global);
        return;
      }
    }
    throw NumericError("multiplier search did not meet the power budget");
  };

  double prev_d1 = 0.0, prev_d2 = 0.0;
  bool damp = false;
  bool converged = false;
  std::vector<double> r1(n), r2(n);
  for (int outer = 1; outer <= opt.max_outer; ++outer) {
    // Fast node solves follow their current local maximum; a verified pass at
    // the fitted eps moves nodes to better maxima, and the fit is repeated
    // until no node moves. Persistent switching falls back to a fit on
    // verified solves.
    for (int pass = 0;; ++pass) {
      fit_epsilon(false);
      const auto P1o = pol.P1, P2o = pol.P2;
      total_power(evaluated_at, true);
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i)
        moved = moved || std::abs(pol.P1[i] - P1o[i]) > 10.0 * eps_inner || std::abs(pol.P2[i] - P2o[i]) > 10.0 * eps_inner;
      if (!moved) break;
      log_eps = evaluated_at;
      if (pass >= 3) {
        // Global maximizers give a nonincreasing power curve, so the fit terminates.
        fit_epsilon(true);
        break;
      }
    }
    // Later searches start with twice the last move of log eps.
    if (have_warm) warm_step = std::clamp(2.0 * std::abs(evaluated_at - log_eps), 1e-4, 0.25);
    log_eps = evaluated_at;
    have_warm = true;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = solvers[i].evaluate(pol.P1[i], pol.P2[i]);
      r1[i] = s.r1;
      r2[i] = s.r2;
    }
    const double s1 = psi_of(np.beta1, r1, w), s2 = psi_of(np.beta2, r2, w);
    const double d1 = s1 - np.psi1, d2 = s2 - np.psi2;
    diag.psi_iterations = outer;
    {
      std::ostringstream os;
      os.precision(10);
      os << "psi iter " << outer << ": eps=" << std::exp(log_eps) << " psi=(" << np.psi1 << ", " << np.psi2
         << ") psi*=(" << s1 << ", " << s2 << ")";
      diag.trace.push_back(os.str());
    }
    if (std::abs(d1) <= opt.psi_tol && std::abs(d2) <= opt.psi_tol) {
      converged = true;
      break;
    }
    // Damp the steps that follow an alternation of the increments.
    damp = (d1 * prev_d1 < 0.0) || (d2 * prev_d2 < 0.0);
    diag.damped = diag.damped || damp;
    np.psi1 = damp ? 0.5 * (np.psi1 + s1) : s1;
    np.psi2 = damp ? 0.5 * (np.psi2 + s2) : s2;
    prev_d1 = d1;
    prev_d2 = d2;
  }
  if (!converged) {
    std::ostringstream os;
    os << "psi fixed point did not converge in " << opt.max_outer << " iterations";
    for (const auto& t : diag.trace) os << "\n  " << t;
    throw NumericError(os.str());
  }

  pol.epsilon = np.epsilon;
  pol.psi1 = np.psi1;
  pol.psi2 = np.psi2;
  pol.r1 = r1;
  pol.r2 = r2;
  pol.a1 = effective_capacity_beta(np.beta1, r1, w);
  pol.a2 = effective_capacity_beta(np.beta2, r2, w);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = residuals_from(solvers[i].evaluate(pol.P1[i], pol.P2[i]), np);
    diag.max_kkt_violation = std::max(diag.max_kkt_violation, kkt_violation(r, pol.P1[i], pol.P2[i]));
  }
  diag.power_error = (pol.average_power() - prob.p_bar) / prob.p_bar;
  return pol;
}

double policy_objective(const AllocationProblem& prob, const std::vector<Cell>& cells, const std::vector<double>& P1,
                        const std::vector<double>& P2) {
  if (P1.size() != cells.size() || P2.size() != cells.size()) throw std::invalid_argument("power vector size mismatch");
  std::vector<double> r1(cells.size()), r2(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const auto [a, b] = rates_nats(cells[i].region, cells[i].z1, cells[i].z2, P1[i], P2[i], prob.inputs, prob.quad);
    r1[i] = a / kLn2;
    r2[i] = b / kLn2;
  });
  const auto w = weights_of(cells);
  const double b1 = prob.qos.theta1 < kThetaLimit ? 0.0 : prob.qos.beta1();
  const double b2 = prob.qos.theta2 < kThetaLimit ? 0.0 : prob.qos.beta2();
  return prob.lambda1 * effective_capacity_beta(b1, r1, w) + (1.0 - prob.lambda1) * effective_capacity_beta(b2, r2, w);
}

}  // namespace bcec
