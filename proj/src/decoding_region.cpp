#include "bcec/decoding_region.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "bcec/parallel.hpp"

namespace bcec {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGapNoise = 1e-12;  // |g| below this carries no sign

LinkState make_link(double z, double p_own, double p_int, const Input& own, const Input& intf) {
  LinkState l;
  l.z = z;
  l.p_own = p_own;
  l.p_int = p_int;
  l.own = own;
  l.interferer = intf;
  return l;
}

double mi_cond(const Input& x, double snr, const QuadratureSpec& quad) {
  if (snr == 0.0) return 0.0;
  return conditional_stats(x, snr, quad).mi;
}

double joint_nats(double z1, double z2, double P1, double P2, const InputPair& in, const QuadratureSpec& quad) {
  if (!(z1 >= 0.0 && z2 >= 0.0 && P1 >= 0.0 && P2 >= 0.0)) throw std::invalid_argument("negative gain or power");
  const double z = z1 + z2;
  if (z == 0.0 || (P1 == 0.0 && P2 == 0.0)) return 0.0;
  if (P2 == 0.0) return mi_cond(in.x1, z * P1, quad);
  if (P1 == 0.0) return mi_cond(in.x2, z * P2, quad);
  return superposed_stats(make_link(z, P1, P2, in.x1, in.x2), quad).mi_pair;
}

}  // namespace

DecodingRule parse_decoding_rule(const std::string& name) {
  if (name == "theorem2") return DecodingRule::theorem2;
  if (name == "strongest_last") return DecodingRule::strongest_last;
  if (name == "fixed_order_12") return DecodingRule::fixed_order_12;
  if (name == "fixed_order_21") return DecodingRule::fixed_order_21;
  throw std::invalid_argument("unknown decoding rule: " + name);
}

std::string to_string(DecodingRule r) {
  switch (r) {
    case DecodingRule::theorem2:
      return "theorem2";
    case DecodingRule::strongest_last:
      return "strongest_last";
    case DecodingRule::fixed_order_12:
      return "fixed_order_12";
    case DecodingRule::fixed_order_21:
      return "fixed_order_21";
  }
  return "?";
}

std::string to_string(Region r) { return r == Region::Z ? "Z" : "Zc"; }

double DecodingBoundary::z1_star_at(double z2) const {
  switch (rule) {
    case DecodingRule::strongest_last:
      return z2;
    case DecodingRule::fixed_order_21:
      return 0.0;
    case DecodingRule::fixed_order_12:
      return kInf;
    case DecodingRule::theorem2:
      break;
  }
  if (z2_samples.empty()) throw std::logic_error("theorem2 boundary has no samples");
  if (z2 <= z2_samples.front()) return z1_star.front();
  if (z2 >= z2_samples.back()) return z1_star.back();
  const auto it = std::upper_bound(z2_samples.begin(), z2_samples.end(), z2);
  const std::size_t i = static_cast<std::size_t>(it - z2_samples.begin()) - 1;
  const double a = z2_samples[i], b = z2_samples[i + 1];
  const double fa = z1_star[i], fb = z1_star[i + 1];
  if (std::isinf(fa) || std::isinf(fb)) return (z2 - a <= b - z2) ? fa : fb;
  const double t = (z2 - a) / (b - a);
  return fa + t * (fb - fa);
}

Region DecodingBoundary::region(double z1, double z2) const { return z1 >= z1_star_at(z2) ? Region::Z : Region::Zc; }

bool DecodingBoundary::is_tie(double z1, double z2) const {
  if (rule == DecodingRule::fixed_order_12 || rule == DecodingRule::fixed_order_21) return false;
  return z1 == z1_star_at(z2);
}

std::pair<double, double> rates_nats(Region region, double z1, double z2, double P1, double P2, const InputPair& in,
                                     const QuadratureSpec& quad) {
  if (!(P1 >= 0.0 && P2 >= 0.0)) throw std::invalid_argument("powers must be nonnegative");
  if (region == Region::Z) {
    return {mi_cond(in.x1, z1 * P1, quad), mi_with_interference_nats(make_link(z2, P2, P1, in.x2, in.x1), quad)};
  }
  return {mi_with_interference_nats(make_link(z1, P1, P2, in.x1, in.x2), quad), mi_cond(in.x2, z2 * P2, quad)};
}

RatePair rates(double z1, double z2, double P1, double P2, const InputPair& in, const DecodingBoundary& boundary,
               const QuadratureSpec& quad) {
  const auto [a, b] = rates_nats(boundary.region(z1, z2), z1, z2, P1, P2, in, quad);
  return {a / kLn2, b / kLn2};
}

double joint_mutual_info(double z1, double z2, double P1, double P2, const InputPair& in, const QuadratureSpec& quad) {
  return joint_nats(z1, z2, P1, P2, in, quad) / kLn2;
}

McEstimate joint_mutual_info_mc(double z1, double z2, double P1, double P2, const InputPair& in,
                                const QuadratureSpec& quad) {
  quad.validate();
  if (!(z1 >= 0.0 && z2 >= 0.0 && P1 >= 0.0 && P2 >= 0.0)) throw std::invalid_argument("negative gain or power");
  // s = sqrt(Pg) g + d with g ~ CN(0,1) collecting the Gaussian inputs and d
  // ranging over the discrete part. (y1, y2) given d is Gaussian with
  // covariance I + Pg v v^T, v = (sqrt z1, sqrt z2).
  struct Atom {
    cplx d;
    double lp;
  };
  std::vector<Atom> atoms{{cplx{0.0, 0.0}, 0.0}};
  double pg = 0.0;
  auto add = [&](const Input& x, double p) {
    if (x.is_gaussian()) {
      pg += p;
      return;
    }
    const auto& c = x.constellation();
    std::vector<Atom> next;
    for (const auto& a : atoms) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.probs()[i] > 0.0) next.push_back({a.d + std::sqrt(p) * c.symbols()[i], a.lp + std::log(c.probs()[i])});
      }
    }
    atoms = std::move(next);
  };
  add(in.x1, P1);
  add(in.x2, P2);
  const double v1 = std::sqrt(z1), v2 = std::sqrt(z2);
  const double vv = z1 + z2;
  const double shrink = pg / (1.0 + pg * vv);
  const double logdet = std::log1p(pg * vv);

  std::mt19937_64 rng(quad.seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> cum(atoms.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) cum[i] = (acc += std::exp(atoms[i].lp));

  std::vector<double> lw(atoms.size());
  double sum = 0.0, sum2 = 0.0;
  const auto n = quad.mc_samples;
  for (std::int64_t t = 0; t < n; ++t) {
    const std::size_t k =
        std::min<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u(rng) * acc) - cum.begin(), atoms.size() - 1);
    const cplx gs(g(rng), g(rng));
    const cplx s = std::sqrt(pg) * gs + atoms[k].d;
    const cplx w1(g(rng), g(rng)), w2(g(rng), g(rng));
    const cplx y1 = v1 * s + w1, y2 = v2 * s + w2;
    // ln f(y | x1, x2) + 2 ln pi; the Gaussian inputs count as transmitted, so
    // conditioning removes them entirely.
    const double l_cond = -std::norm(w1) - std::norm(w2);
    double m = -kInf;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const cplx e1 = y1 - v1 * atoms[i].d, e2 = y2 - v2 * atoms[i].d;
      const double q = std::norm(e1) + std::norm(e2) - shrink * std::norm(v1 * e1 + v2 * e2);
      lw[i] = atoms[i].lp - logdet - q;
      m = std::max(m, lw[i]);
    }
    double se = 0.0;
    for (double x : lw) se += std::exp(x - m);
    const double val = l_cond - (m + std::log(se));
    sum += val;
    sum2 += val * val;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(sum2 / static_cast<double>(n) - mean * mean, 0.0);
  return {mean / kLn2, std::sqrt(var / static_cast<double>(n)) / kLn2};
}

PowerContext constant_powers(double P1, double P2) {
  return [P1, P2](double, double) { return std::pair{P1, P2}; };
}

double theorem2_gap(double z1, double z2, const PowerContext& powers, const InputPair& in, const QuadratureSpec& quad) {
  const auto [P1, P2] = powers(z1, z2);
  return joint_nats(z1, z2, P1, P2, in, quad) - mi_cond(in.x1, z1 * P1, quad) - mi_cond(in.x2, z2 * P2, quad);
}

BoundaryRoot solve_boundary(double z2, const PowerContext& powers, const InputPair& in, const QuadratureSpec& quad,
                            const BoundaryOptions& opt) {
  if (!(z2 >= 0.0)) throw std::invalid_argument("z2 must be nonnegative");
  if (!(opt.z_max > 0.0) || opt.scan_points < 2 || !(opt.root_tol > 0.0))
    throw std::invalid_argument("invalid boundary options");
  auto g = [&](double z1) { return theorem2_gap(z1, z2, powers, in, quad); };

  std::vector<double> zs(static_cast<std::size_t>(opt.scan_points) + 1), gs(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    zs[i] = opt.z_max * static_cast<double>(i) / opt.scan_points;
    gs[i] = g(zs[i]);
  }
  // Sign changes between consecutive samples that carry a sign.
  std::vector<std::pair<std::size_t, std::size_t>> crossings;
  std::size_t last = zs.size();
  bool any_neg = false;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (std::abs(gs[i]) <= kGapNoise) continue;
    any_neg = any_neg || gs[i] < 0.0;
    if (last < zs.size() && (gs[last] > 0.0) != (gs[i] > 0.0)) crossings.emplace_back(last, i);
    last = i;
  }
  if (crossings.size() > 1) {
    std::ostringstream os;
    os << "boundary gap changes sign " << crossings.size() << " times at z2=" << z2 << ":";
    for (const auto& [a, b] : crossings) os << " [" << zs[a] << ", " << zs[b] << "]";
    throw NumericError(os.str());
  }
  if (crossings.empty()) return {any_neg ? 0.0 : kInf, 0.0};

  const auto [ia, ib] = crossings.front();
  if (gs[ia] < 0.0) {
    std::ostringstream os;
    os << "boundary gap crosses upward at z2=" << z2 << " in [" << zs[ia] << ", " << zs[ib] << "]";
    throw NumericError(os.str());
  }
  std::uintmax_t iters = 200;
  auto tol = [&](double a, double b) { return std::abs(b - a) <= opt.root_tol; };
  const auto [a, b] = boost::math::tools::toms748_solve(g, zs[ia], zs[ib], gs[ia], gs[ib], tol, iters);
  // Keep the endpoint with the smaller residual.
  const double ga = g(a), gb = g(b);
  const double z = std::abs(ga) <= std::abs(gb) ? a : b;
  return {z, std::min(std::abs(ga), std::abs(gb))};
}

DecodingBoundary build_boundary(const std::vector<double>& z2_samples, DecodingRule rule, const PowerContext& powers,
                                const InputPair& in, const QuadratureSpec& quad, const BoundaryOptions& opt,
                                int threads) {
  for (std::size_t i = 1; i < z2_samples.size(); ++i) {
    if (!(z2_samples[i] > z2_samples[i - 1])) throw std::invalid_argument("z2 samples must be strictly increasing");
  }
  DecodingBoundary b;
  b.rule = rule;
  b.z2_samples = z2_samples;
  b.z1_star.assign(z2_samples.size(), 0.0);
  b.residual_nats.assign(z2_samples.size(), 0.0);
  if (rule == DecodingRule::theorem2) {
    if (z2_samples.empty()) throw std::invalid_argument("theorem2 boundary needs z2 samples");
    parallel_for(
        z2_samples.size(),
        [&](std::size_t i) {
          const auto r = solve_boundary(z2_samples[i], powers, in, quad, opt);
          b.z1_star[i] = r.z1_star;
          b.residual_nats[i] = r.residual;
        },
        threads);
  } else {
    for (std::size_t i = 0; i < z2_samples.size(); ++i) b.z1_star[i] = b.z1_star_at(z2_samples[i]);
  }
  return b;
}

}  // namespace bcec
