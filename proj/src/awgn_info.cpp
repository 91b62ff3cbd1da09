#include "bcec/awgn_info.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <type_traits>

namespace bcec {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sqabs(double v) { return v * v; }
inline double sqabs(const cplx& v) { return std::norm(v); }
inline double re_mul_conj(double a, double b) { return a * b; }
inline double re_mul_conj(const cplx& a, const cplx& b) { return a.real() * b.real() + a.imag() * b.imag(); }

template <class V>
struct Alphabet {
  std::vector<V> values;
  std::vector<double> probs;
};

template <class V>
struct NodeSet {
  std::vector<V> nodes;
  std::vector<double> weights;
};

struct KernelSums {
  double loss = 0.0;  // E[ln sum_k (p_k/p_c) f(y|k)/f(y|c)], so I(labels; y) = H(labels) - loss
  double loss_own = 0.0;  // H(own | y) = E[-ln P(a = a_c | y)]
  double mmse_own = 0.0;
  double mmse_int = 0.0;
  double cross = 0.0;
};

// Nodes adapted to the mixture features seen from composite point c: a
// Gaussian core plus geometrically graded Gauss-Legendre panels around every
// pairwise decision midpoint, where the loss and error integrands concentrate
// in bumps of width ~1/|d|.
template <class PointVec>
void panel_nodes(const PointVec& pts, std::size_t c, NodeSet<double>& out) {
  static const double gl_x[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                                 0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
  static const double gl_w[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                                 0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
  static const double grades[] = {0.5, 1.5, 3.5, 7.5, 15.5, 31.5};
  constexpr double core = 6.5;
  std::vector<double> bp;
  for (double t = -core; t <= core + 1e-12; t += 0.5) bp.push_back(t);

  struct Feature {
    double m, scale;
  };
  std::vector<Feature> feats;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k == c) continue;
    const double d = pts[c].u - pts[k].u;
    if (std::abs(d) <= 1.0) continue;  // wide feature, absorbed by the core
    const double m = (pts[k].lp - pts[c].lp - d * d) / (2.0 * d);
    feats.push_back({m, 1.0 / std::abs(d)});
  }
  for (const auto& f : feats) {
    if (f.m * f.m > 745.0) continue;  // Gaussian weight underflows
    bp.push_back(f.m);
    for (double g : grades) {
      bp.push_back(f.m - g * f.scale);
      bp.push_back(f.m + g * f.scale);
    }
  }
  std::sort(bp.begin(), bp.end());
  out.nodes.clear();
  out.weights.clear();
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double a = bp[i], b = bp[i + 1];
    if (b - a < 1e-12) continue;
    const int pieces = static_cast<int>(std::ceil((b - a) / 1.0));
    const double h = (b - a) / pieces;
    for (int p = 0; p < pieces; ++p) {
      const double lo = a + p * h;
      for (int q = 0; q < 6; ++q) {
        const double t = lo + 0.5 * h * (gl_x[q] + 1.0);
        const double wt = 0.5 * h * gl_w[q] * inv_sqrt_pi * std::exp(-t * t);
        if (wt > 0.0) {
          out.nodes.push_back(t);
          out.weights.push_back(wt);
        }
      }
    }
  }
}

// Integrates over the composite alphabet u = amp_own * a + amp_int * b with
// prior p(a) q(b), observed in unit-variance complex (or half-variance real)
// Gaussian noise. All mixture densities are evaluated relative to the
// transmitted point, in the log domain, so that small losses and small errors
// keep their relative precision.
template <class V>
KernelSums superposed_kernel(const Alphabet<V>& own, const Alphabet<V>& intf, double amp_own, double amp_int,
                             const NodeSet<V>& fixed, bool adaptive) {
  struct Point {
    V u;
    V a;
    V b;
    double p;
    double lp;
  };
  std::vector<Point> pts;
  pts.reserve(own.values.size() * intf.values.size());
  for (std::size_t i = 0; i < own.values.size(); ++i) {
    if (own.probs[i] <= 0.0) continue;
    for (std::size_t k = 0; k < intf.values.size(); ++k) {
      if (intf.probs[k] <= 0.0) continue;
      const double p = own.probs[i] * intf.probs[k];
      pts.push_back({amp_own * own.values[i] + amp_int * intf.values[k], own.values[i], intf.values[k], p, std::log(p)});
    }
  }
  const std::size_t n = pts.size();
  KernelSums out;
  if (n <= 1) return out;

  std::vector<V> d(n), ea(n), eb(n);
  std::vector<double> dd(n), lpr(n), ex(n);
  std::vector<char> same(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t k = 0; k < n; ++k) {
      same[k] = pts[k].a == pts[c].a;
      d[k] = pts[c].u - pts[k].u;
      dd[k] = sqabs(d[k]);
      lpr[k] = pts[k].lp - pts[c].lp;
      ea[k] = pts[c].a - pts[k].a;
      eb[k] = pts[c].b - pts[k].b;
    }
    const NodeSet<V>* nsp = &fixed;
    NodeSet<V> local;
    if constexpr (std::is_same_v<V, double>) {
      if (adaptive) {
        panel_nodes(pts, c, local);
        nsp = &local;
      }
    }
    const NodeSet<V>& ns = *nsp;
    KernelSums acc;
    for (std::size_t t = 0; t < ns.nodes.size(); ++t) {
      const V& w = ns.nodes[t];
      double m = 0.0;  // exponent of k = c is exactly zero
      for (std::size_t k = 0; k < n; ++k) {
        const double e = (k == c) ? 0.0 : lpr[k] - dd[k] - 2.0 * re_mul_conj(w, d[k]);
        ex[k] = e;
        m = std::max(m, e);
      }
      double s_other = 0.0, s_same = 0.0, s_diff = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        ex[k] = std::exp(ex[k] - m);
        if (k != c) s_other += ex[k];
        (same[k] ? s_same : s_diff) += ex[k];
      }
      const double s = ex[c] + s_other;
      const double lse = (m == 0.0) ? std::log1p(s_other) : m + std::log(s);
      V err_a{};
      V err_b{};
      for (std::size_t k = 0; k < n; ++k) {
        if (k == c) continue;
        const double post = ex[k] / s;
        err_a += post * ea[k];
        err_b += post * eb[k];
      }
      const double wt = ns.weights[t];
      acc.loss += wt * lse;
      acc.loss_own += wt * std::log1p(s_diff / s_same);
      acc.mmse_own += wt * sqabs(err_a);
      acc.mmse_int += wt * sqabs(err_b);
      acc.cross += wt * re_mul_conj(err_a, err_b);
    }
    out.loss += pts[c].p * acc.loss;
    out.loss_own += pts[c].p * acc.loss_own;
    out.mmse_own += pts[c].p * acc.mmse_own;
    out.mmse_int += pts[c].p * acc.mmse_int;
    out.cross += pts[c].p * acc.cross;
  }
  return out;
}

const NodeSet<double>& real_nodes(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<NodeSet<double>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    const auto& gh = gauss_hermite(n);
    slot = std::make_unique<NodeSet<double>>(NodeSet<double>{gh.nodes, gh.weights});
  }
  return *slot;
}

const NodeSet<cplx>& complex_nodes(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<NodeSet<cplx>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    const auto& gh = gauss_hermite(n);
    auto ns = std::make_unique<NodeSet<cplx>>();
    for (std::size_t a = 0; a < gh.nodes.size(); ++a) {
      for (std::size_t b = 0; b < gh.nodes.size(); ++b) {
        ns->nodes.emplace_back(gh.nodes[a], gh.nodes[b]);
        ns->weights.push_back(gh.weights[a] * gh.weights[b]);
      }
    }
    slot = std::move(ns);
  }
  return *slot;
}

Alphabet<double> as_alphabet(const PamFactor& f) { return {f.levels, f.probs}; }

Alphabet<cplx> as_alphabet(const Constellation& c) {
  return {std::vector<cplx>(c.symbols().begin(), c.symbols().end()),
          std::vector<double>(c.probs().begin(), c.probs().end())};
}

const Alphabet<double> kRealPoint{{0.0}, {1.0}};
const Alphabet<cplx> kComplexPoint{{cplx{0.0, 0.0}}, {1.0}};

// I(labels; y) and error moments for two discrete inputs.
struct DiscretePair {
  double mi_pair = 0.0;
  double loss = 0.0;      // H(labels) - mi_pair
  double loss_own = 0.0;  // H(own) - I(own; y)
  double mmse_own = 0.0;
  double mmse_int = 0.0;
  double cross = 0.0;
};

DiscretePair discrete_pair(const Constellation& own, const Constellation* intf, double amp_own, double amp_int,
                           int nodes, bool adaptive) {
  DiscretePair r;
  const double h_labels = own.entropy_nats() + (intf ? intf->entropy_nats() : 0.0);
  const bool separable = own.factors().has_value() && (intf == nullptr || intf->factors().has_value());
  if (separable) {
    const auto& ns = real_nodes(nodes);
    const auto& [own_re, own_im] = *own.factors();
    const Alphabet<double> a_re = as_alphabet(own_re), a_im = as_alphabet(own_im);
    const Alphabet<double> b_re = intf ? as_alphabet(intf->factors()->first) : kRealPoint;
    const Alphabet<double> b_im = intf ? as_alphabet(intf->factors()->second) : kRealPoint;
    const auto kr = superposed_kernel(a_re, b_re, amp_own, amp_int, ns, adaptive);
    const auto ki = superposed_kernel(a_im, b_im, amp_own, amp_int, ns, adaptive);
    r.loss = kr.loss + ki.loss;
    r.loss_own = kr.loss_own + ki.loss_own;
    r.mi_pair = h_labels - r.loss;
    r.mmse_own = kr.mmse_own + ki.mmse_own;
    r.mmse_int = kr.mmse_int + ki.mmse_int;
    r.cross = kr.cross + ki.cross;
  } else {
    const auto& ns = complex_nodes(nodes);
    const auto k =
        superposed_kernel(as_alphabet(own), intf ? as_alphabet(*intf) : kComplexPoint, amp_own, amp_int, ns, false);
    r.loss = k.loss;
    r.loss_own = k.loss_own;
    r.mi_pair = h_labels - r.loss;
    r.mmse_own = k.mmse_own;
    r.mmse_int = k.mmse_int;
    r.cross = k.cross;
  }
  if (!std::isfinite(r.mi_pair) || !std::isfinite(r.mmse_own) || !std::isfinite(r.mmse_int) ||
      !std::isfinite(r.cross)) {
    throw NumericError("quadrature overflow");
  }
  return r;
}

void check_finite(double v) {
  if (!std::isfinite(v)) throw NumericError("quadrature overflow");
}

}  // namespace

void QuadratureSpec::validate() const {
  if (nodes_per_dim < 8) throw std::invalid_argument("quadrature nodes_per_dim must be >= 8");
  if (mc_samples < 1000) throw std::invalid_argument("quadrature mc_samples must be >= 1000");
}

const GaussHermiteRule& gauss_hermite(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    if (n < 1) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
    auto* w = gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, static_cast<size_t>(n), 0.0, 1.0, 0.0, 0.0);
    if (w == nullptr) throw NumericError("failed to build Gauss-Hermite rule");
    const double* x = gsl_integration_fixed_nodes(w);
    const double* wt = gsl_integration_fixed_weights(w);
    auto rule = std::make_unique<GaussHermiteRule>();
    const double norm = 1.0 / std::sqrt(std::numbers::pi);
    for (int i = 0; i < n; ++i) {
      rule->nodes.push_back(x[i]);
      rule->weights.push_back(wt[i] * norm);
    }
    gsl_integration_fixed_free(w);
    slot = std::move(rule);
  }
  return *slot;
}

void LinkState::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(z) || !ok(p_own) || !ok(p_int)) {
    std::ostringstream os;
    os << "invalid link state (z=" << z << ", P_own=" << p_own << ", P_int=" << p_int << ")";
    throw std::invalid_argument(os.str());
  }
}

ConditionalStats conditional_stats(const Input& input, double snr, const QuadratureSpec& quad) {
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw std::invalid_argument("snr must be finite and nonnegative");
  if (input.is_gaussian()) return {std::log1p(snr), 1.0 / (1.0 + snr), kInf};
  const auto& c = input.constellation();
  if (snr == 0.0) return {0.0, 1.0 - std::norm(c.mean()), c.entropy_nats()};
  const auto r = discrete_pair(c, nullptr, std::sqrt(snr), 0.0, quad.nodes_per_dim, quad.method == QuadratureMethod::panel);
  const double h = c.entropy_nats();
  return {std::clamp(r.mi_pair, 0.0, h), std::max(r.mmse_own, 0.0), std::clamp(r.loss, 0.0, h)};
}

SuperposedStats superposed_stats(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  const double sj = link.z * link.p_own;
  const double sm = link.z * link.p_int;
  SuperposedStats st;
  const bool g_own = link.own.is_gaussian();
  const bool g_int = link.interferer.is_gaussian();
  if (g_own && g_int) {
    const double den = 1.0 + sj + sm;
    st.mi_pair = std::log1p(sj + sm);
    st.mi_own = std::log1p(sj / (1.0 + sm));
    st.mmse_own = (1.0 + sm) / den;
    st.mmse_int = (1.0 + sj) / den;
    st.cross = -std::sqrt(sj * sm) / den;
  } else if (!g_own && g_int) {
    // Gaussian interference only raises the noise floor to 1 + s_m.
    const auto c = conditional_stats(link.own, sj / (1.0 + sm), quad);
    st.mi_own = c.mi;
    st.deficit_own = c.deficit;
    st.mi_pair = c.mi + std::log1p(sm);
    st.mmse_own = c.mmse;
    st.mmse_int = 1.0 / (1.0 + sm) + sj * sm / ((1.0 + sm) * (1.0 + sm)) * c.mmse;
    st.cross = -std::sqrt(sj * sm) / (1.0 + sm) * c.mmse;
  } else if (g_own && !g_int) {
    // Chain rule through the discrete interferer seen in noise of variance 1 + s_j.
    const auto c = conditional_stats(link.interferer, sm / (1.0 + sj), quad);
    const auto alone = conditional_stats(link.interferer, sm, quad);
    st.mi_pair = std::log1p(sj) + c.mi;
    st.mi_own = st.mi_pair - alone.mi;
    st.mmse_int = c.mmse;
    st.mmse_own = 1.0 / (1.0 + sj) + sj * sm / ((1.0 + sj) * (1.0 + sj)) * c.mmse;
    st.cross = -std::sqrt(sj * sm) / (1.0 + sj) * c.mmse;
  } else {
    const auto& a = link.own.constellation();
    const auto& b = link.interferer.constellation();
    const auto r = discrete_pair(a, &b, std::sqrt(sj), std::sqrt(sm), quad.nodes_per_dim, quad.method == QuadratureMethod::panel);
    st.mi_pair = r.mi_pair;
    st.deficit_own = std::clamp(r.loss_own, 0.0, a.entropy_nats());
    st.mi_own = a.entropy_nats() - st.deficit_own;
    st.mmse_own = r.mmse_own;
    st.mmse_int = r.mmse_int;
    st.cross = r.cross;
  }
  if (!g_own) st.mi_own = std::clamp(st.mi_own, 0.0, link.own.constellation().entropy_nats());
  st.mi_own = std::max(st.mi_own, 0.0);
  check_finite(st.mi_own);
  check_finite(st.cross);
  return st;
}

double mi_conditional_nats(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  return conditional_stats(link.own, link.z * link.p_own, quad).mi;
}

double mi_conditional(const LinkState& link, const QuadratureSpec& quad) {
  return mi_conditional_nats(link, quad) / kLn2;
}

double mi_with_interference_nats(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  if (link.p_own == 0.0 || link.z == 0.0) return 0.0;
  if (link.p_int == 0.0) return mi_conditional_nats(link, quad);
  return superposed_stats(link, quad).mi_own;
}

double mi_with_interference(const LinkState& link, const QuadratureSpec& quad) {
  return mi_with_interference_nats(link, quad) / kLn2;
}

double mi_deficit_conditional_nats(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  return conditional_stats(link.own, link.z * link.p_own, quad).deficit;
}

double mi_deficit_with_interference_nats(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  if (link.own.is_gaussian()) return kInf;
  if (link.p_own == 0.0 || link.z == 0.0) return link.own.constellation().entropy_nats();
  if (link.p_int == 0.0) return mi_deficit_conditional_nats(link, quad);
  return superposed_stats(link, quad).deficit_own;
}

double mmse_conditional(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  return conditional_stats(link.own, link.z * link.p_own, quad).mmse;
}

double mmse_with_interference(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  if (link.p_int == 0.0 || link.z == 0.0) return mmse_conditional(link, quad);
  return superposed_stats(link, quad).mmse_own;
}

std::complex<double> mmse_estimate(std::complex<double> y, const LinkState& link, EstimateTarget which) {
  link.validate();
  const double sj = link.z * link.p_own;
  const double sm = link.z * link.p_int;
  const bool g_own = link.own.is_gaussian();
  const bool g_int = link.interferer.is_gaussian();

  // Posterior mean of a discrete symbol seen through amp * x + noise of variance nv.
  auto discrete_posterior = [](const Constellation& c, cplx obs, double amp, double nv) {
    const auto sym = c.symbols();
    const auto pr = c.probs();
    std::vector<double> lw(sym.size());
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sym.size(); ++i) {
      lw[i] = pr[i] > 0.0 ? std::log(pr[i]) - std::norm(obs - amp * sym[i]) / nv : -std::numeric_limits<double>::infinity();
      m = std::max(m, lw[i]);
    }
    cplx num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t i = 0; i < sym.size(); ++i) {
      const double w = std::exp(lw[i] - m);
      num += w * sym[i];
      den += w;
    }
    return num / den;
  };

  if (g_own && g_int) {
    const double den = 1.0 + sj + sm;
    return (which == EstimateTarget::own ? std::sqrt(sj) : std::sqrt(sm)) * y / den;
  }
  if (!g_own && g_int) {
    const cplx xj = discrete_posterior(link.own.constellation(), y, std::sqrt(sj), 1.0 + sm);
    if (which == EstimateTarget::own) return xj;
    return std::sqrt(sm) * (y - std::sqrt(sj) * xj) / (1.0 + sm);
  }
  if (g_own && !g_int) {
    const cplx xm = discrete_posterior(link.interferer.constellation(), y, std::sqrt(sm), 1.0 + sj);
    if (which == EstimateTarget::interferer) return xm;
    return std::sqrt(sj) * (y - std::sqrt(sm) * xm) / (1.0 + sj);
  }
  const auto& a = link.own.constellation();
  const auto& b = link.interferer.constellation();
  std::vector<double> lw;
  lw.reserve(a.size() * b.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      const double p = a.probs()[i] * b.probs()[k];
      const cplx u = std::sqrt(sj) * a.symbols()[i] + std::sqrt(sm) * b.symbols()[k];
      lw.push_back(p > 0.0 ? std::log(p) - std::norm(y - u) : -std::numeric_limits<double>::infinity());
      m = std::max(m, lw.back());
    }
  }
  cplx num{0.0, 0.0};
  double den = 0.0;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < b.size(); ++k, ++idx) {
      const double w = std::exp(lw[idx] - m);
      num += w * (which == EstimateTarget::own ? a.symbols()[i] : b.symbols()[k]);
      den += w;
    }
  }
  return num / den;
}

double d_mi_dP_conditional(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  if (link.z == 0.0) return 0.0;
  return link.z * mmse_conditional(link, quad);
}

double d_mi_dP_unconditional(const LinkState& link, const QuadratureSpec& quad) {
  link.validate();
  if (link.z == 0.0) return 0.0;
  if (link.p_int == 0.0) return d_mi_dP_conditional(link, quad);
  if (link.p_own == 0.0) {
    throw SingularDerivative("derivative singular at zero power; use one-sided finite difference");
  }
  const auto st = superposed_stats(link, quad);
  return link.z * (st.mmse_own + std::sqrt(link.p_int / link.p_own) * st.cross);
}

double d_mi_dP_unconditional_or_fd(const LinkState& link, const QuadratureSpec& quad) {
  try {
    return d_mi_dP_unconditional(link, quad);
  } catch (const SingularDerivative&) {
    // Second-order forward difference from P_j = 0.
    const double h = 1e-5 / std::max(link.z, 1.0);
    LinkState l1 = link, l2 = link;
    l1.p_own = h;
    l2.p_own = 2.0 * h;
    const double i0 = 0.0;
    const double i1 = mi_with_interference_nats(l1, quad);
    const double i2 = mi_with_interference_nats(l2, quad);
    return (4.0 * i1 - i2 - 3.0 * i0) / (2.0 * h);
  }
}

}  // namespace bcec
