#include "bcec/fading.hpp"

#include <algorithm>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bcec/parallel.hpp"

namespace bcec {

namespace {

using NcChi2 = boost::math::non_central_chi_squared_distribution<double>;

// X ~ chi'^2(k, lambda) evaluated on the z scale.
struct Law {
  double k;
  double lambda;
  double scale;  // z = scale * X
};

Law law(const RicianSpec& s) { return {2.0, 2.0 * s.K, s.mean_power / (2.0 * (s.K + 1.0))}; }

double chi2_cdf(double k, double lambda, double x, bool upper) {
  if (x <= 0.0) return upper ? 1.0 : 0.0;
  if (lambda == 0.0) {
    const boost::math::chi_squared_distribution<double> d(k);
    return upper ? boost::math::cdf(boost::math::complement(d, x)) : boost::math::cdf(d, x);
  }
  const NcChi2 d(k, lambda);
  return upper ? boost::math::cdf(boost::math::complement(d, x)) : boost::math::cdf(d, x);
}

}  // namespace

RicianSpec RicianSpec::from_dB(double K_dB, double mean_power) {
  RicianSpec s{std::pow(10.0, K_dB / 10.0), mean_power};
  s.validate();
  return s;
}

void RicianSpec::validate() const {
  if (!(K >= 0.0) || !std::isfinite(K)) throw std::invalid_argument("Rician K must be finite and >= 0");
  if (!(mean_power > 0.0) || !std::isfinite(mean_power))
    throw std::invalid_argument("Rician mean_power must be finite and > 0");
}

double RicianSpec::cdf(double z) const {
  const Law l = law(*this);
  return chi2_cdf(l.k, l.lambda, z / l.scale, false);
}

double RicianSpec::ccdf(double z) const {
  const Law l = law(*this);
  return chi2_cdf(l.k, l.lambda, z / l.scale, true);
}

double RicianSpec::pdf(double z) const {
  if (z < 0.0) return 0.0;
  const Law l = law(*this);
  if (l.lambda == 0.0) return boost::math::pdf(boost::math::chi_squared_distribution<double>(l.k), z / l.scale) / l.scale;
  return boost::math::pdf(NcChi2(l.k, l.lambda), z / l.scale) / l.scale;
}

double RicianSpec::second_moment() const {
  return mean_power * mean_power * (K * K + 4.0 * K + 2.0) / ((K + 1.0) * (K + 1.0));
}

double RicianSpec::partial_mean(double x) const {
  // E[X 1{X <= x}] = k F_{k+2}(x) + lambda F_{k+4}(x) for X ~ chi'^2(k, lambda).
  const Law l = law(*this);
  const double t = x / l.scale;
  return l.scale * (l.k * chi2_cdf(l.k + 2.0, l.lambda, t, false) + l.lambda * chi2_cdf(l.k + 4.0, l.lambda, t, false));
}

double RicianSpec::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("quantile probability must be in [0, 1]");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return std::numeric_limits<double>::infinity();
  const double sd = std::sqrt(second_moment() - mean_power * mean_power);
  double lo = 0.0, hi = mean_power + 10.0 * std::max(sd, 1e-3 * mean_power);
  // Compare on whichever tail keeps the probability resolvable.
  const bool upper = u > 0.5;
  auto below = [&](double z) { return upper ? ccdf(z) > 1.0 - u : cdf(z) < u; };
  while (below(hi)) hi *= 2.0;
  for (int it = 0; it < 300 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (below(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double RicianSpec::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const double los = std::sqrt(K / (K + 1.0));
  const double diff = std::sqrt(1.0 / (K + 1.0));
  const double re = los + diff * g(rng);
  const double im = diff * g(rng);
  return mean_power * (re * re + im * im);
}

GridMethod parse_grid_method(const std::string& name) {
  if (name == "quantile") return GridMethod::quantile;
  if (name == "monte_carlo" || name == "mc") return GridMethod::monte_carlo;
  throw std::invalid_argument("unknown grid method: " + name);
}

std::string to_string(GridMethod m) { return m == GridMethod::quantile ? "quantile" : "monte_carlo"; }

void FadingGrid::validate() const {
  if (z1.size() != weight.size() || z2.size() != weight.size()) throw std::logic_error("fading grid size mismatch");
  double mass = 0.0;
  for (double w : weight) {
    if (!(w >= 0.0)) throw std::logic_error("negative fading grid weight");
    mass += w;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw std::logic_error("fading grid weights do not sum to 1");
  for (const auto* axis : {&axis1, &axis2}) {
    for (std::size_t i = 1; i < axis->size(); ++i) {
      if (!((*axis)[i] > (*axis)[i - 1])) throw std::logic_error("fading grid axis not strictly increasing");
    }
  }
}

std::vector<double> quantile_nodes(const RicianSpec& spec, int n) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("quantile grid needs at least one slice");
  std::vector<double> edges(static_cast<std::size_t>(n) + 1);
  edges[0] = 0.0;
  edges[n] = std::numeric_limits<double>::infinity();
  for (int i = 1; i < n; ++i) edges[i] = spec.quantile(static_cast<double>(i) / n);
  // Partial means, switching to the upper-tail form above the median so the
  // last slices do not lose digits.
  const Law l = law(spec);
  auto upper_mean = [&](double x) {
    const double t = x / l.scale;
    return l.scale * (l.k * chi2_cdf(l.k + 2.0, l.lambda, t, true) + l.lambda * chi2_cdf(l.k + 4.0, l.lambda, t, true));
  };
  std::vector<double> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = edges[i], b = edges[i + 1];
    double m;
    if (2 * i + 1 < n)
      m = spec.partial_mean(b) - spec.partial_mean(a);
    else
      m = upper_mean(a) - (std::isinf(b) ? 0.0 : upper_mean(b));
    nodes[i] = std::clamp(m * n, a, std::isinf(b) ? std::numeric_limits<double>::max() : b);
  }
  // At very large K the slices become narrower than the CDF resolution;
  // collapse to the mean and enforce strict ordering.
  for (int i = 1; i < n; ++i) {
    if (!(nodes[i] > nodes[i - 1])) nodes[i] = std::nextafter(nodes[i - 1], std::numeric_limits<double>::infinity());
  }
  return nodes;
}

int slice_index(const RicianSpec& spec, int n, double z) {
  if (z <= 0.0) return 0;
  const double u = spec.cdf(z);
  return std::clamp(static_cast<int>(std::floor(u * n)), 0, n - 1);
}

FadingGrid build_grid(const RicianSpec& spec1, const RicianSpec& spec2, int n_per_dim, GridMethod method,
                      std::uint64_t seed) {
  spec1.validate();
  spec2.validate();
  if (n_per_dim < 8) throw std::invalid_argument("fading grid needs n_per_dim >= 8");
  FadingGrid g;
  g.method = method;
  const std::size_t n = static_cast<std::size_t>(n_per_dim);
  const double w = 1.0 / static_cast<double>(n * n);
  if (method == GridMethod::quantile) {
    g.axis1 = quantile_nodes(spec1, n_per_dim);
    const bool same = spec1.K == spec2.K && spec1.mean_power == spec2.mean_power;
    g.axis2 = same ? g.axis1 : quantile_nodes(spec2, n_per_dim);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        g.z1.push_back(g.axis1[a]);
        g.z2.push_back(g.axis2[b]);
        g.weight.push_back(w);
      }
    }
  } else {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n * n; ++i) {
      g.z1.push_back(spec1.sample(rng));
      g.z2.push_back(spec2.sample(rng));
      g.weight.push_back(w);
    }
  }
  g.validate();
  return g;
}

double expect_values(const FadingGrid& grid, const std::vector<double>& values) {
  if (values.size() != grid.size()) throw std::invalid_argument("value count does not match fading grid");
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << "non-finite value " << values[i] << " at fading node " << i << " (z1=" << grid.z1[i]
         << ", z2=" << grid.z2[i] << ")";
      throw std::domain_error(os.str());
    }
    terms[i] = grid.weight[i] * values[i];
  }
  return pairwise_sum(terms);
}

double expect(const FadingGrid& grid, const std::function<double(double, double)>& f) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.z1[i], grid.z2[i]);
  return expect_values(grid, v);
}

}  // namespace bcec
