#include "bcec/queue_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bcec/parallel.hpp"

namespace bcec {

void QueueTrace::validate() const {
  if (queue_samples.size() != frames) throw std::logic_error("queue trace length mismatch");
  for (double q : queue_samples) {
    if (!(q >= 0.0)) throw std::logic_error("negative queue length");
  }
  if (overflow_counts.size() != thresholds.size()) throw std::logic_error("overflow counts size mismatch");
  for (std::size_t i = 1; i < overflow_counts.size(); ++i) {
    if (thresholds[i] > thresholds[i - 1] && overflow_counts[i] > overflow_counts[i - 1])
      throw std::logic_error("overflow counts increase with the threshold");
  }
}

namespace {

// Cells of each grid node: one, or two halves of a node on the boundary.
std::vector<std::vector<std::size_t>> cells_by_node(const PowerPolicy& policy, std::size_t nodes) {
  std::vector<std::vector<std::size_t>> by(nodes);
  for (std::size_t c = 0; c < policy.cells.size(); ++c) {
    if (policy.cells[c].node >= nodes) throw std::invalid_argument("policy does not belong to this grid");
    by[policy.cells[c].node].push_back(c);
  }
  for (const auto& v : by) {
    if (v.empty()) throw std::invalid_argument("policy does not cover every grid node");
  }
  return by;
}

std::vector<double> slice_edges(const RicianSpec& spec, std::size_t n) {
  std::vector<double> e(n - 1);
  for (std::size_t k = 1; k < n; ++k) e[k - 1] = spec.quantile(static_cast<double>(k) / static_cast<double>(n));
  return e;
}

std::size_t slice_of(const std::vector<double>& edges, double z) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), z) - edges.begin());
}

void finish_drift(QueueTrace& t, const std::vector<double>& increments) {
  const std::size_t n = t.queue_samples.size();
  const std::size_t mid = n / 2, m = n - mid;
  double mean = 0.0;
  for (std::size_t i = mid; i < n; ++i) mean += increments[i];
  mean /= static_cast<double>(m);
  double var = 0.0;
  for (std::size_t i = mid; i < n; ++i) var += (increments[i] - mean) * (increments[i] - mean);
  var /= static_cast<double>(m);
  const double rise = t.queue_samples[n - 1] - t.queue_samples[mid - 1];
  t.drift = rise / static_cast<double>(m);
  t.stable = !(rise > 0.0 && rise > 3.0 * std::sqrt(var * static_cast<double>(m)));
}

}  // namespace

std::pair<QueueTrace, QueueTrace> simulate(const PowerPolicy& policy, const FadingGrid& grid,
                                           const QueueSimConfig& cfg) {
  cfg.qos.validate();
  cfg.fading1.validate();
  cfg.fading2.validate();
  if (!(cfg.arrival1 >= 0.0) || !(cfg.arrival2 >= 0.0) || !std::isfinite(cfg.arrival1) || !std::isfinite(cfg.arrival2))
    throw std::invalid_argument("arrival rates must be finite and >= 0");
  if (cfg.n_frames < 10000) throw std::invalid_argument("queue simulation needs n_frames >= 10^4");
  if (policy.r1.size() != policy.cells.size() || policy.r2.size() != policy.cells.size())
    throw std::invalid_argument("policy has no per-cell rates");
  const auto by_node = cells_by_node(policy, grid.size());
  const double tb = cfg.qos.T * cfg.qos.B;
  const std::size_t n = cfg.n_frames;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<double> e1, e2;
  std::discrete_distribution<std::size_t> pick_node;
  const bool quantile = grid.method == GridMethod::quantile;
  if (quantile) {
    e1 = slice_edges(cfg.fading1, grid.axis1.size());
    e2 = slice_edges(cfg.fading2, grid.axis2.size());
  } else {
    pick_node = std::discrete_distribution<std::size_t>(grid.weight.begin(), grid.weight.end());
  }

  QueueTrace t1, t2;
  t1.frames = t2.frames = n;
  t1.arrival_rate = cfg.arrival1 * tb;
  t2.arrival_rate = cfg.arrival2 * tb;
  t1.queue_samples.resize(n);
  t2.queue_samples.resize(n);
  std::vector<double> x1(n), x2(n);
  double q1 = 0.0, q2 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    std::size_t node;
    if (quantile) {
      const double z1 = cfg.fading1.sample(rng);
      const double z2 = cfg.fading2.sample(rng);
      node = slice_of(e1, z1) * grid.axis2.size() + slice_of(e2, z2);
    } else {
      node = pick_node(rng);
    }
    const auto& cs = by_node[node];
    std::size_t c = cs[0];
    if (cs.size() > 1) {
      double u = coin(rng) * grid.weight[node];
      for (std::size_t k : cs) {
        c = k;
        u -= policy.cells[k].weight;
        if (u < 0.0) break;
      }
    }
    const double b1 = policy.r1[c] * tb, b2 = policy.r2[c] * tb;
    s1 += b1;
    s2 += b2;
    x1[f] = t1.arrival_rate - b1;
    x2[f] = t2.arrival_rate - b2;
    q1 = std::max(0.0, q1 + x1[f]);
    q2 = std::max(0.0, q2 + x2[f]);
    t1.queue_samples[f] = q1;
    t2.queue_samples[f] = q2;
  }
  t1.service_mean = s1 / static_cast<double>(n);
  t2.service_mean = s2 / static_cast<double>(n);
  finish_drift(t1, x1);
  finish_drift(t2, x2);
  return {std::move(t1), std::move(t2)};
}

std::vector<std::uint64_t> overflow_counts(const std::vector<double>& samples, const std::vector<double>& thresholds) {
  std::vector<double> s(samples);
  std::sort(s.begin(), s.end());
  std::vector<std::uint64_t> c(thresholds.size());
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    c[i] = static_cast<std::uint64_t>(s.end() - std::lower_bound(s.begin(), s.end(), thresholds[i]));
  return c;
}

std::vector<double> default_thresholds(const std::vector<double>& samples) {
  constexpr int kPoints = 25;
  const std::size_t kTail = std::max<std::size_t>(100, samples.size() / 100);
  if (samples.size() <= kTail) return {};
  std::vector<double> s(samples);
  const auto k = s.end() - kTail;
  std::nth_element(s.begin(), k, s.end());
  const double hi = *k;
  if (!(hi > 0.0)) return {};
  std::vector<double> t(kPoints);
  for (int i = 0; i < kPoints; ++i) t[static_cast<std::size_t>(i)] = hi * (0.25 + 0.75 * i / (kPoints - 1));
  return t;
}

ThetaEstimate estimate_theta(QueueTrace& trace, const std::vector<double>& thresholds) {
  constexpr std::uint64_t kMinCount = 50;
  trace.thresholds = thresholds.empty() ? default_thresholds(trace.queue_samples) : thresholds;
  trace.overflow_counts = overflow_counts(trace.queue_samples, trace.thresholds);
  std::vector<double> q, y;
  const double frames = static_cast<double>(trace.queue_samples.size());
  for (std::size_t i = 0; i < trace.thresholds.size(); ++i) {
    if (trace.overflow_counts[i] >= kMinCount) {
      q.push_back(trace.thresholds[i]);
      y.push_back(std::log(static_cast<double>(trace.overflow_counts[i]) / frames));
    }
  }
  if (q.size() < 3) throw NumericError("insufficient tail mass");
  const double k = static_cast<double>(q.size());
  double mq = 0.0, my = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    mq += q[i];
    my += y[i];
  }
  mq /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    sxx += (q[i] - mq) * (q[i] - mq);
    sxy += (q[i] - mq) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericError("insufficient tail mass");
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double e = y[i] - my - slope * (q[i] - mq);
    ssr += e * e;
  }
  ThetaEstimate est;
  est.theta = -slope;
  est.ci_halfwidth = 1.96 * std::sqrt(ssr / (k - 2.0) / sxx);
  est.thresholds_used = static_cast<int>(q.size());
  return est;
}

std::vector<QueueValidationRow> validate_queue(const PowerPolicy& policy, const FadingGrid& grid,
                                               const QueueSimConfig& base, double factor,
                                               const std::vector<std::uint64_t>& seeds, int threads) {
  if (!(factor >= 0.0)) throw std::invalid_argument("arrival factor must be >= 0");
  std::vector<QueueValidationRow> rows(2 * seeds.size());
  parallel_for(
      seeds.size(),
      [&](std::size_t s) {
        QueueSimConfig cfg = base;
        cfg.arrival1 = factor * policy.a1;
        cfg.arrival2 = factor * policy.a2;
        cfg.seed = seeds[s];
        auto [t1, t2] = simulate(policy, grid, cfg);
        QueueTrace* tr[2] = {&t1, &t2};
        for (int u = 0; u < 2; ++u) {
          auto& row = rows[2 * s + static_cast<std::size_t>(u)];
          row.user = u + 1;
          row.arrival_rate = u == 0 ? cfg.arrival1 : cfg.arrival2;
          row.theta_target = u == 0 ? cfg.qos.theta1 : cfg.qos.theta2;
          row.stable = tr[u]->stable;
          row.seed = seeds[s];
          row.frames = tr[u]->frames;
          try {
            const auto e = estimate_theta(*tr[u]);
            row.theta_hat = e.theta;
            row.ci_halfwidth = e.ci_halfwidth;
          } catch (const NumericError&) {
            row.theta_hat = std::numeric_limits<double>::quiet_NaN();
            row.ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
          }
          row.thresholds = tr[u]->thresholds;
          row.overflow_counts = tr[u]->overflow_counts;
        }
      },
      threads);
  return rows;
}

}  // namespace bcec
