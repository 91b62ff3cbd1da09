#include "bcec/constellation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bcec {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Gray-ordered M-PAM levels {-(M-1), ..., M-1}: index b carries the level whose
// Gray code is b.
std::vector<double> gray_pam(int m) {
  std::vector<double> levels(m);
  for (int level = 0; level < m; ++level) {
    const int gray = level ^ (level >> 1);
    levels[gray] = 2.0 * level - (m - 1);
  }
  return levels;
}

}  // namespace

StandardConstellation parse_standard_constellation(std::string_view name) {
  const std::string n = lower(name);
  if (n == "bpsk") return StandardConstellation::BPSK;
  if (n == "qpsk" || n == "4qam" || n == "qam4") return StandardConstellation::QPSK;
  if (n == "qam16" || n == "16qam" || n == "16-qam") return StandardConstellation::QAM16;
  if (n == "qam64" || n == "64qam" || n == "64-qam") return StandardConstellation::QAM64;
  throw std::invalid_argument("unknown constellation: " + std::string(name));
}

Constellation Constellation::standard(StandardConstellation name) {
  Constellation c;
  PamFactor re, im;
  switch (name) {
    case StandardConstellation::BPSK:
      re = {{1.0, -1.0}, {0.5, 0.5}};
      im = {{0.0}, {1.0}};
      c.label_ = "bpsk";
      break;
    case StandardConstellation::QPSK:
    case StandardConstellation::QAM16:
    case StandardConstellation::QAM64: {
      const int m = name == StandardConstellation::QPSK ? 2 : name == StandardConstellation::QAM16 ? 4 : 8;
      // Unit energy: E|s|^2 = 2 * (m^2 - 1) / 3 before scaling.
      const double scale = 1.0 / std::sqrt(2.0 * (m * m - 1) / 3.0);
      auto levels = gray_pam(m);
      for (auto& l : levels) l *= scale;
      re = {levels, std::vector<double>(m, 1.0 / m)};
      im = re;
      c.label_ = name == StandardConstellation::QPSK ? "qpsk" : name == StandardConstellation::QAM16 ? "qam16" : "qam64";
      break;
    }
  }
  for (std::size_t i = 0; i < re.levels.size(); ++i) {
    for (std::size_t q = 0; q < im.levels.size(); ++q) {
      c.symbols_.emplace_back(re.levels[i], im.levels[q]);
      c.probs_.push_back(re.probs[i] * im.probs[q]);
    }
  }
  c.factors_ = std::make_pair(std::move(re), std::move(im));
  c.check_invariants();
  return c;
}

Constellation Constellation::custom(std::vector<cplx> symbols, std::vector<double> probs) {
  if (symbols.size() != probs.size()) throw std::invalid_argument("symbols and probs differ in length");
  if (symbols.size() < 2) throw std::invalid_argument("constellation needs at least two symbols");
  double mass = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("negative or non-finite probability");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "probabilities sum to " << mass << ", not 1";
    throw std::invalid_argument(os.str());
  }
  for (auto& p : probs) p /= mass;
  for (const auto& s : symbols) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw std::invalid_argument("non-finite symbol");
  }
  double energy = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) energy += probs[i] * std::norm(symbols[i]);
  if (!(energy > 0.0)) throw std::invalid_argument("constellation has zero energy");
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& s : symbols) s *= scale;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    for (std::size_t k = i + 1; k < symbols.size(); ++k) {
      if (std::abs(symbols[i] - symbols[k]) < 1e-12) throw std::invalid_argument("duplicate symbols");
    }
  }

  Constellation c;
  c.symbols_ = std::move(symbols);
  c.probs_ = std::move(probs);
  c.scale_ = scale;
  std::ostringstream os;
  os.precision(17);
  os << "custom(scale=" << scale << ")";
  c.label_ = os.str();
  c.detect_factors();
  c.check_invariants();
  return c;
}

void Constellation::detect_factors() {
  constexpr double tol = 1e-12;
  auto unique_sorted = [&](auto proj) {
    std::vector<double> v;
    for (const auto& s : symbols_) v.push_back(proj(s));
    std::sort(v.begin(), v.end());
    std::vector<double> u;
    for (double x : v) {
      if (u.empty() || std::abs(x - u.back()) > tol) u.push_back(x);
    }
    return u;
  };
  auto index_of = [&](const std::vector<double>& levels, double x) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (std::abs(levels[i] - x) <= tol) return i;
    }
    return levels.size();
  };
  const auto re = unique_sorted([](const cplx& s) { return s.real(); });
  const auto im = unique_sorted([](const cplx& s) { return s.imag(); });
  if (re.size() * im.size() != symbols_.size()) return;
  std::vector<double> p_re(re.size(), 0.0), p_im(im.size(), 0.0);
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    p_re[index_of(re, symbols_[i].real())] += probs_[i];
    p_im[index_of(im, symbols_[i].imag())] += probs_[i];
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const double expected = p_re[index_of(re, symbols_[i].real())] * p_im[index_of(im, symbols_[i].imag())];
    if (std::abs(expected - probs_[i]) > tol) return;
  }
  factors_ = std::make_pair(PamFactor{re, p_re}, PamFactor{im, p_im});
}

void Constellation::check_invariants() const {
  const double mass = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(mass - 1.0) > 1e-9 || std::abs(energy() - 1.0) > 1e-9) {
    throw std::logic_error("constellation normalization invariant violated");
  }
}

double Constellation::entropy_nats() const {
  double h = 0.0;
  for (double p : probs_) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

cplx Constellation::mean() const {
  cplx m{0.0, 0.0};
  for (std::size_t i = 0; i < symbols_.size(); ++i) m += probs_[i] * symbols_[i];
  return m;
}

double Constellation::energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i < symbols_.size(); ++i) e += probs_[i] * std::norm(symbols_[i]);
  return e;
}

const Constellation& Input::constellation() const {
  if (is_gaussian()) throw std::logic_error("Gaussian input has no constellation");
  return *std::get<std::shared_ptr<const Constellation>>(kind_);
}

std::string Input::label() const { return is_gaussian() ? "gaussian" : constellation().label(); }

cplx Input::mean() const { return is_gaussian() ? cplx{0.0, 0.0} : constellation().mean(); }

double Input::max_bits() const {
  if (is_gaussian()) return std::numeric_limits<double>::infinity();
  return std::log2(static_cast<double>(constellation().size()));
}

Input parse_input(std::string_view name) {
  const std::string n = lower(name);
  if (n == "gaussian" || n == "gauss") return Input::gaussian();
  return Input::discrete(Constellation::standard(parse_standard_constellation(name)));
}

}  // namespace bcec
