#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bcec {

using cplx = std::complex<double>;

enum class StandardConstellation { BPSK, QPSK, QAM16, QAM64 };

/// Parses "bpsk", "qpsk", "qam16"/"16qam", "qam64"/"64qam" (case-insensitive).
/// Throws std::invalid_argument("unknown constellation: ...") otherwise.
StandardConstellation parse_standard_constellation(std::string_view name);

/// One real dimension of a separable alphabet: levels with their marginal
/// probabilities.
struct PamFactor {
  std::vector<double> levels;
  std::vector<double> probs;
};

/// Finite complex input alphabet, unit average energy, probabilities summing
/// to one. Immutable after construction.
///
/// When the alphabet is the Cartesian product of a real and an imaginary PAM
/// with independent priors (BPSK, QPSK and square QAM are), the factorization
/// is kept so that information measures can be integrated one dimension at a
/// time.
class Constellation {
 public:
  static Constellation standard(StandardConstellation name);

  /// Rescales symbols to unit energy and validates priors. Throws
  /// std::invalid_argument on size mismatch, fewer than two symbols, negative
  /// probabilities, probability mass off by more than 1e-9 or duplicates.
  static Constellation custom(std::vector<cplx> symbols, std::vector<double> probs);

  std::span<const cplx> symbols() const { return symbols_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return symbols_.size(); }
  const std::string& label() const { return label_; }

  /// Scale applied to the raw symbols to reach unit energy (1 for standard ones).
  double applied_scale() const { return scale_; }

  double entropy_nats() const;
  cplx mean() const;
  double energy() const;

  /// Real and imaginary factors, present iff the alphabet is separable.
  const std::optional<std::pair<PamFactor, PamFactor>>& factors() const { return factors_; }

 private:
  Constellation() = default;
  void detect_factors();
  void check_invariants() const;

  std::vector<cplx> symbols_;
  std::vector<double> probs_;
  std::string label_;
  double scale_ = 1.0;
  std::optional<std::pair<PamFactor, PamFactor>> factors_;
};

inline Constellation standard_constellation(StandardConstellation name) {
  return Constellation::standard(name);
}

inline Constellation custom_constellation(std::vector<cplx> symbols, std::vector<double> probs) {
  return Constellation::custom(std::move(symbols), std::move(probs));
}

/// Zero-mean, unit-variance circularly symmetric Gaussian input.
struct GaussianInput {};

/// Either a discrete constellation or the Gaussian-input marker.
class Input {
 public:
  static Input gaussian() { return Input(GaussianInput{}); }
  static Input discrete(Constellation c) {
    return Input(std::make_shared<const Constellation>(std::move(c)));
  }

  bool is_gaussian() const { return std::holds_alternative<GaussianInput>(kind_); }
  const Constellation& constellation() const;
  std::string label() const;
  cplx mean() const;

  /// log2 of the alphabet size, +inf for Gaussian input.
  double max_bits() const;

 private:
  explicit Input(std::variant<GaussianInput, std::shared_ptr<const Constellation>> k)
      : kind_(std::move(k)) {}
  std::variant<GaussianInput, std::shared_ptr<const Constellation>> kind_;
};

/// "gaussian" or any standard constellation name.
Input parse_input(std::string_view name);

}  // namespace bcec
