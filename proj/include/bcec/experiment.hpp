#pragma once

// Experiment configuration, presets and CSV emission shared by the command
// line tool, the acceptance suite and the Python module.
//
// Config grammar: one "key = value" per line, '#' or ';' starts a comment,
// "[section]" prefixes the following keys with "section.". Lists are comma
// separated. Keys ending in "_dB" are converted to linear scale at parse.

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcec/effcap.hpp"
#include "bcec/queue_sim.hpp"

namespace bcec {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered key-value pairs after section expansion.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);

/// Reads a config file. Lines starting with "# config: " are used instead if
/// present, so a CSV written by this tool reproduces its own run.
KeyValues read_key_values(const std::string& path);

struct CurveConfig {
  std::string input = "bpsk";
  std::string interferer = "gaussian";
  double p_int = 0.0;  // interfering symbol power at unit gain
  std::vector<double> snr = {0.0, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
};

struct QueueConfig {
  std::uint64_t n_frames = 1000000;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<double> factors = {0.95, 1.05};
};

struct ExperimentConfig {
  RegionConfig region;
  std::string input1 = "bpsk";
  std::string input2 = "bpsk";
  std::vector<double> lambdas = default_lambda_sweep(11);
  double lambda1 = 0.5;  // single operating point for policy, boundary and queue runs
  CurveConfig curve;
  QueueConfig queue;
  std::string output_dir;  // empty: BCEC_OUTPUT_DIR or the working directory

  ExperimentConfig();
  /// Applies overrides on top of the current values. Throws ConfigError on
  /// unknown keys or malformed values.
  void apply(const KeyValues& kv);
  /// Runs every module validator.
  void validate() const;
  /// Canonical "key = value" lines in linear units, exact to the last bit.
  std::string canonical() const;
  /// FNV-1a 64-bit hash of canonical(), hex.
  std::string hash() const;
};

/// Output directory: the config's, else $BCEC_OUTPUT_DIR, else ".".
std::string output_directory(const ExperimentConfig& cfg);

/// Comment block written at the top of every CSV.
void write_header(std::ostream& os, const std::string& command, const ExperimentConfig& cfg);

void write_mi_curve(std::ostream& os, const ExperimentConfig& cfg);
void write_mmse_curve(std::ostream& os, const ExperimentConfig& cfg);

/// One frontier file. Returns the result for exit-code decisions.
RegionResult write_region(std::ostream& os, const ExperimentConfig& cfg);

void write_policy(std::ostream& os, const ExperimentConfig& cfg);
void write_boundary(std::ostream& os, const ExperimentConfig& cfg);

/// Rows in the order (factor, seed, user); the tail file lists the overflow
/// counts behind each estimate.
void write_queue_validation(std::ostream& os, std::ostream* tail, const ExperimentConfig& cfg);

struct PresetRun {
  std::string name;  // output file stem
  ExperimentConfig config;
};

/// Region runs of a named preset: fig2 (BPSK, K in {-6.88, 4.97, 8.61} dB x
/// P_bar in {0, -5} dB), fig3 (BPSK, 16-QAM, Gaussian at K = -6.88 dB x P_bar in
/// {5, 0, -5} dB), fig4 (P_bar = 5 dB, K = -6.88 dB, one run per theta and
/// input). Empty theta or input lists keep the preset defaults.
std::vector<PresetRun> preset_runs(const std::string& preset, const ExperimentConfig& base,
                                   const std::vector<double>& thetas = {}, const std::vector<std::string>& inputs = {});

}  // namespace bcec
