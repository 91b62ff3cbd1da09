#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bcec/experiment.hpp"
#include "bcec/parallel.hpp"

using namespace bcec;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string output;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "Config file (key = value, [section] prefixes); a CSV written by bcec "
                                                 "reproduces its run");
  sub->add_option("-s,--set", c.sets, "Override one config key, e.g. --set qos.theta=0.01 (repeatable)");
  sub->add_option("-d,--out-dir", c.out_dir, "Output directory (default: $BCEC_OUTPUT_DIR or .)");
  sub->add_option("-o,--output", c.output, "Output file name inside the output directory, or - for stdout");
  sub->add_option("-t,--threads", c.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg.apply(read_key_values(c.config_path));
  std::string text;
  for (const auto& s : c.sets) text += s + "\n";
  cfg.apply(parse_key_values(text));
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  cfg.region.solver.threads = c.threads;
  set_default_threads(c.threads);
  return cfg;
}

std::string join_path(const ExperimentConfig& cfg, const std::string& name) {
  const std::filesystem::path dir = output_directory(cfg);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return (dir / name).string();
}

// Writes to a buffer first so a failed solve leaves no partial file.
template <class F>
auto emit(const ExperimentConfig& cfg, const std::string& name, F&& body) {
  std::ostringstream buf;
  auto result = body(buf);
  if (name == "-") {
    std::cout << buf.str();
  } else {
    const auto path = join_path(cfg, name);
    std::ofstream f(path, std::ios::binary);
    if (!(f << buf.str()) || !f.flush()) throw IoError("cannot write " + path);
    std::cerr << "wrote " << path << "\n";
  }
  return result;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> v;
  if (s.empty()) return v;
  const auto kv = parse_key_values("x = " + s);
  ExperimentConfig probe;
  probe.apply({{"region.lambdas", kv.at("x")}});
  return probe.lambdas;
}

int failed_share_exit(const RegionResult& r) {
  std::size_t failed = 0;
  for (const auto& p : r.points) failed += p.status == "failed";
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return 5 * failed > r.points.size() ? kExitSolver : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective-capacity regions of two-user fading broadcast channels with arbitrary inputs"};
  app.set_version_flag("--version", std::string("bcec ") + BCEC_VERSION);
  app.require_subcommand(1);

  Common common;
  std::string input, interferer, snr, snr_db, preset, thetas, inputs, lambdas;
  double p_int = -1.0, lambda1 = -1.0;

  auto* mi = app.add_subcommand("mi-curve", "Mutual information of one input versus SNR (bits)");
  auto* mmse = app.add_subcommand("mmse-curve", "MMSE of one input versus SNR");
  for (auto* sub : {mi, mmse}) {
    add_common(sub, common);
    sub->add_option("--input", input, "Input: bpsk, qpsk, 16qam, 64qam or gaussian");
    sub->add_option("--interferer", interferer, "Superposed interfering input");
    sub->add_option("--p-int", p_int, "Interfering symbol power (linear)");
    sub->add_option("--snr", snr, "Comma-separated increasing SNR grid (linear)");
    sub->add_option("--snr-db", snr_db, "Comma-separated increasing SNR grid (dB)");
  }

  auto* region = app.add_subcommand("region", "Effective-capacity region frontier by weighted-sum sweep");
  add_common(region, common);
  region->add_option("--preset", preset, "fig2, fig3 or fig4: write one frontier file per preset run");
  region->add_option("--theta", thetas, "Comma-separated QoS exponents (list only with --preset fig4)");
  region->add_option("--inputs", inputs, "Comma-separated inputs for preset runs");
  region->add_option("--lambdas", lambdas, "Comma-separated increasing weights lambda1 in [0, 1]");

  auto* policy = app.add_subcommand("policy", "Optimal power policy at one weight");
  auto* boundary = app.add_subcommand("boundary", "Decoding-order boundary z1*(z2) at one weight");
  auto* queue = app.add_subcommand("queue-validate", "Queue simulation against the effective capacities");
  for (auto* sub : {policy, boundary, queue}) {
    add_common(sub, common);
    sub->add_option("--lambda", lambda1, "Weight lambda1 of user 1");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    ExperimentConfig cfg = load(common);
    KeyValues kv;
    if (!input.empty()) kv["curve.input"] = input;
    if (!interferer.empty()) kv["curve.interferer"] = interferer;
    if (p_int >= 0.0) kv["curve.p_int"] = std::to_string(p_int);
    if (!snr.empty()) kv["curve.snr"] = snr;
    if (!snr_db.empty()) kv["curve.snr_dB"] = snr_db;
    if (!lambdas.empty()) kv["region.lambdas"] = lambdas;
    if (region->parsed() && lambdas.empty() && region->count("--lambdas") > 0)
      throw ConfigError("empty lambda sweep");
    cfg.apply(kv);
    if (lambda1 >= 0.0) {
      std::ostringstream os;
      os.precision(17);
      os << lambda1;
      cfg.apply({{"region.lambda1", os.str()}});
    }
    auto name = [&](const std::string& dflt) { return common.output.empty() ? dflt : common.output; };

    if (mi->parsed()) {
      emit(cfg, name("mi_curve.csv"), [&](std::ostream& os) { return write_mi_curve(os, cfg), 0; });
    } else if (mmse->parsed()) {
      emit(cfg, name("mmse_curve.csv"), [&](std::ostream& os) { return write_mmse_curve(os, cfg), 0; });
    } else if (region->parsed()) {
      if (preset.empty()) {
        if (!thetas.empty()) {
          const auto t = parse_doubles(thetas);
          if (t.size() != 1) throw ConfigError("a theta list is only accepted by preset fig4");
          std::ostringstream os;
          os.precision(17);
          os << t.front();
          cfg.apply({{"qos.theta", os.str()}});
        }
        const auto r = emit(cfg, name("region.csv"), [&](std::ostream& os) { return write_region(os, cfg); });
        return failed_share_exit(r);
      }
      std::vector<std::string> ins;
      {
        std::stringstream ss(inputs);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) ins.push_back(item);
        }
      }
      const auto runs = preset_runs(preset, cfg, parse_doubles(thetas), ins);
      for (const auto& r : runs) r.config.validate();
      int code = 0;
      for (const auto& r : runs) {
        const auto res = emit(r.config, r.name + ".csv", [&](std::ostream& os) { return write_region(os, r.config); });
        code = std::max(code, failed_share_exit(res));
      }
      return code;
    } else if (policy->parsed()) {
      emit(cfg, name("policy.csv"), [&](std::ostream& os) { return write_policy(os, cfg), 0; });
    } else if (boundary->parsed()) {
      emit(cfg, name("boundary.csv"), [&](std::ostream& os) { return write_boundary(os, cfg), 0; });
    } else if (queue->parsed()) {
      std::ostringstream tail;
      emit(cfg, name("queue_validate.csv"), [&](std::ostream& os) { return write_queue_validation(os, &tail, cfg), 0; });
      const auto tail_name = common.output.empty() || common.output == "-" ? std::string("queue_tail.csv")
                                                                           : "tail_" + common.output;
      emit(cfg, tail_name, [&](std::ostream& os) { return os << tail.str(), 0; });
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
}
