#include "bcec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bcec/parallel.hpp"

namespace bcec {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string out(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: " + v);
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a nonnegative integer: " + v);
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config key " + key + ": not a boolean: " + v);
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> r;
  for (const auto& s : split_list(v)) r.push_back(to_double(key, s));
  return r;
}

double from_dB(double x) { return std::pow(10.0, x / 10.0); }

QuadratureMethod parse_quadrature_method(const std::string& s) {
  if (s == "gauss_hermite") return QuadratureMethod::gauss_hermite;
  if (s == "panel") return QuadratureMethod::panel;
  throw ConfigError("unknown quadrature method: " + s);
}

std::string to_string(QuadratureMethod m) { return m == QuadratureMethod::panel ? "panel" : "gauss_hermite"; }

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += num(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

Input input_for(const std::string& key, const std::string& name) {
  try {
    return parse_input(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key " + key + ": " + e.what());
  }
}

FadingGrid grid_of(const ExperimentConfig& cfg) {
  const auto& r = cfg.region;
  return build_grid(r.fading1, r.fading2, r.n_per_dim, r.grid_method, r.seed);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto c = line.find_first_of("#;");
    line = trim(c == std::string::npos ? line : line.substr(0, c));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string tag = "# config: ";
  std::stringstream ss(text);
  std::string line, embedded;
  while (std::getline(ss, line)) {
    if (line.rfind(tag, 0) == 0) embedded += line.substr(tag.size()) + "\n";
  }
  return parse_key_values(embedded.empty() ? text : embedded);
}

ExperimentConfig::ExperimentConfig() {
  region.n_per_dim = 16;
  region.inputs = {parse_input(input1), parse_input(input2)};
}

void ExperimentConfig::apply(const KeyValues& kv) {
  auto& r = region;
  for (const auto& [raw_key, v] : kv) {
    std::string key = raw_key;
    bool dB = false;
    if (key.size() > 3 && key.compare(key.size() - 3, 3, "_dB") == 0) {
      key.resize(key.size() - 3);
      dB = true;
    }
    auto real = [&] {
      const double x = to_double(raw_key, v);
      return dB ? from_dB(x) : x;
    };
    auto no_dB = [&] {
      if (dB) throw ConfigError("config key " + raw_key + " has no dB form");
    };
    if (key == "fading.K") {
      r.fading1.K = r.fading2.K = real();
    } else if (key == "fading.K1") {
      r.fading1.K = real();
    } else if (key == "fading.K2") {
      r.fading2.K = real();
    } else if (key == "fading.mean_power") {
      r.fading1.mean_power = r.fading2.mean_power = real();
    } else if (key == "fading.mean_power1") {
      r.fading1.mean_power = real();
    } else if (key == "fading.mean_power2") {
      r.fading2.mean_power = real();
    } else if (key == "power.p_bar") {
      r.p_bar = real();
    } else if (key == "curve.p_int") {
      curve.p_int = real();
    } else if (key == "curve.snr") {
      curve.snr = to_doubles(raw_key, v);
      if (dB)
        for (auto& x : curve.snr) x = from_dB(x);
    } else {
      no_dB();
      if (key == "inputs.user1") {
        r.inputs.x1 = input_for(key, v);
        input1 = v;
      } else if (key == "inputs.user2") {
        r.inputs.x2 = input_for(key, v);
        input2 = v;
      } else if (key == "inputs.both") {
        r.inputs.x1 = r.inputs.x2 = input_for(key, v);
        input1 = input2 = v;
      } else if (key == "qos.theta") {
        r.qos.theta1 = r.qos.theta2 = to_double(key, v);
      } else if (key == "qos.theta1") {
        r.qos.theta1 = to_double(key, v);
      } else if (key == "qos.theta2") {
        r.qos.theta2 = to_double(key, v);
      } else if (key == "qos.T") {
        r.qos.T = to_double(key, v);
      } else if (key == "qos.B") {
        r.qos.B = to_double(key, v);
      } else if (key == "grid.n") {
        r.n_per_dim = to_int(key, v);
      } else if (key == "grid.method") {
        try {
          r.grid_method = parse_grid_method(v);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      } else if (key == "grid.seed") {
        r.seed = to_u64(key, v);
      } else if (key == "region.rule") {
        try {
          r.rule = parse_decoding_rule(v);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      } else if (key == "region.lambdas") {
        lambdas = to_doubles(key, v);
      } else if (key == "region.n_lambda") {
        const int n = to_int(key, v);
        if (n < 2) throw ConfigError("region.n_lambda must be >= 2");
        lambdas = default_lambda_sweep(n);
      } else if (key == "region.lambda1") {
        lambda1 = to_double(key, v);
      } else if (key == "boundary.z_max") {
        r.boundary.z_max = to_double(key, v);
      } else if (key == "boundary.root_tol") {
        r.boundary.root_tol = to_double(key, v);
      } else if (key == "boundary.scan_points") {
        r.boundary.scan_points = to_int(key, v);
      } else if (key == "coupling.max_iter") {
        r.coupling_max_iter = to_int(key, v);
      } else if (key == "coupling.tol") {
        r.coupling_tol = to_double(key, v);
      } else if (key == "quad.method") {
        r.quad.method = parse_quadrature_method(v);
      } else if (key == "quad.nodes") {
        r.quad.nodes_per_dim = to_int(key, v);
      } else if (key == "quad.mc_samples") {
        r.quad.mc_samples = static_cast<std::int64_t>(to_u64(key, v));
      } else if (key == "quad.seed") {
        r.quad.seed = to_u64(key, v);
      } else if (key == "solver.eps_inner") {
        r.solver.eps_inner = to_double(key, v);
      } else if (key == "solver.psi_tol") {
        r.solver.psi_tol = to_double(key, v);
      } else if (key == "solver.power_tol") {
        r.solver.power_tol = to_double(key, v);
      } else if (key == "solver.max_inner") {
        r.solver.max_inner = to_int(key, v);
      } else if (key == "solver.max_outer") {
        r.solver.max_outer = to_int(key, v);
      } else if (key == "solver.max_epsilon_evals") {
        r.solver.max_epsilon_evals = to_int(key, v);
      } else if (key == "solver.eps_lo") {
        r.solver.eps_lo = to_double(key, v);
      } else if (key == "solver.eps_hi") {
        r.solver.eps_hi = to_double(key, v);
      } else if (key == "solver.check_monotone") {
        r.solver.check_monotone = to_bool(key, v);
      } else if (key == "queue.n_frames") {
        queue.n_frames = to_u64(key, v);
      } else if (key == "queue.seeds") {
        queue.seeds.clear();
        for (const auto& s : split_list(v)) queue.seeds.push_back(to_u64(key, s));
      } else if (key == "queue.factors") {
        queue.factors = to_doubles(key, v);
      } else if (key == "curve.input") {
        input_for(key, v);
        curve.input = v;
      } else if (key == "curve.interferer") {
        input_for(key, v);
        curve.interferer = v;
      } else if (key == "output.dir") {
        output_dir = v;
      } else {
        throw ConfigError("unknown config key: " + raw_key);
      }
    }
  }
}

void ExperimentConfig::validate() const {
  try {
    region.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (lambdas.empty()) throw ConfigError("empty lambda sweep");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0 && lambdas[i] <= 1.0)) throw ConfigError("lambda1 values must lie in [0, 1]");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw ConfigError("lambda1 values must be increasing");
  }
  if (!(lambda1 >= 0.0 && lambda1 <= 1.0)) throw ConfigError("region.lambda1 must lie in [0, 1]");
  if (curve.snr.empty()) throw ConfigError("empty snr grid");
  for (std::size_t i = 0; i < curve.snr.size(); ++i) {
    if (!(curve.snr[i] >= 0.0) || !std::isfinite(curve.snr[i])) throw ConfigError("snr values must be finite and >= 0");
    if (i > 0 && !(curve.snr[i] > curve.snr[i - 1])) throw ConfigError("snr values must be increasing");
  }
  if (!(curve.p_int >= 0.0) || !std::isfinite(curve.p_int)) throw ConfigError("curve.p_int must be finite and >= 0");
  if (queue.n_frames < 10000) throw ConfigError("queue.n_frames must be >= 10000");
  if (queue.seeds.empty()) throw ConfigError("queue.seeds is empty");
  if (queue.factors.empty()) throw ConfigError("queue.factors is empty");
  for (double f : queue.factors) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw ConfigError("queue factors must be finite and >= 0");
  }
}

std::string ExperimentConfig::canonical() const {
  const auto& r = region;
  std::ostringstream os;
  os << "inputs.user1 = " << input1 << "\n"
     << "inputs.user2 = " << input2 << "\n"
     << "fading.K1 = " << num(r.fading1.K) << "\n"
     << "fading.K2 = " << num(r.fading2.K) << "\n"
     << "fading.mean_power1 = " << num(r.fading1.mean_power) << "\n"
     << "fading.mean_power2 = " << num(r.fading2.mean_power) << "\n"
     << "power.p_bar = " << num(r.p_bar) << "\n"
     << "qos.theta1 = " << num(r.qos.theta1) << "\n"
     << "qos.theta2 = " << num(r.qos.theta2) << "\n"
     << "qos.T = " << num(r.qos.T) << "\n"
     << "qos.B = " << num(r.qos.B) << "\n"
     << "grid.n = " << r.n_per_dim << "\n"
     << "grid.method = " << to_string(r.grid_method) << "\n"
     << "grid.seed = " << r.seed << "\n"
     << "region.rule = " << to_string(r.rule) << "\n"
     << "region.lambdas = " << join(lambdas) << "\n"
     << "region.lambda1 = " << num(lambda1) << "\n"
     << "boundary.z_max = " << num(r.boundary.z_max) << "\n"
     << "boundary.root_tol = " << num(r.boundary.root_tol) << "\n"
     << "boundary.scan_points = " << r.boundary.scan_points << "\n"
     << "coupling.max_iter = " << r.coupling_max_iter << "\n"
     << "coupling.tol = " << num(r.coupling_tol) << "\n"
     << "quad.method = " << to_string(r.quad.method) << "\n"
     << "quad.nodes = " << r.quad.nodes_per_dim << "\n"
     << "quad.mc_samples = " << r.quad.mc_samples << "\n"
     << "quad.seed = " << r.quad.seed << "\n"
     << "solver.eps_inner = " << num(r.solver.eps_inner) << "\n"
     << "solver.psi_tol = " << num(r.solver.psi_tol) << "\n"
     << "solver.power_tol = " << num(r.solver.power_tol) << "\n"
     << "solver.max_inner = " << r.solver.max_inner << "\n"
     << "solver.max_outer = " << r.solver.max_outer << "\n"
     << "solver.max_epsilon_evals = " << r.solver.max_epsilon_evals << "\n"
     << "solver.eps_lo = " << num(r.solver.eps_lo) << "\n"
     << "solver.eps_hi = " << num(r.solver.eps_hi) << "\n"
     << "solver.check_monotone = " << (r.solver.check_monotone ? "true" : "false") << "\n"
     << "queue.n_frames = " << queue.n_frames << "\n"
     << "queue.seeds = " << join(queue.seeds) << "\n"
     << "queue.factors = " << join(queue.factors) << "\n"
     << "curve.input = " << curve.input << "\n"
     << "curve.interferer = " << curve.interferer << "\n"
     << "curve.p_int = " << num(curve.p_int) << "\n"
     << "curve.snr = " << join(curve.snr) << "\n";
  return os.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string output_directory(const ExperimentConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("BCEC_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

void write_header(std::ostream& os, const std::string& command, const ExperimentConfig& cfg) {
  os << "# bcec " << BCEC_VERSION << "\n"
     << "# command: " << command << "\n"
     << "# config_hash: " << cfg.hash() << "\n"
     << "# seed: " << cfg.region.seed << "\n";
  std::stringstream ss(cfg.canonical());
  std::string line;
  while (std::getline(ss, line)) os << "# config: " << line << "\n";
}

void write_mi_curve(std::ostream& os, const ExperimentConfig& cfg) {
  cfg.validate();
  write_header(os, "mi-curve", cfg);
  LinkState l;
  l.z = 1.0;
  l.p_int = cfg.curve.p_int;
  l.own = parse_input(cfg.curve.input);
  l.interferer = parse_input(cfg.curve.interferer);
  std::vector<std::string> rows(cfg.curve.snr.size());
  parallel_for(cfg.curve.snr.size(), [&](std::size_t i) {
    LinkState li = l;
    li.p_own = cfg.curve.snr[i];
    rows[i] = out(li.p_own) + "," + out(mi_conditional(li, cfg.region.quad)) + "," +
              out(mi_with_interference(li, cfg.region.quad)) + "\n";
  });
  os << "snr,mi_conditional_bits,mi_with_interference_bits\n";
  for (const auto& r : rows) os << r;
}

void write_mmse_curve(std::ostream& os, const ExperimentConfig& cfg) {
  cfg.validate();
  write_header(os, "mmse-curve", cfg);
  LinkState l;
  l.z = 1.0;
  l.p_int = cfg.curve.p_int;
  l.own = parse_input(cfg.curve.input);
  l.interferer = parse_input(cfg.curve.interferer);
  std::vector<std::string> rows(cfg.curve.snr.size());
  parallel_for(cfg.curve.snr.size(), [&](std::size_t i) {
    LinkState li = l;
    li.p_own = cfg.curve.snr[i];
    rows[i] = out(li.p_own) + "," + out(mmse_conditional(li, cfg.region.quad)) + "," +
              out(mmse_with_interference(li, cfg.region.quad)) + "\n";
  });
  os << "snr,mmse_conditional,mmse_with_interference\n";
  for (const auto& r : rows) os << r;
}

RegionResult write_region(std::ostream& os, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto res = region_boundary(cfg.region, cfg.lambdas);
  write_header(os, "region", cfg);
  os << "# rule: " << to_string(res.rule) << "\n"
     << "# concavity_violation: " << out(res.concavity_violation) << "\n"
     << "# concave: " << (res.concave ? "true" : "false") << "\n";
  for (const auto& w : res.warnings) os << "# warning: " << w << "\n";
  os << "kind,lambda1,a1,a2,mean_r1,mean_r2,epsilon,iters,coupling_iters,rule,status,policy_ref,message\n";
  auto row = [&](const char* kind, const RegionPoint& p) {
    os << kind << "," << out(p.lambda1) << "," << out(p.a1) << "," << out(p.a2) << "," << out(p.mean_r1) << ","
       << out(p.mean_r2) << "," << out(p.epsilon) << "," << p.iters << "," << p.coupling_iters << "," << p.rule << ","
       << p.status << "," << csv_field(p.policy_ref) << "," << csv_field(p.message) << "\n";
  };
  for (const auto& p : res.points) row("point", p);
  for (const auto& p : res.endpoints) row("endpoint", p);
  return res;
}

void write_policy(std::ostream& os, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto grid = grid_of(cfg);
  const auto op = solve_operating_point(cfg.region, grid, cfg.lambda1);
  const auto& p = op.policy;
  write_header(os, "policy", cfg);
  os << "# rule: " << to_string(op.boundary.rule) << "\n"
     << "# lambda1: " << out(p.lambda1) << "\n"
     << "# a1: " << out(p.a1) << "\n"
     << "# a2: " << out(p.a2) << "\n"
     << "# epsilon: " << out(p.epsilon) << "\n"
     << "# psi1: " << out(p.psi1) << "\n"
     << "# psi2: " << out(p.psi2) << "\n"
     << "# power_error: " << out(p.diag.power_error) << "\n"
     << "# max_kkt_violation: " << out(p.diag.max_kkt_violation) << "\n";
  for (const auto& n : op.notes) os << "# note: " << n << "\n";
  os << "node,z1,z2,weight,region,P1,P2,r1,r2\n";
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    const auto& c = p.cells[i];
    os << c.node << "," << out(c.z1) << "," << out(c.z2) << "," << out(c.weight) << "," << to_string(c.region) << ","
       << out(p.P1[i]) << "," << out(p.P2[i]) << "," << out(p.r1[i]) << "," << out(p.r2[i]) << "\n";
  }
}

void write_boundary(std::ostream& os, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto grid = grid_of(cfg);
  const auto op = solve_operating_point(cfg.region, grid, cfg.lambda1);
  const auto& b = op.boundary;
  write_header(os, "boundary", cfg);
  os << "# rule: " << to_string(b.rule) << "\n"
     << "# coupling_iterations: " << op.coupling_iterations << "\n"
     << "# coupling_converged: " << (op.coupling_converged ? "true" : "false") << "\n";
  for (const auto& n : op.notes) os << "# note: " << n << "\n";
  os << "z2,z1_star,residual_nats,rule\n";
  const bool sampled = b.rule == DecodingRule::theorem2;
  const auto& z2s = sampled ? b.z2_samples : grid.axis2;
  for (std::size_t i = 0; i < z2s.size(); ++i) {
    const double z1 = sampled ? b.z1_star[i] : b.z1_star_at(z2s[i]);
    const double res = sampled && i < b.residual_nats.size() ? b.residual_nats[i] : 0.0;
    os << out(z2s[i]) << "," << out(z1) << "," << out(res) << "," << to_string(b.rule) << "\n";
  }
}

void write_queue_validation(std::ostream& os, std::ostream* tail, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto grid = grid_of(cfg);
  const auto op = solve_operating_point(cfg.region, grid, cfg.lambda1);
  QueueSimConfig q;
  q.fading1 = cfg.region.fading1;
  q.fading2 = cfg.region.fading2;
  q.qos = cfg.region.qos;
  q.n_frames = cfg.queue.n_frames;
  write_header(os, "queue-validate", cfg);
  os << "# a1: " << out(op.policy.a1) << "\n"
     << "# a2: " << out(op.policy.a2) << "\n"
     << "user,arrival_rate,theta_target,theta_hat,ci_halfwidth,stable,factor,seed\n";
  if (tail != nullptr) {
    write_header(*tail, "queue-validate", cfg);
    *tail << "user,factor,seed,threshold_bits,exceedances,frames\n";
  }
  for (double f : cfg.queue.factors) {
    const auto rows = validate_queue(op.policy, grid, q, f, cfg.queue.seeds, cfg.region.solver.threads);
    for (const auto& r : rows) {
      os << r.user << "," << out(r.arrival_rate) << "," << out(r.theta_target) << "," << out(r.theta_hat) << ","
         << out(r.ci_halfwidth) << "," << (r.stable ? "true" : "false") << "," << out(f) << "," << r.seed << "\n";
      if (tail == nullptr) continue;
      for (std::size_t k = 0; k < r.thresholds.size(); ++k)
        *tail << r.user << "," << out(f) << "," << r.seed << "," << out(r.thresholds[k]) << ","
              << r.overflow_counts[k] << "," << r.frames << "\n";
    }
  }
}

std::vector<PresetRun> preset_runs(const std::string& preset, const ExperimentConfig& base,
                                   const std::vector<double>& thetas, const std::vector<std::string>& inputs) {
  auto with = [&](const std::string& input, double K_dB, double p_bar_dB) {
    ExperimentConfig c = base;
    c.apply({{"inputs.both", input}, {"fading.K_dB", num(K_dB)}, {"power.p_bar_dB", num(p_bar_dB)}});
    return c;
  };
  auto label = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return std::string(buf);
  };
  std::vector<PresetRun> runs;
  if (preset == "fig2") {
    const auto ins = inputs.empty() ? std::vector<std::string>{"bpsk"} : inputs;
    for (const auto& in : ins)
      for (double p : {0.0, -5.0})
        for (double K : {-6.88, 4.97, 8.61})
          runs.push_back({"fig2_" + in + "_K" + label(K) + "dB_P" + label(p) + "dB", with(in, K, p)});
  } else if (preset == "fig3") {
    const auto ins = inputs.empty() ? std::vector<std::string>{"bpsk", "16qam", "gaussian"} : inputs;
    for (double p : {5.0, 0.0, -5.0})
      for (const auto& in : ins) runs.push_back({"fig3_" + in + "_P" + label(p) + "dB", with(in, -6.88, p)});
  } else if (preset == "fig4") {
    const auto ins = inputs.empty() ? std::vector<std::string>{base.input1} : inputs;
    const auto ths = thetas.empty() ? std::vector<double>{0.001, 0.01, 0.1} : thetas;
    for (const auto& in : ins)
      for (double t : ths) {
        auto c = with(in, -6.88, 5.0);
        c.apply({{"qos.theta", num(t)}});
        runs.push_back({"fig4_" + in + "_theta" + label(t), c});
      }
  } else {
    throw ConfigError("unknown preset: " + preset + " (expected fig2, fig3 or fig4)");
  }
  if (!thetas.empty() && preset != "fig4") {
    if (thetas.size() > 1) throw ConfigError("a theta list is only accepted by preset fig4");
    for (auto& r : runs) r.config.apply({{"qos.theta", num(thetas.front())}});
  }
  return runs;
}

}  // namespace bcec
