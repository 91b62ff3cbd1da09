#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bcec/effcap.hpp"
#include "bcec/experiment.hpp"

namespace py = pybind11;
using namespace bcec;

namespace {

LinkState make_link(const std::string& input, double snr, const std::string& interferer, double p_int) {
  LinkState l;
  l.z = 1.0;
  l.p_own = snr;
  l.p_int = p_int;
  l.own = parse_input(input);
  l.interferer = parse_input(interferer);
  return l;
}

ExperimentConfig make_config(const KeyValues& kv) {
  ExperimentConfig cfg;
  cfg.apply(kv);
  cfg.validate();
  return cfg;
}

py::dict point_dict(const RegionPoint& p) {
  py::dict d;
  d["lambda1"] = p.lambda1;
  d["a1"] = p.a1;
  d["a2"] = p.a2;
  d["mean_r1"] = p.mean_r1;
  d["mean_r2"] = p.mean_r2;
  d["epsilon"] = p.epsilon;
  d["iters"] = p.iters;
  d["coupling_iters"] = p.coupling_iters;
  d["rule"] = p.rule;
  d["status"] = p.status;
  d["message"] = p.message;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Effective-capacity regions of two-user fading broadcast channels with arbitrary inputs.";
  m.attr("__version__") = BCEC_VERSION;

  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "mutual_information",
      [](const std::string& input, double snr, const std::string& interferer, double p_int, bool conditional) {
        const auto l = make_link(input, snr, interferer, p_int);
        const QuadratureSpec q;
        return conditional ? mi_conditional(l, q) : mi_with_interference(l, q);
      },
      py::arg("input"), py::arg("snr"), py::arg("interferer") = "gaussian", py::arg("p_int") = 0.0,
      py::arg("conditional") = true,
      "Mutual information in bits at unit gain. conditional=False treats the interferer as noise.");

  m.def(
      "mmse",
      [](const std::string& input, double snr, const std::string& interferer, double p_int, bool conditional) {
        const auto l = make_link(input, snr, interferer, p_int);
        const QuadratureSpec q;
        return conditional ? mmse_conditional(l, q) : mmse_with_interference(l, q);
      },
      py::arg("input"), py::arg("snr"), py::arg("interferer") = "gaussian", py::arg("p_int") = 0.0,
      py::arg("conditional") = true);

  m.def(
      "joint_mutual_information",
      [](double z1, double z2, double P1, double P2, const std::string& input1, const std::string& input2) {
        return joint_mutual_info(z1, z2, P1, P2, {parse_input(input1), parse_input(input2)}, QuadratureSpec{});
      },
      py::arg("z1"), py::arg("z2"), py::arg("P1"), py::arg("P2"), py::arg("input1") = "gaussian",
      py::arg("input2") = "gaussian", "I(x1, x2; y1, y2) in bits.");

  m.def(
      "effective_capacity",
      [](double theta, const std::vector<double>& rates, const std::vector<double>& weights, double T, double B) {
        return effective_capacity(theta, T, B, rates, weights);
      },
      py::arg("theta"), py::arg("rates"), py::arg("weights"), py::arg("T") = 1.0, py::arg("B") = 100.0,
      "-1/(theta T B) ln sum_i w_i exp(-theta T B r_i), in the units of the rates.");

  m.def(
      "fading_nodes",
      [](double K_dB, int n) { return quantile_nodes(RicianSpec::from_dB(K_dB), n); }, py::arg("K_dB"), py::arg("n"),
      "Conditional means of n equiprobable slices of the Rician power gain.");

  m.def(
      "theorem2_boundary",
      [](double z2, double P1, double P2, const std::string& input1, const std::string& input2, double z_max) {
        BoundaryOptions opt;
        opt.z_max = z_max;
        const auto r = solve_boundary(z2, constant_powers(P1, P2), {parse_input(input1), parse_input(input2)},
                                      QuadratureSpec{}, opt);
        return py::make_tuple(r.z1_star, r.residual);
      },
      py::arg("z2"), py::arg("P1"), py::arg("P2"), py::arg("input1") = "gaussian", py::arg("input2") = "gaussian",
      py::arg("z_max") = 10.0, "(z1_star, |g| in nats) for constant powers; z1_star is inf or 0 without a crossing.");

  m.def(
      "region",
      [](const KeyValues& config) {
        const auto cfg = make_config(config);
        RegionResult r;
        {
          py::gil_scoped_release release;
          r = region_boundary(cfg.region, cfg.lambdas);
        }
        py::dict d;
        py::list pts, ends;
        for (const auto& p : r.points) pts.append(point_dict(p));
        for (const auto& p : r.endpoints) ends.append(point_dict(p));
        d["rule"] = to_string(r.rule);
        d["points"] = pts;
        d["endpoints"] = ends;
        d["warnings"] = r.warnings;
        d["concave"] = r.concave;
        return d;
      },
      py::arg("config"), "Frontier for a config given as string key-value pairs.");

  m.def(
      "policy",
      [](const KeyValues& config) {
        const auto cfg = make_config(config);
        OperatingPoint op;
        {
          py::gil_scoped_release release;
          const auto grid = build_grid(cfg.region.fading1, cfg.region.fading2, cfg.region.n_per_dim,
                                       cfg.region.grid_method, cfg.region.seed);
          op = solve_operating_point(cfg.region, grid, cfg.lambda1);
        }
        const auto& p = op.policy;
        std::vector<double> z1, z2, w;
        std::vector<std::string> region;
        for (const auto& c : p.cells) {
          z1.push_back(c.z1);
          z2.push_back(c.z2);
          w.push_back(c.weight);
          region.push_back(to_string(c.region));
        }
        py::dict d;
        d["rule"] = to_string(op.boundary.rule);
        d["a1"] = p.a1;
        d["a2"] = p.a2;
        d["epsilon"] = p.epsilon;
        d["z1"] = z1;
        d["z2"] = z2;
        d["weight"] = w;
        d["region"] = region;
        d["P1"] = p.P1;
        d["P2"] = p.P2;
        d["r1"] = p.r1;
        d["r2"] = p.r2;
        d["max_kkt_violation"] = p.diag.max_kkt_violation;
        d["power_error"] = p.diag.power_error;
        return d;
      },
      py::arg("config"), "Optimal policy at region.lambda1.");

  m.def(
      "csv",
      [](const std::string& command, const KeyValues& config) {
        const auto cfg = make_config(config);
        std::ostringstream os;
        py::gil_scoped_release release;
        if (command == "mi-curve")
          write_mi_curve(os, cfg);
        else if (command == "mmse-curve")
          write_mmse_curve(os, cfg);
        else if (command == "region")
          write_region(os, cfg);
        else if (command == "policy")
          write_policy(os, cfg);
        else if (command == "boundary")
          write_boundary(os, cfg);
        else if (command == "queue-validate")
          write_queue_validation(os, nullptr, cfg);
        else
          throw ConfigError("unknown command: " + command);
        return os.str();
      },
      py::arg("command"), py::arg("config"), "CSV text exactly as the command-line tool writes it.");
}
