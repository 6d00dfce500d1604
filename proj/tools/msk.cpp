#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "msk/gtbound.hpp"
#include "msk/sweep.hpp"

using namespace msk;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kNumeric = 4 };

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

SpeciesSystem base_system(const SweepConfig& cfg) {
  try {
    return validate_system(cfg.lambda, cfg.delta2, cfg.tau2);
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<int> parse_sites(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("--sites: expected comma-separated integers");
    }
  }
  return out;
}

int cmd_at(const SweepConfig& cfg, const std::string& out, const std::string& bracket) {
  SweepConfig c = cfg;
  c.tasks.rsb = c.tasks.gt = c.tasks.finite_n = false;
  const SweepResult res = run_sweep(c);
  emit(out.empty() ? c.csv_path : out, sweep_csv(res, static_cast<int>(c.lambda.size())));
  const Axis& other = c.trace_axis == 1 ? c.axis2 : c.axis1;
  const TraceResult tr = trace_at_surface(c, c.trace_axis, other.min, c.trace_tol);
  const std::string bpath = bracket.empty() ? c.bracket_path : bracket;
  if (bpath.empty()) {
    std::cerr << "bracket: " << tr.message << " [" << format_double(tr.lo) << ", " << format_double(tr.hi) << "]\n";
  } else {
    write_text(bpath, trace_csv(tr));
  }
  return res.any_nonconvergence ? kNumeric : kOk;
}

int cmd_qstar(const SweepConfig& cfg) {
  const SpeciesSystem sys = base_system(cfg);
  const ATReport at = gamma_and_at(sys, cfg.quadrature);
  json j;
  j["q_star"] = vec_json(at.q_star);
  j["q_min"] = vec_json(at.fixed_point.q_min);
  j["classification"] = to_string(at.fixed_point.classification);
  j["consistent"] = at.fixed_point.consistent;
  j["iterations"] = at.fixed_point.iterations;
  j["residual"] = at.fixed_point.residual;
  j["gamma"] = vec_json(at.gamma_diag);
  j["rho"] = at.rho;
  j["margin"] = at.margin;
  j["phase"] = to_string(at.phase);
  j["rs_min_value"] = at.rs_min_value;
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_parisi(const SweepConfig& cfg, int levels, const std::string& measure, const std::string& out) {
  const SpeciesSystem sys = base_system(cfg);
  json j;
  if (!measure.empty()) {
    const DiscreteOrderedMeasure mu = read_measure(measure);
    ParisiEvaluation ev;
    try {
      ev = parisi_value(sys, mu, cfg.quadrature, true);
    } catch (const ModelError& e) {
      throw ConfigError(e.what());
    }
    j["value"] = ev.value;
    j["X0"] = vec_json(ev.X0);
    j["Q"] = ev.Q;
    j["gradient_q"] = json::array();
    for (const Vec& g : ev.gradient_q) j["gradient_q"].push_back(vec_json(g));
    j["gradient_zeta"] = ev.gradient_zeta;
    j["weight_error"] = ev.weight_error;
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  const RsbResult r = minimize_rsb(sys, levels, cfg.quadrature);
  const SupportReport sup = support_diagnostics(r.measure, r.q_star, 1e-6);
  j["value"] = r.value;
  j["rs_min_value"] = r.rs_min_value;
  j["rs_gap"] = r.rs_gap;
  j["quadrature_error"] = r.quadrature_error;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["measure"] = json::parse(measure_to_json(r.measure));
  j["support"] = {{"q_min", vec_json(sup.q_min)},
                  {"q_max", vec_json(sup.q_max)},
                  {"min_below_qstar", sup.min_below_qstar},
                  {"max_above_qstar", sup.max_above_qstar},
                  {"counts", sup.counts},
                  {"equal_counts", sup.equal_counts}};
  std::cout << j.dump(2) << "\n";
  if (!out.empty()) write_measure(out, r.measure);
  return r.converged ? kOk : kNumeric;
}

int cmd_gt(const SweepConfig& cfg, int grid, const std::string& out) {
  const SpeciesSystem sys = base_system(cfg);
  const GTScan scan = gt_cost_scan(sys, grid, cfg.quadrature);
  const int S = sys.size();
  std::string csv = "s,branch";
  for (int s = 1; s <= S; ++s) csv += ",u_s" + std::to_string(s);
  csv += ",bound,cost,distance,ratio\n";
  for (std::size_t k = 0; k < scan.points.size(); ++k) {
    const GTCost& c = scan.points[k];
    csv += format_double(scan.s[k]) + "," + to_string(c.branch);
    for (int s = 0; s < S; ++s) csv += "," + format_double(c.u[s]);
    csv += "," + format_double(c.bound) + "," + format_double(c.cost) + "," + format_double(c.distance) + "," +
           format_double(c.distance > 0.0 ? c.cost / c.distance : 0.0) + "\n";
  }
  emit(out, csv);
  std::cerr << "rho " << format_double(scan.rho) << "  c0 " << format_double(scan.c0) << "\n";
  return kOk;
}

int cmd_finite_n(const SweepConfig& cfg, const std::string& sites, int samples, double t, std::uint64_t seed,
                 bool ibp, const std::string& out) {
  const SpeciesSystem sys = base_system(cfg);
  const ATReport at = gamma_and_at(sys, cfg.quadrature);
  FiniteNOptions o;
  o.samples = samples;
  o.base_seed = seed;
  o.with_derivative = ibp;
  o.threads = cfg.threads;
  FiniteNSummary s;
  try {
    s = run_finite_n(sys, at.q_star, parse_sites(sites), t, o);
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
  json j;
  j["mean_F"] = s.mean_F;
  j["se_F"] = s.se_F;
  j["rs_star"] = at.rs_min_value;
  j["rho"] = at.rho;
  if (ibp) {
    j["mean_dF_dt"] = s.mean_dF;
    j["mean_ibp_rhs"] = s.mean_rhs;
    j["combined_se"] = s.combined_se;
  }
  std::cout << j.dump(2) << "\n";
  if (!out.empty()) write_text(out, finite_n_records_json(s));
  return kOk;
}

int cmd_sweep(const SweepConfig& cfg, const std::string& out) {
  const SweepResult res = run_sweep(cfg);
  emit(out.empty() ? cfg.csv_path : out, sweep_csv(res, static_cast<int>(cfg.lambda.size())));
  if (!res.extra_json.empty()) {
    if (cfg.json_path.empty()) {
      std::cerr << "note: gt/finite_n results dropped (no output.json path)\n";
    } else {
      write_text(cfg.json_path, res.extra_json);
    }
  }
  return res.any_nonconvergence ? kNumeric : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msk: multi-species SK replica-symmetry numerics"};
  app.require_subcommand(1);
  std::string config = "msk.toml";
  app.add_option("--config", config, "TOML or JSON config")->capture_default_str();

  std::string out, bracket, measure, sites = "6,6";
  int levels = 3, grid = 50, samples = 500;
  double t = 1.0;
  std::uint64_t seed = 1;
  bool ibp = false;

  auto* at = app.add_subcommand("at", "phase grid and AT bracket");
  at->add_option("--out", out, "CSV path (default: output.csv, else stdout)");
  at->add_option("--bracket", bracket, "bracket CSV path");
  auto* qs = app.add_subcommand("qstar", "fixed point and AT report for the base system");
  auto* pa = app.add_subcommand("parisi", "evaluate a measure or search for RSB");
  pa->add_option("--levels", levels, "r for the RSB search")->check(CLI::Range(2, 4));
  pa->add_option("--measure", measure, "measure JSON to evaluate");
  pa->add_option("--out", out, "write the minimizing measure here");
  auto* gt = app.add_subcommand("gt", "GT cost along the Perron direction");
  gt->add_option("--u-grid", grid, "points per side")->check(CLI::PositiveNumber);
  gt->add_option("--out", out, "CSV path");
  auto* fn = app.add_subcommand("finite-n", "exact enumeration over disorder samples");
  fn->add_option("--sites", sites, "sites per species, comma separated");
  fn->add_option("--samples", samples)->check(CLI::Range(2, 1 << 24));
  fn->add_option("--t", t)->check(CLI::Range(0.0, 1.0));
  fn->add_option("--seed", seed);
  fn->add_flag("--ibp", ibp, "also check the derivative identity");
  fn->add_option("--out", out, "records JSON");
  auto* sw = app.add_subcommand("sweep", "grid sweep with all configured tasks");
  sw->add_option("--out", out, "CSV path");

  // Options given after the subcommand are accepted too.
  for (auto* sub : {at, qs, pa, gt, fn, sw}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const SweepConfig cfg = load_config(config);
    if (*at) return cmd_at(cfg, out, bracket);
    if (*qs) return cmd_qstar(cfg);
    if (*pa) return cmd_parisi(cfg, levels, measure, out);
    if (*gt) return cmd_gt(cfg, grid, out);
    if (*fn) return cmd_finite_n(cfg, sites, samples, t, seed, ibp, out);
    if (*sw) return cmd_sweep(cfg, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const ConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kOk;
}
