#include "msk/sweep.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "msk/gtbound.hpp"

namespace msk {

using nlohmann::json;

namespace {

Vec vec_of(const json& j, const char* what) {
  try {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  } catch (const json::exception&) {
    throw ConfigError(std::string(what) + ": expected an array of numbers");
  }
}

Mat mat_of(const json& j, const char* what) {
  try {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != n) throw ConfigError(std::string(what) + ": matrix must be square");
      for (Eigen::Index k = 0; k < n; ++k) m(i, k) = rows[i][k];
    }
    return m;
  } catch (const json::exception&) {
    throw ConfigError(std::string(what) + ": expected an array of arrays of numbers");
  }
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad type for '") + key + "'");
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a table");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

Axis axis_of(const json& j, const std::string& name, int S) {
  check_keys(j, {"name", "kind", "min", "max", "count", "delta2", "tau2"}, "axes." + name);
  Axis a;
  a.name = value_or<std::string>(j, "name", name);
  const std::string kind = value_or<std::string>(j, "kind", "delta2_scale");
  if (kind == "delta2_scale") a.kind = AxisKind::Delta2Scale;
  else if (kind == "tau2_scale") a.kind = AxisKind::Tau2Scale;
  else if (kind == "affine") a.kind = AxisKind::Affine;
  else throw ConfigError("axes." + name + ": kind must be delta2_scale, tau2_scale or affine");
  if (!j.contains("min") || !j.contains("max")) throw ConfigError("axes." + name + ": min and max are required");
  a.min = value_or<double>(j, "min", 0.0);
  a.max = value_or<double>(j, "max", 0.0);
  a.count = value_or<int>(j, "count", 2);
  if (!std::isfinite(a.min) || !std::isfinite(a.max) || a.min > a.max)
    throw ConfigError("axes." + name + ": need finite min <= max");
  if (a.count < 1) throw ConfigError("axes." + name + ": count must be >= 1");
  if (a.count == 1 && a.min != a.max) throw ConfigError("axes." + name + ": count 1 needs min == max");
  if (a.kind != AxisKind::Affine && a.min < 0.0) throw ConfigError("axes." + name + ": scale values must be >= 0");
  a.delta2_dir = Mat::Zero(S, S);
  a.tau2_dir = Vec::Zero(S);
  if (a.kind == AxisKind::Affine) {
    if (j.contains("delta2")) a.delta2_dir = mat_of(j["delta2"], "axes.delta2");
    if (j.contains("tau2")) a.tau2_dir = vec_of(j["tau2"], "axes.tau2");
    if (a.delta2_dir.rows() != S || a.tau2_dir.size() != S) throw ConfigError("axes." + name + ": direction size mismatch");
  }
  return a;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <class F>
void parallel_for(int n, int threads, F&& body) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::max(1, std::min(threads, n));
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int i = 0; i < threads; ++i)
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) body(k);
    });
}

}  // namespace

std::vector<double> Axis::values() const {
  std::vector<double> v;
  if (count == 1) return {min};
  for (int k = 0; k < count; ++k) v.push_back(k == count - 1 ? max : min + (max - min) * k / (count - 1));
  return v;
}

SpeciesSystem SweepConfig::system_at(double v1, double v2) const {
  Mat d = delta2;
  Vec t = tau2;
  for (const auto& [ax, v] : {std::pair<const Axis*, double>{&axis1, v1}, {&axis2, v2}}) {
    switch (ax->kind) {
      case AxisKind::Delta2Scale: d *= v; break;
      case AxisKind::Tau2Scale: t *= v; break;
      case AxisKind::Affine:
        d += v * ax->delta2_dir;
        t += v * ax->tau2_dir;
        break;
    }
  }
  return validate_system(lambda, d, t);
}

SweepConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_keys(j, {"system", "axes", "quadrature", "tasks", "trace", "output", "threads"}, "config");
  SweepConfig cfg;
  if (!j.contains("system")) throw ConfigError("config: [system] section is required");
  const json& sys = j["system"];
  check_keys(sys, {"lambda", "delta2", "tau2"}, "system");
  if (!sys.contains("lambda") || !sys.contains("delta2") || !sys.contains("tau2"))
    throw ConfigError("system: lambda, delta2 and tau2 are required");
  cfg.lambda = vec_of(sys["lambda"], "system.lambda");
  cfg.delta2 = mat_of(sys["delta2"], "system.delta2");
  cfg.tau2 = vec_of(sys["tau2"], "system.tau2");
  try {
    validate_system(cfg.lambda, cfg.delta2, cfg.tau2);
  } catch (const ModelError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  const int S = static_cast<int>(cfg.lambda.size());

  const json axes = j.value("axes", json::object());
  check_keys(axes, {"axis1", "axis2"}, "axes");
  if (!axes.contains("axis1")) throw ConfigError("axes: axis1 is required");
  cfg.axis1 = axis_of(axes["axis1"], "axis1", S);
  if (axes.contains("axis2")) {
    cfg.axis2 = axis_of(axes["axis2"], "axis2", S);
  } else {
    cfg.axis2.name = "axis2";
    cfg.axis2.kind = AxisKind::Affine;
    cfg.axis2.delta2_dir = Mat::Zero(S, S);
    cfg.axis2.tau2_dir = Vec::Zero(S);
  }

  const json quad = j.value("quadrature", json::object());
  check_keys(quad, {"nodes", "mc_samples", "seed"}, "quadrature");
  cfg.quadrature.nodes = value_or<int>(quad, "nodes", cfg.quadrature.nodes);
  cfg.quadrature.mc_samples = value_or<std::uint64_t>(quad, "mc_samples", cfg.quadrature.mc_samples);
  cfg.quadrature.seed = value_or<std::uint64_t>(quad, "seed", cfg.quadrature.seed);
  try {
    cfg.quadrature.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const json tasks = j.value("tasks", json::object());
  check_keys(tasks, {"at", "rsb", "rsb_levels", "gt", "gt_points", "finite_n", "finite_n_sites", "finite_n_samples",
                     "finite_n_t", "finite_n_seed"},
             "tasks");
  SweepTasks& t = cfg.tasks;
  t.at = value_or<bool>(tasks, "at", t.at);
  t.rsb = value_or<bool>(tasks, "rsb", t.rsb);
  t.rsb_levels = value_or<int>(tasks, "rsb_levels", t.rsb_levels);
  t.gt = value_or<bool>(tasks, "gt", t.gt);
  t.gt_points = value_or<int>(tasks, "gt_points", t.gt_points);
  t.finite_n = value_or<bool>(tasks, "finite_n", t.finite_n);
  t.finite_n_sites = value_or<std::vector<int>>(tasks, "finite_n_sites", std::vector<int>(S, 4));
  t.finite_n_samples = value_or<int>(tasks, "finite_n_samples", t.finite_n_samples);
  t.finite_n_t = value_or<double>(tasks, "finite_n_t", t.finite_n_t);
  t.finite_n_seed = value_or<std::uint64_t>(tasks, "finite_n_seed", t.finite_n_seed);
  if (t.rsb_levels < 2 || t.rsb_levels > 4) throw ConfigError("tasks.rsb_levels must be in 2..4");
  if (t.gt_points < 1) throw ConfigError("tasks.gt_points must be >= 1");
  if (static_cast<int>(t.finite_n_sites.size()) != S) throw ConfigError("tasks.finite_n_sites: one count per species");
  if (t.finite_n_samples < 2) throw ConfigError("tasks.finite_n_samples must be >= 2");
  if (!(t.finite_n_t >= 0.0 && t.finite_n_t <= 1.0)) throw ConfigError("tasks.finite_n_t must lie in [0,1]");

  const json trace = j.value("trace", json::object());
  check_keys(trace, {"axis", "tol"}, "trace");
  cfg.trace_axis = value_or<int>(trace, "axis", 1);
  cfg.trace_tol = value_or<double>(trace, "tol", 1e-8);
  if (cfg.trace_axis != 1 && cfg.trace_axis != 2) throw ConfigError("trace.axis must be 1 or 2");
  if (!(cfg.trace_tol > 0.0)) throw ConfigError("trace.tol must be positive");

  const json out = j.value("output", json::object());
  check_keys(out, {"csv", "bracket", "json"}, "output");
  cfg.csv_path = value_or<std::string>(out, "csv", "");
  cfg.bracket_path = value_or<std::string>(out, "bracket", "");
  cfg.json_path = value_or<std::string>(out, "json", "");
  cfg.threads = value_or<int>(j, "threads", 0);
  return cfg;
}

SweepConfig load_config(const std::string& path) { return config_from_json(config_as_json(path)); }

SweepResult run_sweep(const SweepConfig& cfg) {
  const auto v1 = cfg.axis1.values();
  const auto v2 = cfg.axis2.values();
  const int n = static_cast<int>(v1.size() * v2.size());
  SweepResult res;
  res.rows.resize(n);
  std::vector<json> gt(n), fin(n);

  parallel_for(n, cfg.threads, [&](int k) {
    SweepRow& row = res.rows[k];
    row.axis1 = v1[k / v2.size()];
    row.axis2 = v2[k % v2.size()];
    try {
      const SpeciesSystem sys = cfg.system_at(row.axis1, row.axis2);
      const ATReport at = gamma_and_at(sys, cfg.quadrature);
      row.rho = at.rho;
      row.phase = to_string(at.phase);
      row.q_star = at.q_star;
      row.gamma = at.gamma_diag;
      if (cfg.tasks.rsb) {
        const RsbResult r = minimize_rsb(sys, cfg.tasks.rsb_levels, cfg.quadrature);
        row.has_rsb = true;
        row.rsb_gap = r.rs_gap;
        if (!r.converged) {
          row.error = "rsb: optimizer did not converge";
          row.nonconvergence = true;
        }
      }
      if (cfg.tasks.gt) {
        const GTScan scan = gt_cost_scan(sys, cfg.tasks.gt_points, cfg.quadrature);
        gt[k] = {{"axis1", row.axis1}, {"axis2", row.axis2}, {"rho", scan.rho}, {"c0", scan.c0}};
      }
      if (cfg.tasks.finite_n) {
        FiniteNOptions o;
        o.samples = cfg.tasks.finite_n_samples;
        o.base_seed = cfg.tasks.finite_n_seed;
        o.threads = 1;
        const FiniteNSummary s = run_finite_n(sys, at.q_star, cfg.tasks.finite_n_sites, cfg.tasks.finite_n_t, o);
        fin[k] = {{"axis1", row.axis1}, {"axis2", row.axis2}, {"mean_F", s.mean_F}, {"se_F", s.se_F},
                  {"rs_star", at.rs_min_value}, {"records", json::parse(finite_n_records_json(s))}};
      }
    } catch (const ConvergenceError& e) {
      row.error = std::string("nonconvergence: ") + e.what();
      row.nonconvergence = true;
    } catch (const std::exception& e) {
      row.error = e.what();
      row.nonconvergence = true;
    }
  });

  for (const auto& r : res.rows) res.any_nonconvergence = res.any_nonconvergence || r.nonconvergence;
  if (cfg.tasks.gt || cfg.tasks.finite_n) {
    json extra = json::object();
    if (cfg.tasks.gt) extra["gt"] = gt;
    if (cfg.tasks.finite_n) extra["finite_n"] = fin;
    res.extra_json = extra.dump(2) + "\n";
  }
  return res;
}

std::string sweep_csv(const SweepResult& res, int species) {
  std::string out = "axis1,axis2,rho,phase";
  for (int s = 1; s <= species; ++s) out += ",qstar_s" + std::to_string(s);
  for (int s = 1; s <= species; ++s) out += ",gamma_s" + std::to_string(s);
  out += ",rsb_gap,error\n";
  for (const auto& r : res.rows) {
    const bool ok = r.q_star.size() == species;
    out += format_double(r.axis1) + "," + format_double(r.axis2) + ",";
    out += (ok ? format_double(r.rho) : "") + "," + (ok ? r.phase : "");
    for (int s = 0; s < species; ++s) out += "," + (ok ? format_double(r.q_star[s]) : "");
    for (int s = 0; s < species; ++s) out += "," + (ok ? format_double(r.gamma[s]) : "");
    out += "," + (r.has_rsb ? format_double(r.rsb_gap) : "");
    out += "," + csv_field(r.error) + "\n";
  }
  return out;
}

TraceResult trace_at_surface(const SweepConfig& cfg, int ray, double other, double tol) {
  if (ray != 1 && ray != 2) throw ConfigError("trace: ray must be 1 or 2");
  if (!(tol > 0.0)) throw ConfigError("trace: tol must be positive");
  const Axis& ax = ray == 1 ? cfg.axis1 : cfg.axis2;
  auto system = [&](double v) { return ray == 1 ? cfg.system_at(v, other) : cfg.system_at(other, v); };
  auto eval = [&](double v) { return gamma_and_at(system(v), cfg.quadrature); };

  TraceResult tr;
  double lo = ax.min, hi = ax.max;
  ATReport a = eval(lo), b = eval(hi);
  tr.lo = lo;
  tr.hi = hi;
  tr.rho_lo = a.rho;
  tr.rho_hi = b.rho;

  const int scan = 33;
  double prev = a.rho;
  int dir = 0;
  for (int k = 1; k < scan; ++k) {
    const double r = eval(lo + (hi - lo) * k / (scan - 1)).rho;
    const double d = r - prev;
    if (std::abs(d) > 1e-12) {
      const int sd = d > 0 ? 1 : -1;
      if (dir != 0 && sd != dir) tr.monotone = false;
      dir = sd;
    }
    prev = r;
  }

  const bool side_lo = a.margin > 0.0;
  if (side_lo == (b.margin > 0.0)) {
    tr.message = "no crossing";
    return tr;
  }
  tr.crossing = true;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const ATReport m = eval(mid);
    if ((m.margin > 0.0) == side_lo) {
      lo = mid;
      a = m;
    } else {
      hi = mid;
      b = m;
    }
    ++tr.iterations;
  }
  tr.lo = lo;
  tr.hi = hi;
  tr.rho_lo = a.rho;
  tr.rho_hi = b.rho;
  tr.message = tr.monotone ? "bracketed" : "bracketed; rho not monotone along the ray";
  return tr;
}

std::string trace_csv(const TraceResult& t) {
  std::string out = "lo,hi,rho_lo,rho_hi,crossing,monotone,iterations,message\n";
  out += format_double(t.lo) + "," + format_double(t.hi) + "," + format_double(t.rho_lo) + "," +
         format_double(t.rho_hi) + "," + (t.crossing ? "true" : "false") + "," + (t.monotone ? "true" : "false") +
         "," + std::to_string(t.iterations) + "," + csv_field(t.message) + "\n";
  return out;
}

}  // namespace msk
