#pragma once

#include <string>
#include <vector>

#include "msk/io.hpp"
#include "msk/parisi.hpp"

namespace msk {

// How an axis value v changes the base system:
//   Delta2Scale: Delta^2 = v Delta0^2,  Tau2Scale: tau^2 = v tau0^2,
//   Affine: Delta^2 += v D, tau^2 += v T.
enum class AxisKind { Delta2Scale, Tau2Scale, Affine };

struct Axis {
  std::string name;
  AxisKind kind = AxisKind::Delta2Scale;
  double min = 0.0;
  double max = 0.0;
  int count = 1;
  Mat delta2_dir;  // Affine only
  Vec tau2_dir;

  std::vector<double> values() const;
};

struct SweepTasks {
  bool at = true;
  bool rsb = false;
  int rsb_levels = 3;
  bool gt = false;
  int gt_points = 10;
  bool finite_n = false;
  std::vector<int> finite_n_sites;
  int finite_n_samples = 100;
  double finite_n_t = 1.0;
  std::uint64_t finite_n_seed = 1;
};

struct SweepConfig {
  Vec lambda;
  Mat delta2;
  Vec tau2;
  Axis axis1;
  Axis axis2;
  QuadratureSpec quadrature;
  SweepTasks tasks;
  int trace_axis = 1;
  double trace_tol = 1e-8;
  std::string csv_path;
  std::string bracket_path;
  std::string json_path;
  int threads = 0;

  SpeciesSystem system_at(double v1, double v2) const;
};

SweepConfig config_from_json(const std::string& json_text);
SweepConfig load_config(const std::string& path);

struct SweepRow {
  double axis1 = 0.0;
  double axis2 = 0.0;
  double rho = 0.0;
  std::string phase;
  Vec q_star;
  Vec gamma;
  bool has_rsb = false;
  double rsb_gap = 0.0;
  std::string error;
  bool nonconvergence = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string extra_json;  // gt / finite_n task output
  bool any_nonconvergence = false;
};

SweepResult run_sweep(const SweepConfig& cfg);
std::string sweep_csv(const SweepResult& res, int species);

struct TraceResult {
  bool crossing = false;
  double lo = 0.0;
  double hi = 0.0;
  double rho_lo = 0.0;
  double rho_hi = 0.0;
  int iterations = 0;
  bool monotone = true;  // rho checked on a uniform scan of the ray
  std::string message;
};

// Bisects rho - 1/2 along axis `ray` (1 or 2) with the other axis at `other`.
TraceResult trace_at_surface(const SweepConfig& cfg, int ray, double other, double tol);
std::string trace_csv(const TraceResult& t);

}  // namespace msk
