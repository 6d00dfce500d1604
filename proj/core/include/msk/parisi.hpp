#pragma once

#include <vector>

#include "msk/rs_at.hpp"

namespace msk {

// r-level Parisi parameterization:
//   0 <= zeta_0 < ... < zeta_{r-1} <= 1,   0 = q_0 <= q_1 <= ... <= q_{r-1} <= q_r = 1.
// `zeta` holds zeta_0..zeta_{r-1}; `q` holds the interior levels q_1..q_{r-1}.
struct DiscreteOrderedMeasure {
  std::vector<double> zeta;
  std::vector<Vec> q;

  int levels() const { return static_cast<int>(zeta.size()); }
  void validate(int species) const;

  // Mass zeta_l - zeta_{l-1} at level l = 0..r (with q_0 = 0, q_r = 1).
  struct Atom {
    double mass;
    Vec point;
  };
  std::vector<Atom> atoms(int species) const;

  static DiscreteOrderedMeasure dirac(const Vec& q);
};

struct ParisiEvaluation {
  double value = 0.0;
  std::vector<double> Q;          // Q_l = q_l^T Lambda Delta^2 Lambda q_l, l = 0..r
  std::vector<Vec> Q_species;     // Q_l^s = 2 (Delta^2 Lambda q_l)_s
  Vec X0;                         // E_h X_0^s
  std::vector<Vec> a;             // a_l, l = 1..r-1 (when gradients are requested)
  std::vector<Vec> gradient_q;    // dP/dq_l, l = 1..r-1
  std::vector<double> gradient_zeta;  // dP/dzeta_l, l = 0..r-1
  double weight_error = 0.0;      // max |E_l W_l - 1| over levels and grid points
};

ParisiEvaluation parisi_value(const SpeciesSystem& sys, const DiscreteOrderedMeasure& mu, const QuadratureSpec& spec,
                              bool with_gradient = false);
std::vector<Vec> parisi_gradient_q(const SpeciesSystem& sys, const DiscreteOrderedMeasure& mu,
                                   const QuadratureSpec& spec);

// `species` is needed only when neither measure has an interior level.
double w1_ordered(const DiscreteOrderedMeasure& mu1, const DiscreteOrderedMeasure& mu2, int species = 0);

// Lipschitz constant of P in the ordered W1 distance: max row sum of Lambda Delta^2 Lambda.
double w1_lipschitz_constant(const SpeciesSystem& sys);

// Bound on |P_sys1(mu) - P_sys2(mu)| uniform in mu.
double parameter_lipschitz_bound(const SpeciesSystem& sys1, const SpeciesSystem& sys2);

// Nearest ordered chain: isotonic regression across levels per species, then clamp to [0,1].
void project_ordered(std::vector<Vec>& q);

struct RsbOptions {
  int max_iter = 2000;
  double grad_tol = 1e-7;
  std::vector<double> start_spreads{0.2, 0.5};
  std::vector<double> start_breaks{0.3, 0.7};
};

struct RsbResult {
  DiscreteOrderedMeasure measure;
  double value = 0.0;
  double rs_min_value = 0.0;
  double rs_gap = 0.0;          // rs_min_value - value
  double quadrature_error = 0.0;  // change of both values when nodes double
  Vec q_star;
  int iterations = 0;
  bool converged = false;
};

RsbResult minimize_rsb(const SpeciesSystem& sys, int r, const QuadratureSpec& spec, const RsbOptions& opts = {});

struct SupportReport {
  Vec q_min;
  Vec q_max;
  bool min_below_qstar = false;
  bool max_above_qstar = false;
  std::vector<int> counts;  // distinct support levels per species
  bool equal_counts = false;
};

SupportReport support_diagnostics(const DiscreteOrderedMeasure& mu, const Vec& q_star, double tol);

}  // namespace msk
