#pragma once

#include <vector>

#include "msk/rs_at.hpp"

namespace msk {

// Parameters of the two-replica 1-RSB bound. u = c*q1 + c'*(q2 - q1).
struct GTParams {
  Vec c;
  Vec c_prime;
  Vec q1;
  Vec q2;
  double m = 0.5;
  Vec b;

  Vec u() const;
  void validate(const SpeciesSystem& sys) const;
};

double gt_upper_bound(const SpeciesSystem& sys, const GTParams& p, const QuadratureSpec& spec);

// Per-species part that depends on b_s:
//   -lambda_s b_s u_s + lambda_s (1/m) E log E'(cosh Y1 cosh Y2 cosh b + sinh Y1 sinh Y2 sinh b)^m.
double gt_species_term(const SpeciesSystem& sys, const GTParams& p, int s, double b_s, const QuadratureSpec& spec);

enum class GTBranch { Upper, Lower };
const char* to_string(GTBranch b);

// Upper: c = c' = 1, q1 = q*, q2 = u, m = 1/2. Lower: c = 1, c' = 0, q1 = u, q2 = q*, m = 0. b = 0.
GTParams gt_branch_params(const SpeciesSystem& sys, const Vec& u, const Vec& q_star, GTBranch branch);

// Upper when Delta^2 Lambda (u - q*) >= 0, Lower when <= 0; throws otherwise.
GTBranch gt_select_branch(const SpeciesSystem& sys, const Vec& u, const Vec& q_star);

struct GTGradient {
  GTBranch branch = GTBranch::Upper;
  Vec W;         // dU/db at b = 0
  Vec integral;  // (2 Gamma_hat Lambda Delta^2 Lambda - Lambda)(u - q*)
  Vec gamma_hat; // int_0^1 Gamma(q* + t(u - q*)) dt
};

// Gamma along a branch: Upper E[E' sech^3 Y / E' cosh Y], Lower E[(E' sech^2 Y)^2].
Vec gt_branch_gamma(const SpeciesSystem& sys, const Vec& u, const Vec& q_star, GTBranch branch,
                    const QuadratureSpec& spec);

GTGradient gt_b_gradient_at_zero(const SpeciesSystem& sys, const Vec& u, const Vec& q_star, GTBranch branch,
                                 const QuadratureSpec& spec);
GTGradient gt_b_gradient_at_zero(const SpeciesSystem& sys, const Vec& u, GTBranch branch, const QuadratureSpec& spec);

struct GTCost {
  GTBranch branch = GTBranch::Upper;
  Vec u;
  Vec W;
  Vec b;                  // -Lambda^{-1} W / 2
  double rs_star2 = 0.0;  // 2 RS*
  double bound = 0.0;
  double cost = 0.0;      // 2 RS* - bound
  double distance = 0.0;  // B(u - q*)
  double bound_inf = 0.0; // numerical inf over b (when requested)
  double cost_inf = 0.0;
};

GTCost gt_cost_curve(const SpeciesSystem& sys, const Vec& u, const Vec& q_star, const QuadratureSpec& spec,
                     bool numerical_inf = false);

// Cost along u = q* + s v, v the Perron vector of Gamma Delta^2 Lambda, on
// `points` values of s per side, covering the part of [0,1]^S on the ray.
struct GTScan {
  Vec q_star;
  Vec direction;
  double rho = 0.0;
  std::vector<double> s;
  std::vector<GTCost> points;
  double c0 = 0.0;  // min cost / B(u - q*)
};

GTScan gt_cost_scan(const SpeciesSystem& sys, int points, const QuadratureSpec& spec);

}  // namespace msk
