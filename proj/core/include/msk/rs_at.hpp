#pragma once

#include "msk/fixedpoint.hpp"

namespace msk {

struct RSValue {
  double value = 0.0;
  double log2_term = 0.0;
  double entropy_term = 0.0;    // sum_s lambda_s E log cosh(...)
  double quadratic_term = 0.0;  // (1/2) B(1-q)
};

RSValue rs_value(const SpeciesSystem& sys, const Vec& q, const QuadratureSpec& spec);

struct RSVectorField {
  Vec u;                                // F(q) - q
  double directional_derivative = 0.0;  // -B(u,u)
};

RSVectorField rs_vectorfield(const SpeciesSystem& sys, const Vec& q, const QuadratureSpec& spec);

enum class Phase { RS, RSB };
const char* to_string(Phase p);

struct ATReport {
  FixedPointReport fixed_point;
  Vec q_star;
  Vec gamma_diag;
  double rho = 0.0;     // rho(Gamma Delta^2 Lambda)
  double margin = 0.0;  // rho - 1/2, evaluated without cancellation at zero field
  Phase phase = Phase::RS;
  double rs_min_value = 0.0;
};

// E sech^4(sigma z) - E tanh^2(sigma z) / sigma^2, accurate for small sigma.
double gamma_deficit(double sigma, const QuadratureSpec& spec);

ATReport gamma_and_at(const SpeciesSystem& sys, const QuadratureSpec& spec, const SolverOptions& opts = {});

struct InterpolatedProfile {
  double t = 1.0;
  Mat delta2_t;
  Vec tau2_t;
  double rs_star_t = 0.0;
};

InterpolatedProfile interpolate_profile(const SpeciesSystem& sys, const Vec& q_star, double t,
                                        const QuadratureSpec& spec);
InterpolatedProfile interpolate_profile(const SpeciesSystem& sys, double t, const QuadratureSpec& spec);

// Re-validated system for an interpolated profile (lambda unchanged).
SpeciesSystem profile_system(const SpeciesSystem& sys, const InterpolatedProfile& prof);

}  // namespace msk
