#pragma once

#include "msk/gauss.hpp"
#include "msk/model.hpp"

namespace msk {

enum class FixedPointClass { UniqueInterior, ZeroOnly, ZeroAndInterior };

const char* to_string(FixedPointClass c);

struct FixedPointReport {
  Vec q_star;  // maximal fixed point, reached from the all-ones vector
  Vec q_min;   // reached from the zero vector
  int iterations = 0;
  double residual = 0.0;  // sup-norm of F(q_star) - q_star
  FixedPointClass classification = FixedPointClass::UniqueInterior;
  bool converged = false;
  bool monotone = true;    // iterates moved monotonically on both sides
  bool consistent = true;  // gap-based detection agrees with tau^2 and rho(Delta^2 Lambda)
};

struct SolverOptions {
  double tol = 1e-11;
  int max_iter = 50000;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, FixedPointReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const FixedPointReport& report() const { return report_; }

 private:
  FixedPointReport report_;
};

// tau^2 + 2 Delta^2 Lambda p, clipped at 0.
Vec field_variance(const SpeciesSystem& sys, const Vec& p);

Vec F_map(const SpeciesSystem& sys, const Vec& p, const QuadratureSpec& spec);
Mat F_jacobian(const SpeciesSystem& sys, const Vec& p, const QuadratureSpec& spec);

FixedPointReport solve_qstar(const SpeciesSystem& sys, const QuadratureSpec& spec, const SolverOptions& opts = {});

struct RegionSign {
  Vec g;  // F(q) - q
  bool in_r1 = false;
  bool in_r2 = false;
};

RegionSign region_sign(const SpeciesSystem& sys, const Vec& q, const QuadratureSpec& spec);

}  // namespace msk
