#include "msk/fixedpoint.hpp"

#include <algorithm>
#include <cmath>

namespace msk {

namespace {

double tanh2(double y) {
  const double t = std::tanh(y);
  return t * t;
}

// Second derivative of tanh^2.
double tanh2_dd(double y) {
  const double t = std::tanh(y);
  const double s2 = 1.0 - t * t;
  return 2.0 * s2 * (1.0 - 3.0 * t * t);
}

struct Side {
  Vec q;
  int iterations = 0;
  bool converged = false;
  bool monotone = true;
};

// Iterates from `start` towards the nearest fixed point. `down` says the
// iterates decrease. Newton steps are accepted only when they keep the iterate
// on the same side of the fixed point (sign of F(x)-x), so monotonicity holds.
Side iterate(const SpeciesSystem& sys, const Vec& start, bool down, const QuadratureSpec& spec,
             const SolverOptions& opts) {
  const int n = sys.size();
  Side side;
  side.q = start;
  Vec fq = F_map(sys, side.q, spec);
  const double sign_slack = 1e-14;
  for (int it = 1; it <= opts.max_iter; ++it) {
    side.iterations = it;
    const Vec g = fq - side.q;
    const double scale = std::max(side.q.cwiseAbs().maxCoeff(), 1e-300);
    Vec next = fq;
    Vec fnext;
    bool have_fnext = false;

    if (it > 8) {
      const Mat jac = F_jacobian(sys, side.q, spec) - Mat::Identity(n, n);
      Vec step = jac.fullPivLu().solve(-g);
      if (step.allFinite()) {
        for (int half = 0; half < 40; ++half) {
          Vec x = (side.q + step).cwiseMax(0.0).cwiseMin(1.0);
          const bool ordered = down ? ((x - side.q).array() <= 0.0).all() : ((x - side.q).array() >= 0.0).all();
          if (ordered && x.cwiseAbs().maxCoeff() > 0.0) {
            Vec fx = F_map(sys, x, spec);
            Vec gx = fx - x;
            const double slack = sign_slack * std::max(x.cwiseAbs().maxCoeff(), 1e-300);
            const bool same_side = down ? (gx.array() <= slack).all() : (gx.array() >= -slack).all();
            if (same_side) {
              next = x;
              fnext = fx;
              have_fnext = true;
              break;
            }
          }
          step *= 0.5;
        }
      }
    }
    if (!have_fnext) fnext = F_map(sys, next, spec);

    const Vec delta = next - side.q;
    const double tiny = 1e-15 * scale;
    if (down ? (delta.array() > tiny).any() : (delta.array() < -tiny).any()) side.monotone = false;
    const double step_size = delta.cwiseAbs().maxCoeff();
    side.q = next;
    fq = fnext;
    const double resid = (fq - side.q).cwiseAbs().maxCoeff();
    if (step_size <= opts.tol * scale || (it > 8 && resid <= 1e-14 * scale)) {
      side.converged = true;
      break;
    }
  }
  return side;
}

}  // namespace

const char* to_string(FixedPointClass c) {
  switch (c) {
    case FixedPointClass::UniqueInterior: return "UNIQUE_INTERIOR";
    case FixedPointClass::ZeroOnly: return "ZERO_ONLY";
    case FixedPointClass::ZeroAndInterior: return "ZERO_AND_INTERIOR";
  }
  return "?";
}

Vec field_variance(const SpeciesSystem& sys, const Vec& p) {
  return (sys.tau2 + 2.0 * sys.delta2_lambda() * p).cwiseMax(0.0);
}

Vec F_map(const SpeciesSystem& sys, const Vec& p, const QuadratureSpec& spec) {
  const Vec v = field_variance(sys, p);
  Vec out(sys.size());
  for (int s = 0; s < sys.size(); ++s) out[s] = expect_1d(tanh2, std::sqrt(v[s]), spec);
  return out;
}

Mat F_jacobian(const SpeciesSystem& sys, const Vec& p, const QuadratureSpec& spec) {
  const Vec v = field_variance(sys, p);
  Vec d(sys.size());
  for (int s = 0; s < sys.size(); ++s) d[s] = expect_1d(tanh2_dd, std::sqrt(v[s]), spec);
  return d.asDiagonal() * sys.delta2_lambda();
}

FixedPointReport solve_qstar(const SpeciesSystem& sys, const QuadratureSpec& spec, const SolverOptions& opts) {
  if (!sys.irreducible) throw ModelError("solve_qstar: system is not irreducible");
  spec.validate();
  const int n = sys.size();
  FixedPointReport rep;

  const bool zero_field = sys.tau2_zero();
  const double rho0 = spectral_radius(sys.delta2_lambda());

  if (zero_field && rho0 <= 0.5) {
    // Zero is the only fixed point; iterating towards it is sublinear at rho0 = 1/2.
    rep.q_star = Vec::Zero(n);
    rep.q_min = Vec::Zero(n);
    rep.classification = FixedPointClass::ZeroOnly;
    rep.converged = true;
    rep.residual = 0.0;
    return rep;
  }

  Side top = iterate(sys, Vec::Ones(n), true, spec, opts);
  Side bottom;
  if (zero_field) {
    bottom.q = Vec::Zero(n);
    bottom.converged = true;
  } else {
    bottom = iterate(sys, Vec::Zero(n), false, spec, opts);
  }

  rep.q_star = top.q;
  rep.q_min = bottom.q;
  rep.iterations = top.iterations + bottom.iterations;
  rep.monotone = top.monotone && bottom.monotone;
  rep.converged = top.converged && bottom.converged;
  rep.residual = (F_map(sys, rep.q_star, spec) - rep.q_star).cwiseAbs().maxCoeff();

  const double gap = (rep.q_star - rep.q_min).cwiseAbs().maxCoeff();
  if (zero_field) {
    rep.classification = FixedPointClass::ZeroAndInterior;
    rep.consistent = gap > 100.0 * opts.tol && (rep.q_star.array() > 0.0).all();
  } else {
    rep.classification = FixedPointClass::UniqueInterior;
    rep.consistent = gap < 10.0 * opts.tol;
  }
  if (!rep.converged) throw ConvergenceError("solve_qstar: iteration cap reached", rep);
  return rep;
}

RegionSign region_sign(const SpeciesSystem& sys, const Vec& q, const QuadratureSpec& spec) {
  check_overlap(q, sys.size());
  RegionSign out;
  out.g = F_map(sys, q, spec) - q;
  out.in_r1 = (out.g.array() >= 0.0).all();
  out.in_r2 = (out.g.array() <= 0.0).all() && (q.array() != 0.0).any();
  return out;
}

}  // namespace msk
