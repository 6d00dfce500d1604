#include "msk/gtbound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_integration.h>

namespace msk {

namespace {

constexpr double kOrderSlack = 1e-12;

struct Laws {
  double sigma_outer;
  double corr_outer;
  double sigma_inner;
  double corr_inner;
};

Laws species_laws(const SpeciesSystem& sys, const GTParams& p, int s) {
  const Mat dl = sys.delta2_lambda();
  const double a2 = std::max(0.0, 2.0 * dl.row(s).dot(p.q1));
  const double i2 = std::max(0.0, 2.0 * dl.row(s).dot(p.q2 - p.q1));
  Laws l;
  const double var = sys.tau2[s] + a2;
  l.sigma_outer = std::sqrt(var);
  l.corr_outer = var > 0.0 ? std::clamp((sys.tau2[s] + p.c[s] * a2) / var, -1.0, 1.0) : 1.0;
  l.sigma_inner = std::sqrt(i2);
  l.corr_inner = p.c_prime[s];
  return l;
}

double sech(double y) {
  const double c = std::cosh(y);
  return std::isfinite(c) ? 1.0 / c : 0.0;
}

}  // namespace

Vec GTParams::u() const { return c.cwiseProduct(q1) + c_prime.cwiseProduct(q2 - q1); }

void GTParams::validate(const SpeciesSystem& sys) const {
  const int S = sys.size();
  if (c.size() != S || c_prime.size() != S || q1.size() != S || q2.size() != S || b.size() != S)
    throw ModelError("GTParams: dimension mismatch");
  if ((c.array().abs() > 1.0).any() || (c_prime.array().abs() > 1.0).any())
    throw ModelError("GTParams: correlations must lie in [-1,1]");
  check_overlap(q1, S);
  check_overlap(q2, S);
  if (!(m >= 0.0 && m <= 1.0)) throw ModelError("GTParams: m outside [0,1]");
  if (!b.allFinite()) throw ModelError("GTParams: non-finite b");
  const Vec d = sys.delta2_lambda() * (q2 - q1);
  if ((d.array() < -kOrderSlack).any()) throw ModelError("GTParams: ordering Delta^2 Lambda q1 <= Delta^2 Lambda q2 violated");
}

double gt_species_term(const SpeciesSystem& sys, const GTParams& p, int s, double b_s, const QuadratureSpec& spec) {
  const Laws l = species_laws(sys, p, s);
  const double ch = std::cosh(b_s), sh = std::sinh(b_s);
  const double m = p.m;
  auto L = [&](double y1, double y2) {
    return log_cosh(y1) + log_cosh(y2) + std::log(ch + std::tanh(y1) * std::tanh(y2) * sh);
  };
  auto inner = [&](double o1, double o2) {
    if (m == 0.0) return expect_pair([&](double i1, double i2) { return L(o1 + i1, o2 + i2); }, l.sigma_inner, l.corr_inner, spec);
    const double l0 = L(o1, o2);
    const double v = expect_pair([&](double i1, double i2) { return std::exp(m * (L(o1 + i1, o2 + i2) - l0)); },
                                 l.sigma_inner, l.corr_inner, spec);
    return l0 + std::log(v) / m;
  };
  const double e = expect_pair(inner, l.sigma_outer, l.corr_outer, spec);
  const double u = p.u()[s];
  return sys.lambda[s] * (e - b_s * u);
}

double gt_upper_bound(const SpeciesSystem& sys, const GTParams& p, const QuadratureSpec& spec) {
  p.validate(sys);
  const int S = sys.size();
  const Vec one = Vec::Ones(S);
  const Vec u = p.u();
  double out = 2.0 * M_LN2 + quadratic_B(sys, one - p.q2);
  out -= p.m * (quadratic_B(sys, p.q2) - quadratic_B(sys, p.q1) + quadratic_B(sys, u) -
                quadratic_B(sys, p.c.cwiseProduct(p.q1)));
  for (int s = 0; s < S; ++s) out += gt_species_term(sys, p, s, p.b[s], spec);
  return out;
}

const char* to_string(GTBranch b) { return b == GTBranch::Upper ? "UPPER" : "LOWER"; }

GTParams gt_branch_params(const SpeciesSystem& sys, const Vec& u, const Vec& q_star, GTBranch branch) {
  const int S = sys.size();
  GTParams p;
  p.c = Vec::Ones(S);
  p.b = Vec::Zero(S);
  if (branch == GTBranch::Upper) {
    p.c_prime = Vec::Ones(S);
    p.q1 = q_star;
    p.q2 = u;
    p.m = 0.5;
  } else {
    p.c_prime = Vec::Zero(S);
    p.q1 = u;
    p.q2 = q_star;
    p.m = 0.0;
  }
  return p;
}

GTBranch gt_select_branch(const SpeciesSystem& sys, const Vec& u, const Vec& q_star) {
  check_overlap(u, sys.size());
  const Vec d = sys.delta2_lambda() * (u - q_star);
  if ((d.array() >= -kOrderSlack).all()) return GTBranch::Upper;
  if ((d.array() <= kOrderSlack).all()) return GTBranch::Lower;
  throw ModelError("gt: u outside both branches (Delta^2 Lambda (u - q*) changes sign)");
}

Vec gt_branch_gamma(const SpeciesSystem& sys, const Vec& u, const Vec& q_star, GTBranch branch,
                    const QuadratureSpec& spec) {
  const int S = sys.size();
  const Mat dl = sys.delta2_lambda();
  Vec g(S);
  for (int s = 0; s < S; ++s) {
    if (branch == GTBranch::Upper) {
      const double so = std::sqrt(std::max(0.0, sys.tau2[s] + 2.0 * dl.row(s).dot(q_star)));
      const double v = std::max(0.0, 2.0 * dl.row(s).dot(u - q_star));
      const double si = std::sqrt(v);
      // E' cosh(O + I) = cosh(O) e^{v/2}.
      g[s] = std::exp(-0.5 * v) * expect_1d(
                                      [&](double o) {
                                        return sech(o) * expect_1d([&](double i) {
                                          const double t = sech(o + i);
                                          return t * t * t;
                                        }, si, spec);
                                      },
                                      so, spec);
    } else {
      const double so = std::sqrt(std::max(0.0, sys.tau2[s] + 2.0 * dl.row(s).dot(u)));
      const double si = std::sqrt(std::max(0.0, 2.0 * dl.row(s).dot(q_star - u)));
      g[s] = expect_1d(
          [&](double o) {
            const double e = expect_1d([&](double i) {
              const double t = sech(o + i);
              return t * t;
            }, si, spec);
            return e * e;
          },
          so, spec);
    }
  }
  return g;
}

GTGradient gt_b_gradient_at_zero(const SpeciesSystem& sys, const Vec& u, const Vec& q_star, GTBranch branch,
                                 const QuadratureSpec& spec) {
  const int S = sys.size();
  const Vec d = sys.delta2_lambda() * (u - q_star);
  if (branch == GTBranch::Upper && (d.array() < -kOrderSlack).any())
    throw ModelError("gt_b_gradient_at_zero: UPPER needs Delta^2 Lambda (u - q*) >= 0");
  if (branch == GTBranch::Lower && (d.array() > kOrderSlack).any())
    throw ModelError("gt_b_gradient_at_zero: LOWER needs Delta^2 Lambda (u - q*) <= 0");

  const GTParams p = gt_branch_params(sys, u, q_star, branch);
  GTGradient out;
  out.branch = branch;
  out.W.resize(S);
  for (int s = 0; s < S; ++s) {
    // d/db (1/m) log E' X^m at b = 0 is E'[X^m t1 t2] / E' X^m with X = cosh Y1 cosh Y2.
    const Laws l = species_laws(sys, p, s);
    auto inner = [&](double o1, double o2) {
      if (p.m == 0.0)
        return expect_pair([&](double i1, double i2) { return std::tanh(o1 + i1) * std::tanh(o2 + i2); },
                           l.sigma_inner, l.corr_inner, spec);
      const double l0 = log_cosh(o1) + log_cosh(o2);
      double num = 0.0, den = 0.0;
      den = expect_pair([&](double i1, double i2) {
        return std::exp(p.m * (log_cosh(o1 + i1) + log_cosh(o2 + i2) - l0));
      }, l.sigma_inner, l.corr_inner, spec);
      num = expect_pair([&](double i1, double i2) {
        return std::exp(p.m * (log_cosh(o1 + i1) + log_cosh(o2 + i2) - l0)) * std::tanh(o1 + i1) * std::tanh(o2 + i2);
      }, l.sigma_inner, l.corr_inner, spec);
      return num / den;
    };
    out.W[s] = sys.lambda[s] * (expect_pair(inner, l.sigma_outer, l.corr_outer, spec) - u[s]);
  }

  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(32);
  out.gamma_hat = Vec::Zero(S);
  for (std::size_t i = 0; i < tab->n; ++i) {
    double t = 0.0, w = 0.0;
    gsl_integration_glfixed_point(0.0, 1.0, i, &t, &w, tab);
    out.gamma_hat += w * gt_branch_gamma(sys, q_star + t * (u - q_star), q_star, branch, spec);
  }
  gsl_integration_glfixed_table_free(tab);
  const Vec du = u - q_star;
  out.integral = sys.lambda.cwiseProduct(2.0 * out.gamma_hat.cwiseProduct(d) - du);
  return out;
}

GTGradient gt_b_gradient_at_zero(const SpeciesSystem& sys, const Vec& u, GTBranch branch, const QuadratureSpec& spec) {
  return gt_b_gradient_at_zero(sys, u, solve_qstar(sys, spec).q_star, branch, spec);
}

GTCost gt_cost_curve(const SpeciesSystem& sys, const Vec& u, const Vec& q_star, const QuadratureSpec& spec,
                     bool numerical_inf) {
  const int S = sys.size();
  GTCost out;
  out.u = u;
  out.branch = gt_select_branch(sys, u, q_star);
  const GTGradient g = gt_b_gradient_at_zero(sys, u, q_star, out.branch, spec);
  out.W = g.W;
  out.b = -0.5 * g.W.cwiseQuotient(sys.lambda);
  GTParams p = gt_branch_params(sys, u, q_star, out.branch);
  p.b = out.b;
  out.bound = gt_upper_bound(sys, p, spec);
  out.rs_star2 = 2.0 * rs_value(sys, q_star, spec).value;
  out.cost = out.rs_star2 - out.bound;
  out.distance = quadratic_B(sys, u - q_star);
  if (numerical_inf) {
    // The bound separates over species in b, and each piece is convex.
    p.b = Vec::Zero(S);
    double base = gt_upper_bound(sys, p, spec);
    for (int s = 0; s < S; ++s) {
      base -= gt_species_term(sys, p, s, 0.0, spec);
      auto f = [&](double x) { return gt_species_term(sys, p, s, x, spec); };
      boost::uintmax_t iters = 200;
      const auto best = boost::math::tools::brent_find_minima(f, -30.0, 30.0, 40, iters);
      base += best.second;
    }
    out.bound_inf = base;
    out.cost_inf = out.rs_star2 - out.bound_inf;
  }
  return out;
}

GTScan gt_cost_scan(const SpeciesSystem& sys, int points, const QuadratureSpec& spec) {
  if (points < 1) throw ModelError("gt_cost_scan: points must be >= 1");
  const ATReport at = gamma_and_at(sys, spec);
  GTScan out;
  out.q_star = at.q_star;
  out.rho = at.rho;
  out.direction = perron(at.gamma_diag.asDiagonal() * sys.delta2_lambda()).vector.cwiseAbs();
  const Vec& v = out.direction;
  double up = std::numeric_limits<double>::infinity(), down = std::numeric_limits<double>::infinity();
  for (int s = 0; s < sys.size(); ++s) {
    if (v[s] <= 0.0) continue;
    up = std::min(up, (1.0 - out.q_star[s]) / v[s]);
    down = std::min(down, out.q_star[s] / v[s]);
  }
  std::vector<double> grid;
  for (int k = points; k >= 1; --k) grid.push_back(-down * k / points);
  for (int k = 1; k <= points; ++k) grid.push_back(up * k / points);
  out.c0 = std::numeric_limits<double>::infinity();
  for (double s : grid) {
    if (s == 0.0) continue;
    const Vec u = (out.q_star + s * v).cwiseMax(0.0).cwiseMin(1.0);
    GTCost c = gt_cost_curve(sys, u, out.q_star, spec);
    if (c.distance > 0.0) out.c0 = std::min(out.c0, c.cost / c.distance);
    out.s.push_back(s);
    out.points.push_back(std::move(c));
  }
  return out;
}

}  // namespace msk
