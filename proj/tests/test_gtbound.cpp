#include <gtest/gtest.h>

#include <gsl/gsl_integration.h>

#include "msk/gtbound.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace msk;

namespace {
const QuadratureSpec spec{};

// Single-species bound with every Gaussian (h, z1, z2, z1', z2') integrated
// separately on a Gauss-Hermite product rule.
double talagrand_single(double d2, double tau2, double c, double cp, double q1, double q2, double m, double b) {
  const int n = 28;
  gsl_integration_fixed_workspace* w = gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, n, 0.0, 1.0, 0.0, 0.0);
  std::vector<double> z(n), wt(n);
  for (int i = 0; i < n; ++i) {
    z[i] = std::sqrt(2.0) * gsl_integration_fixed_nodes(w)[i];
    wt[i] = gsl_integration_fixed_weights(w)[i] / std::sqrt(M_PI);
  }
  gsl_integration_fixed_free(w);
  const double so = std::sqrt(2 * d2 * q1), si = std::sqrt(2 * d2 * (q2 - q1)), th = std::sqrt(tau2);
  const double pc = std::sqrt(1 - c * c), pcp = std::sqrt(1 - cp * cp);
  double outer = 0.0;
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double o1 = th * z[a] + so * z[i];
        const double o2 = th * z[a] + so * (c * z[i] + pc * z[j]);
        double inner = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const double y1 = o1 + si * z[k], y2 = o2 + si * (cp * z[k] + pcp * z[l]);
            const double x = std::cosh(y1) * std::cosh(y2) * std::cosh(b) + std::sinh(y1) * std::sinh(y2) * std::sinh(b);
            inner += wt[k] * wt[l] * (m == 0.0 ? std::log(x) : std::pow(x, m));
          }
        outer += wt[a] * wt[i] * wt[j] * (m == 0.0 ? inner : std::log(inner) / m);
      }
  const double u = c * q1 + cp * (q2 - q1);
  const double quad = d2 * ((1 - q2) * (1 - q2) - m * (q2 * q2 - q1 * q1 + u * u - c * c * q1 * q1));
  return 2 * M_LN2 + quad - b * u + outer;
}

GTParams params(const Vec& c, const Vec& cp, const Vec& q1, const Vec& q2, double m, const Vec& b) {
  GTParams p;
  p.c = c;
  p.c_prime = cp;
  p.q1 = q1;
  p.q2 = q2;
  p.m = m;
  p.b = b;
  return p;
}

Vec uniform(std::mt19937_64& gen, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Vec::NullaryExpr(n, [&] { return u(gen); });
}
}  // namespace

TEST(GTBound, MZeroIsTwiceRs) {
  std::mt19937_64 gen(1);
  for (int rep = 0; rep < 4; ++rep) {
    const int S = 1 + rep % 3;
    const auto sys = oracle::random_system(gen, S);
    const auto at = gamma_and_at(sys, spec);
    const Vec q1 = at.q_star * uniform(gen, 1, 0, 1)[0];
    const auto p = params(uniform(gen, S, -1, 1), uniform(gen, S, -1, 1), q1, at.q_star, 0.0, Vec::Zero(S));
    EXPECT_NEAR(gt_upper_bound(sys, p, spec), 2 * at.rs_min_value, 1e-8);
  }
}

TEST(GTBound, HalfBelowTwiceRs) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 20; ++rep) {
    const int S = 1 + rep % 3;
    const auto sys = oracle::random_system(gen, S);
    const auto at = gamma_and_at(sys, spec);
    const Vec q2 = at.q_star + uniform(gen, S, 0, 1).cwiseProduct(Vec::Ones(S) - at.q_star);
    const auto p = params(Vec::Ones(S), Vec::Ones(S), at.q_star, q2, 0.5, Vec::Zero(S));
    EXPECT_LE(gt_upper_bound(sys, p, spec), 2 * at.rs_min_value + 1e-8);
  }
}

TEST(GTBound, NoInteraction) {
  Vec l(2);
  l << 0.3, 0.7;
  Vec tau(2);
  tau << 0.5, 1.5;
  Mat d = Mat::Zero(2, 2);
  const auto sys = validate_system(l, d, tau);
  Vec c(2), cp(2), q1(2), q2(2), b(2);
  c << 0.5, -0.2;
  cp << 0.9, 0.3;
  q1 << 0.2, 0.4;
  q2 << 0.6, 0.5;
  b << 0.3, -0.7;
  const auto p = params(c, cp, q1, q2, 0.5, b);
  const Vec u = p.u();
  double expected = 2 * M_LN2;
  for (int s = 0; s < 2; ++s) {
    // cosh^2 h cosh b + sinh^2 h sinh b = (e^b cosh 2h + e^-b) / 2
    auto f = [&](double h) {
      return -M_LN2 + b[s] + log_cosh(2 * h) + std::log1p(std::exp(-2 * b[s]) / std::cosh(2 * h));
    };
    expected += l[s] * (-b[s] * u[s] + oracle::adaptive_gauss(f, std::sqrt(tau[s])));
  }
  EXPECT_NEAR(gt_upper_bound(sys, p, spec), expected, 1e-10);
}

TEST(GTBound, SingleSpeciesAgainstIndependentEvaluation) {
  const double d2 = 0.6, tau2 = 0.2;
  const auto sys = oracle::single(d2, tau2);
  const Vec qs = solve_qstar(sys, spec).q_star;
  for (double u : {qs[0] * 0.4, qs[0] + 0.5 * (1 - qs[0])}) {
    const Vec uv = Vec::Constant(1, u);
    const GTBranch br = gt_select_branch(sys, uv, qs);
    GTParams p = gt_branch_params(sys, uv, qs, br);
    p.b = Vec::Constant(1, 0.25);
    const double oracle =
        talagrand_single(d2, tau2, p.c[0], p.c_prime[0], p.q1[0], p.q2[0], p.m, p.b[0]);
    EXPECT_NEAR(gt_upper_bound(sys, p, spec), oracle, 1e-8) << to_string(br);
  }
  // a generic parameter point
  const auto p = params(Vec::Constant(1, 0.6), Vec::Constant(1, -0.3), Vec::Constant(1, 0.2), Vec::Constant(1, 0.7),
                        0.35, Vec::Constant(1, -0.4));
  EXPECT_NEAR(gt_upper_bound(sys, p, spec), talagrand_single(d2, tau2, 0.6, -0.3, 0.2, 0.7, 0.35, -0.4), 1e-8);
}

TEST(GTBound, MContinuity) {
  std::mt19937_64 gen(3);
  const auto sys = oracle::random_system(gen, 2);
  Vec q1(2), q2(2);
  q1 << 0.2, 0.3;
  q2 << 0.5, 0.6;
  auto p = params(uniform(gen, 2, -1, 1), uniform(gen, 2, -1, 1), q1, q2, 0.0, uniform(gen, 2, -1, 1));
  const double at0 = gt_upper_bound(sys, p, spec);
  p.m = 1e-6;
  EXPECT_NEAR(gt_upper_bound(sys, p, spec), at0, 1e-5);
}

TEST(GTBound, Rejections) {
  const auto sys = oracle::single(0.6, 0.2);
  auto p = params(Vec::Ones(1), Vec::Ones(1), Vec::Constant(1, 0.6), Vec::Constant(1, 0.4), 0.5, Vec::Zero(1));
  EXPECT_THROW(gt_upper_bound(sys, p, spec), ModelError);
  p.q2[0] = 0.8;
  p.m = 1.5;
  EXPECT_THROW(gt_upper_bound(sys, p, spec), ModelError);
  p.m = 0.5;
  p.c[0] = 1.2;
  EXPECT_THROW(gt_upper_bound(sys, p, spec), ModelError);
}

TEST(WGradient, ZeroAtQstar) {
  std::mt19937_64 gen(4);
  const auto sys = oracle::random_system(gen, 3);
  const Vec qs = solve_qstar(sys, spec).q_star;
  for (auto br : {GTBranch::Upper, GTBranch::Lower})
    EXPECT_LT(gt_b_gradient_at_zero(sys, qs, qs, br, spec).W.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(WGradient, DirectIntegralAndFiniteDifference) {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 6; ++rep) {
    const int S = 1 + rep % 3;
    const auto sys = oracle::random_system(gen, S);
    const Vec qs = solve_qstar(sys, spec).q_star;
    const bool upper = rep % 2 == 0;
    const Vec frac = uniform(gen, 1, 0.1, 0.9)[0] * Vec::Ones(S);
    const Vec u = upper ? Vec(qs + frac.cwiseProduct(Vec::Ones(S) - qs)) : Vec(qs.cwiseProduct(Vec::Ones(S) - frac));
    const GTBranch br = upper ? GTBranch::Upper : GTBranch::Lower;
    const auto g = gt_b_gradient_at_zero(sys, u, qs, br, spec);
    EXPECT_LT((g.W - g.integral).cwiseAbs().maxCoeff(), 1e-6);
    const GTParams p = gt_branch_params(sys, u, qs, br);
    const double h = 1e-4;
    for (int s = 0; s < S; ++s) {
      const double up = gt_species_term(sys, p, s, h, spec), dn = gt_species_term(sys, p, s, -h, spec);
      const double mid = gt_species_term(sys, p, s, 0.0, spec);
      EXPECT_NEAR((up - dn) / (2 * h), g.W[s], 1e-5);
      const double hess = (up - 2 * mid + dn) / (h * h);
      EXPECT_GE(hess, -1e-6);
      EXPECT_LE(hess, sys.lambda[s] + 1e-6);
    }
    if (upper) {
      const Vec gam = gt_branch_gamma(sys, u, qs, br, spec);
      const Vec full = gamma_and_at(sys, spec).gamma_diag;
      EXPECT_TRUE(((gam - full).array() <= 1e-12).all());
    }
    EXPECT_THROW(gt_b_gradient_at_zero(sys, u, qs, upper ? GTBranch::Lower : GTBranch::Upper, spec), ModelError);
  }
}

TEST(Cost, ZeroAtQstarAndPositiveInsideAT) {
  std::mt19937_64 gen(6);
  const auto sys = oracle::with_rho(oracle::random_system(gen, 2), 0.35, spec);
  const Vec qs = solve_qstar(sys, spec).q_star;
  EXPECT_LE(std::abs(gt_cost_curve(sys, qs, qs, spec).cost), 1e-8);
  const auto scan = gt_cost_scan(sys, 6, spec);
  EXPECT_NEAR(scan.rho, 0.35, 1e-9);
  EXPECT_GT(scan.c0, 0.0);
  for (const auto& pt : scan.points) EXPECT_GT(pt.cost, 0.0);
}

// With b = -W/(2 lambda) the b-Hessian bound keeps the cost nonnegative on
// either side of AT; outside AT only the fitted constant collapses.
TEST(Cost, OutsideATConstantCollapses) {
  std::mt19937_64 gen(65);
  const auto base = oracle::random_pd_system(gen, 2);
  const auto in = gt_cost_scan(oracle::with_rho(base, 0.35, spec), 6, spec);
  const auto out = gt_cost_scan(oracle::with_rho(base, 0.65, spec), 6, spec);
  for (const auto& pt : out.points) EXPECT_GE(pt.cost, -1e-10);
  EXPECT_GT(out.c0, 0.0);
  EXPECT_LT(out.c0, 0.05 * in.c0);
}
