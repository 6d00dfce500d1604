#include <gtest/gtest.h>

#include "msk/fixedpoint.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace msk;

namespace {
const QuadratureSpec spec{};

bool leq(const Vec& a, const Vec& b, double slack = 0.0) { return ((a - b).array() <= slack).all(); }
}  // namespace

TEST(FMap, ZeroFieldAtZero) {
  std::mt19937_64 gen(1);
  const auto sys = oracle::random_system(gen, 3, true);
  EXPECT_EQ(F_map(sys, Vec::Zero(3), spec).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FMap, NoCouplingMatchesAdaptiveIntegral) {
  for (double s2 : {0.2, 1.0, 5.0}) {
    const auto sys = oracle::single(0.0, s2);
    Vec p(1);
    p << 0.6;
    EXPECT_NEAR(F_map(sys, p, spec)[0], oracle::adaptive_gauss(oracle::tanh2, std::sqrt(s2)), 1e-11);
  }
}

TEST(FMap, Monotone) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int S = 2 + rep % 3;
    const auto sys = oracle::random_system(gen, S, rep % 2 == 0);
    Vec p = oracle::random_overlap(gen, S);
    Vec p2 = p;
    for (int s = 0; s < S; ++s) p2[s] += (1.0 - p[s]) * u(gen);
    EXPECT_TRUE(leq(F_map(sys, p, spec), F_map(sys, p2, spec), 1e-15));
  }
}

TEST(Solve, ZeroOnly) {
  const auto rep = solve_qstar(oracle::single(0.5, 0.0), spec);
  EXPECT_EQ(rep.classification, FixedPointClass::ZeroOnly);
  EXPECT_EQ(rep.q_star[0], 0.0);
}

TEST(Solve, ZeroAndInteriorMatchesBisection) {
  const auto rep = solve_qstar(oracle::single(0.75, 0.0), spec);
  EXPECT_EQ(rep.classification, FixedPointClass::ZeroAndInterior);
  EXPECT_TRUE(rep.consistent);
  const double oracle = oracle::bisect(
      [](double q) { return oracle::adaptive_gauss(oracle::tanh2, std::sqrt(1.5 * q)) - q; }, 1e-3, 1.0);
  EXPECT_GT(rep.q_star[0], 0.0);
  EXPECT_NEAR(rep.q_star[0], oracle, 1e-10);
}

TEST(Solve, UniqueInteriorTwoSided) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 10; ++rep) {
    auto sys = oracle::random_system(gen, 2);
    sys = validate_system(sys.lambda, sys.delta2, Vec::Ones(2));
    const auto r = solve_qstar(sys, spec);
    EXPECT_EQ(r.classification, FixedPointClass::UniqueInterior);
    EXPECT_TRUE(r.consistent);
    EXPECT_TRUE(r.monotone);
    EXPECT_LT((r.q_star - r.q_min).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(r.residual, 1e-11);
  }
}

TEST(Solve, ReducibleRejected) {
  const auto sys = validate_system(Vec::Constant(2, 0.5), Mat::Identity(2, 2), Vec::Ones(2));
  EXPECT_THROW(solve_qstar(sys, spec), ModelError);
}

TEST(Solve, MonotoneInParameters) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int rep = 0; rep < 50; ++rep) {
    const int S = 2 + rep % 2;
    const auto lo = oracle::random_system(gen, S);
    Mat d = lo.delta2;
    for (int s = 0; s < S; ++s)
      for (int t = s; t < S; ++t) d(s, t) = d(t, s) = d(s, t) + u(gen);
    Vec tau = lo.tau2;
    for (int s = 0; s < S; ++s) tau[s] += u(gen);
    const auto hi = validate_system(lo.lambda, d, tau);
    EXPECT_TRUE(leq(solve_qstar(lo, spec).q_star, solve_qstar(hi, spec).q_star, 1e-10));
  }
}

TEST(Region, Examples) {
  std::mt19937_64 gen(5);
  const auto sys = oracle::random_system(gen, 3);
  const auto rep = solve_qstar(sys, spec);
  EXPECT_LT(region_sign(sys, rep.q_star, spec).g.cwiseAbs().maxCoeff(), 1e-10);
  const auto r0 = region_sign(sys, Vec::Zero(3), spec);
  EXPECT_TRUE((r0.g.array() > 0.0).all());
  EXPECT_TRUE(r0.in_r1);
  EXPECT_FALSE(r0.in_r2);
}

TEST(Region, R1BelowQstar) {
  std::mt19937_64 gen(6);
  int found = 0;
  for (int sys_rep = 0; sys_rep < 10; ++sys_rep) {
    const auto sys = oracle::random_system(gen, 2);
    const Vec qs = solve_qstar(sys, spec).q_star;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 400 && found < 200 * (sys_rep + 1) / 10; ++rep) {
      Vec q(2);
      q << u(gen) * std::min(1.0, 1.5 * qs[0]), u(gen) * std::min(1.0, 1.5 * qs[1]);
      const auto r = region_sign(sys, q, spec);
      if (!r.in_r1) continue;
      ++found;
      EXPECT_TRUE(leq(q, qs, 1e-10));
    }
  }
  EXPECT_EQ(found, 200);
}

TEST(Region, BoundaryExclusion) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int S = 2 + rep % 3;
    const auto sys = oracle::random_system(gen, S, rep % 2 == 0);
    Vec q = oracle::random_overlap(gen, S);
    q[rep % S] = (rep / S) % 2 ? 1.0 : 0.0;
    if (q.isZero()) continue;
    EXPECT_GT(region_sign(sys, q, spec).g.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Concavity, SecondDifference) {
  for (double a : {0.3, 1.0, 3.0})
    for (double b : {0.0, 0.5, 2.0}) {
      auto f = [&](double t) { return oracle::tanh2(a * std::sqrt(b + t)); };
      const double h = 1e-3;
      for (double t = 0.01; t < 3.0; t += 0.05) EXPECT_LE(f(t + h) - 2 * f(t) + f(t - h), 1e-14);
    }
}
