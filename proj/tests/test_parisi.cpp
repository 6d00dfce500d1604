#include <gtest/gtest.h>

#include <numeric>

#include "msk/parisi.hpp"
#include "support.hpp"

using namespace msk;

namespace {
const QuadratureSpec spec{};

DiscreteOrderedMeasure rs_measure(const Vec& q) { return DiscreteOrderedMeasure::dirac(q); }

// Measure whose atoms all carry multiples of 1/K mass, expanded to K unit points.
std::vector<Vec> quanta(const DiscreteOrderedMeasure& mu, int S, int K) {
  std::vector<Vec> out;
  for (const auto& a : mu.atoms(S)) {
    const int n = static_cast<int>(std::lround(a.mass * K));
    for (int i = 0; i < n; ++i) out.push_back(a.point);
  }
  return out;
}

DiscreteOrderedMeasure lattice_measure(std::mt19937_64& gen, int S, int K) {
  // zeta on the grid k/K with strict increase
  std::vector<int> ks(K + 1);
  std::iota(ks.begin(), ks.end(), 0);
  std::shuffle(ks.begin(), ks.end(), gen);
  const int r = 1 + static_cast<int>(gen() % 3);
  std::vector<int> pick(ks.begin(), ks.begin() + r);
  std::sort(pick.begin(), pick.end());
  DiscreteOrderedMeasure mu = oracle::random_measure(gen, S, r);
  for (int l = 0; l < r; ++l) mu.zeta[l] = static_cast<double>(pick[l]) / K;
  return mu;
}
}  // namespace

TEST(ParisiValue, RsCoincidence) {
  std::mt19937_64 gen(1);
  for (int rep = 0; rep < 10; ++rep) {
    const auto sys = oracle::random_system(gen, 1 + rep % 3, rep % 4 == 0);
    const Vec q = oracle::random_overlap(gen, sys.size());
    EXPECT_NEAR(parisi_value(sys, rs_measure(q), spec).value, rs_value(sys, q, spec).value, 1e-10);
  }
}

TEST(ParisiValue, SingleSpeciesZeroOverlap) {
  for (double b2 : {0.3, 1.7}) {
    const double v = parisi_value(oracle::single(b2, 0.0), rs_measure(Vec::Zero(1)), spec).value;
    EXPECT_NEAR(v, M_LN2 + b2 / 2, 1e-12);
  }
}

TEST(ParisiValue, DegenerateAndRefinement) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto sys = oracle::random_system(gen, 2);
    const auto mu2 = oracle::random_measure(gen, 2, 2 + rep % 2);
    // duplicate the first interior level with a split of its mass
    DiscreteOrderedMeasure mu3 = mu2;
    const double zsplit = 0.5 * (mu2.zeta[0] + mu2.zeta[1]);
    mu3.zeta.insert(mu3.zeta.begin() + 1, zsplit);
    mu3.q.insert(mu3.q.begin(), mu2.q[0]);
    EXPECT_NEAR(parisi_value(sys, mu2, spec).value, parisi_value(sys, mu3, spec).value, 1e-9);
  }
}

TEST(ParisiValue, WeightNormalization) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 5; ++rep) {
    const auto sys = oracle::random_system(gen, 2);
    EXPECT_LE(parisi_value(sys, oracle::random_measure(gen, 2, 3), spec, true).weight_error, 1e-10);
  }
}

TEST(ParisiValue, Rejections) {
  const auto sys = oracle::single(1.0, 0.1);
  DiscreteOrderedMeasure bad{{0.2, 0.2, 0.9}, {Vec::Constant(1, 0.1), Vec::Constant(1, 0.3)}};
  EXPECT_THROW(parisi_value(sys, bad, spec), ModelError);
  bad = {{0.1, 0.2, 0.9}, {Vec::Constant(1, 0.5), Vec::Constant(1, 0.3)}};
  EXPECT_THROW(parisi_value(sys, bad, spec), ModelError);
  bad = {{0.1, 1.2}, {Vec::Constant(1, 0.5)}};
  EXPECT_THROW(parisi_value(sys, bad, spec), ModelError);
  DiscreteOrderedMeasure big;
  for (int l = 0; l < 9; ++l) big.zeta.push_back(l / 9.0);
  for (int l = 1; l < 9; ++l) big.q.push_back(Vec::Constant(1, l / 9.0));
  EXPECT_THROW(parisi_value(sys, big, spec), ModelError);
}

TEST(Gradient, RsSpecialization) {
  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 10; ++rep) {
    const auto sys = oracle::random_system(gen, 2 + rep % 2);
    const Vec q = oracle::random_overlap(gen, sys.size());
    const Vec g = parisi_gradient_q(sys, rs_measure(q), spec)[0];
    const Vec expected = sys.coupling() * (q - F_map(sys, q, spec));
    EXPECT_LT((g - expected).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Gradient, VanishesAtFixedPoint) {
  std::mt19937_64 gen(5);
  const auto sys = oracle::random_system(gen, 3);
  const Vec qs = solve_qstar(sys, spec).q_star;
  EXPECT_LT(parisi_gradient_q(sys, rs_measure(qs), spec)[0].cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Gradient, FiniteDifferences) {
  std::mt19937_64 gen(6);
  const double h = 1e-4;
  for (int rep = 0; rep < 3; ++rep) {
    const auto sys = oracle::random_system(gen, 2);
    auto mu = oracle::random_measure(gen, 2, 3);
    // keep q away from the chain boundary so the +-h stencil stays valid
    for (auto& q : mu.q) q = 0.1 + 0.8 * q.array();
    mu.q[1] = mu.q[1].cwiseMax(mu.q[0] + Vec::Constant(2, 0.01));
    const auto ev = parisi_value(sys, mu, spec, true);
    for (int l = 0; l < 2; ++l)
      for (int s = 0; s < 2; ++s) {
        auto up = mu, dn = mu;
        up.q[l][s] += h;
        dn.q[l][s] -= h;
        const double fd = (parisi_value(sys, up, spec).value - parisi_value(sys, dn, spec).value) / (2 * h);
        EXPECT_NEAR(ev.gradient_q[l][s], fd, 1e-4 * std::max(std::abs(fd), 1e-3));
      }
    for (int l = 1; l < 3; ++l) {
      auto up = mu, dn = mu;
      const double hz = 1e-5;
      up.zeta[l] += hz;
      dn.zeta[l] -= hz;
      if (l == 2 && up.zeta[l] > 1.0) continue;
      const double fd = (parisi_value(sys, up, spec).value - parisi_value(sys, dn, spec).value) / (2 * hz);
      EXPECT_NEAR(ev.gradient_zeta[l], fd, 1e-5 * std::max(std::abs(fd), 1e-3));
    }
  }
}

TEST(W1, Examples) {
  std::mt19937_64 gen(7);
  const auto mu = oracle::random_measure(gen, 3, 3);
  EXPECT_EQ(w1_ordered(mu, mu), 0.0);
  const Vec p = oracle::random_overlap(gen, 3), q = oracle::random_overlap(gen, 3);
  EXPECT_NEAR(w1_ordered(rs_measure(p), rs_measure(q)), (p - q).lpNorm<1>(), 1e-15);
  const DiscreteOrderedMeasure one{{0.25}, {}};
  EXPECT_NEAR(w1_ordered(one, DiscreteOrderedMeasure{{0.75}, {}}, 3), 1.5, 1e-15);
  EXPECT_THROW(w1_ordered(one, one), ModelError);
}

TEST(W1, ExhaustiveMatchingOracle) {
  std::mt19937_64 gen(8);
  const int K = 6, S = 2;
  for (int rep = 0; rep < 30; ++rep) {
    const auto a = lattice_measure(gen, S, K);
    const auto b = lattice_measure(gen, S, K);
    const auto pa = quanta(a, S, K), pb = quanta(b, S, K);
    ASSERT_EQ(pa.size(), static_cast<std::size_t>(K));
    ASSERT_EQ(pb.size(), static_cast<std::size_t>(K));
    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double c = 0.0;
      for (int i = 0; i < K; ++i) c += (pa[i] - pb[perm[i]]).lpNorm<1>() / K;
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(w1_ordered(a, b, S), best, 1e-10);
  }
}

TEST(Lipschitz, W1AndParameters) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int rep = 0; rep < 20; ++rep) {
    const int S = 2;
    const auto sys = oracle::random_system(gen, S);
    const auto m1 = oracle::random_measure(gen, S, 2 + rep % 2);
    const auto m2 = oracle::random_measure(gen, S, 2 + (rep / 2) % 2);
    const double d = std::abs(parisi_value(sys, m1, spec).value - parisi_value(sys, m2, spec).value);
    EXPECT_LE(d, w1_lipschitz_constant(sys) * w1_ordered(m1, m2) + 1e-8);

    Mat d2 = sys.delta2;
    for (int s = 0; s < S; ++s)
      for (int t = s; t < S; ++t) d2(s, t) = d2(t, s) = std::max(0.0, d2(s, t) + u(gen));
    Vec tau = (sys.tau2 + Vec::NullaryExpr(S, [&] { return u(gen); })).cwiseMax(0.0);
    Vec l = (sys.lambda + Vec::NullaryExpr(S, [&] { return u(gen); })).cwiseMax(0.05);
    l /= l.sum();
    const auto other = validate_system(l, d2, tau);
    const double dp = std::abs(parisi_value(sys, m1, spec).value - parisi_value(other, m1, spec).value);
    EXPECT_LE(dp, parameter_lipschitz_bound(sys, other) + 1e-8);
  }
}

TEST(Projection, Isotonic) {
  std::vector<Vec> q{Vec::Constant(1, 0.5), Vec::Constant(1, 0.3), Vec::Constant(1, 1.4)};
  project_ordered(q);
  EXPECT_NEAR(q[0][0], 0.4, 1e-15);
  EXPECT_NEAR(q[1][0], 0.4, 1e-15);
  EXPECT_EQ(q[2][0], 1.0);
}

TEST(Minimize, NoCoupling) {
  const auto sys = oracle::single(0.0, 0.4);
  const auto res = minimize_rsb(sys, 3, spec);
  EXPECT_NEAR(res.value, res.rs_min_value, 1e-14);
  for (const Vec& g : parisi_gradient_q(sys, res.measure, spec)) EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Minimize, SingleSpeciesRsb) {
  const auto sys = oracle::single(0.75, 0.01);
  const auto res = minimize_rsb(sys, 3, spec);
  EXPECT_GT(res.rs_gap, 10.0 * res.quadrature_error);
  const auto rep = support_diagnostics(res.measure, res.q_star, 1e-6);
  EXPECT_TRUE(rep.min_below_qstar);
  EXPECT_TRUE(rep.max_above_qstar);
  EXPECT_TRUE(rep.equal_counts);
  EXPECT_GE(rep.counts[0], 2);
  EXPECT_THROW(minimize_rsb(sys, 5, spec), ModelError);
}

TEST(Support, DiracAndNegativeControl) {
  Vec qs(2);
  qs << 0.4, 0.6;
  const auto rep = support_diagnostics(rs_measure(qs), qs, 1e-9);
  EXPECT_EQ(rep.q_min, qs);
  EXPECT_EQ(rep.q_max, qs);
  EXPECT_EQ(rep.counts, (std::vector<int>{1, 1}));
  EXPECT_TRUE(rep.min_below_qstar && rep.max_above_qstar && rep.equal_counts);

  Vec a(2), b(2);
  a << 0.5, 0.7;
  b << 0.8, 0.9;
  const DiscreteOrderedMeasure bad{{0.0, 0.5, 1.0}, {a, b}};
  EXPECT_FALSE(support_diagnostics(bad, qs, 1e-9).min_below_qstar);
}
