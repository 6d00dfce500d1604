#pragma once

#include <random>

#include "msk/model.hpp"

namespace msk::oracle {

// Random irreducible system: positive off-diagonal couplings so the
// species graph is complete.
inline SpeciesSystem random_system(std::mt19937_64& gen, int S, bool zero_field = false, double scale = 1.0) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Vec lambda(S);
  for (int s = 0; s < S; ++s) lambda[s] = u(gen);
  lambda /= lambda.sum();
  Mat d(S, S);
  for (int s = 0; s < S; ++s)
    for (int t = s; t < S; ++t) d(s, t) = d(t, s) = scale * u(gen);
  Vec tau(S);
  for (int s = 0; s < S; ++s) tau[s] = zero_field ? 0.0 : u(gen);
  return validate_system(lambda, d, tau);
}

// Positive-definite variant: diagonally dominant Delta^2.
inline SpeciesSystem random_pd_system(std::mt19937_64& gen, int S, double scale = 1.0) {
  SpeciesSystem sys = random_system(gen, S, false, scale);
  Mat d = sys.delta2;
  for (int s = 0; s < S; ++s) d(s, s) += d.row(s).sum();
  return validate_system(sys.lambda, d, sys.tau2);
}

inline Vec random_overlap(std::mt19937_64& gen, int S) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec q(S);
  for (int s = 0; s < S; ++s) q[s] = u(gen);
  return q;
}

inline SpeciesSystem single(double delta2, double tau2) {
  return validate_system(Vec::Ones(1), Mat::Constant(1, 1, delta2), Vec::Constant(1, tau2));
}

}  // namespace msk::oracle

#include <algorithm>

#include "msk/parisi.hpp"

namespace msk::oracle {

// Random valid r-level measure; zeta_0 is zero half of the time.
inline DiscreteOrderedMeasure random_measure(std::mt19937_64& gen, int S, int r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DiscreteOrderedMeasure mu;
  std::vector<double> z(r);
  for (auto& v : z) v = u(gen);
  std::sort(z.begin(), z.end());
  if (u(gen) < 0.5) z[0] = 0.0;
  mu.zeta = z;
  std::vector<Vec> q(r - 1, Vec(S));
  for (int s = 0; s < S; ++s) {
    std::vector<double> c(r - 1);
    for (auto& v : c) v = u(gen);
    std::sort(c.begin(), c.end());
    for (int l = 0; l < r - 1; ++l) q[l][s] = c[l];
  }
  mu.q = q;
  return mu;
}

}  // namespace msk::oracle

namespace msk::oracle {

// base with Delta^2 scaled so that rho(Gamma Delta^2 Lambda) hits `target`.
inline SpeciesSystem with_rho(const SpeciesSystem& base, double target, const QuadratureSpec& spec) {
  auto at = [&](double k) { return validate_system(base.lambda, k * base.delta2, base.tau2); };
  auto rho = [&](double k) { return gamma_and_at(at(k), spec).rho; };
  double lo = 0.0, hi = 1.0;
  while (rho(hi) < target) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rho(mid) < target ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

}  // namespace msk::oracle
