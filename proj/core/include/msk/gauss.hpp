#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace msk {

// Resolution of every Gaussian expectation. `nodes` sets the density of the
// uniform rule below; doubling it halves both step sizes.
struct QuadratureSpec {
  int nodes = 40;
  std::uint64_t mc_samples = 200000;
  std::uint64_t seed = 0x5eedULL;

  void validate() const {
    if (nodes < 2) throw std::invalid_argument("quadrature: nodes must be >= 2");
    if (mc_samples < 1000) throw std::invalid_argument("quadrature: mc_samples must be >= 1000");
  }
  // Largest spacing of the rule in the physical variable y = sigma*z.
  double physical_step() const { return 10.0 / nodes; }
  // Largest spacing in the standardized variable z.
  double standard_step() const { return 20.0 / nodes; }
};

// Standardized half-width of every rule: mass beyond 11 sd is below 1e-27.
inline constexpr double kGaussTail = 11.0;

// Nodes y_k and weights w_k with sum_k w_k f(y_k) ~ E f(sigma z).
// The rule is the trapezoidal rule on a uniform grid, which converges
// geometrically for integrands analytic in a strip (tanh, sech, log cosh).
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

GaussRule gaussian_rule(double sigma, const QuadratureSpec& spec);

double log_cosh(double x);

template <class F>
double expect_1d(F&& f, double sigma, const QuadratureSpec& spec) {
  if (sigma == 0.0) return f(0.0);
  const GaussRule rule = gaussian_rule(sigma, spec);
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.x.size(); ++k) {
    const double v = f(rule.x[k]);
    if (!std::isfinite(v)) throw std::domain_error("expect_1d: non-finite integrand");
    acc += rule.w[k] * v;
  }
  return acc;
}

// E f(sigma z1, sigma z2) with corr(z1, z2) = corr, via z2 = corr z1 + sqrt(1-corr^2) w.
template <class F>
double expect_pair(F&& f, double sigma, double corr, const QuadratureSpec& spec) {
  if (!(corr >= -1.0 && corr <= 1.0)) throw std::invalid_argument("expect_pair: corr outside [-1,1]");
  const double perp = std::sqrt(std::max(0.0, 1.0 - corr * corr));
  const GaussRule outer = gaussian_rule(sigma, spec);
  const GaussRule inner = gaussian_rule(sigma * perp, spec);
  double acc = 0.0;
  for (std::size_t i = 0; i < outer.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < inner.x.size(); ++j) {
      const double v = f(outer.x[i], corr * outer.x[i] + inner.x[j]);
      if (!std::isfinite(v)) throw std::domain_error("expect_pair: non-finite integrand");
      row += inner.w[j] * v;
    }
    acc += outer.w[i] * row;
  }
  return acc;
}

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Monte Carlo cross-checks; never used on a hot path.
template <class F>
McEstimate mc_expect_1d(F&& f, double sigma, const QuadratureSpec& spec, std::uint64_t samples = 0) {
  const std::uint64_t n = samples ? samples : spec.mc_samples;
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal;
  double mean = 0.0, m2 = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double v = f(sigma * normal(gen));
    const double d = v - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (v - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))};
}

template <class F>
McEstimate mc_expect_pair(F&& f, double sigma, double corr, const QuadratureSpec& spec, std::uint64_t samples = 0) {
  const std::uint64_t n = samples ? samples : spec.mc_samples;
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal;
  const double perp = std::sqrt(std::max(0.0, 1.0 - corr * corr));
  double mean = 0.0, m2 = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double z1 = normal(gen);
    const double z2 = corr * z1 + perp * normal(gen);
    const double v = f(sigma * z1, sigma * z2);
    const double d = v - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (v - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))};
}

}  // namespace msk
