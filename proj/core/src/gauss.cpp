#include "msk/gauss.hpp"

#include <algorithm>

namespace msk {

GaussRule gaussian_rule(double sigma, const QuadratureSpec& spec) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian_rule: sigma must be finite and >= 0");
  GaussRule rule;
  if (sigma == 0.0) {
    rule.x = {0.0};
    rule.w = {1.0};
    return rule;
  }
  const double hz = std::min(spec.physical_step() / sigma, spec.standard_step());
  const int half = static_cast<int>(std::ceil(kGaussTail / hz));
  rule.x.reserve(2 * half + 1);
  rule.w.reserve(2 * half + 1);
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double z = k * hz;
    const double w = std::exp(-0.5 * z * z);
    rule.x.push_back(sigma * z);
    rule.w.push_back(w);
    total += w;
  }
  for (double& w : rule.w) w /= total;
  return rule;
}

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

}  // namespace msk
