#pragma once

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <functional>
#include <stdexcept>

namespace msk::oracle {

// E f(sigma z) by adaptive integration over the real line, independent of the
// library's quadrature rule.
inline double adaptive_gauss(const std::function<double(double)>& f, double sigma) {
  if (sigma == 0.0) return f(0.0);
  struct Ctx {
    const std::function<double(double)>* f;
    double sigma;
  } ctx{&f, sigma};
  gsl_function g;
  g.function = [](double z, void* p) {
    auto* c = static_cast<Ctx*>(p);
    return (*c->f)(c->sigma * z) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  };
  g.params = &ctx;
  gsl_set_error_handler_off();
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(1000);
  double result = 0.0, err = 0.0;
  const int status = gsl_integration_qagi(&g, 1e-15, 1e-12, 1000, w, &result, &err);
  gsl_integration_workspace_free(w);
  if (status) throw std::runtime_error("adaptive_gauss failed");
  return result;
}

inline double tanh2(double y) {
  const double t = std::tanh(y);
  return t * t;
}

inline double sech4(double y) {
  const double c = std::cosh(y);
  return std::isfinite(c) ? 1.0 / (c * c * c * c) : 0.0;
}

// Root of g on [lo, hi] by plain bisection; g(lo) and g(hi) must differ in sign.
template <class G>
double bisect(G&& g, double lo, double hi, double tol = 1e-14) {
  double glo = g(lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace msk::oracle
