#include "msk/rs_at.hpp"

#include <array>
#include <cmath>

namespace msk {

namespace {

constexpr int kSeriesTerms = 9;

// c_n with gamma_deficit(sigma) = sum_n c_n sigma^(2n), from the Taylor series
// of tanh (t' = 1 - t^2) and the Gaussian moments E z^(2n) = (2n-1)!!.
std::array<double, kSeriesTerms> deficit_coefficients() {
  constexpr int deg = 2 * kSeriesTerms + 4;
  std::array<double, deg + 1> a{};  // tanh
  for (int k = 0; k < deg; ++k) {
    double conv = 0.0;
    for (int i = 0; i <= k; ++i) conv += a[i] * a[k - i];
    a[k + 1] = ((k == 0 ? 1.0 : 0.0) - conv) / (k + 1);
  }
  std::array<double, deg + 1> t2{}, s2{}, s4{};
  for (int k = 0; k <= deg; ++k)
    for (int i = 0; i <= k; ++i) t2[k] += a[i] * a[k - i];
  for (int k = 0; k <= deg; ++k) s2[k] = (k == 0 ? 1.0 : 0.0) - t2[k];
  for (int k = 0; k <= deg; ++k)
    for (int i = 0; i <= k; ++i) s4[k] += s2[i] * s2[k - i];

  auto dfact = [](int n) {  // (2n-1)!!
    double r = 1.0;
    for (int j = 1; j <= n; ++j) r *= 2.0 * j - 1.0;
    return r;
  };
  std::array<double, kSeriesTerms> c{};
  for (int n = 0; n < kSeriesTerms; ++n) c[n] = s4[2 * n] * dfact(n) - t2[2 * n + 2] * dfact(n + 1);
  return c;
}

double sech4(double y) {
  const double c = std::cosh(y);
  if (!std::isfinite(c)) return 0.0;
  const double s = 1.0 / c;
  return s * s * s * s;
}

double tanh2(double y) {
  const double t = std::tanh(y);
  return t * t;
}

}  // namespace

const char* to_string(Phase p) { return p == Phase::RS ? "RS" : "RSB"; }

RSValue rs_value(const SpeciesSystem& sys, const Vec& q, const QuadratureSpec& spec) {
  check_overlap(q, sys.size());
  const Vec v = field_variance(sys, q);
  RSValue out;
  out.log2_term = M_LN2;
  for (int s = 0; s < sys.size(); ++s) out.entropy_term += sys.lambda[s] * expect_1d(log_cosh, std::sqrt(v[s]), spec);
  const Vec d = Vec::Ones(sys.size()) - q;
  out.quadratic_term = 0.5 * quadratic_B(sys, d);
  out.value = out.log2_term + out.entropy_term + out.quadratic_term;
  return out;
}

RSVectorField rs_vectorfield(const SpeciesSystem& sys, const Vec& q, const QuadratureSpec& spec) {
  check_overlap(q, sys.size());
  RSVectorField out;
  out.u = F_map(sys, q, spec) - q;
  out.directional_derivative = -quadratic_B(sys, out.u);
  return out;
}

double gamma_deficit(double sigma, const QuadratureSpec& spec) {
  const double x = sigma * sigma;
  if (x < 1e-3) {
    static const auto c = deficit_coefficients();
    double acc = 0.0;
    for (int n = kSeriesTerms - 1; n >= 0; --n) acc = acc * x + c[n];
    return acc;
  }
  return expect_1d(sech4, sigma, spec) - expect_1d(tanh2, sigma, spec) / x;
}

ATReport gamma_and_at(const SpeciesSystem& sys, const QuadratureSpec& spec, const SolverOptions& opts) {
  ATReport rep;
  rep.fixed_point = solve_qstar(sys, spec, opts);
  rep.q_star = rep.fixed_point.q_star;
  const int n = sys.size();
  const Vec v = field_variance(sys, rep.q_star);
  rep.gamma_diag.resize(n);
  for (int s = 0; s < n; ++s) rep.gamma_diag[s] = expect_1d(sech4, std::sqrt(v[s]), spec);
  const Mat dl = sys.delta2_lambda();
  const PerronResult pr = perron(rep.gamma_diag.asDiagonal() * dl);
  rep.rho = pr.rho;
  rep.margin = rep.rho - 0.5;

  const bool interior = (rep.q_star.array() > 0.0).all();
  if (sys.tau2_zero() && interior) {
    // At a zero-field fixed point, D = diag(F_s/sigma_s^2) satisfies
    // rho(D Delta^2 Lambda) = 1/2 exactly, and Gamma = D + K with K small near
    // the AT point. With w the left Perron vector of D Delta^2 Lambda and v the
    // right one of Gamma Delta^2 Lambda,
    //   rho(Gamma Delta^2 Lambda) - rho(D Delta^2 Lambda) = w^T K Delta^2 Lambda v / w^T v,
    // which has no cancellation.
    const Vec f = F_map(sys, rep.q_star, spec);
    Vec dd(n), kk(n);
    for (int s = 0; s < n; ++s) {
      dd[s] = f[s] / v[s];
      kk[s] = gamma_deficit(std::sqrt(v[s]), spec);
    }
    const Mat a = dd.asDiagonal() * dl;
    const Vec w = perron(a.transpose()).vector;
    const Vec& right = pr.vector;
    rep.margin = w.dot(kk.asDiagonal() * dl * right) / w.dot(right);
  }
  rep.phase = rep.margin > 0.0 ? Phase::RSB : Phase::RS;
  rep.rs_min_value = rs_value(sys, rep.q_star, spec).value;
  return rep;
}

InterpolatedProfile interpolate_profile(const SpeciesSystem& sys, const Vec& q_star, double t,
                                        const QuadratureSpec& spec) {
  if (!(t >= 0.0 && t <= 1.0)) throw ModelError("interpolate_profile: t outside [0,1]");
  check_overlap(q_star, sys.size());
  InterpolatedProfile p;
  p.t = t;
  p.delta2_t = t * sys.delta2;
  const Vec shift = 2.0 * sys.delta2_lambda() * q_star;
  p.tau2_t = sys.tau2 + (1.0 - t) * shift;
  const Vec v = (sys.tau2 + shift).cwiseMax(0.0);
  double entropy = 0.0;
  for (int s = 0; s < sys.size(); ++s) entropy += sys.lambda[s] * expect_1d(log_cosh, std::sqrt(v[s]), spec);
  const Vec d = Vec::Ones(sys.size()) - q_star;
  p.rs_star_t = M_LN2 + entropy + 0.5 * t * quadratic_B(sys, d);
  return p;
}

InterpolatedProfile interpolate_profile(const SpeciesSystem& sys, double t, const QuadratureSpec& spec) {
  return interpolate_profile(sys, solve_qstar(sys, spec).q_star, t, spec);
}

SpeciesSystem profile_system(const SpeciesSystem& sys, const InterpolatedProfile& prof) {
  return validate_system(sys.lambda, prof.delta2_t, prof.tau2_t);
}

}  // namespace msk
