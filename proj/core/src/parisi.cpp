#include "msk/parisi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace msk {

namespace {

constexpr int kStencil = 14;  // Lagrange points for off-lattice reads

// One Gaussian convolution y -> E g(y + sigma z) expressed on the lattice y = i*h.
struct Transition {
  double sigma = 0.0;
  bool aligned = true;
  std::vector<double> w;    // node weights, sum to 1
  std::vector<double> d;    // physical offsets sigma z_k
  std::vector<int> off;     // lattice offsets (aligned) or stencil base (interpolated)
  std::vector<std::array<double, kStencil>> lag;
  int center = 0;           // node with d = 0
  int reach = 0;            // lattice points needed on each side
};

Transition make_transition(double sigma, double h, const QuadratureSpec& spec) {
  Transition t;
  t.sigma = sigma;
  if (sigma == 0.0) {
    t.w = {1.0};
    t.d = {0.0};
    t.off = {0};
    t.center = 0;
    t.reach = 0;
    return t;
  }
  const double hz_aligned = h / sigma;
  t.aligned = hz_aligned <= spec.standard_step();
  const double hz = t.aligned ? hz_aligned : spec.standard_step();
  const int half = static_cast<int>(std::ceil(kGaussTail / hz));
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double z = k * hz;
    const double w = std::exp(-0.5 * z * z);
    t.w.push_back(w);
    t.d.push_back(sigma * z);
    total += w;
    if (t.aligned) {
      t.off.push_back(k);
    } else {
      const double pos = sigma * z / h;
      const int base = static_cast<int>(std::floor(pos));
      const double f = pos - base;
      std::array<double, kStencil> lw{};
      for (int j = 0; j < kStencil; ++j) {
        const int xj = j - kStencil / 2 + 1;
        double num = 1.0, den = 1.0;
        for (int m = 0; m < kStencil; ++m) {
          if (m == j) continue;
          const int xm = m - kStencil / 2 + 1;
          num *= (f - xm);
          den *= (xj - xm);
        }
        lw[j] = num / den;
      }
      t.off.push_back(base);
      t.lag.push_back(lw);
    }
  }
  for (double& w : t.w) w /= total;
  t.center = half;
  if (t.aligned) {
    t.reach = half;
  } else {
    int m = 0;
    for (int b : t.off) m = std::max(m, std::abs(b));
    t.reach = m + kStencil / 2 + 1;
  }
  return t;
}

// Values on a symmetric lattice grid with index i <-> y = (i - n) h.
struct Grid {
  int n = 0;
  std::vector<double> v;
};

// Reads the source at every node around y = yi*h. `src` null means the
// source is the analytic function `g`.
template <class G>
void read_row(const Transition& t, double h, int yi, const Grid* src, G&& g, double* row) {
  const int nodes = static_cast<int>(t.w.size());
  if (!src) {
    for (int k = 0; k < nodes; ++k) row[k] = g(yi * h + t.d[k]);
  } else if (t.aligned) {
    const double* base = &src->v[yi + src->n];
    for (int k = 0; k < nodes; ++k) row[k] = base[t.off[k]];
  } else {
    for (int k = 0; k < nodes; ++k) {
      const double* s = &src->v[yi + t.off[k] + src->n - kStencil / 2 + 1];
      const auto& lw = t.lag[k];
      double acc = 0.0;
      for (int j = 0; j < kStencil; ++j) acc += lw[j] * s[j];
      row[k] = acc;
    }
  }
}

double tanh_fn(double y) { return std::tanh(y); }

struct SpeciesResult {
  double ex0 = 0.0;
  std::vector<double> a;      // a_l, l = 1..r-1
  std::vector<double> dzeta;  // d E_h X_0 / d zeta_l, l = 0..r-1
  double weight_error = 0.0;
};

// Backward recursion for one species. incr[l] = sqrt(Q_l - Q_{l-1}) for
// l = 1..r (incr[0] unused); tau = sd of h. All grid functions are even or odd
// in y, so only y >= 0 is computed.
SpeciesResult species_recursion(double tau, const std::vector<double>& incr, const std::vector<double>& zeta,
                                const QuadratureSpec& spec, bool with_gradient) {
  const int r = static_cast<int>(zeta.size());
  const double h = 0.5 * spec.physical_step();

  // trans[j] maps level j+1 to level j; field maps level 0 to the point y = 0.
  std::vector<Transition> trans;
  trans.reserve(r);
  for (int j = 0; j < r; ++j) trans.push_back(make_transition(incr[j + 1], h, spec));
  const Transition field = make_transition(tau, h, spec);

  std::vector<int> n(r);  // half-extent of the grid at level j = 0..r-1
  n[0] = field.reach;
  for (int j = 1; j < r; ++j) n[j] = n[j - 1] + trans[j - 1].reach;

  std::vector<Grid> X(r), D(with_gradient ? r : 0);
  std::vector<std::vector<double>> eff(r);  // w_k W_{j+1}(y_i, k) for y_i >= 0
  std::vector<double> row;
  SpeciesResult res;

  for (int j = r - 1; j >= 0; --j) {
    const Transition& t = trans[j];
    const int nodes = static_cast<int>(t.w.size());
    row.resize(nodes);
    X[j].n = n[j];
    X[j].v.assign(2 * n[j] + 1, 0.0);
    if (with_gradient) {
      D[j].n = n[j];
      D[j].v.assign(2 * n[j] + 1, 0.0);
    }
    eff[j].assign(static_cast<std::size_t>(n[j] + 1) * nodes, 0.0);
    const double z = zeta[j];
    const Grid* src = j == r - 1 ? nullptr : &X[j + 1];
    for (int yi = 0; yi <= n[j]; ++yi) {
      read_row(t, h, yi, src, log_cosh, row.data());
      double* e = &eff[j][static_cast<std::size_t>(yi) * nodes];
      double xj = 0.0, dj = 0.0;
      if (z == 0.0) {
        double m1 = 0.0, m2 = 0.0;
        for (int k = 0; k < nodes; ++k) {
          m1 += t.w[k] * row[k];
          m2 += t.w[k] * row[k] * row[k];
          e[k] = t.w[k];
        }
        xj = m1;
        dj = 0.5 * (m2 - m1 * m1);
      } else {
        const double m = row[t.center];
        double acc = 0.0;
        for (int k = 0; k < nodes; ++k) {
          e[k] = std::expm1(z * (row[k] - m));
          acc += t.w[k] * e[k];
        }
        const double l1p = std::log1p(acc);
        xj = m + l1p / z;
        const double scale = 1.0 / (1.0 + acc);
        double norm = 0.0, ew = 0.0, m1 = 0.0, m2 = 0.0;
        for (int k = 0; k < nodes; ++k) {
          e[k] = t.w[k] * (1.0 + e[k]) * scale;
          norm += e[k];
          ew += e[k] * (row[k] - m);
          m1 += t.w[k] * (row[k] - m);
          m2 += t.w[k] * (row[k] - m) * (row[k] - m);
        }
        res.weight_error = std::max(res.weight_error, std::abs(norm - 1.0));
        // d/dzeta of (1/zeta) log E exp(zeta X) is (E_W X - X_j)/zeta; its
        // zeta -> 0 limit Var(X)/2 avoids cancellation for tiny zeta.
        dj = z < 1e-6 ? 0.5 * (m2 - m1 * m1) : (ew - (xj - m)) / z;
      }
      X[j].v[n[j] + yi] = X[j].v[n[j] - yi] = xj;
      if (with_gradient) D[j].v[n[j] + yi] = D[j].v[n[j] - yi] = dj;
    }
  }

  auto field_mean = [&](const Grid& g) {
    row.resize(field.w.size());
    read_row(field, h, 0, &g, tanh_fn, row.data());
    double acc = 0.0;
    for (std::size_t k = 0; k < field.w.size(); ++k) acc += field.w[k] * row[k];
    return acc;
  };
  res.ex0 = field_mean(X[0]);

  if (!with_gradient) return res;

  // out(y) = E[W_{j+1} src(Y_{j+1}) | Y_j = y]; parity +1 for even, -1 for odd.
  auto apply = [&](int j, const Grid* src, double parity, Grid& out) {
    const Transition& t = trans[j];
    const int nodes = static_cast<int>(t.w.size());
    row.resize(nodes);
    out.n = n[j];
    out.v.assign(2 * n[j] + 1, 0.0);
    for (int yi = 0; yi <= n[j]; ++yi) {
      read_row(t, h, yi, src, tanh_fn, row.data());
      const double* e = &eff[j][static_cast<std::size_t>(yi) * nodes];
      double acc = 0.0;
      for (int k = 0; k < nodes; ++k) acc += e[k] * row[k];
      out.v[n[j] + yi] = acc;
      out.v[n[j] - yi] = parity * acc;
    }
  };
  auto down_to_field = [&](Grid cur, int from) {
    Grid next;
    for (int j = from - 1; j >= 0; --j) {
      apply(j, &cur, 1.0, next);
      std::swap(cur, next);
    }
    return field_mean(cur);
  };

  res.dzeta.assign(r, 0.0);
  for (int l = 0; l < r; ++l) res.dzeta[l] = down_to_field(D[l], l);

  if (r < 2) return res;
  // m_l(y) = E[W_{l+1}...W_r tanh Y_r | Y_l = y] for l = r-1..1.
  std::vector<Grid> m(r);
  apply(r - 1, nullptr, -1.0, m[r - 1]);
  for (int l = r - 2; l >= 1; --l) apply(l, &m[l + 1], -1.0, m[l]);
  res.a.assign(r - 1, 0.0);
  for (int l = 1; l <= r - 1; ++l) {
    Grid sq = m[l];
    for (double& v : sq.v) v *= v;
    res.a[l - 1] = down_to_field(std::move(sq), l);
  }
  return res;
}

}  // namespace

void DiscreteOrderedMeasure::validate(int species) const {
  const int r = levels();
  if (r < 1) throw ModelError("measure: at least one level required");
  if (static_cast<int>(q.size()) != r - 1) throw ModelError("measure: need r-1 interior q levels");
  for (int l = 0; l < r; ++l) {
    if (!std::isfinite(zeta[l])) throw ModelError("measure: non-finite zeta");
    if (l == 0 && zeta[0] < 0.0) throw ModelError("measure: zeta_0 < 0");
    if (l > 0 && !(zeta[l] > zeta[l - 1])) throw ModelError("measure: zeta must increase strictly");
  }
  if (zeta[r - 1] > 1.0) throw ModelError("measure: zeta_{r-1} > 1");
  const double slack = 1e-12;
  for (int l = 0; l < r - 1; ++l) {
    check_overlap(q[l], species, slack);
    if (l > 0 && ((q[l] - q[l - 1]).array() < -slack).any()) throw ModelError("measure: q levels not ordered");
  }
}

std::vector<DiscreteOrderedMeasure::Atom> DiscreteOrderedMeasure::atoms(int species) const {
  const int r = levels();
  std::vector<Atom> out;
  double prev = 0.0;
  for (int l = 0; l <= r; ++l) {
    const double z = l < r ? zeta[l] : 1.0;
    Vec p = l == 0 ? Vec::Zero(species) : (l == r ? Vec::Ones(species) : q[l - 1]);
    out.push_back({z - prev, p});
    prev = z;
  }
  return out;
}

DiscreteOrderedMeasure DiscreteOrderedMeasure::dirac(const Vec& q) { return {{0.0, 1.0}, {q}}; }

namespace {

// Evaluation without the strict-ordering check; the optimizer may produce
// coincident zeta levels, which are harmless here.
ParisiEvaluation evaluate(const SpeciesSystem& sys, const std::vector<double>& zeta, const std::vector<Vec>& q,
                          const QuadratureSpec& spec, bool with_gradient) {
  const int S = sys.size();
  const int r = static_cast<int>(zeta.size());
  ParisiEvaluation ev;
  const Mat dl = sys.delta2_lambda();
  const Mat M = sys.coupling();
  for (int l = 0; l <= r; ++l) {
    const Vec ql = l == 0 ? Vec::Zero(S) : (l == r ? Vec::Ones(S) : Vec(q[l - 1]));
    ev.Q.push_back(ql.dot(M * ql));
    ev.Q_species.push_back(2.0 * dl * ql);
  }
  ev.X0.resize(S);
  std::vector<SpeciesResult> per(S);
  for (int s = 0; s < S; ++s) {
    std::vector<double> incr(r + 1, 0.0);
    for (int l = 1; l <= r; ++l) {
      const double d = ev.Q_species[l][s] - ev.Q_species[l - 1][s];
      if (d < -1e-12) throw ModelError("parisi_value: negative variance increment");
      incr[l] = std::sqrt(std::max(d, 0.0));
    }
    per[s] = species_recursion(std::sqrt(sys.tau2[s]), incr, zeta, spec, with_gradient);
    ev.X0[s] = per[s].ex0;
    ev.weight_error = std::max(ev.weight_error, per[s].weight_error);
  }
  double quad = 0.0;
  for (int l = 0; l < r; ++l) quad += zeta[l] * (ev.Q[l + 1] - ev.Q[l]);
  ev.value = M_LN2 + sys.lambda.dot(ev.X0) - 0.5 * quad;

  if (with_gradient) {
    for (int l = 1; l <= r - 1; ++l) {
      Vec al(S);
      for (int s = 0; s < S; ++s) al[s] = per[s].a[l - 1];
      const double dz = zeta[l] - zeta[l - 1];
      ev.gradient_q.push_back(dz * (M * (q[l - 1] - al)));
      ev.a.push_back(al);
    }
    for (int l = 0; l < r; ++l) {
      double g = -0.5 * (ev.Q[l + 1] - ev.Q[l]);
      for (int s = 0; s < S; ++s) g += sys.lambda[s] * per[s].dzeta[l];
      ev.gradient_zeta.push_back(g);
    }
  }
  return ev;
}

}  // namespace

ParisiEvaluation parisi_value(const SpeciesSystem& sys, const DiscreteOrderedMeasure& mu, const QuadratureSpec& spec,
                              bool with_gradient) {
  spec.validate();
  mu.validate(sys.size());
  if (mu.levels() > 8) throw ModelError("parisi_value: at most 8 levels");
  return evaluate(sys, mu.zeta, mu.q, spec, with_gradient);
}

std::vector<Vec> parisi_gradient_q(const SpeciesSystem& sys, const DiscreteOrderedMeasure& mu,
                                   const QuadratureSpec& spec) {
  return parisi_value(sys, mu, spec, true).gradient_q;
}

double w1_ordered(const DiscreteOrderedMeasure& mu1, const DiscreteOrderedMeasure& mu2, int species) {
  int S = species;
  for (const auto* mu : {&mu1, &mu2})
    if (mu->levels() > 1) {
      const int n = static_cast<int>(mu->q[0].size());
      if (S > 0 && S != n) throw ModelError("w1_ordered: species counts differ");
      S = n;
    }
  if (S <= 0) throw ModelError("w1_ordered: species count unknown");
  mu1.validate(S);
  mu2.validate(S);
  const auto a = mu1.atoms(S);
  const auto b = mu2.atoms(S);
  std::size_t i = 0, j = 0;
  double ra = a[0].mass, rb = b[0].mass, acc = 0.0;
  while (i < a.size() && j < b.size()) {
    if (ra <= 0.0) {
      if (++i < a.size()) ra = a[i].mass;
      continue;
    }
    if (rb <= 0.0) {
      if (++j < b.size()) rb = b[j].mass;
      continue;
    }
    const double m = std::min(ra, rb);
    acc += m * (a[i].point - b[j].point).lpNorm<1>();
    ra -= m;
    rb -= m;
    if (ra <= 1e-15 && i + 1 < a.size()) ra = 0.0;
    if (rb <= 1e-15 && j + 1 < b.size()) rb = 0.0;
  }
  return acc;
}

double w1_lipschitz_constant(const SpeciesSystem& sys) {
  return sys.coupling().cwiseAbs().rowwise().sum().maxCoeff();
}

double parameter_lipschitz_bound(const SpeciesSystem& a, const SpeciesSystem& b) {
  if (a.size() != b.size()) throw ModelError("parameter_lipschitz_bound: species counts differ");
  const int S = a.size();
  const double dlam = (a.lambda - b.lambda).cwiseAbs().sum();
  const Vec row = 0.5 * a.tau2 + a.delta2_lambda() * Vec::Ones(S);
  double out = row.maxCoeff() * dlam;
  out += 0.5 * (a.tau2 - b.tau2).cwiseAbs().maxCoeff();
  out += (a.delta2 - b.delta2).cwiseAbs().rowwise().sum().maxCoeff();
  out += a.delta2.cwiseMax(b.delta2).maxCoeff() * dlam;
  out += 0.5 * (a.coupling() - b.coupling()).cwiseAbs().sum();
  return out;
}

void project_ordered(std::vector<Vec>& q) {
  if (q.empty()) return;
  const int L = static_cast<int>(q.size());
  const int S = static_cast<int>(q[0].size());
  for (int s = 0; s < S; ++s) {
    // Pool adjacent violators with unit weights.
    std::vector<double> val;
    std::vector<int> cnt;
    for (int l = 0; l < L; ++l) {
      val.push_back(q[l][s]);
      cnt.push_back(1);
      while (val.size() > 1 && val[val.size() - 2] > val.back()) {
        const double v = (val[val.size() - 2] * cnt[cnt.size() - 2] + val.back() * cnt.back()) /
                         (cnt[cnt.size() - 2] + cnt.back());
        const int c = cnt[cnt.size() - 2] + cnt.back();
        val.pop_back();
        cnt.pop_back();
        val.back() = v;
        cnt.back() = c;
      }
    }
    int l = 0;
    for (std::size_t b = 0; b < val.size(); ++b)
      for (int c = 0; c < cnt[b]; ++c) q[l++][s] = std::clamp(val[b], 0.0, 1.0);
  }
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) {
  p = std::clamp(p, 1e-9, 1.0 - 1e-9);
  return std::log(p / (1.0 - p));
}

// Unconstrained coordinates: zeta increments are a softmax of r+1 logits
// (the last fixed at 0), and q_l = q_{l-1} + (1 - q_{l-1}) sigmoid(x_l).
struct Reparam {
  int r = 0;
  int S = 0;
  int dim() const { return r + (r - 1) * S; }

  void decode(const double* th, std::vector<double>& delta, std::vector<double>& zeta, std::vector<Vec>& q) const {
    double cmax = 0.0;
    for (int i = 0; i < r; ++i) cmax = std::max(cmax, th[i]);
    delta.assign(r + 1, 0.0);
    double total = 0.0;
    for (int i = 0; i <= r; ++i) total += delta[i] = std::exp((i < r ? th[i] : 0.0) - cmax);
    zeta.assign(r, 0.0);
    double acc = 0.0;
    for (int i = 0; i <= r; ++i) delta[i] /= total;
    for (int l = 0; l < r; ++l) zeta[l] = std::min(acc += delta[l], 1.0);
    q.assign(r - 1, Vec::Zero(S));
    for (int l = 1; l <= r - 1; ++l)
      for (int s = 0; s < S; ++s) {
        const double prev = l == 1 ? 0.0 : q[l - 2][s];
        q[l - 1][s] = prev + (1.0 - prev) * sigmoid(th[r + (l - 1) * S + s]);
      }
  }

  void encode(const DiscreteOrderedMeasure& mu, double* th) const {
    std::vector<double> delta(r + 1);
    double prev = 0.0;
    for (int l = 0; l < r; ++l) {
      delta[l] = std::max(mu.zeta[l] - prev, 1e-6);
      prev = mu.zeta[l];
    }
    delta[r] = std::max(1.0 - prev, 1e-6);
    for (int i = 0; i < r; ++i) th[i] = std::log(delta[i] / delta[r]);
    for (int l = 1; l <= r - 1; ++l)
      for (int s = 0; s < S; ++s) {
        const double lo = l == 1 ? 0.0 : mu.q[l - 2][s];
        const double frac = lo < 1.0 ? (mu.q[l - 1][s] - lo) / (1.0 - lo) : 0.0;
        th[r + (l - 1) * S + s] = logit(frac);
      }
  }

  void chain(const double* th, const std::vector<double>& delta, const std::vector<double>& zeta,
             const std::vector<Vec>& q, const ParisiEvaluation& ev, double* g) const {
    for (int i = 0; i < r; ++i) {
      double acc = 0.0;
      for (int l = 0; l < r; ++l) acc += ev.gradient_zeta[l] * ((i <= l ? delta[i] : 0.0) - delta[i] * zeta[l]);
      g[i] = acc;
    }
    Vec G = Vec::Zero(S);
    for (int l = r - 1; l >= 1; --l) {
      Vec next(S);
      for (int s = 0; s < S; ++s) {
        if (l < r - 1) G[s] *= 1.0 - sigmoid(th[r + l * S + s]);
        G[s] += ev.gradient_q[l - 1][s];
        const double x = th[r + (l - 1) * S + s];
        const double sg = sigmoid(x);
        const double prev = l == 1 ? 0.0 : q[l - 2][s];
        g[r + (l - 1) * S + s] = G[s] * (1.0 - prev) * sg * (1.0 - sg);
      }
    }
  }
};

struct Objective {
  const SpeciesSystem* sys;
  const QuadratureSpec* spec;
  Reparam rp;
};

double obj_f(const gsl_vector* x, void* p) {
  auto* o = static_cast<Objective*>(p);
  std::vector<double> delta, zeta;
  std::vector<Vec> q;
  o->rp.decode(x->data, delta, zeta, q);
  return evaluate(*o->sys, zeta, q, *o->spec, false).value;
}

void obj_fdf(const gsl_vector* x, void* p, double* f, gsl_vector* g) {
  auto* o = static_cast<Objective*>(p);
  std::vector<double> delta, zeta;
  std::vector<Vec> q;
  o->rp.decode(x->data, delta, zeta, q);
  const ParisiEvaluation ev = evaluate(*o->sys, zeta, q, *o->spec, true);
  if (f) *f = ev.value;
  o->rp.chain(x->data, delta, zeta, q, ev, g->data);
}

void obj_df(const gsl_vector* x, void* p, gsl_vector* g) { obj_fdf(x, p, nullptr, g); }

// Drops levels whose atom carries no mass.
DiscreteOrderedMeasure canonical(std::vector<double> zeta, std::vector<Vec> q) {
  for (int l = static_cast<int>(zeta.size()) - 1; l >= 1; --l) {
    if (zeta[l] <= zeta[l - 1]) {
      zeta.erase(zeta.begin() + l);
      q.erase(q.begin() + (l - 1));
    }
  }
  return {zeta, q};
}

struct RunResult {
  DiscreteOrderedMeasure mu;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

RunResult run_bfgs(const SpeciesSystem& sys, const QuadratureSpec& spec, const RsbOptions& opts,
                   const DiscreteOrderedMeasure& start) {
  Objective obj{&sys, &spec, {start.levels(), sys.size()}};
  const int n = obj.rp.dim();
  gsl_multimin_function_fdf fn{obj_f, obj_df, obj_fdf, static_cast<size_t>(n), &obj};
  gsl_vector* x = gsl_vector_alloc(n);
  obj.rp.encode(start, x->data);
  gsl_multimin_fdfminimizer* m = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
  gsl_multimin_fdfminimizer_set(m, &fn, x, 0.1, 0.1);

  RunResult out;
  for (out.iterations = 1; out.iterations <= opts.max_iter; ++out.iterations) {
    const int status = gsl_multimin_fdfminimizer_iterate(m);
    if (gsl_multimin_test_gradient(m->gradient, opts.grad_tol) == GSL_SUCCESS) {
      out.converged = true;
      break;
    }
    if (status) {
      // No further progress possible at this precision.
      out.converged = gsl_blas_dnrm2(m->gradient) < 1e3 * opts.grad_tol;
      break;
    }
  }
  std::vector<double> delta, zeta;
  std::vector<Vec> q;
  obj.rp.decode(m->x->data, delta, zeta, q);
  out.mu = canonical(zeta, q);
  out.value = evaluate(sys, out.mu.zeta, out.mu.q, spec, false).value;
  gsl_multimin_fdfminimizer_free(m);
  gsl_vector_free(x);
  return out;
}

}  // namespace

RsbResult minimize_rsb(const SpeciesSystem& sys, int r, const QuadratureSpec& spec, const RsbOptions& opts) {
  if (r < 2 || r > 4) throw ModelError("minimize_rsb: r must be in 2..4");
  const int S = sys.size();
  RsbResult res;
  const ATReport at = gamma_and_at(sys, spec);
  res.q_star = at.q_star;
  res.rs_min_value = at.rs_min_value;

  std::vector<DiscreteOrderedMeasure> starts;
  {
    DiscreteOrderedMeasure rs;
    for (int l = 0; l < r; ++l) rs.zeta.push_back(static_cast<double>(l) / (r - 1));
    rs.q.assign(r - 1, at.q_star);
    starts.push_back(rs);
  }
  for (double spread : opts.start_spreads) {
    for (double brk : opts.start_breaks) {
      DiscreteOrderedMeasure mu;
      const Vec lo = at.q_star * (1.0 - spread);
      const Vec hi = at.q_star + spread * (Vec::Ones(S) - at.q_star);
      for (int l = 1; l <= r - 1; ++l) {
        const double f = r == 2 ? 0.5 : static_cast<double>(l - 1) / (r - 2);
        mu.q.push_back(lo + f * (hi - lo));
      }
      mu.zeta.push_back(0.0);
      for (int l = 1; l < r - 1; ++l) mu.zeta.push_back(r == 3 ? brk : brk * l / (r - 2));
      mu.zeta.push_back(1.0);
      if (r == 2) mu.zeta = {0.0, 1.0};
      starts.push_back(mu);
    }
  }

  gsl_set_error_handler_off();
  res.value = std::numeric_limits<double>::infinity();
  for (const auto& mu : starts) {
    const RunResult run = run_bfgs(sys, spec, opts, mu);
    res.iterations += run.iterations;
    if (run.value < res.value) {
      res.value = run.value;
      res.measure = run.mu;
      res.converged = run.converged;
    }
  }
  res.rs_gap = res.rs_min_value - res.value;

  QuadratureSpec fine = spec;
  fine.nodes = 2 * spec.nodes;
  const double v_fine = parisi_value(sys, res.measure, fine).value;
  const double rs_fine = rs_value(sys, res.q_star, fine).value;
  res.quadrature_error = std::abs(v_fine - res.value) + std::abs(rs_fine - res.rs_min_value);
  return res;
}

SupportReport support_diagnostics(const DiscreteOrderedMeasure& mu, const Vec& q_star, double tol) {
  const int S = static_cast<int>(q_star.size());
  mu.validate(S);
  SupportReport rep;
  std::vector<Vec> pts;
  for (const auto& a : mu.atoms(S))
    if (a.mass > 1e-12) pts.push_back(a.point);
  rep.q_min = pts.front();
  rep.q_max = pts.back();
  rep.min_below_qstar = ((rep.q_min - q_star).array() <= tol).all();
  rep.max_above_qstar = ((q_star - rep.q_max).array() <= tol).all();
  rep.counts.assign(S, 0);
  for (int s = 0; s < S; ++s) {
    double last = -1.0;
    for (const Vec& p : pts) {
      if (rep.counts[s] == 0 || p[s] - last > tol) {
        ++rep.counts[s];
        last = p[s];
      }
    }
  }
  rep.equal_counts = std::all_of(rep.counts.begin(), rep.counts.end(), [&](int c) { return c == rep.counts[0]; });
  return rep;
}

}  // namespace msk
