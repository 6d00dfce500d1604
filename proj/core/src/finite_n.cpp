#include "msk/finite_n.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

namespace msk {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Visits every configuration in Gray-code order with its energy.
template <class V>
void enumerate(const FiniteInstance& inst, V&& visit) {
  const int n = inst.size();
  const double scale = std::sqrt(inst.t / n);
  const Mat A = scale * (inst.J + inst.J.transpose());
  const Vec f = inst.effective_field();
  std::vector<double> sigma(n, 1.0);
  std::vector<double> local(n);
  std::uint64_t code = 0;
  double H = inst.hamiltonian(0);
  auto refresh = [&] {
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != k) acc += A(k, j) * sigma[j];
      local[k] = acc;
    }
  };
  refresh();
  const std::uint64_t total = std::uint64_t{1} << n;
  visit(code, H);
  for (std::uint64_t i = 1; i < total; ++i) {
    const int k = std::countr_zero(i);
    const double old = sigma[k];
    H -= 2.0 * old * (local[k] + f[k]);
    sigma[k] = -old;
    code ^= std::uint64_t{1} << k;
    if ((i & 4095) == 0) {
      // Bound round-off drift.
      H = inst.hamiltonian(code);
      refresh();
    } else {
      for (int j = 0; j < n; ++j)
        if (j != k) local[j] -= 2.0 * A(j, k) * old;
    }
    visit(code, H);
  }
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// In-place Walsh-Hadamard transform (unnormalized).
void fwht(std::vector<double>& a) {
  const std::size_t n = a.size();
  for (std::size_t len = 1; len < n; len <<= 1)
    for (std::size_t i = 0; i < n; i += len << 1)
      for (std::size_t j = i; j < i + len; ++j) {
        const double x = a[j], y = a[j + len];
        a[j] = x + y;
        a[j + len] = x - y;
      }
}

struct Classes {
  std::vector<std::uint64_t> masks;
  std::vector<int> stride;
  int count = 1;
  std::vector<std::vector<int>> disagreements;
  std::vector<Vec> overlap;

  explicit Classes(const FiniteInstance& inst) {
    const int S = static_cast<int>(inst.sites.size());
    masks.assign(S, 0);
    for (int i = 0; i < inst.size(); ++i) masks[inst.species[i]] |= std::uint64_t{1} << i;
    stride.resize(S);
    for (int s = 0; s < S; ++s) {
      stride[s] = count;
      count *= inst.sites[s] + 1;
    }
    for (int c = 0; c < count; ++c) {
      std::vector<int> d(S);
      Vec r(S);
      for (int s = 0; s < S; ++s) {
        d[s] = (c / stride[s]) % (inst.sites[s] + 1);
        r[s] = 1.0 - 2.0 * d[s] / inst.sites[s];
      }
      disagreements.push_back(d);
      overlap.push_back(r);
    }
  }
  int of(std::uint64_t tau) const {
    int c = 0;
    for (std::size_t s = 0; s < masks.size(); ++s) c += std::popcount(tau & masks[s]) * stride[s];
    return c;
  }
};

}  // namespace

Vec FiniteInstance::effective_field() const {
  const Vec c = (2.0 * sys.delta2_lambda() * q_star).cwiseMax(0.0).cwiseSqrt();
  Vec f(size());
  const double w = std::sqrt(std::max(0.0, 1.0 - t));
  for (int i = 0; i < size(); ++i) f[i] = h[i] + w * c[species[i]] * z[i];
  return f;
}

double FiniteInstance::hamiltonian(std::uint64_t bits) const {
  const int n = size();
  Vec sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = (bits >> i) & 1 ? -1.0 : 1.0;
  return std::sqrt(t / n) * sigma.dot(J * sigma) + effective_field().dot(sigma);
}

FiniteInstance sample_instance(const SpeciesSystem& sys, const Vec& q_star, const std::vector<int>& sites, double t,
                               std::uint64_t seed) {
  if (static_cast<int>(sites.size()) != sys.size()) throw ModelError("sample_instance: one site count per species");
  int n = 0;
  for (int c : sites) {
    if (c < 1) throw ModelError("sample_instance: site counts must be positive");
    n += c;
  }
  if (n > kMaxEnumerationSites) throw ModelError("sample_instance: N exceeds enumeration cap");
  if (!(t >= 0.0 && t <= 1.0)) throw ModelError("sample_instance: t outside [0,1]");
  check_overlap(q_star, sys.size());

  FiniteInstance inst;
  inst.sys = sys;
  inst.q_star = q_star;
  inst.sites = sites;
  inst.t = t;
  inst.seed = seed;
  inst.lambda_n.resize(sys.size());
  for (int s = 0; s < sys.size(); ++s) {
    inst.lambda_n[s] = static_cast<double>(sites[s]) / n;
    for (int k = 0; k < sites[s]; ++k) inst.species.push_back(s);
  }
  std::mt19937_64 gen(splitmix64(seed));
  std::normal_distribution<double> normal;
  inst.J.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inst.J(i, j) = std::sqrt(sys.delta2(inst.species[i], inst.species[j])) * normal(gen);
  inst.h.resize(n);
  for (int i = 0; i < n; ++i) inst.h[i] = std::sqrt(sys.tau2[inst.species[i]]) * normal(gen);
  inst.z.resize(n);
  for (int i = 0; i < n; ++i) inst.z[i] = normal(gen);
  return inst;
}

FiniteInstance sample_instance(const SpeciesSystem& sys, const std::vector<int>& sites, double t, std::uint64_t seed,
                               const QuadratureSpec& spec) {
  return sample_instance(sys, solve_qstar(sys, spec).q_star, sites, t, seed);
}

FiniteInstance with_time(const FiniteInstance& inst, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ModelError("with_time: t outside [0,1]");
  FiniteInstance out = inst;
  out.t = t;
  return out;
}

std::vector<double> energy_table(const FiniteInstance& inst) {
  if (inst.size() > kMaxPairLawSites) throw ModelError("energy_table: N exceeds pair-law cap");
  std::vector<double> e(std::size_t{1} << inst.size());
  enumerate(inst, [&](std::uint64_t code, double H) { e[code] = H; });
  return e;
}

double exact_free_energy(const FiniteInstance& inst) {
  double m = -std::numeric_limits<double>::infinity(), s = 0.0;
  enumerate(inst, [&](std::uint64_t, double H) {
    if (H > m) {
      s = s * std::exp(m - H) + 1.0;
      m = H;
    } else {
      s += std::exp(H - m);
    }
  });
  return (m + std::log(s)) / inst.size();
}

double finite_B(const FiniteInstance& inst, const Vec& x, const Vec& y) {
  return x.dot(inst.lambda_n.asDiagonal() * inst.sys.delta2 * inst.lambda_n.asDiagonal() * y);
}

OverlapStatistics overlap_statistics(const FiniteInstance& inst) {
  const int n = inst.size();
  const int S = inst.sys.size();
  std::vector<double> p = energy_table(inst);
  const double lz = log_sum_exp(p);
  for (double& x : p) x = std::exp(x - lz);
  // Pair law of tau = s1 xor s2 is the XOR autocorrelation of p.
  fwht(p);
  for (double& x : p) x *= x;
  fwht(p);
  const double norm = 1.0 / static_cast<double>(p.size());

  const Classes cls(inst);
  OverlapStatistics out;
  out.free_energy = lz / n;
  out.mass.assign(cls.count, 0.0);
  for (std::uint64_t tau = 0; tau < p.size(); ++tau) out.mass[cls.of(tau)] += p[tau] * norm;
  out.disagreements = cls.disagreements;
  out.overlap = cls.overlap;
  out.mean_overlap = Vec::Zero(S);
  for (int c = 0; c < cls.count; ++c) {
    const Vec& r = out.overlap[c];
    out.mean_overlap += out.mass[c] * r;
    out.mean_B += out.mass[c] * finite_B(inst, r, r);
    const Vec d = r - inst.q_star;
    out.mean_B_dist += out.mass[c] * finite_B(inst, d, d);
  }
  const Vec one = Vec::Ones(S);
  const Vec dq = inst.sys.delta2_lambda() * inst.q_star;
  double lin = 0.0;
  for (int s = 0; s < S; ++s) lin += inst.lambda_n[s] * dq[s] * (1.0 - out.mean_overlap[s]);
  out.ibp_rhs = 0.5 * (finite_B(inst, one, one) - out.mean_B - 2.0 * lin);
  return out;
}

ConstrainedPsi constrained_psi_all(const FiniteInstance& inst) {
  if (inst.size() > kMaxConstrainedSites) throw ModelError("constrained_psi: N exceeds pair-enumeration cap");
  const std::vector<double> e = energy_table(inst);
  const Classes cls(inst);
  std::vector<std::vector<double>> per(cls.count);
  for (std::uint64_t tau = 0; tau < e.size(); ++tau) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < e.size(); ++s) m = std::max(m, e[s] + e[s ^ tau]);
    double acc = 0.0;
    for (std::uint64_t s = 0; s < e.size(); ++s) acc += std::exp(e[s] + e[s ^ tau] - m);
    per[cls.of(tau)].push_back(m + std::log(acc));
  }
  ConstrainedPsi out;
  out.disagreements = cls.disagreements;
  out.u = cls.overlap;
  for (const auto& v : per) out.psi.push_back(log_sum_exp(v) / inst.size());
  return out;
}

double constrained_psi(const FiniteInstance& inst, const Vec& u) {
  const ConstrainedPsi all = constrained_psi_all(inst);
  for (std::size_t c = 0; c < all.u.size(); ++c)
    if (u.size() == all.u[c].size() && (u - all.u[c]).cwiseAbs().maxCoeff() < 1e-12) return all.psi[c];
  throw ModelError("constrained_psi: u is not on the overlap lattice (empty constraint set)");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) { return splitmix64(splitmix64(base) ^ index); }

FiniteNSummary run_finite_n(const SpeciesSystem& sys, const Vec& q_star, const std::vector<int>& sites, double t,
                            const FiniteNOptions& opts) {
  if (opts.samples < 2) throw ModelError("run_finite_n: at least two samples");
  FiniteNSummary out;
  out.records.resize(opts.samples);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (int k = next++; k < opts.samples && !failed; k = next++) {
      try {
        FiniteNRecord& rec = out.records[k];
        rec.seed = derive_seed(opts.base_seed, static_cast<std::uint64_t>(k));
        rec.t = t;
        const FiniteInstance inst = sample_instance(sys, q_star, sites, t, rec.seed);
        if (!opts.with_derivative) {
          rec.free_energy = exact_free_energy(inst);
          continue;
        }
        const OverlapStatistics st = overlap_statistics(inst);
        rec.free_energy = st.free_energy;
        rec.ibp_rhs = st.ibp_rhs;
        rec.mean_B_dist = st.mean_B_dist;
        const double h = opts.fd_step;
        if (t + h <= 1.0 && t - h >= 0.0) {
          rec.dF_dt = (exact_free_energy(with_time(inst, t + h)) - exact_free_energy(with_time(inst, t - h))) / (2 * h);
        } else if (t - 2 * h >= 0.0) {
          rec.dF_dt = (3 * rec.free_energy - 4 * exact_free_energy(with_time(inst, t - h)) +
                       exact_free_energy(with_time(inst, t - 2 * h))) / (2 * h);
        } else {
          rec.dF_dt = (-3 * rec.free_energy + 4 * exact_free_energy(with_time(inst, t + h)) -
                       exact_free_energy(with_time(inst, t + 2 * h))) / (2 * h);
        }
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  int threads = opts.threads > 0 ? opts.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, opts.samples);
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  auto mean_se = [&](auto get, double& mean, double& se) {
    double m = 0.0, m2 = 0.0;
    for (int k = 0; k < opts.samples; ++k) {
      const double x = get(out.records[k]);
      const double d = x - m;
      m += d / (k + 1);
      m2 += d * (x - m);
    }
    mean = m;
    se = std::sqrt(m2 / (opts.samples - 1) / opts.samples);
  };
  mean_se([](const FiniteNRecord& r) { return r.free_energy; }, out.mean_F, out.se_F);
  if (opts.with_derivative) {
    double se_d = 0.0, se_r = 0.0;
    mean_se([](const FiniteNRecord& r) { return r.dF_dt; }, out.mean_dF, se_d);
    mean_se([](const FiniteNRecord& r) { return r.ibp_rhs; }, out.mean_rhs, se_r);
    mean_se([](const FiniteNRecord& r) { return r.dF_dt - r.ibp_rhs; }, out.mean_diff, out.se_diff);
    out.combined_se = std::sqrt(se_d * se_d + se_r * se_r);
  }
  return out;
}

}  // namespace msk
