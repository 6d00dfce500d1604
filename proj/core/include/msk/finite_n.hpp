#pragma once

#include <cstdint>
#include <vector>

#include "msk/rs_at.hpp"

namespace msk {

inline constexpr int kMaxEnumerationSites = 24;
inline constexpr int kMaxPairLawSites = 22;
inline constexpr int kMaxConstrainedSites = 12;

// One disorder draw of the interpolated Hamiltonian
//   H(sigma) = sqrt(t/N) sum_ij J_ij s_i s_j + sum_i (h_i + sqrt(1-t) c_i z_i) s_i,
// with c_i = sqrt(2 (Delta^2 Lambda q*)_s(i)). Spin i is -1 when bit i is set.
struct FiniteInstance {
  SpeciesSystem sys;
  Vec q_star;
  std::vector<int> sites;    // |I_s|
  std::vector<int> species;  // s(i)
  Vec lambda_n;              // |I_s| / N
  double t = 1.0;
  std::uint64_t seed = 0;
  Mat J;
  Vec h;
  Vec z;

  int size() const { return static_cast<int>(species.size()); }
  Vec effective_field() const;
  double hamiltonian(std::uint64_t bits) const;
};

FiniteInstance sample_instance(const SpeciesSystem& sys, const Vec& q_star, const std::vector<int>& sites, double t,
                               std::uint64_t seed);
FiniteInstance sample_instance(const SpeciesSystem& sys, const std::vector<int>& sites, double t, std::uint64_t seed,
                               const QuadratureSpec& spec = {});

// Same Gaussians, different t.
FiniteInstance with_time(const FiniteInstance& inst, double t);

// H for every configuration, indexed by bits. N <= kMaxPairLawSites.
std::vector<double> energy_table(const FiniteInstance& inst);

// (1/N) log sum_sigma exp H(sigma).
double exact_free_energy(const FiniteInstance& inst);

// B_N(x, y) = x^T Lambda_N Delta^2 Lambda_N y.
double finite_B(const FiniteInstance& inst, const Vec& x, const Vec& y);

// Exact law of the two-replica overlap under the product Gibbs measure.
// Classes are indexed by the number of disagreeing sites per species d_s,
// flattened with species 0 fastest; R_s = 1 - 2 d_s / |I_s|.
struct OverlapStatistics {
  double free_energy = 0.0;
  std::vector<std::vector<int>> disagreements;
  std::vector<Vec> overlap;
  std::vector<double> mass;
  Vec mean_overlap;
  double mean_B = 0.0;       // <B_N(R12)>
  double mean_B_dist = 0.0;  // <B_N(R12 - q*)>
  // (1/2)[B_N(1) - <B_N(R12)> - 2 sum_s lambda_{s,N} (Delta^2 Lambda q*)_s (1 - <R_s>)],
  // whose disorder average is dE F_N/dt (Gaussian integration by parts).
  double ibp_rhs = 0.0;
};

OverlapStatistics overlap_statistics(const FiniteInstance& inst);

// (1/N) log sum_{R12 = u} exp(H(s1) + H(s2)) for every lattice u. N <= kMaxConstrainedSites.
struct ConstrainedPsi {
  std::vector<std::vector<int>> disagreements;
  std::vector<Vec> u;
  std::vector<double> psi;
};

ConstrainedPsi constrained_psi_all(const FiniteInstance& inst);
double constrained_psi(const FiniteInstance& inst, const Vec& u);

struct FiniteNRecord {
  std::uint64_t seed = 0;
  double t = 1.0;
  double free_energy = 0.0;
  double dF_dt = 0.0;    // central difference, shared Gaussians
  double ibp_rhs = 0.0;
  double mean_B_dist = 0.0;
};

struct FiniteNOptions {
  int samples = 500;
  std::uint64_t base_seed = 1;
  bool with_derivative = false;
  double fd_step = 1e-3;
  int threads = 0;  // 0: hardware concurrency
};

struct FiniteNSummary {
  std::vector<FiniteNRecord> records;
  double mean_F = 0.0;
  double se_F = 0.0;
  double mean_dF = 0.0;
  double mean_rhs = 0.0;
  double mean_diff = 0.0;  // mean of dF_dt - ibp_rhs
  double se_diff = 0.0;
  double combined_se = 0.0;  // sqrt(se(dF)^2 + se(rhs)^2)
};

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

FiniteNSummary run_finite_n(const SpeciesSystem& sys, const Vec& q_star, const std::vector<int>& sites, double t,
                            const FiniteNOptions& opts);

}  // namespace msk
