#include "msk/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace msk {

namespace {

bool connected_undirected(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      if (!seen[j] && (a(i, j) > 0.0 || a(j, i) > 0.0)) {
        seen[j] = 1;
        ++count;
        stack.push_back(j);
      }
    }
  }
  return count == n;
}

void reach(const Mat& m, int start, bool transpose, std::vector<char>& seen) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      double v = transpose ? m(j, i) : m(i, j);
      if (!seen[j] && v > 0.0) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
}

void check_nonnegative_square(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ModelError("spectral radius: matrix must be square and nonempty");
  if ((m.array() < 0.0).any()) throw ModelError("spectral radius: negative entry");
  if (!m.allFinite()) throw ModelError("spectral radius: non-finite entry");
}

}  // namespace

SpeciesSystem validate_system(const Vec& lambda, const Mat& delta2, const Vec& tau2) {
  const auto n = lambda.size();
  if (n == 0) throw ModelError("system: no species");
  if (delta2.rows() != n || delta2.cols() != n) throw ModelError("system: delta2 must be |S| x |S|");
  if (tau2.size() != n) throw ModelError("system: tau2 length differs from lambda");
  if (!lambda.allFinite() || !delta2.allFinite() || !tau2.allFinite()) throw ModelError("system: non-finite entry");
  if ((lambda.array() <= 0.0).any()) throw ModelError("system: lambda entries must be positive");
  if (std::abs(lambda.sum() - 1.0) > 1e-12) throw ModelError("system: lambda must sum to 1");
  if ((delta2.array() < 0.0).any()) throw ModelError("system: negative entry in delta2");
  if ((tau2.array() < 0.0).any()) throw ModelError("system: negative entry in tau2");
  const double scale = std::max(delta2.cwiseAbs().maxCoeff(), 1e-300);
  if ((delta2 - delta2.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale) throw ModelError("system: delta2 not symmetric");

  SpeciesSystem sys;
  sys.lambda = lambda;
  sys.delta2 = 0.5 * (delta2 + delta2.transpose());
  sys.tau2 = tau2;
  sys.irreducible = connected_undirected(sys.delta2);
  Eigen::SelfAdjointEigenSolver<Mat> es(sys.delta2, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  sys.psd = es.eigenvalues().minCoeff() >= -1e-10 * top;
  return sys;
}

void check_overlap(const Vec& q, int species, double slack) {
  if (q.size() != species) throw ModelError("overlap: wrong length");
  if (!q.allFinite() || (q.array() < -slack).any() || (q.array() > 1.0 + slack).any())
    throw ModelError("overlap: entries must lie in [0,1]");
}

bool strongly_connected(const Mat& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return false;
  std::vector<char> fwd(n, 0), bwd(n, 0);
  reach(m, 0, false, fwd);
  reach(m, 0, true, bwd);
  return std::all_of(fwd.begin(), fwd.end(), [](char c) { return c; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](char c) { return c; });
}

PerronResult perron(const Mat& m) {
  check_nonnegative_square(m);
  const int n = static_cast<int>(m.rows());
  PerronResult out;
  out.irreducible = strongly_connected(m);

  // Dense solve for a starting vector; then polish by power iteration on M + I,
  // which is primitive whenever M is irreducible.
  Eigen::EigenSolver<Mat> es(m);
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(es.eigenvalues()[i]) > std::abs(es.eigenvalues()[best])) best = i;
  Vec v = es.eigenvectors().col(best).real().cwiseAbs();
  const double dense_rho = std::abs(es.eigenvalues()[best]);

  if (!out.irreducible) {
    out.rho = dense_rho;
    out.lower = out.upper = dense_rho;
    out.vector = v / std::max(v.maxCoeff(), 1e-300);
    return out;
  }

  if (!(v.array() > 1e-300).all()) v = Vec::Ones(n);
  v /= v.maxCoeff();
  const Mat shifted = m + Mat::Identity(n, n);
  for (int it = 0; it < 20000; ++it) {
    Vec mv = m * v;
    Vec ratio = mv.array() / v.array();
    out.lower = ratio.minCoeff();
    out.upper = ratio.maxCoeff();
    out.iterations = it;
    if (out.upper - out.lower <= 1e-14 * std::max(out.upper, 1e-300)) break;
    v = shifted * v;
    v /= v.maxCoeff();
  }
  out.rho = 0.5 * (out.lower + out.upper);
  out.vector = v;
  return out;
}

double spectral_radius(const Mat& m) { return perron(m).rho; }

double bilinear_B(const SpeciesSystem& sys, const Vec& x, const Vec& y) {
  if (x.size() != sys.size() || y.size() != sys.size()) throw ModelError("bilinear_B: dimension mismatch");
  const Vec lx = sys.lambda.cwiseProduct(x);
  const Vec ly = sys.lambda.cwiseProduct(y);
  return lx.dot(sys.delta2 * ly);
}

double bounding_box_ratio(const SpeciesSystem& sys) {
  const int n = sys.size();
  if (n > 20) throw ModelError("bounding_box_ratio: at most 20 species");
  const Mat m = sys.coupling();
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw ModelError("bounding_box_ratio: coupling matrix is singular");
  const Mat inv = llt.solve(Mat::Identity(n, n));
  const Vec half = inv.diagonal().cwiseSqrt();
  double best = 0.0;
  // v and -v give the same value, so fix the sign of the last coordinate.
  const std::uint64_t corners = std::uint64_t{1} << (n - 1);
  Vec v(n);
  for (std::uint64_t mask = 0; mask < corners; ++mask) {
    for (int i = 0; i < n; ++i) v[i] = ((mask >> i) & 1U) ? -half[i] : half[i];
    best = std::max(best, v.dot(m * v));
  }
  return best;
}

}  // namespace msk
