#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace msk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model parameters (lambda, Delta^2, tau^2). Build through validate_system.
struct SpeciesSystem {
  Vec lambda;
  Mat delta2;
  Vec tau2;
  bool irreducible = false;
  bool psd = false;

  int size() const { return static_cast<int>(lambda.size()); }
  Mat delta2_lambda() const { return delta2 * lambda.asDiagonal(); }
  Mat coupling() const { return lambda.asDiagonal() * delta2 * lambda.asDiagonal(); }
  bool tau2_zero() const { return (tau2.array() == 0.0).all(); }
};

SpeciesSystem validate_system(const Vec& lambda, const Mat& delta2, const Vec& tau2);

// Throws unless every entry lies in [0,1] up to `slack`.
void check_overlap(const Vec& q, int species, double slack = 1e-12);

struct PerronResult {
  double rho = 0.0;
  Vec vector;  // right eigenvector, normalized to max entry 1
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;
  bool irreducible = false;
};

PerronResult perron(const Mat& m);
double spectral_radius(const Mat& m);

// Strong connectivity of the directed graph {i -> j : m(i,j) > 0}.
bool strongly_connected(const Mat& m);

double bilinear_B(const SpeciesSystem& sys, const Vec& x, const Vec& y);
inline double quadratic_B(const SpeciesSystem& sys, const Vec& x) { return bilinear_B(sys, x, x); }

double bounding_box_ratio(const SpeciesSystem& sys);

}  // namespace msk
