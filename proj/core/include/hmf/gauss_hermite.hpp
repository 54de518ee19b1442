#pragma once

#include <vector>

#include "hmf/activation.hpp"

namespace hmf {

// Physicists' Gauss-Hermite rule: int e^{-x^2} g(x) dx ~ sum w_i g(x_i).
struct GaussHermite {
  std::vector<double> nodes, weights;
  explicit GaussHermite(int order);
  int order() const { return static_cast<int>(nodes.size()); }
};

// E[f(X) f(Y)] for a centered Gaussian pair with covariance [[c00, c01], [c01, c11]].
// Throws NotPSD2x2 when the block is not a covariance.
double gaussian_feature_moment(double c00, double c01, double c11, const Activation& f, const GaussHermite& gh);

}  // namespace hmf
