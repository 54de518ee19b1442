#include "hmf/gauss_hermite.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "hmf/error.hpp"

namespace hmf {

GaussHermite::GaussHermite(int order) {
  if (order < 1) throw ConfigError("quadrature order must be positive");
  // Golub-Welsch on the symmetric Jacobi matrix of the Hermite recurrence.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) off[k - 1] = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  nodes.resize(order);
  weights.resize(order);
  const double root_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < order; ++i) {
    nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = root_pi * v0 * v0;
  }
}

double gaussian_feature_moment(double c00, double c01, double c11, const Activation& f, const GaussHermite& gh) {
  if (!(c00 >= 0.0) || !(c11 >= 0.0) || !(std::fabs(c01) <= std::sqrt(c00 * c11) + 1e-12))
    throw NotPSD2x2("invalid 2x2 covariance block");
  // X = a z1, Y = b z1 + c z2 with z standard normal.
  double a = std::sqrt(c00), b = 0.0, c = std::sqrt(c11);
  if (a > 0.0) {
    b = c01 / a;
    c = std::sqrt(std::max(c11 - b * b, 0.0));
  }
  const double r2 = std::sqrt(2.0);
  const int n = gh.order();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z1 = r2 * gh.nodes[i];
    const double fx = f(a * z1);
    double inner = 0.0;
    if (c == 0.0) {
      inner = f(b * z1) * std::sqrt(std::numbers::pi);
    } else {
      for (int j = 0; j < n; ++j) inner += gh.weights[j] * f(b * z1 + c * r2 * gh.nodes[j]);
    }
    total += gh.weights[i] * fx * inner;
  }
  return total / std::numbers::pi;
}

}  // namespace hmf
