#pragma once

#include <functional>
#include <string>

namespace hmf {

// Bounded Lipschitz activation. Values are assumed to lie in [lo, hi].
struct Activation {
  std::string name;
  std::function<double(double)> fn;
  double lo = 0.0;
  double hi = 1.0;
  double lipschitz = 1.0;

  double operator()(double x) const { return fn(x); }

  // f(x) = 1 / (1 + exp(-4x)), range (0, 1), Lipschitz constant 1.
  static Activation logistic();
  static Activation constant(double c);
  // Identity clipped to [0, 1].
  static Activation clipped_identity();
  static Activation by_name(const std::string& name);
};

// Spot check of range and Lipschitz bound on a grid of 1000 points in [-8, 8].
// Throws ConfigError on failure.
void validate_activation(const Activation& f);

}  // namespace hmf
