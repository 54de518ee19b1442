#include "hmf/activation.hpp"

#include <algorithm>
#include <cmath>

#include "hmf/error.hpp"

namespace hmf {

Activation Activation::logistic() {
  return {"logistic", [](double x) { return 1.0 / (1.0 + std::exp(-4.0 * x)); }, 0.0, 1.0, 1.0};
}

Activation Activation::constant(double c) {
  return {"constant", [c](double) { return c; }, c, c, 0.0};
}

Activation Activation::clipped_identity() {
  return {"clipped_identity", [](double x) { return std::clamp(x, 0.0, 1.0); }, 0.0, 1.0, 1.0};
}

Activation Activation::by_name(const std::string& name) {
  if (name == "logistic") return logistic();
  if (name == "clipped_identity") return clipped_identity();
  throw ConfigError("unknown activation '" + name + "'");
}

void validate_activation(const Activation& f) {
  if (!f.fn) throw ConfigError("activation has no function");
  constexpr int kPoints = 1000;
  const double tol = 1e-12;
  double prev_x = -8.0;
  double prev_y = f(prev_x);
  for (int i = 0; i < kPoints; ++i) {
    const double x = -8.0 + 16.0 * i / (kPoints - 1);
    const double y = f(x);
    if (!std::isfinite(y) || y < f.lo - tol || y > f.hi + tol)
      throw ConfigError("activation " + f.name + " leaves its declared range");
    if (i > 0 && std::fabs(y - prev_y) > f.lipschitz * (x - prev_x) + tol)
      throw ConfigError("activation " + f.name + " exceeds its Lipschitz bound");
    prev_x = x;
    prev_y = y;
  }
}

}  // namespace hmf
