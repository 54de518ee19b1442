#pragma once

#include <cmath>
#include <cstdint>

#include "hmf/error.hpp"

namespace hmf {

// Order independent accumulator. Each term is truncated to a multiple of
// 2^-Bits and summed exactly in 128-bit integers, so a sum over lattice sites
// gives the same bits whatever site the loop starts from.
template <int Bits>
class FixedSum {
 public:
  void add(double x) {
    const double y = std::ldexp(x, Bits);
    if (!(std::fabs(y) < 9.0e18)) throw Error(ErrorClass::Numerical, "Overflow", "value out of accumulator range");
    acc_ += static_cast<__int128>(static_cast<std::int64_t>(y));
  }
  double value() const { return std::ldexp(static_cast<double>(acc_), -Bits); }

 private:
  __int128 acc_ = 0;
};

// Values in [-2^11, 2^11]: products of bounded activations.
using BoundedSum = FixedSum<52>;
// Values in [-2^19, 2^19]: products of Gaussian field values.
using FieldSum = FixedSum<44>;

}  // namespace hmf
