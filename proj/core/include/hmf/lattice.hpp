#pragma once

#include <cstdint>

#include "hmf/error.hpp"

namespace hmf {

// Sites i in I_n = {-n..n} are stored at index i + n of a length N = 2n + 1
// array. Lattice arithmetic is modular on that index.
inline int half_width(int lattice_size) { return (lattice_size - 1) / 2; }

inline void require_odd_lattice(int lattice_size, const char* what) {
  if (lattice_size < 1 || lattice_size % 2 == 0)
    throw DimensionMismatch(std::string(what) + ": lattice size must be odd and positive");
}

inline int site_shift(int s, int k, int lattice_size) {
  int r = (s + k) % lattice_size;
  return r < 0 ? r + lattice_size : r;
}

// Representative of i in I_n.
inline int wrap_lag(int i, int lattice_size) {
  const int n = half_width(lattice_size);
  return site_shift(i + n, 0, lattice_size) - n;
}

struct TimeGrid {
  double T = 1.0;
  int m = 20;

  double dt() const { return T / m; }
  double t(int v) const { return v * T / m; }
  int nodes() const { return m + 1; }
  bool operator==(const TimeGrid& o) const { return T == o.T && m == o.m; }

  void validate() const {
    if (!(T > 0.0) || m < 1) throw ConfigError("time grid needs T > 0 and m >= 1");
  }
};

}  // namespace hmf
