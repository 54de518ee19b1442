#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hmf {

std::uint64_t splitmix64(std::uint64_t x);

// Seed for an independent stream, keyed by the master seed, a stage label
// and an index inside that stage.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index = 0);

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace hmf
