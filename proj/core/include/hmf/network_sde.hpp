#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmf/activation.hpp"
#include "hmf/lattice.hpp"
#include "hmf/weights.hpp"

namespace hmf {

struct InitialCondition {
  enum class Kind { Zero, Constant, Gaussian };
  Kind kind = Kind::Zero;
  double value = 0.0;  // constant value, or mean of the Gaussian law
  double stddev = 0.0;
};

struct SdeConfig {
  double sigma = 1.0;
  Activation f = Activation::logistic();
  TimeGrid grid;
  double alpha = 0.0;  // leak coefficient
  InitialCondition init;

  // sigma = 0 is accepted so deterministic recursions can be exercised.
  void validate() const;
};

// Ensemble of lattice paths, laid out [member][site][time], v = 0..m.
class LatticeTrajectories {
 public:
  LatticeTrajectories() = default;
  LatticeTrajectories(int ensemble, int lattice_size, TimeGrid grid, std::uint64_t seed = 0);

  int ensemble() const { return ensemble_; }
  int lattice_size() const { return lattice_size_; }
  const TimeGrid& grid() const { return grid_; }
  int nodes() const { return grid_.nodes(); }
  std::uint64_t seed() const { return seed_; }

  double& at(int e, int s, int v) { return data_[index(e, s, v)]; }
  double at(int e, int s, int v) const { return data_[index(e, s, v)]; }
  std::span<double> path(int e, int s) { return {data_.data() + index(e, s, 0), static_cast<std::size_t>(nodes())}; }
  std::span<const double> path(int e, int s) const {
    return {data_.data() + index(e, s, 0), static_cast<std::size_t>(nodes())};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(int e, int s, int v) const {
    return (static_cast<std::size_t>(e) * lattice_size_ + s) * nodes() + v;
  }
  int ensemble_ = 0, lattice_size_ = 0;
  TimeGrid grid_;
  std::uint64_t seed_ = 0;
  std::vector<double> data_;
};

// Standard normal increments laid out [member][site][step], step = 0..m-1.
struct NoiseField {
  int ensemble = 0, lattice_size = 0, steps = 0;
  std::vector<double> xi;

  double& at(int e, int s, int v) { return xi[(static_cast<std::size_t>(e) * lattice_size + s) * steps + v]; }
  double at(int e, int s, int v) const { return xi[(static_cast<std::size_t>(e) * lattice_size + s) * steps + v]; }
};

// One stream per (member, site), keyed by the stage label.
NoiseField make_noise(std::uint64_t seed, const char* stage, int ensemble, int lattice_size, int steps);

// J f(state) - alpha state. The product runs over relative offsets so a
// lattice shift of (J, state) shifts the result bit for bit.
std::vector<double> drift(const WeightMatrix& J, const Activation& f, std::span<const double> state,
                          double alpha);

LatticeTrajectories simulate_quenched(const WeightMatrix& J, const SdeConfig& cfg, std::uint64_t seed,
                                      int replicas);
LatticeTrajectories simulate_quenched_with_noise(const WeightMatrix& J, const SdeConfig& cfg,
                                                 const NoiseField& noise,
                                                 const std::vector<double>& init, std::uint64_t seed = 0);

// Initial values [member][site] drawn according to cfg.init.
std::vector<double> initial_values(const SdeConfig& cfg, std::uint64_t seed, int ensemble, int lattice_size);

}  // namespace hmf
