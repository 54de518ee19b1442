#pragma once

#include <cstdint>

#include "hmf/kernels.hpp"
#include "hmf/network_sde.hpp"

namespace hmf {

enum class CfMode { Empirical, Gaussian };
std::string to_string(CfMode m);
CfMode cf_mode_from_string(const std::string& s);

struct MarchConfig {
  int lattice_size = 33;
  int q = 15;
  TimeGrid grid;
  double sigma = 1.0;
  Activation f = Activation::logistic();
  int ensemble = 256;
  CfMode cf_mode = CfMode::Empirical;
  std::uint64_t seed = 1;
  int quad_order = 40;
  // Kernel rows are rebuilt every kernel_stride steps. In between, the last
  // rebuilt row is reused shifted in time, which is exact only for a
  // time-stationary kernel.
  int kernel_stride = 1;

  void validate() const;
};

struct LimitLaw {
  LatticeTrajectories Z;
  KernelStack kernels;  // K and the causal L actually used by the march
  LatticeTrajectories theta;
};

// Noise shared by march, march_frozen and sample_closed_form for equal seeds.
NoiseField limit_noise(std::uint64_t seed, int ensemble, int lattice_size, int steps);

LimitLaw march(const CovarianceModel& model, const MarchConfig& cfg);
LimitLaw march_with_noise(const CovarianceModel& model, const MarchConfig& cfg, const NoiseField& noise);

// March with a given causal kernel L (lags I_q, strictly lower in time).
LimitLaw march_frozen(const KernelStack& stack, double sigma, int lattice_size, const NoiseField& noise);

// Whole-path fixed-point iteration: kernels from the previous iterate, then a
// frozen march. m + 1 sweeps reproduce the causal march.
LimitLaw march_picard(const CovarianceModel& model, const MarchConfig& cfg, int sweeps);

LatticeTrajectories sample_closed_form(const KernelStack& stack, const ResolventKernel& M, double sigma,
                                       int lattice_size, const TimeGrid& grid, std::uint64_t seed, int ensemble);
LatticeTrajectories sample_closed_form_with_noise(const KernelStack& stack, const ResolventKernel& M, double sigma,
                                                  int lattice_size, const TimeGrid& grid, const NoiseField& noise);

// Delta covariance lambda2 on a single effective site. cfg.lattice_size and
// cfg.q are ignored.
LimitLaw single_site_uncorrelated(double lambda2, const MarchConfig& cfg);

}  // namespace hmf
