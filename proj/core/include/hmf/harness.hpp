#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hmf/kernels.hpp"
#include "hmf/limit.hpp"
#include "hmf/network_sde.hpp"
#include "hmf/stats.hpp"
#include "hmf/weights.hpp"

namespace hmf {

struct ModelSpec {
  std::string family = "product";  // product | delta | zero
  double c = 1.0;
  double decay = 4.0;
  double ratio = 0.5;
  double lambda2 = 1.0;

  CovarianceModel build() const;
};

struct RunConfig {
  ModelSpec model;

  double sigma = 1.0;
  std::string activation = "logistic";
  double T = 2.0;
  int m = 20;
  double alpha = 0.0;
  InitialCondition init;

  int lattice_size = 33;  // limit torus
  int q = 15;
  int ensemble = 256;
  CfMode cf_mode = CfMode::Empirical;
  int quad_order = 40;
  int kernel_stride = 1;
  double resolvent_tol = 1e-10;

  std::vector<int> ladder{17, 33, 65};  // odd lattice sizes
  int weight_draws = 8;
  int replicas = 16;
  int weights_n = 7;  // lattice half-size for stand-alone weight sampling

  std::uint64_t seed = 20240601;
  std::string output_dir = "runs/default";
  std::vector<Probe> probes;

  TimeGrid grid() const { return {T, m}; }
  SdeConfig sde() const;
  MarchConfig march() const;
};

// JSON grammar documented in README.md. Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& cfg);
// Checks sub-configs, the model at every lattice size in use and the probes.
void validate_config(const RunConfig& cfg);
// Default probe set: lags 0..3 at (T/2, T/2), (T, T), (T, T/2), (T/2, T).
std::vector<Probe> default_probes(const RunConfig& cfg);

// Persistence. Every tensor gets a JSON sidecar "<file>.json".
void write_trajectories(const std::filesystem::path& path, const LatticeTrajectories& x, const std::string& kind);
LatticeTrajectories read_trajectories(const std::filesystem::path& path);
void write_weights(const std::filesystem::path& path, const WeightMatrix& J, const RunConfig& cfg);
WeightMatrix read_weights(const std::filesystem::path& path);
// Writes "<base>_K.hmt" and, when present, "<base>_L.hmt".
void write_kernels(const std::filesystem::path& base, const KernelStack& st);
KernelStack read_kernels(const std::filesystem::path& base);
void write_resolvent(const std::filesystem::path& path, const ResolventKernel& M);
ResolventKernel read_resolvent(const std::filesystem::path& path);
// CSV columns: probe_id,k,t,s,estimate,se,N
void write_probe_csv(const std::filesystem::path& path, const std::vector<LagStat>& stats, int lattice_size);
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceReport& rep);

struct Kurtosis {
  double value = 0.0;
  double se = 0.0;  // sqrt(24 / n), the large-sample SE under normality
};
Kurtosis sample_kurtosis(const std::vector<double>& xs);
// Means of f(Z_t), lag covariances at equal times and the kurtosis of Z^0_T.
void write_limit_summary(const std::filesystem::path& path, const LimitLaw& law, const Activation& f);

struct Artifact {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::vector<Artifact> artifacts;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage

  std::string to_json() const;
};

std::string code_version();

RunManifest run_experiment(const RunConfig& cfg);
// Rebuilds the convergence report from the files of a completed run.
ConvergenceReport compare_run(const RunConfig& cfg);

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  KToLFunction k_to_l;  // defaults to K_to_L; tests inject faulty versions
};

std::vector<SelftestCheck> selftest(const SelftestOptions& opts = {});

}  // namespace hmf
