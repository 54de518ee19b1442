#include "hmf/network_sde.hpp"

#include <cassert>
#include <cmath>

#include "hmf/error.hpp"
#include "hmf/parallel.hpp"
#include "hmf/rng.hpp"

namespace hmf {

void SdeConfig::validate() const {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
  if (init.kind == InitialCondition::Kind::Gaussian && !(init.stddev >= 0.0))
    throw ConfigError("initial stddev must be nonnegative");
  grid.validate();
  validate_activation(f);
}

LatticeTrajectories::LatticeTrajectories(int ensemble, int lattice_size, TimeGrid grid, std::uint64_t seed)
    : ensemble_(ensemble), lattice_size_(lattice_size), grid_(grid), seed_(seed) {
  if (ensemble < 1) throw EnsembleTooSmall("ensemble must hold at least one path");
  require_odd_lattice(lattice_size, "trajectories");
  data_.assign(static_cast<std::size_t>(ensemble) * lattice_size * grid.nodes(), 0.0);
}

NoiseField make_noise(std::uint64_t seed, const char* stage, int ensemble, int lattice_size, int steps) {
  NoiseField nf{ensemble, lattice_size, steps, {}};
  nf.xi.resize(static_cast<std::size_t>(ensemble) * lattice_size * steps);
  parallel_for(static_cast<std::size_t>(ensemble) * lattice_size, [&](std::size_t es) {
    NormalStream normal(derive_seed(seed, stage, es));
    double* out = nf.xi.data() + es * steps;
    for (int v = 0; v < steps; ++v) out[v] = normal();
  });
  return nf;
}

std::vector<double> initial_values(const SdeConfig& cfg, std::uint64_t seed, int ensemble, int lattice_size) {
  std::vector<double> init(static_cast<std::size_t>(ensemble) * lattice_size, 0.0);
  switch (cfg.init.kind) {
    case InitialCondition::Kind::Zero:
      break;
    case InitialCondition::Kind::Constant:
      std::fill(init.begin(), init.end(), cfg.init.value);
      break;
    case InitialCondition::Kind::Gaussian:
      for (std::size_t i = 0; i < init.size(); ++i) {
        NormalStream normal(derive_seed(seed, "init", i));
        init[i] = cfg.init.value + cfg.init.stddev * normal();
      }
      break;
  }
  return init;
}

namespace {

void drift_into(const WeightMatrix& J, std::span<const double> fx, std::span<const double> state, double alpha,
                std::span<double> out) {
  const int N = J.size();
  for (int s = 0; s < N; ++s) {
    const double* row = J.entries.data() + static_cast<std::size_t>(s) * N;
    double acc = 0.0;
    for (int d = -J.n; d <= J.n; ++d) {
      const int t = site_shift(s, d, N);
      acc += row[t] * fx[t];
    }
#ifndef NDEBUG
    double row_abs = 0.0;
    for (int t = 0; t < N; ++t) row_abs += std::fabs(row[t]);
    assert(std::fabs(acc) <= row_abs * (1.0 + 1e-12));
#endif
    out[s] = acc - alpha * state[s];
  }
}

}  // namespace

std::vector<double> drift(const WeightMatrix& J, const Activation& f, std::span<const double> state, double alpha) {
  const int N = J.size();
  if (static_cast<int>(state.size()) != N || J.entries.size() != static_cast<std::size_t>(N) * N)
    throw DimensionMismatch("drift: state length does not match J");
  std::vector<double> fx(N), out(N);
  for (int s = 0; s < N; ++s) fx[s] = f(state[s]);
  drift_into(J, fx, state, alpha, out);
  return out;
}

LatticeTrajectories simulate_quenched_with_noise(const WeightMatrix& J, const SdeConfig& cfg,
                                                 const NoiseField& noise, const std::vector<double>& init,
                                                 std::uint64_t seed) {
  cfg.validate();
  const int N = J.size();
  const int m = cfg.grid.m;
  if (noise.lattice_size != N || noise.steps != m)
    throw DimensionMismatch("noise field does not match lattice or grid");
  if (init.size() != static_cast<std::size_t>(noise.ensemble) * N)
    throw DimensionMismatch("initial values do not match ensemble");
  LatticeTrajectories out(noise.ensemble, N, cfg.grid, seed);
  const double dt = cfg.grid.dt();
  const double amp = cfg.sigma * std::sqrt(dt);

  parallel_for(static_cast<std::size_t>(noise.ensemble), [&](std::size_t ei) {
    const int e = static_cast<int>(ei);
    std::vector<double> x(N), fx(N), g(N);
    for (int s = 0; s < N; ++s) x[s] = out.at(e, s, 0) = init[ei * N + s];
    for (int v = 0; v < m; ++v) {
      for (int s = 0; s < N; ++s) fx[s] = cfg.f(x[s]);
      drift_into(J, fx, x, cfg.alpha, g);
      for (int s = 0; s < N; ++s) {
        x[s] = x[s] + g[s] * dt + amp * noise.at(e, s, v);
        out.at(e, s, v + 1) = x[s];
      }
    }
  });
  return out;
}

LatticeTrajectories simulate_quenched(const WeightMatrix& J, const SdeConfig& cfg, std::uint64_t seed,
                                      int replicas) {
  if (replicas < 1) throw EnsembleTooSmall("need at least one replica");
  const auto noise = make_noise(seed, "quenched-noise", replicas, J.size(), cfg.grid.m);
  const auto init = initial_values(cfg, seed, replicas, J.size());
  return simulate_quenched_with_noise(J, cfg, noise, init, seed);
}

}  // namespace hmf
