#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hmf/error.hpp"
#include "hmf/network_sde.hpp"
#include "hmf/rng.hpp"
#include "oracles.hpp"

using namespace hmf;

namespace {

WeightMatrix random_J(int n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd(0.0, 0.5);
  WeightMatrix J{n, seed, {}};
  J.entries.resize(static_cast<std::size_t>(J.size()) * J.size());
  for (auto& x : J.entries) x = nd(eng);
  return J;
}

WeightMatrix zero_J(int n) {
  return WeightMatrix{n, 0, std::vector<double>(static_cast<std::size_t>(2 * n + 1) * (2 * n + 1), 0.0)};
}

}  // namespace

TEST(Drift, ZeroWeightsGiveLeakOnly) {
  const auto J = zero_J(2);
  const std::vector<double> x{0.3, -1.0, 2.0, 0.0, 5.0};
  const auto d = drift(J, Activation::logistic(), x, 0.7);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(d[i], -0.7 * x[i]);
}

TEST(Drift, ZeroStateGivesHalfRowSums) {
  const auto J = random_J(3, 4);
  const std::vector<double> x(7, 0.0);
  const auto d = drift(J, Activation::logistic(), x, 0.0);
  for (int i = 0; i < 7; ++i) {
    double row = 0.0;
    for (int j = 0; j < 7; ++j) row += J.entries[i * 7 + j];
    EXPECT_NEAR(d[i], 0.5 * row, 1e-14);
  }
}

TEST(Drift, MatchesLoopOracle) {
  const auto J = random_J(1, 9);
  std::mt19937_64 eng(10);
  std::normal_distribution<double> nd;
  std::vector<double> x(3);
  for (auto& v : x) v = nd(eng);
  const auto f = Activation::logistic();
  const auto d = drift(J, f, x, 0.25);
  const auto ref = oracle::drift(J, f.fn, x, 0.25);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(d[i], ref[i], 1e-14);
}

TEST(Drift, BoundedByRowAbsoluteSums) {
  const auto J = random_J(4, 12);
  std::mt19937_64 eng(13);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(9);
    for (auto& v : x) v = nd(eng);
    const auto d = drift(J, Activation::logistic(), x, 0.0);
    for (int i = 0; i < 9; ++i) {
      double row = 0.0;
      for (int j = 0; j < 9; ++j) row += std::fabs(J.entries[i * 9 + j]);
      EXPECT_LE(std::fabs(d[i]), row);
    }
  }
}

TEST(Drift, DimensionMismatch) {
  const auto J = zero_J(1);
  const std::vector<double> x(4, 0.0);
  EXPECT_THROW(drift(J, Activation::logistic(), x, 0.0), DimensionMismatch);
}

TEST(Simulate, NoiseOnlyIsBrownian) {
  SdeConfig cfg;
  cfg.sigma = 0.8;
  cfg.grid = {2.0, 10};
  const int replicas = 4000;
  const auto x = simulate_quenched(zero_J(2), cfg, 3, replicas);
  // Cov(V_s, V_t) = sigma^2 min(s, t), pooled over the 5 independent sites.
  for (auto [a, b] : {std::pair{10, 10}, std::pair{5, 10}, std::pair{3, 7}, std::pair{1, 1}}) {
    double s = 0.0, s2 = 0.0;
    const int n = replicas * 5;
    for (int e = 0; e < replicas; ++e)
      for (int j = 0; j < 5; ++j) {
        const double y = x.at(e, j, a) * x.at(e, j, b);
        s += y;
        s2 += y * y;
      }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_LT(std::fabs(mean - 0.64 * cfg.grid.t(std::min(a, b))), 3.0 * se) << a << "," << b;
  }
}

TEST(Simulate, DeterministicLeak) {
  SdeConfig cfg;
  cfg.sigma = 0.0;
  cfg.alpha = 0.5;
  cfg.grid = {1.0, 8};
  cfg.init.kind = InitialCondition::Kind::Constant;
  cfg.init.value = 1.0;
  const auto x = simulate_quenched(zero_J(1), cfg, 1, 2);
  for (int v = 0; v <= 8; ++v) EXPECT_DOUBLE_EQ(x.at(1, 2, v), std::pow(1.0 - 0.5 / 8.0, v));
}

TEST(Simulate, MatchesScalarOracle) {
  const auto J = random_J(2, 21);
  SdeConfig cfg;
  cfg.sigma = 0.9;
  cfg.alpha = 0.2;
  cfg.grid = {1.0, 4};
  const std::uint64_t seed = 77;
  const auto x = simulate_quenched(J, cfg, seed, 2);
  for (int e = 0; e < 2; ++e) {
    std::vector<std::vector<double>> xi(5, std::vector<double>(4));
    for (int s = 0; s < 5; ++s) {
      NormalStream normal(derive_seed(seed, "quenched-noise", e * 5 + s));
      for (int v = 0; v < 4; ++v) xi[s][v] = normal();
    }
    const auto ref = oracle::euler_path(J, cfg.f.fn, 0.9, 0.2, 1.0, 4, std::vector<double>(5, 0.0), xi);
    for (int s = 0; s < 5; ++s)
      for (int v = 0; v <= 4; ++v) EXPECT_NEAR(x.at(e, s, v), ref[s * 5 + v], 1e-14);
  }
}

TEST(Simulate, ReproducibleAndReplicaStable) {
  const auto J = random_J(2, 5);
  SdeConfig cfg;
  cfg.grid = {1.0, 6};
  const auto a = simulate_quenched(J, cfg, 11, 3);
  const auto b = simulate_quenched(J, cfg, 11, 5);
  EXPECT_EQ(a.data(), simulate_quenched(J, cfg, 11, 3).data());
  // Adding replicas leaves the existing ones untouched.
  for (int e = 0; e < 3; ++e)
    for (int s = 0; s < 5; ++s)
      for (int v = 0; v <= 6; ++v) EXPECT_EQ(a.at(e, s, v), b.at(e, s, v));
}

TEST(Simulate, ShiftEquivariantBitwise) {
  const int n = 3, N = 7, shift = 2;
  const auto J = random_J(n, 31);
  WeightMatrix Js{n, 0, std::vector<double>(N * N)};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) Js.entries[i * N + j] = J.entries[site_shift(i, shift, N) * N + site_shift(j, shift, N)];
  SdeConfig cfg;
  cfg.grid = {1.5, 9};
  const auto noise = make_noise(4, "test", 2, N, 9);
  NoiseField shifted = noise;
  for (int e = 0; e < 2; ++e)
    for (int s = 0; s < N; ++s)
      for (int v = 0; v < 9; ++v) shifted.at(e, s, v) = noise.at(e, site_shift(s, shift, N), v);
  const std::vector<double> init(2 * N, 0.0);
  const auto a = simulate_quenched_with_noise(J, cfg, noise, init);
  const auto b = simulate_quenched_with_noise(Js, cfg, shifted, init);
  for (int e = 0; e < 2; ++e)
    for (int s = 0; s < N; ++s)
      for (int v = 0; v <= 9; ++v) EXPECT_EQ(b.at(e, s, v), a.at(e, site_shift(s, shift, N), v));
}

TEST(Simulate, InitialConditionsRespected) {
  SdeConfig cfg;
  cfg.grid = {1.0, 3};
  cfg.init.kind = InitialCondition::Kind::Gaussian;
  cfg.init.value = 2.0;
  cfg.init.stddev = 0.5;
  const auto init = initial_values(cfg, 8, 2000, 3);
  double s = 0.0;
  for (double x : init) s += x;
  EXPECT_NEAR(s / init.size(), 2.0, 4.0 * 0.5 / std::sqrt(init.size()));
  const auto x = simulate_quenched(zero_J(1), cfg, 8, 2000);
  for (int e = 0; e < 2000; ++e)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(x.at(e, j, 0), init[e * 3 + j]);
}

TEST(SdeConfig, Validation) {
  SdeConfig cfg;
  cfg.sigma = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.sigma = 1.0;
  cfg.alpha = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.alpha = 0.0;
  cfg.grid = {1.0, 0};
  EXPECT_THROW(cfg.validate(), ConfigError);
}
