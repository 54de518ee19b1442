#include <gtest/gtest.h>

#include <cmath>

#include "hmf/error.hpp"
#include "hmf/limit.hpp"
#include "hmf/rng.hpp"
#include "oracles.hpp"

using namespace hmf;

namespace {

MarchConfig small_config(int N = 9, int q = 3, int m = 8, int ensemble = 24) {
  MarchConfig cfg;
  cfg.lattice_size = N;
  cfg.q = q;
  cfg.grid = {1.0, m};
  cfg.sigma = 0.9;
  cfg.ensemble = ensemble;
  cfg.seed = 4242;
  return cfg;
}

NoiseField shift_noise(const NoiseField& in, int shift) {
  NoiseField out = in;
  for (int e = 0; e < in.ensemble; ++e)
    for (int s = 0; s < in.lattice_size; ++s)
      for (int v = 0; v < in.steps; ++v) out.at(e, s, v) = in.at(e, site_shift(s, shift, in.lattice_size), v);
  return out;
}

double max_diff(const LatticeTrajectories& a, const LatticeTrajectories& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::fabs(a.data()[i] - b.data()[i]));
  return d;
}

}  // namespace

TEST(March, ZeroModelGivesScaledBrownianMotionBitwise) {
  const auto cfg = small_config();
  const auto law = march(CovarianceModel::zero(), cfg);
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, cfg.lattice_size, cfg.grid.m);
  const double amp = cfg.sigma * std::sqrt(cfg.grid.dt());
  for (int e = 0; e < cfg.ensemble; ++e)
    for (int j = 0; j < cfg.lattice_size; ++j) {
      double z = 0.0;
      EXPECT_EQ(law.Z.at(e, j, 0), 0.0);
      for (int v = 0; v < cfg.grid.m; ++v) {
        z = z + amp * noise.at(e, j, v);
        EXPECT_EQ(law.Z.at(e, j, v + 1), z);
        EXPECT_EQ(law.theta.at(e, j, v), 0.0);
      }
    }
  EXPECT_EQ(law.kernels.L.max_abs(), 0.0);
}

TEST(March, InitialThetaIsZero) {
  const auto cfg = small_config();
  const auto law = march(CovarianceModel::product(1.0), cfg);
  for (int e = 0; e < cfg.ensemble; ++e)
    for (int j = 0; j < cfg.lattice_size; ++j) {
      EXPECT_EQ(law.theta.at(e, j, 0), 0.0);
      EXPECT_EQ(law.Z.at(e, j, 0), 0.0);
    }
}

TEST(March, SilentNoiseKeepsEverythingAtZero) {
  const auto cfg = small_config();
  const auto law = march(CovarianceModel::product(1.0), cfg);
  NoiseField quiet{cfg.ensemble, cfg.lattice_size, cfg.grid.m,
                   std::vector<double>(static_cast<std::size_t>(cfg.ensemble) * cfg.lattice_size * cfg.grid.m, 0.0)};
  const auto frozen = march_frozen(law.kernels, cfg.sigma, cfg.lattice_size, quiet);
  for (double x : frozen.theta.data()) EXPECT_EQ(x, 0.0);
  for (double x : frozen.Z.data()) EXPECT_EQ(x, 0.0);
}

TEST(March, Causality) {
  const auto cfg = small_config();
  const auto model = CovarianceModel::product(1.0);
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, cfg.lattice_size, cfg.grid.m);
  const auto base = march_with_noise(model, cfg, noise);
  const int v0 = 4;
  NoiseField future = noise;
  for (int e = 0; e < cfg.ensemble; ++e)
    for (int s = 0; s < cfg.lattice_size; ++s)
      for (int v = v0; v < cfg.grid.m; ++v) future.at(e, s, v) += 1.0;
  const auto pert = march_with_noise(model, cfg, future);
  for (int e = 0; e < cfg.ensemble; ++e)
    for (int s = 0; s < cfg.lattice_size; ++s) {
      for (int v = 0; v <= v0; ++v) {
        EXPECT_EQ(pert.theta.at(e, s, v), base.theta.at(e, s, v));
        EXPECT_EQ(pert.Z.at(e, s, v), base.Z.at(e, s, v));
      }
    }
  EXPECT_GT(max_diff(pert.Z, base.Z), 0.1);
}

TEST(March, ShiftEquivariantBitwise) {
  const auto cfg = small_config();
  const auto model = CovarianceModel::product(1.0);
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, cfg.lattice_size, cfg.grid.m);
  const auto a = march_with_noise(model, cfg, noise);
  const auto b = march_with_noise(model, cfg, shift_noise(noise, 4));
  for (int e = 0; e < cfg.ensemble; ++e)
    for (int s = 0; s < cfg.lattice_size; ++s)
      for (int v = 0; v <= cfg.grid.m; ++v)
        ASSERT_EQ(b.Z.at(e, s, v), a.Z.at(e, site_shift(s, 4, cfg.lattice_size), v));
}

TEST(March, Deterministic) {
  const auto cfg = small_config();
  const auto model = CovarianceModel::product(1.0);
  EXPECT_EQ(march(model, cfg).Z.data(), march(model, cfg).Z.data());
}

TEST(March, KernelsMatchOfflineConstruction) {
  const auto cfg = small_config();
  const auto model = CovarianceModel::product(1.0);
  const auto law = march(model, cfg);
  const auto cf = cf_from_paths(law.Z, cfg.f, cfg.q);
  const auto st = causal_tilt(assemble_K(model, cf, cfg.q), cfg.sigma, cfg.lattice_size);
  EXPECT_EQ(law.kernels.K.data(), st.K.data());
  for (std::size_t i = 0; i < st.L.data().size(); ++i) EXPECT_NEAR(law.kernels.L.data()[i], st.L.data()[i], 1e-13);
}

TEST(March, FrozenKernelsReproduceMarch) {
  const auto cfg = small_config();
  const auto law = march(CovarianceModel::product(1.0), cfg);
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, cfg.lattice_size, cfg.grid.m);
  const auto frozen = march_frozen(law.kernels, cfg.sigma, cfg.lattice_size, noise);
  EXPECT_EQ(frozen.Z.data(), law.Z.data());
  EXPECT_EQ(frozen.theta.data(), law.theta.data());
}

TEST(March, PicardSweepsReproduceMarch) {
  const auto cfg = small_config(7, 2, 6, 16);
  const auto model = CovarianceModel::product(1.0);
  const auto law = march(model, cfg);
  const auto pic = march_picard(model, cfg, cfg.grid.m + 1);
  EXPECT_LT(max_diff(pic.Z, law.Z), 1e-12);
  // Fewer sweeps leave the late times unconverged.
  const auto early = march_picard(model, cfg, 2);
  EXPECT_GT(max_diff(early.Z, law.Z), 1e-9);
}

TEST(March, RepresentationsAgreePathwise) {
  const auto cfg = small_config(9, 3, 8, 6);
  const auto law = march(CovarianceModel::product(1.5), cfg);
  const auto noise = limit_noise(99, 6, cfg.lattice_size, cfg.grid.m);
  const auto frozen = march_frozen(law.kernels, cfg.sigma, cfg.lattice_size, noise);
  const auto M = iterated_kernels(law.kernels, cfg.sigma, 1e-13);
  const auto closed = sample_closed_form_with_noise(law.kernels, M, cfg.sigma, cfg.lattice_size, cfg.grid, noise);
  EXPECT_LT(max_diff(frozen.Z, closed), 1e-8);
  for (int e = 0; e < 6; ++e) {
    const auto ref = oracle::dense_limit_solve(law.kernels.L, cfg.sigma, cfg.grid.dt(), cfg.lattice_size, cfg.grid.m,
                                               [&](int j, int v) { return noise.at(e, j, v); });
    for (int j = 0; j < cfg.lattice_size; ++j)
      for (int v = 0; v <= cfg.grid.m; ++v) EXPECT_NEAR(frozen.Z.at(e, j, v), ref[j * (cfg.grid.m + 1) + v], 1e-8);
  }
}

TEST(ClosedForm, ZeroKernelGivesScaledBrownianMotion) {
  const TimeGrid g{1.0, 5};
  KernelStack st;
  st.grid = g;
  st.lattice_size = 5;
  st.K = LagKernel(2, 6);
  st.L = LagKernel(2, 6);
  const auto M = iterated_kernels(st, 1.0, 1e-10);
  const auto Z = sample_closed_form(st, M, 0.7, 5, g, 3, 4);
  const auto noise = limit_noise(3, 4, 5, 5);
  for (int e = 0; e < 4; ++e)
    for (int j = 0; j < 5; ++j) {
      double w = 0.0;
      for (int v = 0; v < 5; ++v) {
        w += std::sqrt(g.dt()) * noise.at(e, j, v);
        EXPECT_NEAR(Z.at(e, j, v + 1), 0.7 * w, 1e-15);
      }
    }
}

TEST(ClosedForm, ConstantKernelVarianceMatchesDenseSolve) {
  const int m = 40;
  const TimeGrid g{1.0, m};
  const double c = 0.8, sigma = 1.2;
  KernelStack st;
  st.grid = g;
  st.lattice_size = 1;
  st.K = LagKernel(0, m + 1);
  st.L = LagKernel(0, m + 1);
  for (int v = 0; v <= m; ++v)
    for (int w = 0; w < v; ++w) st.L(0, v, w) = c;
  const auto M = iterated_kernels(st, sigma, 1e-14);
  // Unit noise vectors: the ensemble variance is the squared row norm.
  NoiseField basis{m, 1, m, std::vector<double>(static_cast<std::size_t>(m) * m, 0.0)};
  for (int e = 0; e < m; ++e) basis.at(e, 0, e) = 1.0;
  const auto Z = sample_closed_form_with_noise(st, M, sigma, 1, g, basis);
  std::vector<double> var_ref(m + 1, 0.0);
  for (int e = 0; e < m; ++e) {
    const auto ref = oracle::dense_limit_solve(st.L, sigma, g.dt(), 1, m, [&](int, int v) { return v == e ? 1.0 : 0.0; });
    for (int v = 0; v <= m; ++v) var_ref[v] += ref[v] * ref[v];
  }
  for (int v = 0; v <= m; ++v) {
    double var = 0.0;
    for (int e = 0; e < m; ++e) var += Z.at(e, 0, v) * Z.at(e, 0, v);
    EXPECT_NEAR(var, var_ref[v], 1e-6);
  }
}

TEST(ClosedForm, EnsembleCovarianceMatchesMarch) {
  const auto cfg = small_config(9, 3, 8, 400);
  const auto law = march(CovarianceModel::product(1.5), cfg);
  const auto M = iterated_kernels(law.kernels, cfg.sigma, 1e-12);
  const auto Z = sample_closed_form(law.kernels, M, cfg.sigma, cfg.lattice_size, cfg.grid, 777, 400);
  // Site averaged E[Z_T^2] per member, compared across the two ensembles.
  auto stat = [&](const LatticeTrajectories& x) {
    std::vector<double> per(x.ensemble());
    for (int e = 0; e < x.ensemble(); ++e) {
      double s = 0.0;
      for (int j = 0; j < x.lattice_size(); ++j) s += x.at(e, j, cfg.grid.m) * x.at(e, j, cfg.grid.m);
      per[e] = s / x.lattice_size();
    }
    double mean = 0.0, sq = 0.0;
    for (double p : per) mean += p;
    mean /= per.size();
    for (double p : per) sq += (p - mean) * (p - mean);
    return std::pair{mean, std::sqrt(sq / (per.size() - 1) / per.size())};
  };
  const auto [a, sa] = stat(law.Z);
  const auto [b, sb] = stat(Z);
  EXPECT_LT(std::fabs(a - b), 3.0 * std::hypot(sa, sb));
}

TEST(ClosedForm, GridMismatch) {
  const auto cfg = small_config();
  const auto law = march(CovarianceModel::product(1.0), cfg);
  const auto M = iterated_kernels(law.kernels, cfg.sigma, 1e-10);
  EXPECT_THROW(sample_closed_form(law.kernels, M, cfg.sigma, cfg.lattice_size, TimeGrid{2.0, 8}, 1, 2), GridMismatch);
}

TEST(SingleSite, ZeroCouplingIsBrownian) {
  auto cfg = small_config();
  const auto law = single_site_uncorrelated(0.0, cfg);
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, 1, cfg.grid.m);
  const double amp = cfg.sigma * std::sqrt(cfg.grid.dt());
  for (int e = 0; e < cfg.ensemble; ++e) {
    double z = 0.0;
    for (int v = 0; v < cfg.grid.m; ++v) {
      z = z + amp * noise.at(e, 0, v);
      EXPECT_EQ(law.Z.at(e, 0, v + 1), z);
    }
  }
}

TEST(SingleSite, ConstantActivationMatchesScalarRecursion) {
  auto cfg = small_config(9, 3, 10, 5);
  const double c = 0.6, lambda2 = 1.7;
  cfg.f = Activation::constant(c);
  const auto law = single_site_uncorrelated(lambda2, cfg);
  const double dt = cfg.grid.dt(), s = cfg.sigma;
  LagKernel K(0, cfg.grid.nodes());
  for (auto& x : K.data()) x = lambda2 * c * c;
  const auto L = oracle::causal_tilt(K, s, dt, 1);
  for (int e = 0; e < cfg.ensemble; ++e) {
    NormalStream normal(derive_seed(cfg.seed, "limit-noise", e));
    std::vector<double> z(cfg.grid.nodes(), 0.0), dz(cfg.grid.m, 0.0);
    for (int v = 0; v < cfg.grid.m; ++v) {
      double theta = 0.0;
      for (int w = 0; w < v; ++w) theta += L(0, v, w) * dz[w];
      theta /= s * s;
      const double xi = normal();
      z[v + 1] = z[v] + s * theta * dt + s * std::sqrt(dt) * xi;
      dz[v] = z[v + 1] - z[v];
    }
    for (int v = 0; v <= cfg.grid.m; ++v) EXPECT_NEAR(law.Z.at(e, 0, v), z[v], 1e-12);
  }
}

TEST(MarchConfig, Validation) {
  auto cfg = small_config();
  cfg.q = 4;
  EXPECT_THROW(cfg.validate(), LagTooLarge);
  cfg = small_config();
  cfg.ensemble = 1;
  EXPECT_THROW(cfg.validate(), EnsembleTooSmall);
  cfg = small_config();
  cfg.lattice_size = 8;
  EXPECT_THROW(cfg.validate(), DimensionMismatch);
  cfg = small_config();
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(March, KernelStrideReusesRows) {
  auto cfg = small_config(9, 3, 12, 32);
  const auto model = CovarianceModel::product(1.0);
  const auto full = march(model, cfg);
  cfg.kernel_stride = 3;
  const auto strided = march(model, cfg);
  // Rows before the first reuse are identical.
  for (int e = 0; e < cfg.ensemble; ++e)
    for (int j = 0; j < cfg.lattice_size; ++j)
      for (int v = 0; v <= 3; ++v) EXPECT_EQ(strided.Z.at(e, j, v), full.Z.at(e, j, v));
  // Reused rows are the last rebuilt row shifted in time.
  for (int k = -3; k <= 3; ++k)
    for (int w = 0; w < 3; ++w) EXPECT_EQ(strided.kernels.L(k, 4, w + 1), strided.kernels.L(k, 3, w));
  for (double x : strided.Z.data()) EXPECT_TRUE(std::isfinite(x));
}

TEST(March, GaussianModeRuns) {
  auto cfg = small_config();
  cfg.cf_mode = CfMode::Gaussian;
  const auto law = march(CovarianceModel::product(1.0), cfg);
  EXPECT_EQ(law.kernels.provenance, Provenance::Gaussian);
  for (double x : law.Z.data()) EXPECT_TRUE(std::isfinite(x));
}
