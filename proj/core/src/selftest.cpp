#include <cmath>
#include <random>
#include <sstream>

#include "hmf/harness.hpp"
#include "hmf/rng.hpp"

namespace hmf {

namespace {

// Pre-registered seeds for the stochastic checks.
constexpr std::uint64_t kSeedKernels = 0x5eed0001;
constexpr std::uint64_t kSeedTilt = 0x5eed0002;
constexpr std::uint64_t kSeedWeights = 0x5eed0003;
constexpr std::uint64_t kSeedMarch = 0x5eed0004;

std::string fmt(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

LatticeTrajectories random_paths(int ensemble, int lattice_size, TimeGrid grid, std::uint64_t seed) {
  LatticeTrajectories x(ensemble, lattice_size, grid, seed);
  NormalStream normal(seed);
  for (auto& v : x.data()) v = normal();
  return x;
}

KernelStack random_stack(int lattice_size, int q, TimeGrid grid, std::uint64_t seed) {
  const auto paths = random_paths(16, lattice_size, grid, seed);
  const auto cf = cf_from_paths(paths, Activation::logistic(), q);
  return assemble_K(CovarianceModel::product(1.0), cf, q);
}

SelftestCheck check_operator_identity(const KToLFunction& k_to_l) {
  SelftestCheck c{"operator_identity", true, ""};
  const int N = 5;
  const TimeGrid grid{1.0, 6};
  const double sigma = 0.8;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto st = random_stack(N, 2, grid, derive_seed(kSeedKernels, "operator", trial));
    const auto out = k_to_l(st, sigma, N);
    const auto kf = lattice_dft(st.K, N);
    const auto lf = lattice_dft(out.L, N);
    const double dt = grid.dt();
    for (int p = 0; p < N; ++p) {
      const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(grid.nodes(), grid.nodes());
      const Eigen::MatrixXcd x = id + (dt / (sigma * sigma)) * kf[p];
      const Eigen::MatrixXcd xinv = x.inverse();
      const Eigen::MatrixXcd a = xinv * kf[p];
      const Eigen::MatrixXcd b = kf[p] * xinv;
      const Eigen::MatrixXcd s = sigma * sigma * (id - xinv) / dt;
      worst = std::max({worst, (lf[p] - a).cwiseAbs().maxCoeff(), (lf[p] - b).cwiseAbs().maxCoeff(),
                        (lf[p] - s).cwiseAbs().maxCoeff()});
    }
  }
  c.passed = worst < 1e-10;
  c.detail = "max deviation " + fmt(worst);
  return c;
}

SelftestCheck check_tilt_identity() {
  SelftestCheck c{"tilt_identity", true, ""};
  std::mt19937_64 eng(kSeedTilt);
  std::normal_distribution<double> nd;
  const int d = 3;
  Eigen::MatrixXd g(d, d), h(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = nd(eng), h(i, j) = nd(eng);
  const Eigen::MatrixXd sigma = g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd a = 0.5 * h * h.transpose();
  const Eigen::MatrixXd exact = gaussian_tilt_moment(sigma, a);
  const Eigen::MatrixXd chol = sigma.llt().matrixL();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  double wsum = 0.0;
  Eigen::VectorXd z(d);
  for (int s = 0; s < 200000; ++s) {
    for (int i = 0; i < d; ++i) z[i] = nd(eng);
    const Eigen::VectorXd x = chol * z;
    const double w = std::exp(-0.5 * x.dot(a * x));
    acc += w * x * x.transpose();
    wsum += w;
  }
  const double mc_err = (acc / wsum - exact).norm() / exact.norm();

  // One frequency: the full-horizon tilt equals the tilted Gaussian moment.
  const TimeGrid grid{1.0, 4};
  const auto st = random_stack(1, 0, grid, derive_seed(kSeedTilt, "single"));
  const double sg = 0.9;
  const auto out = K_to_L(st, sg, 1);
  const Eigen::MatrixXd K = st.K.matrix(0);
  const Eigen::MatrixXd A = (grid.dt() / (sg * sg)) * Eigen::MatrixXd::Identity(grid.nodes(), grid.nodes());
  const double lt_err = (gaussian_tilt_moment(K, A) - Eigen::MatrixXd(out.L.matrix(0))).cwiseAbs().maxCoeff();

  c.passed = mc_err < 0.03 && lt_err < 1e-8;
  c.detail = "MC relative error " + fmt(mc_err) + ", K_to_L vs tilt moment " + fmt(lt_err);
  return c;
}

SelftestCheck check_resolvent() {
  SelftestCheck c{"resolvent_residual", true, ""};
  const int N = 5;
  const TimeGrid grid{1.0, 8};
  const double sigma = 0.7, tol = 1e-12;
  auto st = causal_tilt(random_stack(N, 2, grid, derive_seed(kSeedKernels, "resolvent")), sigma, N);
  const auto M = iterated_kernels(st, sigma, tol);
  const auto LM = compose(st.L, M.M, N, grid.dt(), Quadrature::OpenRectangle);
  double worst = 0.0;
  for (int k = -M.M.q(); k <= M.M.q(); ++k)
    for (int v = 0; v < grid.nodes(); ++v)
      for (int w = 0; w < v; ++w) {
        const double l = std::abs(k) <= st.L.q() ? st.L(k, v, w) : 0.0;
        worst = std::max(worst, std::fabs(M.M(k, v, w) - l - LM(k, v, w) / sigma));
      }
  c.passed = worst < 10 * tol && M.tail_bound < tol;
  c.detail = "residual " + fmt(worst) + ", p_used " + std::to_string(M.p_used);
  return c;
}

SelftestCheck check_delta_reduction() {
  SelftestCheck c{"delta_reduction", true, ""};
  MarchConfig cfg;
  cfg.grid = {1.0, 10};
  cfg.sigma = 0.9;
  cfg.ensemble = 4;
  cfg.seed = kSeedMarch;
  const double cval = 0.7, lambda2 = 1.3;
  cfg.f = Activation::constant(cval);
  const auto law = single_site_uncorrelated(lambda2, cfg);
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, 1, cfg.grid.m);
  const double kappa = lambda2 * cval * cval, dt = cfg.grid.dt();
  double worst = 0.0;
  for (int e = 0; e < cfg.ensemble; ++e) {
    double z = 0.0;
    for (int v = 0; v < cfg.grid.m; ++v) {
      const double ell = kappa / (1.0 + kappa * v * dt / (cfg.sigma * cfg.sigma));
      z = z * (1.0 + dt * ell / cfg.sigma) + cfg.sigma * std::sqrt(dt) * noise.at(e, 0, v);
      worst = std::max(worst, std::fabs(z - law.Z.at(e, 0, v + 1)));
    }
  }
  // lambda2 = 0 must give Z = sigma W exactly.
  cfg.f = Activation::logistic();
  const auto free = single_site_uncorrelated(0.0, cfg);
  bool exact = true;
  for (int e = 0; e < cfg.ensemble; ++e) {
    double w = 0.0;
    for (int v = 0; v < cfg.grid.m; ++v) {
      w = w + cfg.sigma * std::sqrt(dt) * noise.at(e, 0, v);
      exact = exact && w == free.Z.at(e, 0, v + 1);
    }
  }
  c.passed = worst < 1e-12 && exact;
  c.detail = "scalar recursion deviation " + fmt(worst) + (exact ? ", zero coupling exact" : ", zero coupling inexact");
  return c;
}

SelftestCheck check_weights() {
  SelftestCheck c{"weights_covariance", true, ""};
  const int n = 2, N = 5, draws = 20000;
  const auto model = CovarianceModel::product(1.0);
  const WeightSampler sampler(model, n);
  std::vector<double> s1(N * N, 0.0), s2(N * N, 0.0);
  for (int d = 0; d < draws; ++d) {
    const auto J = sampler.sample(derive_seed(kSeedWeights, "selftest", d));
    const double j00 = J.at(0, 0);
    for (int i = 0; i < N * N; ++i) {
      const double x = j00 * J.entries[i];
      s1[i] += x;
      s2[i] += x * x;
    }
  }
  double worst = 0.0;
  for (int k = -n; k <= n; ++k)
    for (int l = -n; l <= n; ++l) {
      const int i = (k + n) * N + (l + n);
      const double mean = s1[i] / draws;
      const double se = std::sqrt((s2[i] / draws - mean * mean) / draws);
      worst = std::max(worst, std::fabs(mean - model.rj(k, l) / N) / se);
    }
  c.passed = worst < 5.0;
  c.detail = "worst standardized deviation " + fmt(worst);
  return c;
}

}  // namespace

std::vector<SelftestCheck> selftest(const SelftestOptions& opts) {
  const KToLFunction k_to_l = opts.k_to_l ? opts.k_to_l : KToLFunction(K_to_L);
  std::vector<SelftestCheck> out;
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("operator_identity", [&] { return check_operator_identity(k_to_l); });
  guarded("tilt_identity", check_tilt_identity);
  guarded("resolvent_residual", check_resolvent);
  guarded("delta_reduction", check_delta_reduction);
  guarded("weights_covariance", check_weights);
  return out;
}

}  // namespace hmf
