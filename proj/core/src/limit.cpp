#include "hmf/limit.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>

#include "hmf/error.hpp"
#include "hmf/gauss_hermite.hpp"
#include "hmf/parallel.hpp"

namespace hmf {

namespace {

using Complex = std::complex<double>;

std::vector<Complex> twiddles(int n, double sign) {
  std::vector<Complex> tw(n);
  for (int j = 0; j < n; ++j) tw[j] = std::polar(1.0, sign * 2.0 * std::numbers::pi * j / n);
  return tw;
}

// Same pairing as assemble_K so incremental and offline kernels agree.
double kernel_entry(const CovarianceModel& model, const LagKernel& cf, int q, int k, int v, int w) {
  double acc = model.rj(k, 0) * cf(0, v, w);
  for (int l = 1; l <= q; ++l) acc += model.rj(k, l) * cf(l, v, w) + model.rj(k, -l) * cf(-l, v, w);
  return acc;
}

struct EngineSpec {
  const CovarianceModel* model = nullptr;  // null in frozen mode
  const LagKernel* frozen_L = nullptr;
  int q = 0;
  int lattice_size = 1;
  TimeGrid grid;
  double sigma = 1.0;
  const Activation* f = nullptr;
  CfMode mode = CfMode::Empirical;
  int quad_order = 40;
  int stride = 1;
  std::uint64_t seed = 0;
};

class MarchEngine {
 public:
  MarchEngine(const EngineSpec& spec, const NoiseField& noise)
      : s_(spec),
        noise_(noise),
        E_(noise.ensemble),
        N_(spec.lattice_size),
        n_t_(spec.grid.nodes()),
        Z_(noise.ensemble, spec.lattice_size, spec.grid, spec.seed),
        theta_(noise.ensemble, spec.lattice_size, spec.grid),
        L_(spec.q, spec.grid.nodes()),
        tw_inv_(twiddles(spec.lattice_size, 1.0)),
        tw_fwd_(twiddles(spec.lattice_size, -1.0)) {
    if (noise.lattice_size != N_ || noise.steps != spec.grid.m)
      throw DimensionMismatch("noise field does not match lattice or grid");
    dz_.assign(static_cast<std::size_t>(E_) * N_ * spec.grid.m, 0.0);
    if (s_.frozen_L) {
      L_ = *s_.frozen_L;
    } else {
      fz_.assign(Z_.data().size(), 0.0);
      cf_ = LagKernel(s_.q, n_t_);
      K_ = LagKernel(s_.q, n_t_);
      if (s_.mode == CfMode::Gaussian) {
        covZ_ = LagKernel(s_.q, n_t_);
        gh_.emplace(s_.quad_order);
      }
      kf_.assign(N_, Eigen::MatrixXcd::Zero(n_t_, n_t_));
    }
  }

  LimitLaw run() {
    const int m = s_.grid.m;
    int refreshed = 0;
    for (int v = 0; v <= m; ++v) {
      if (!s_.frozen_L) {
        const bool refresh = s_.stride <= 1 || v % s_.stride == 0 || v < s_.stride;
        if (refresh) {
          extend_through(v);
          tilt_row(v);
          refreshed = v;
        } else {
          reuse_row(v, refreshed);
        }
      }
      compute_theta(v);
      if (v < m) advance(v);
    }
    if (!s_.frozen_L) extend_through(m);

    LimitLaw out{std::move(Z_), {}, std::move(theta_)};
    out.kernels.grid = s_.grid;
    out.kernels.sigma = s_.sigma;
    out.kernels.lattice_size = N_;
    out.kernels.causal = true;
    out.kernels.L = std::move(L_);
    if (!s_.frozen_L) {
      out.kernels.provenance = s_.mode == CfMode::Gaussian ? Provenance::Gaussian : Provenance::Empirical;
      out.kernels.K = std::move(K_);
    } else {
      out.kernels.provenance = Provenance::Fixed;
    }
    return out;
  }

 private:
  void extend_through(int v) {
    while (extended_ < v) add_time(++extended_);
  }

  // Adds the entries of C_f, K and K~ that involve time v, given times < v.
  void add_time(int v) {
    const int q = s_.q;
    for (int e = 0; e < E_; ++e)
      for (int j = 0; j < N_; ++j) fz_[(static_cast<std::size_t>(e) * N_ + j) * n_t_ + v] = (*s_.f)(Z_.at(e, j, v));

    const std::size_t jobs = static_cast<std::size_t>(2 * q + 1) * (v + 1);
    if (s_.mode == CfMode::Empirical) {
      parallel_for(jobs, [&](std::size_t i) {
        const int l = static_cast<int>(i / (v + 1)) - q, w = static_cast<int>(i % (v + 1));
        cf_(l, v, w) = feature_moment(fz_, E_, N_, n_t_, l, v, w);
      });
    } else {
      parallel_for(jobs, [&](std::size_t i) {
        const int l = static_cast<int>(i / (v + 1)) - q, w = static_cast<int>(i % (v + 1));
        covZ_(l, v, w) = field_moment(Z_.data(), E_, N_, n_t_, l, v, w);
      });
      for (int l = -q; l <= q; ++l)
        for (int w = 0; w < v; ++w) covZ_(l, w, v) = covZ_(-l, v, w);
      parallel_for(jobs, [&](std::size_t i) {
        const int l = static_cast<int>(i / (v + 1)) - q, w = static_cast<int>(i % (v + 1));
        cf_(l, v, w) = gaussian_feature_moment(covZ_(0, v, v), covZ_(l, v, w), covZ_(0, w, w), *s_.f, *gh_);
      });
    }
    for (int l = -q; l <= q; ++l)
      for (int w = 0; w < v; ++w) cf_(l, w, v) = cf_(-l, v, w);

    for (int k = -q; k <= q; ++k)
      for (int w = 0; w <= v; ++w) {
        K_(k, v, w) = kernel_entry(*s_.model, cf_, q, k, v, w);
        if (w < v) K_(k, w, v) = kernel_entry(*s_.model, cf_, q, k, w, v);
      }
    parallel_for(static_cast<std::size_t>(N_), [&](std::size_t p) {
      for (int w = 0; w <= v; ++w) {
        Complex a = 0.0, b = 0.0;
        for (int k = -q; k <= q; ++k) {
          const Complex t = tw_fwd_[site_shift(0, k * static_cast<int>(p), N_)];
          a += t * Complex(K_(k, v, w), 0.0);
          b += t * Complex(K_(k, w, v), 0.0);
        }
        kf_[p](v, w) = a;
        kf_[p](w, v) = b;
      }
    });
  }

  void tilt_row(int v) {
    if (v == 0) return;
    const auto rows = causal_tilt_row(kf_, v, s_.sigma, s_.grid.dt());
    for (int k = -s_.q; k <= s_.q; ++k)
      for (int w = 0; w < v; ++w) {
        Complex acc = 0.0;
        for (int p = 0; p < N_; ++p) acc += tw_inv_[site_shift(0, k * p, N_)] * rows[p][w];
        L_(k, v, w) = acc.real() / N_;
      }
  }

  void reuse_row(int v, int vr) {
    const int shift = v - vr;
    for (int k = -s_.q; k <= s_.q; ++k)
      for (int w = 0; w < v; ++w) L_(k, v, w) = w - shift >= 0 ? L_(k, vr, w - shift) : 0.0;
  }

  void compute_theta(int v) {
    const int q = L_.q();
    const int m = s_.grid.m;
    const double inv_s2 = 1.0 / (s_.sigma * s_.sigma);
    parallel_for(static_cast<std::size_t>(E_), [&](std::size_t ei) {
      const int e = static_cast<int>(ei);
      const double* dz = dz_.data() + ei * N_ * m;
      for (int j = 0; j < N_; ++j) {
        double acc = 0.0;
        for (int k = -q; k <= q; ++k) {
          const double* row = &L_(k, v, 0);
          const double* inc = dz + static_cast<std::size_t>(site_shift(j, k, N_)) * m;
          for (int w = 0; w < v; ++w) acc += row[w] * inc[w];
        }
        theta_.at(e, j, v) = inv_s2 * acc;
      }
    });
  }

  void advance(int v) {
    const double dt = s_.grid.dt();
    const double amp = s_.sigma * std::sqrt(dt);
    const int m = s_.grid.m;
    for (int e = 0; e < E_; ++e)
      for (int j = 0; j < N_; ++j) {
        const double next = Z_.at(e, j, v) + s_.sigma * theta_.at(e, j, v) * dt + amp * noise_.at(e, j, v);
        Z_.at(e, j, v + 1) = next;
        dz_[(static_cast<std::size_t>(e) * N_ + j) * m + v] = next - Z_.at(e, j, v);
      }
  }

  EngineSpec s_;
  const NoiseField& noise_;
  int E_, N_, n_t_;
  LatticeTrajectories Z_, theta_;
  LagKernel L_, cf_, K_, covZ_;
  std::vector<double> fz_, dz_;
  std::vector<Eigen::MatrixXcd> kf_;
  std::vector<Complex> tw_inv_, tw_fwd_;
  std::optional<GaussHermite> gh_;
  int extended_ = -1;
};

void validate_engine(const MarchConfig& cfg, bool lattice_checks) {
  cfg.grid.validate();
  if (!(cfg.sigma > 0.0)) throw ConfigError("march needs sigma > 0");
  validate_activation(cfg.f);
  if (cfg.cf_mode == CfMode::Empirical && cfg.ensemble < 2)
    throw EnsembleTooSmall("empirical mode needs an ensemble of at least 2");
  if (cfg.ensemble < 1) throw EnsembleTooSmall("ensemble must be positive");
  if (cfg.kernel_stride < 1) throw ConfigError("kernel_stride must be positive");
  if (cfg.quad_order < 1) throw ConfigError("quadrature order must be positive");
  if (lattice_checks) {
    require_odd_lattice(cfg.lattice_size, "march");
    if (cfg.q < 0 || cfg.q >= half_width(cfg.lattice_size))
      throw LagTooLarge("march needs 0 <= q < (N_s - 1) / 2");
  }
}

LimitLaw run_engine(const CovarianceModel& model, const MarchConfig& cfg, const NoiseField& noise, int N, int q) {
  EngineSpec spec;
  spec.model = &model;
  spec.q = q;
  spec.lattice_size = N;
  spec.grid = cfg.grid;
  spec.sigma = cfg.sigma;
  spec.f = &cfg.f;
  spec.mode = cfg.cf_mode;
  spec.quad_order = cfg.quad_order;
  spec.stride = cfg.kernel_stride;
  spec.seed = cfg.seed;
  return MarchEngine(spec, noise).run();
}

}  // namespace

std::string to_string(CfMode m) { return m == CfMode::Gaussian ? "gaussian" : "empirical"; }

CfMode cf_mode_from_string(const std::string& s) {
  if (s == "empirical") return CfMode::Empirical;
  if (s == "gaussian") return CfMode::Gaussian;
  throw ConfigError("unknown cf_mode '" + s + "'");
}

void MarchConfig::validate() const { validate_engine(*this, true); }

NoiseField limit_noise(std::uint64_t seed, int ensemble, int lattice_size, int steps) {
  return make_noise(seed, "limit-noise", ensemble, lattice_size, steps);
}

LimitLaw march_with_noise(const CovarianceModel& model, const MarchConfig& cfg, const NoiseField& noise) {
  cfg.validate();
  return run_engine(model, cfg, noise, cfg.lattice_size, cfg.q);
}

LimitLaw march(const CovarianceModel& model, const MarchConfig& cfg) {
  cfg.validate();
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, cfg.lattice_size, cfg.grid.m);
  return run_engine(model, cfg, noise, cfg.lattice_size, cfg.q);
}

LimitLaw march_frozen(const KernelStack& stack, double sigma, int lattice_size, const NoiseField& noise) {
  if (!stack.has_L()) throw ConfigError("march_frozen needs a kernel stack with L");
  if (!(sigma > 0.0)) throw ConfigError("march needs sigma > 0");
  require_odd_lattice(lattice_size, "march_frozen");
  if (stack.L.q() > half_width(lattice_size)) throw LagTooLarge("kernel lags exceed the torus");
  if (stack.L.nodes() != stack.grid.nodes()) throw GridMismatch("kernel does not match its grid");
  EngineSpec spec;
  spec.frozen_L = &stack.L;
  spec.q = stack.L.q();
  spec.lattice_size = lattice_size;
  spec.grid = stack.grid;
  spec.sigma = sigma;
  LimitLaw law = MarchEngine(spec, noise).run();
  law.kernels.K = stack.K;
  return law;
}

LimitLaw march_picard(const CovarianceModel& model, const MarchConfig& cfg, int sweeps) {
  cfg.validate();
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, cfg.lattice_size, cfg.grid.m);
  KernelStack stack;
  stack.grid = cfg.grid;
  stack.K = LagKernel(cfg.q, cfg.grid.nodes());
  stack.L = LagKernel(cfg.q, cfg.grid.nodes());
  LimitLaw law = march_frozen(stack, cfg.sigma, cfg.lattice_size, noise);
  for (int it = 0; it < sweeps; ++it) {
    FeatureCovariance cf = cfg.cf_mode == CfMode::Empirical
                               ? cf_from_paths(law.Z, cfg.f, cfg.q)
                               : cf_from_gaussian(field_covariance(law.Z, cfg.q), cfg.grid, cfg.f, cfg.quad_order);
    KernelStack k = assemble_K(model, cf, cfg.q);
    k = causal_tilt(k, cfg.sigma, cfg.lattice_size);
    law = march_frozen(k, cfg.sigma, cfg.lattice_size, noise);
    law.kernels = k;
    law.kernels.provenance = cfg.cf_mode == CfMode::Gaussian ? Provenance::Gaussian : Provenance::Empirical;
  }
  return law;
}

LatticeTrajectories sample_closed_form_with_noise(const KernelStack& stack, const ResolventKernel& M, double sigma,
                                                  int lattice_size, const TimeGrid& grid, const NoiseField& noise) {
  if (!stack.has_L()) throw ConfigError("sample_closed_form needs a kernel stack with L");
  if (!(stack.grid == grid) || !(M.grid == grid) || stack.L.nodes() != grid.nodes() || M.M.nodes() != grid.nodes())
    throw GridMismatch("kernels and sampler use different time grids");
  require_odd_lattice(lattice_size, "sample_closed_form");
  if (M.lattice_size != lattice_size) throw DimensionMismatch("resolvent was built for another lattice size");
  if (noise.lattice_size != lattice_size || noise.steps != grid.m)
    throw DimensionMismatch("noise field does not match lattice or grid");
  if (!(sigma > 0.0)) throw ConfigError("sample_closed_form needs sigma > 0");

  const int N = lattice_size, m = grid.m, n_t = grid.nodes();
  const int qL = stack.L.q();
  if (qL > half_width(N)) throw LagTooLarge("kernel lags exceed the torus");
  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);

  // Conjugated resolvent spectrum: DFT_j of sum_i M^i Phi^{i+j} is conj(M~p) Phi^p.
  auto mf = lattice_dft(M.M, N);
  for (auto& x : mf) x = x.conjugate().eval();
  const auto fwd = twiddles(N, -1.0);
  const auto inv = twiddles(N, 1.0);

  LatticeTrajectories out(noise.ensemble, N, grid);
  parallel_for(static_cast<std::size_t>(noise.ensemble), [&](std::size_t ei) {
    const int e = static_cast<int>(ei);
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(N, n_t);
    for (int j = 0; j < N; ++j)
      for (int u = 1; u < n_t; ++u) {
        double acc = 0.0;
        for (int i = -qL; i <= qL; ++i) {
          const int s = site_shift(j, i, N);
          for (int w = 0; w < u; ++w) acc += stack.L(i, u, w) * sdt * noise.at(e, s, w);
        }
        phi(j, u) = acc;
      }
    Eigen::MatrixXcd phat = Eigen::MatrixXcd::Zero(N, n_t);
    for (int p = 0; p < N; ++p)
      for (int j = 0; j < N; ++j) phat.row(p) += fwd[site_shift(0, p * j, N)] * phi.row(j).cast<Complex>();
    Eigen::MatrixXcd psihat(N, n_t);
    for (int p = 0; p < N; ++p) {
      const Eigen::MatrixXcd strict = mf[p].triangularView<Eigen::StrictlyLower>();
      psihat.row(p) = (dt * strict * phat.row(p).transpose()).transpose();
    }
    for (int j = 0; j < N; ++j) {
      Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n_t);
      for (int p = 0; p < N; ++p) acc += inv[site_shift(0, p * j, N)] * psihat.row(p).transpose();
      double z = 0.0, bm = 0.0;
      out.at(e, j, 0) = 0.0;
      for (int v = 0; v < m; ++v) {
        const double y = phi(j, v) + acc[v].real() / (N * sigma);
        bm += sdt * noise.at(e, j, v);
        z += dt * y;
        out.at(e, j, v + 1) = sigma * bm + z;
      }
    }
  });
  return out;
}

LatticeTrajectories sample_closed_form(const KernelStack& stack, const ResolventKernel& M, double sigma,
                                       int lattice_size, const TimeGrid& grid, std::uint64_t seed, int ensemble) {
  if (ensemble < 1) throw EnsembleTooSmall("ensemble must be positive");
  const auto noise = limit_noise(seed, ensemble, lattice_size, grid.m);
  return sample_closed_form_with_noise(stack, M, sigma, lattice_size, grid, noise);
}

LimitLaw single_site_uncorrelated(double lambda2, const MarchConfig& cfg) {
  if (!(lambda2 >= 0.0)) throw ConfigError("lambda2 must be nonnegative");
  validate_engine(cfg, false);
  const auto model = CovarianceModel::delta(lambda2);
  const auto noise = limit_noise(cfg.seed, cfg.ensemble, 1, cfg.grid.m);
  return run_engine(model, cfg, noise, 1, 0);
}

}  // namespace hmf
