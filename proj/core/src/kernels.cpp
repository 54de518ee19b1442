#include "hmf/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "hmf/error.hpp"
#include "hmf/fixed_sum.hpp"
#include "hmf/gauss_hermite.hpp"
#include "hmf/parallel.hpp"

namespace hmf {

namespace {

using Complex = std::complex<double>;

std::vector<Complex> twiddles(int lattice_size, double sign) {
  std::vector<Complex> tw(lattice_size);
  for (int j = 0; j < lattice_size; ++j) tw[j] = std::polar(1.0, sign * 2.0 * std::numbers::pi * j / lattice_size);
  return tw;
}

void check_lags(int q, int lattice_size, const char* what) {
  require_odd_lattice(lattice_size, what);
  if (q > half_width(lattice_size)) {
    std::ostringstream ss;
    ss << what << ": lag range " << q << " does not fit a torus of size " << lattice_size;
    throw LagTooLarge(ss.str());
  }
}

LagKernel lower_part(const LagKernel& x) {
  LagKernel out = x;
  for (int k = -x.q(); k <= x.q(); ++k) {
    auto mat = out.matrix(k);
    mat.triangularView<Eigen::StrictlyUpper>().setZero();
  }
  return out;
}

// One step of the time composition for lower triangular per-frequency blocks.
template <class Mat>
Mat compose_block(const Mat& a, const Mat& b, double dt, Quadrature rule) {
  Mat c = a.template triangularView<Eigen::Lower>() * b;
  if (rule == Quadrature::OpenRectangle) {
    c.noalias() -= a.diagonal().asDiagonal() * b;
    c.noalias() -= a * b.diagonal().asDiagonal();
    c.diagonal().setZero();
  } else {
    c.noalias() -= 0.5 * (a.diagonal().asDiagonal() * b);
    c.noalias() -= 0.5 * (a * b.diagonal().asDiagonal());
  }
  c *= dt;
  c.template triangularView<Eigen::StrictlyUpper>().setZero();
  return c;
}

template <class Mat>
bool is_zero(const std::vector<Mat>& xs) {
  for (const auto& x : xs)
    if (!x.isZero(0.0)) return false;
  return true;
}

template <class Mat>
void resolvent_series(std::vector<Mat>& lf, std::vector<Mat>& mf, double sigma, double dt, Quadrature rule,
                      int terms) {
  std::vector<Mat> pf = lf;
  mf = lf;
  bool vanished = is_zero(pf);
  for (int p = 1; p < terms && !vanished; ++p) {
    const double scale = std::pow(sigma, -p);
    parallel_for(pf.size(), [&](std::size_t i) {
      pf[i] = compose_block(lf[i], pf[i], dt, rule);
      mf[i] += scale * pf[i];
    });
    vanished = is_zero(pf);
  }
}

}  // namespace

LagKernel::LagKernel(int q, int nodes) : q_(q), nodes_(nodes) {
  if (q < 0 || nodes < 1) throw DimensionMismatch("lag kernel needs q >= 0 and at least one node");
  data_.assign(static_cast<std::size_t>(2 * q + 1) * nodes * nodes, 0.0);
}

double LagKernel::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::fabs(x));
  return m;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Empirical: return "empirical";
    case Provenance::Gaussian: return "gaussian";
    case Provenance::Fixed: return "fixed";
  }
  return "fixed";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "empirical") return Provenance::Empirical;
  if (s == "gaussian") return Provenance::Gaussian;
  if (s == "fixed") return Provenance::Fixed;
  throw ConfigError("unknown provenance '" + s + "'");
}

double feature_moment(const std::vector<double>& fvals, int ensemble, int lattice_size, int nodes, int l, int v,
                      int w) {
  BoundedSum acc;
  for (int e = 0; e < ensemble; ++e) {
    const double* base = fvals.data() + static_cast<std::size_t>(e) * lattice_size * nodes;
    for (int j = 0; j < lattice_size; ++j)
      acc.add(base[j * nodes + v] * base[site_shift(j, l, lattice_size) * nodes + w]);
  }
  return acc.value() / (static_cast<double>(ensemble) * lattice_size);
}

double field_moment(const std::vector<double>& vals, int ensemble, int lattice_size, int nodes, int l, int v,
                    int w) {
  FieldSum acc;
  for (int e = 0; e < ensemble; ++e) {
    const double* base = vals.data() + static_cast<std::size_t>(e) * lattice_size * nodes;
    for (int j = 0; j < lattice_size; ++j)
      acc.add(base[j * nodes + v] * base[site_shift(j, l, lattice_size) * nodes + w]);
  }
  return acc.value() / (static_cast<double>(ensemble) * lattice_size);
}

FeatureCovariance cf_from_paths(const LatticeTrajectories& paths, const Activation& f, int q) {
  check_lags(q, paths.lattice_size(), "cf_from_paths");
  const int E = paths.ensemble(), N = paths.lattice_size(), n_t = paths.nodes();
  std::vector<double> fvals(paths.data().size());
  for (std::size_t i = 0; i < fvals.size(); ++i) fvals[i] = f(paths.data()[i]);
  FeatureCovariance cf{paths.grid(), LagKernel(q, n_t)};
  parallel_for(static_cast<std::size_t>(2 * q + 1) * n_t, [&](std::size_t lv) {
    const int l = static_cast<int>(lv / n_t) - q, v = static_cast<int>(lv % n_t);
    for (int w = 0; w < n_t; ++w) cf.values(l, v, w) = feature_moment(fvals, E, N, n_t, l, v, w);
  });
  return cf;
}

LagKernel field_covariance(const LatticeTrajectories& paths, int q) {
  check_lags(q, paths.lattice_size(), "field_covariance");
  const int E = paths.ensemble(), N = paths.lattice_size(), n_t = paths.nodes();
  LagKernel out(q, n_t);
  parallel_for(static_cast<std::size_t>(2 * q + 1) * n_t, [&](std::size_t lv) {
    const int l = static_cast<int>(lv / n_t) - q, v = static_cast<int>(lv % n_t);
    for (int w = 0; w < n_t; ++w) out(l, v, w) = field_moment(paths.data(), E, N, n_t, l, v, w);
  });
  return out;
}

FeatureCovariance cf_from_gaussian(const LagKernel& covZ, const TimeGrid& grid, const Activation& f,
                                   int quad_order) {
  if (covZ.nodes() != grid.nodes()) throw GridMismatch("covariance does not match the time grid");
  const GaussHermite gh(quad_order);
  const int q = covZ.q(), n_t = covZ.nodes();
  FeatureCovariance cf{grid, LagKernel(q, n_t)};
  parallel_for(static_cast<std::size_t>(2 * q + 1) * n_t, [&](std::size_t lv) {
    const int l = static_cast<int>(lv / n_t) - q, v = static_cast<int>(lv % n_t);
    for (int w = 0; w < n_t; ++w)
      cf.values(l, v, w) = gaussian_feature_moment(covZ(0, v, v), covZ(l, v, w), covZ(0, w, w), f, gh);
  });
  return cf;
}

KernelStack assemble_K(const CovarianceModel& model, const FeatureCovariance& cf, int q) {
  if (q < 0 || q > cf.q()) throw LagTooLarge("assemble_K: feature covariance does not cover I_q");
  const int n_t = cf.values.nodes();
  KernelStack st;
  st.grid = cf.grid;
  st.K = LagKernel(q, n_t);
  for (int k = -q; k <= q; ++k) {
    const double r0 = model.rj(k, 0);
    for (int v = 0; v < n_t; ++v)
      for (int w = 0; w < n_t; ++w) {
        // Pairing l with -l keeps K^k(v,w) == K^-k(w,v) bit for bit.
        double acc = r0 * cf.values(0, v, w);
        for (int l = 1; l <= q; ++l)
          acc += model.rj(k, l) * cf.values(l, v, w) + model.rj(k, -l) * cf.values(-l, v, w);
        st.K(k, v, w) = acc;
      }
  }
  return st;
}

std::vector<Eigen::MatrixXcd> lattice_dft(const LagKernel& x, int lattice_size) {
  check_lags(x.q(), lattice_size, "lattice_dft");
  const auto tw = twiddles(lattice_size, -1.0);
  const int n_t = x.nodes();
  std::vector<Eigen::MatrixXcd> out(lattice_size);
  parallel_for(static_cast<std::size_t>(lattice_size), [&](std::size_t pi) {
    const int p = static_cast<int>(pi);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n_t, n_t);
    for (int k = -x.q(); k <= x.q(); ++k) acc += tw[site_shift(0, k * p, lattice_size)] * x.matrix(k).cast<Complex>();
    out[pi] = std::move(acc);
  });
  return out;
}

LagKernel lattice_idft(const std::vector<Eigen::MatrixXcd>& xf, int q_out) {
  const int N = static_cast<int>(xf.size());
  check_lags(q_out, N, "lattice_idft");
  const auto tw = twiddles(N, 1.0);
  const int n_t = static_cast<int>(xf.front().rows());
  LagKernel out(q_out, n_t);
  double scale = 0.0, worst_imag = 0.0;
  for (int k = -q_out; k <= q_out; ++k) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n_t, n_t);
    for (int p = 0; p < N; ++p) acc += tw[site_shift(0, k * p, N)] * xf[p];
    acc /= static_cast<double>(N);
    out.matrix(k) = acc.real();
    scale = std::max(scale, acc.real().cwiseAbs().maxCoeff());
    worst_imag = std::max(worst_imag, acc.imag().cwiseAbs().maxCoeff());
  }
  if (worst_imag > 1e-9 * std::max(1.0, scale)) {
    std::ostringstream ss;
    ss << "inverse lattice DFT left an imaginary residual of " << worst_imag;
    throw SingularOperator(ss.str());
  }
  return out;
}

KernelStack K_to_L(const KernelStack& stack, double sigma, int lattice_size) {
  if (!(sigma > 0.0)) throw ConfigError("K_to_L needs sigma > 0");
  const auto kf = lattice_dft(stack.K, lattice_size);
  const double dt = stack.grid.dt();
  const double c = dt / (sigma * sigma);
  const int n_t = stack.K.nodes();
  std::vector<Eigen::MatrixXcd> lf(lattice_size);
  std::vector<double> rcond(lattice_size);
  parallel_for(static_cast<std::size_t>(lattice_size), [&](std::size_t p) {
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Identity(n_t, n_t) + c * kf[p];
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(x);
    rcond[p] = lu.rcond();
    lf[p] = lu.solve(kf[p]);
  });
  for (double r : rcond)
    if (!(r > 1e-14)) throw SingularOperator("I + sigma^-2 dt K is singular at some frequency");
  KernelStack out = stack;
  out.sigma = sigma;
  out.lattice_size = lattice_size;
  out.causal = false;
  out.L = lattice_idft(lf, half_width(lattice_size));
  return out;
}

std::vector<Eigen::VectorXcd> causal_tilt_row(const std::vector<Eigen::MatrixXcd>& Kf, int v, double sigma,
                                              double dt) {
  const double c = dt / (sigma * sigma);
  std::vector<Eigen::VectorXcd> rows(Kf.size());
  parallel_for(Kf.size(), [&](std::size_t p) {
    if (v == 0) {
      rows[p].resize(0);
      return;
    }
    const auto w = Kf[p].topLeftCorner(v + 1, v + 1);
    // X = I + sigma^-2 D W with D = dt on nodes 0..v-1 and 0 on node v.
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Identity(v + 1, v + 1);
    x.topRows(v) += c * w.topRows(v);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(x.transpose());
    if (!(lu.rcond() > 1e-14)) throw SingularOperator("causal tilt window is singular");
    const Eigen::VectorXcd r = lu.solve(w.row(v).transpose());
    rows[p] = r.head(v);
  });
  return rows;
}

KernelStack causal_tilt(const KernelStack& stack, double sigma, int lattice_size) {
  if (!(sigma > 0.0)) throw ConfigError("causal_tilt needs sigma > 0");
  const auto kf = lattice_dft(stack.K, lattice_size);
  const int q = stack.K.q(), n_t = stack.K.nodes();
  const auto tw = twiddles(lattice_size, 1.0);
  KernelStack out = stack;
  out.sigma = sigma;
  out.lattice_size = lattice_size;
  out.causal = true;
  out.L = LagKernel(q, n_t);
  for (int v = 1; v < n_t; ++v) {
    const auto rows = causal_tilt_row(kf, v, sigma, stack.grid.dt());
    for (int k = -q; k <= q; ++k)
      for (int w = 0; w < v; ++w) {
        Complex acc = 0.0;
        for (int p = 0; p < lattice_size; ++p) acc += tw[site_shift(0, k * p, lattice_size)] * rows[p][w];
        out.L(k, v, w) = acc.real() / lattice_size;
      }
  }
  return out;
}

Eigen::MatrixXd gaussian_tilt_moment(const Eigen::MatrixXd& Sigma, const Eigen::MatrixXd& A) {
  if (Sigma.rows() != Sigma.cols() || A.rows() != A.cols() || Sigma.rows() != A.rows())
    throw DimensionMismatch("Sigma and A must be square and of equal size");
  const Eigen::MatrixXd sym = 0.5 * (Sigma + Sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 1e-12 * hi)) throw SingularSigma("Sigma is not positive definite");
  const long d = Sigma.rows();
  // (Sigma^-1 + A)^-1 = (I + Sigma A)^-1 Sigma
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(d, d) + sym * A;
  Eigen::MatrixXd y = x.partialPivLu().solve(sym);
  return 0.5 * (y + y.transpose());
}

LagKernel compose(const LagKernel& A, const LagKernel& B, int lattice_size, double dt, Quadrature rule) {
  if (A.nodes() != B.nodes()) throw GridMismatch("compose: kernels live on different grids");
  const auto af = lattice_dft(lower_part(A), lattice_size);
  const auto bf = lattice_dft(lower_part(B), lattice_size);
  std::vector<Eigen::MatrixXcd> cf(lattice_size);
  parallel_for(static_cast<std::size_t>(lattice_size),
               [&](std::size_t p) { cf[p] = compose_block(af[p], bf[p], dt, rule); });
  return lattice_idft(cf, half_width(lattice_size));
}

double tail_series(double x, int from) {
  if (from < 0) from = 0;
  if (x <= 0.0) return from == 0 ? 1.0 : 0.0;
  const double lx = std::log(x);
  double sum = 0.0;
  for (int k = from; k < from + 200000; ++k) {
    const double term = std::exp(k * lx - 0.5 * std::lgamma(k + 1.0));
    sum += term;
    if (k > x * x && term < 1e-18 * sum) break;
  }
  return sum;
}

ResolventKernel iterated_kernels(const KernelStack& stack, double sigma, double tol, Quadrature rule,
                                 int max_terms) {
  if (!stack.has_L()) throw ConfigError("iterated_kernels needs a stack with L");
  if (!(sigma > 0.0) || !(tol > 0.0)) throw ConfigError("iterated_kernels needs sigma > 0 and tol > 0");
  const int N = stack.lattice_size > 0 ? stack.lattice_size : 2 * stack.L.q() + 1;
  const LagKernel L = lower_part(stack.L);
  const int n_t = L.nodes();
  const double dt = stack.grid.dt();

  // Envelope constants of the series from the discretized kernel.
  RowMatrix lsum = RowMatrix::Zero(n_t, n_t);
  for (int k = -L.q(); k <= L.q(); ++k) lsum += L.matrix(k).cwiseAbs();
  double a_max = 0.0, b_max = 0.0, c2 = 0.0;
  for (int v = 0; v < n_t; ++v) {
    const double a2 = dt * lsum.row(v).squaredNorm();
    a_max = std::max(a_max, std::sqrt(a2));
    b_max = std::max(b_max, std::sqrt(dt * lsum.col(v).squaredNorm()));
    c2 += dt * a2;
  }
  const double x = std::sqrt(c2) / sigma;
  auto tail = [&](int p) { return a_max * b_max / sigma * tail_series(x, p - 1); };

  int p = 1;
  while (!(tail(p) < tol)) {
    if (p >= max_terms) {
      std::ostringstream ss;
      ss << "resolvent series bound still " << tail(p) << " after " << p << " terms";
      throw NoConvergence(ss.str());
    }
    ++p;
  }

  ResolventKernel out;
  out.grid = stack.grid;
  out.sigma = sigma;
  out.lattice_size = N;
  out.rule = rule;
  out.p_used = p;
  out.tail_bound = tail(p);

  auto lf = lattice_dft(L, N);
  if (N == 1) {
    std::vector<Eigen::MatrixXd> lr{lf[0].real()}, mr;
    resolvent_series(lr, mr, sigma, dt, rule, p);
    out.M = LagKernel(0, n_t);
    out.M.matrix(0) = mr[0];
  } else {
    std::vector<Eigen::MatrixXcd> mf;
    resolvent_series(lf, mf, sigma, dt, rule, p);
    out.M = lattice_idft(mf, half_width(N));
  }
  out.M = lower_part(out.M);
  return out;
}

KernelCheck check_kernels(const KernelStack& stack, double sigma, int lattice_size) {
  KernelCheck r;
  const LagKernel& K = stack.K;
  const int q = K.q(), n_t = K.nodes();
  for (int k = -q; k <= q; ++k)
    for (int v = 0; v < n_t; ++v)
      for (int w = 0; w < n_t; ++w) r.symmetry_error = std::max(r.symmetry_error, std::fabs(K(k, v, w) - K(-k, w, v)));

  const auto kf = lattice_dft(K, lattice_size);
  const double dt = stack.grid.dt();
  const double c = dt / (sigma * sigma);
  std::vector<Eigen::MatrixXcd> lref(lattice_size);
  r.min_eigen_ratio = 1.0;
  for (int p = 0; p < lattice_size; ++p) {
    const Eigen::MatrixXcd herm = 0.5 * (kf[p] + kf[p].adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
    if (norm > 0.0) r.min_eigen_ratio = std::min(r.min_eigen_ratio, es.eigenvalues().minCoeff() / norm);
    r.max_operator_norm = std::max(r.max_operator_norm, dt * norm);

    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n_t, n_t);
    const Eigen::MatrixXcd x = id + c * kf[p];
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(x);
    const Eigen::MatrixXcd xinv = lu.inverse();
    const Eigen::MatrixXcd kbar = dt * kf[p];
    const Eigen::MatrixXcd f1 = lu.solve(kbar);
    const Eigen::MatrixXcd f2 = kbar * xinv;
    const Eigen::MatrixXcd f3 = sigma * sigma * (id - xinv);
    r.identity_error = std::max({r.identity_error, (f1 - f2).cwiseAbs().maxCoeff(), (f1 - f3).cwiseAbs().maxCoeff(),
                                 (f2 - f3).cwiseAbs().maxCoeff()});
    lref[p] = f1 / dt;
  }
  if (stack.has_L() && !stack.causal && stack.L.q() == half_width(lattice_size)) {
    const LagKernel lk = lattice_idft(lref, half_width(lattice_size));
    for (std::size_t i = 0; i < lk.data().size(); ++i)
      r.l_error = std::max(r.l_error, std::fabs(lk.data()[i] - stack.L.data()[i]));
  }
  const double scale = std::max(1.0, K.max_abs());
  r.ok = r.symmetry_error <= 1e-12 * scale && r.min_eigen_ratio >= -1e-9 && r.identity_error <= 1e-10 * scale &&
         r.l_error <= 1e-9 * scale;
  return r;
}

}  // namespace hmf
