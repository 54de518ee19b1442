#include "hmf/weights.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "hmf/error.hpp"
#include "hmf/rng.hpp"

namespace hmf {

namespace {

constexpr double kEnvelopeSlack = 1e-12;
constexpr double kPositivityFloor = 1e-12;
// Lags summed when a closed form for the envelope sums is not available.
constexpr int kEnvelopeSumRange = 100000;

double numeric_sum(const CovarianceModel::Envelope& e) {
  double s = e(0);
  for (int k = 1; k <= kEnvelopeSumRange; ++k) s += e(k) + e(-k);
  return s;
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int wrap_index(int p, int n) {
  int r = p % n;
  return r < 0 ? r + n : r;
}

// Generic spectrum of a covariance on an N1 x N2 torus with lags in
// I_h1 x I_h2, symmetrized so that lambda(p,q) == lambda(-p,-q) bit for bit.
SpectralGrid torus_spectrum(int n1, int n2, const std::function<double(int, int)>& cov) {
  const int h1 = (n1 - 1) / 2, h2 = (n2 - 1) / 2;
  std::vector<std::complex<double>> tw1(n1), tw2(n2);
  for (int j = 0; j < n1; ++j) tw1[j] = std::polar(1.0, -2.0 * std::numbers::pi * j / n1);
  for (int j = 0; j < n2; ++j) tw2[j] = std::polar(1.0, -2.0 * std::numbers::pi * j / n2);

  std::vector<double> c(static_cast<std::size_t>(n1) * n2);
  for (int k = -h1; k <= h1; ++k)
    for (int l = -h2; l <= h2; ++l) c[(k + h1) * n2 + (l + h2)] = cov(k, l);

  // Transform along the second lag, then the first.
  std::vector<std::complex<double>> half(static_cast<std::size_t>(n1) * n2);
  for (int k = -h1; k <= h1; ++k)
    for (int q = 0; q < n2; ++q) {
      std::complex<double> s = 0.0;
      for (int l = -h2; l <= h2; ++l) s += c[(k + h1) * n2 + (l + h2)] * tw2[wrap_index(q * l, n2)];
      half[(k + h1) * n2 + q] = s;
    }
  std::vector<std::complex<double>> full(static_cast<std::size_t>(n1) * n2);
  for (int p = 0; p < n1; ++p)
    for (int q = 0; q < n2; ++q) {
      std::complex<double> s = 0.0;
      for (int k = -h1; k <= h1; ++k) s += half[(k + h1) * n2 + q] * tw1[wrap_index(p * k, n1)];
      full[p * n2 + q] = s;
    }

  SpectralGrid g{n1, n2, std::vector<double>(full.size())};
  for (int p = 0; p < n1; ++p)
    for (int q = 0; q < n2; ++q) {
      const auto& a = full[p * n2 + q];
      const auto& b = full[wrap_index(-p, n1) * n2 + wrap_index(-q, n2)];
      g.values[p * n2 + q] = 0.5 * (a.real() + b.real());
    }
  return g;
}

void check_envelope(const CovarianceModel& model, int n) {
  for (int k = -n; k <= n; ++k)
    for (int l = -n; l <= n; ++l) {
      const double bound = model.a(k) * model.b(l);
      if (std::fabs(model.rj(k, l)) > bound * (1.0 + kEnvelopeSlack)) {
        std::ostringstream ss;
        ss << "|R(" << k << "," << l << ")| = " << std::fabs(model.rj(k, l)) << " exceeds a_k b_l = " << bound;
        throw EnvelopeViolation(ss.str());
      }
    }
}

}  // namespace

CovarianceModel CovarianceModel::product(double c, double decay, double ratio) {
  if (!(c >= 0.0) || !(decay >= 4.0) || !(ratio >= 0.0 && ratio < 1.0))
    throw ConfigError("product model needs c >= 0, decay >= 4 and 0 <= ratio < 1");
  CovarianceModel m;
  m.family_ = "product";
  m.a_ = [c, decay](int k) { return c * std::pow(1.0 + std::abs(k), -decay); };
  m.b_ = [ratio](int l) { return std::pow(ratio, std::abs(l)); };
  m.rj_ = [a = m.a_, b = m.b_](int k, int l) { return a(k) * b(l); };
  m.a_sum_ = numeric_sum(m.a_);
  m.b_sum_ = (1.0 + ratio) / (1.0 - ratio);
  m.null_ = c == 0.0;
  m.params_ = {{"c", c}, {"decay", decay}, {"ratio", ratio}};
  return m;
}

CovarianceModel CovarianceModel::delta(double lambda2) {
  if (!(lambda2 >= 0.0)) throw ConfigError("delta model needs lambda2 >= 0");
  CovarianceModel m;
  m.family_ = "delta";
  m.rj_ = [lambda2](int k, int l) { return k == 0 && l == 0 ? lambda2 : 0.0; };
  m.a_ = [lambda2](int k) { return k == 0 ? lambda2 : 0.0; };
  m.b_ = [](int l) { return l == 0 ? 1.0 : 0.0; };
  m.a_sum_ = lambda2;
  m.b_sum_ = 1.0;
  m.null_ = lambda2 == 0.0;
  m.params_ = {{"lambda2", lambda2}};
  return m;
}

CovarianceModel CovarianceModel::zero() {
  CovarianceModel m;
  m.family_ = "zero";
  m.rj_ = [](int, int) { return 0.0; };
  m.a_ = [](int) { return 0.0; };
  m.b_ = [](int) { return 0.0; };
  m.null_ = true;
  return m;
}

CovarianceModel CovarianceModel::custom(std::string name, Kernel rj, Envelope a, Envelope b,
                                        int decay_cutoff) {
  if (!rj || !a || !b) throw ConfigError("custom model needs a kernel and both envelopes");
  CovarianceModel m;
  m.family_ = std::move(name);
  m.rj_ = [rj](int k, int l) { return 0.5 * (rj(k, l) + rj(-k, -l)); };
  m.a_ = std::move(a);
  m.b_ = std::move(b);
  m.a_sum_ = numeric_sum(m.a_);
  m.b_sum_ = numeric_sum(m.b_);
  m.decay_cutoff_ = decay_cutoff;
  return m;
}

double SpectralGrid::at(int p, int q) const {
  return values[wrap_index(p, n1) * n2 + wrap_index(q, n2)];
}
double SpectralGrid::min() const { return *std::min_element(values.begin(), values.end()); }
double SpectralGrid::max() const { return *std::max_element(values.begin(), values.end()); }

SpectralGrid spectral_density(const CovarianceModel& model, int n) {
  if (n < 0) throw DimensionMismatch("lattice half-size must be nonnegative");
  check_envelope(model, n);
  const int N = 2 * n + 1;
  return torus_spectrum(N, N, [&](int k, int l) { return model.rj(k, l); });
}

std::string ValidationReport::summary() const {
  std::ostringstream ss;
  ss << (ok ? "ok" : "invalid") << ": spectrum in [" << min_lambda << ", " << max_lambda << "]";
  for (const auto& f : spectrum_violations)
    ss << "\n  nonpositive spectrum at (p,q) = (" << f.p << "," << f.q << "): " << f.value;
  for (const auto& e : envelope_violations)
    ss << "\n  envelope violated at (k,l) = (" << e.k << "," << e.l << "): |R| = " << e.value
       << " > " << e.bound;
  for (int k : decay_violations) ss << "\n  a_k decays slower than |k|^-4 at k = " << k;
  return ss.str();
}

ValidationReport validate(const CovarianceModel& model, int n) {
  ValidationReport r;
  if (n < 0) {
    r.ok = false;
    return r;
  }
  const int N = 2 * n + 1;
  for (int k = -n; k <= n; ++k)
    for (int l = -n; l <= n; ++l) {
      const double v = std::fabs(model.rj(k, l));
      const double bound = model.a(k) * model.b(l);
      if (v > bound * (1.0 + kEnvelopeSlack)) r.envelope_violations.push_back({k, l, v, bound});
    }
  const int cut = model.decay_cutoff();
  const double ref = model.a(cut) * std::pow(1.0 + cut, 4.0);
  for (int k = cut + 1; k <= n; ++k)
    for (int kk : {k, -k})
      if (model.a(kk) * std::pow(1.0 + k, 4.0) > ref * (1.0 + kEnvelopeSlack)) r.decay_violations.push_back(kk);

  const auto g = torus_spectrum(N, N, [&](int k, int l) { return model.rj(k, l); });
  r.min_lambda = g.min();
  r.max_lambda = g.max();
  if (!model.is_null()) {
    const double floor = kPositivityFloor * std::max(r.max_lambda, 0.0);
    for (int p = -n; p <= n; ++p)
      for (int q = -n; q <= n; ++q)
        if (g.at(p, q) <= floor) r.spectrum_violations.push_back({p, q, g.at(p, q)});
  }
  r.ok = r.spectrum_violations.empty() && r.envelope_violations.empty() && r.decay_violations.empty();
  return r;
}

struct FieldSampler::Plan {
  fftw_plan plan = nullptr;
  ~Plan() {
    std::lock_guard lock(fftw_planner_mutex());
    if (plan) fftw_destroy_plan(plan);
  }
};

FieldSampler::FieldSampler(int n1, int n2, const std::function<double(int, int)>& cov)
    : n1_(n1), n2_(n2), spectrum_(torus_spectrum(n1, n2, cov)), plan_(std::make_unique<Plan>()) {
  const double mx = spectrum_.max();
  if (!(mx > 0.0)) throw SpectrumNotPositive("spectrum has no positive mass");
  sqrt_var_.resize(spectrum_.values.size());
  for (std::size_t i = 0; i < sqrt_var_.size(); ++i) {
    const double lam = spectrum_.values[i];
    if (lam <= kPositivityFloor * mx) {
      std::ostringstream ss;
      ss << "spectral value " << lam << " at flat index " << i << " is not positive";
      throw SpectrumNotPositive(ss.str());
    }
    sqrt_var_[i] = std::sqrt(lam);
  }
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n1) * n2);
  std::lock_guard lock(fftw_planner_mutex());
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  plan_->plan = fftw_plan_dft_2d(n1, n2, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan_->plan) throw Error(ErrorClass::Numerical, "FftwError", "plan creation failed");
}

FieldSampler::~FieldSampler() = default;

std::vector<double> FieldSampler::sample(std::uint64_t seed) const {
  const int h1 = (n1_ - 1) / 2, h2 = (n2_ - 1) / 2;
  NormalStream normal(seed);
  std::vector<std::complex<double>> b(static_cast<std::size_t>(n1_) * n2_);
  auto idx = [&](int p, int q) { return static_cast<std::size_t>(wrap_index(p, n1_)) * n2_ + wrap_index(q, n2_); };

  b[0] = sqrt_var_[0] * normal();
  const double half = std::sqrt(0.5);
  for (int p = 0; p <= h1; ++p)
    for (int q = -h2; q <= h2; ++q) {
      if (p == 0 && q <= 0) continue;
      const double g1 = normal();
      const double g2 = normal();
      const double s = half * sqrt_var_[idx(p, q)];
      b[idx(p, q)] = {s * g1, s * g2};
      b[idx(-p, -q)] = {s * g1, -s * g2};
    }

  auto* ptr = reinterpret_cast<fftw_complex*>(b.data());
  fftw_execute_dft(plan_->plan, ptr, ptr);

  const double norm = 1.0 / std::sqrt(static_cast<double>(n1_) * n2_);
  std::vector<double> out(b.size());
  for (int i = -h1; i <= h1; ++i)
    for (int j = -h2; j <= h2; ++j)
      out[static_cast<std::size_t>(i + h1) * n2_ + (j + h2)] = norm * b[idx(i, j)].real();
  return out;
}

WeightSampler::WeightSampler(const CovarianceModel& model, int n) : n_(n), null_(model.is_null()) {
  if (n < 0) throw DimensionMismatch("lattice half-size must be nonnegative");
  check_envelope(model, n);
  if (null_) return;
  const double N = 2 * n + 1;
  field_ = std::make_unique<FieldSampler>(2 * n + 1, 2 * n + 1,
                                          [&](int k, int l) { return model.rj(k, l) / N; });
}

WeightMatrix WeightSampler::sample(std::uint64_t seed) const {
  const int N = 2 * n_ + 1;
  WeightMatrix w{n_, seed, {}};
  if (null_)
    w.entries.assign(static_cast<std::size_t>(N) * N, 0.0);
  else
    w.entries = field_->sample(derive_seed(seed, "weights"));
  return w;
}

WeightMatrix sample_weights(const CovarianceModel& model, int n, std::uint64_t seed) {
  return WeightSampler(model, n).sample(seed);
}

TruncatedWeightMatrix sample_truncated_weights(const CovarianceModel& model, int n, int q,
                                               std::uint64_t seed) {
  if (q <= 0 || q >= n) throw BadTruncation("truncation needs 0 < q < n");
  check_envelope(model, n);
  const int Q = 2 * q + 1, N = 2 * n + 1;
  TruncatedWeightMatrix w{n, q, seed, {}};
  if (model.is_null()) {
    w.entries.assign(static_cast<std::size_t>(Q) * N, 0.0);
    return w;
  }
  FieldSampler field(Q, N, [&](int d1, int d2) {
    return std::abs(d2) <= q ? model.rj(d1, d2) / N : 0.0;
  });
  w.entries = field.sample(derive_seed(seed, "truncated-weights"));
  return w;
}

}  // namespace hmf
