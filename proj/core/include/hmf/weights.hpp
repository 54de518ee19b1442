#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hmf {

// Stationary weight covariance R_J(k, l) with envelope |R_J(k,l)| <= a_k b_l.
class CovarianceModel {
 public:
  using Kernel = std::function<double(int, int)>;
  using Envelope = std::function<double(int)>;

  // R(k,l) = c (1+|k|)^-decay * ratio^|l|.
  static CovarianceModel product(double c, double decay = 4.0, double ratio = 0.5);
  // R(k,l) = lambda2 * delta_k delta_l.
  static CovarianceModel delta(double lambda2);
  static CovarianceModel zero();
  // User kernel; symmetrized as (R(k,l) + R(-k,-l)) / 2. a_k must decay like
  // |k|^-4 beyond decay_cutoff.
  static CovarianceModel custom(std::string name, Kernel rj, Envelope a, Envelope b,
                                int decay_cutoff = 0);

  double rj(int k, int l) const { return rj_(k, l); }
  double a(int k) const { return a_(k); }
  double b(int l) const { return b_(l); }
  double a_sum() const { return a_sum_; }
  double b_sum() const { return b_sum_; }
  int decay_cutoff() const { return decay_cutoff_; }
  const std::string& family() const { return family_; }
  // Identically zero kernel: admissible as a degenerate model.
  bool is_null() const { return null_; }
  // Parameters of the built-in families, for serialization.
  const std::vector<std::pair<std::string, double>>& params() const { return params_; }

 private:
  std::string family_;
  Kernel rj_;
  Envelope a_, b_;
  double a_sum_ = 0.0, b_sum_ = 0.0;
  int decay_cutoff_ = 0;
  bool null_ = false;
  std::vector<std::pair<std::string, double>> params_;
};

// Real grid on an n1 x n2 torus, indexed by integer frequencies taken mod size.
struct SpectralGrid {
  int n1 = 0, n2 = 0;
  std::vector<double> values;

  double at(int p, int q) const;
  double min() const;
  double max() const;
};

// lambda_pq = sum_{k,l in I_n} R(k,l) exp(-2 pi i (pk + ql)/N). Throws
// EnvelopeViolation if the envelope fails on I_n x I_n.
SpectralGrid spectral_density(const CovarianceModel& model, int n);

struct ValidationReport {
  struct Frequency { int p, q; double value; };
  struct Lag { int k, l; double value, bound; };

  bool ok = true;
  double min_lambda = 0.0, max_lambda = 0.0;
  std::vector<Frequency> spectrum_violations;
  std::vector<Lag> envelope_violations;
  std::vector<int> decay_violations;

  std::string summary() const;
};

ValidationReport validate(const CovarianceModel& model, int n);

struct WeightMatrix {
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<double> entries;  // N x N row-major, storage index i + n

  int size() const { return 2 * n + 1; }
  double at(int i, int j) const { return entries[(i + n) * size() + (j + n)]; }
};

struct TruncatedWeightMatrix {
  int n = 0, q = 0;
  std::uint64_t seed = 0;
  std::vector<double> entries;  // Q x N row-major

  int rows() const { return 2 * q + 1; }
  int cols() const { return 2 * n + 1; }
  double at(int i, int j) const { return entries[(i + q) * cols() + (j + n)]; }
};

// Spectral sampler for a stationary field on an n1 x n2 torus. Precomputes the
// square-root spectrum and the FFT plan so repeated draws are cheap.
//
// Draw layout, fixed for reproducibility: one normal for frequency (0,0), then
// for every frequency in the half plane {p > 0} U {p = 0, q > 0}, visited with p
// then q ascending over I_n1 x I_n2, two normals (re, im). The conjugate
// frequency receives the complex conjugate. Field = Re IDFT_orthonormal(b).
class FieldSampler {
 public:
  // cov(d1, d2): covariance between sites differing by (d1, d2) in I_n1 x I_n2.
  FieldSampler(int n1, int n2, const std::function<double(int, int)>& cov);
  ~FieldSampler();
  FieldSampler(const FieldSampler&) = delete;
  FieldSampler& operator=(const FieldSampler&) = delete;

  // Row-major n1 x n2 field in centered storage.
  std::vector<double> sample(std::uint64_t seed) const;
  const SpectralGrid& spectrum() const { return spectrum_; }

 private:
  struct Plan;
  int n1_, n2_;
  SpectralGrid spectrum_;
  std::vector<double> sqrt_var_;
  std::unique_ptr<Plan> plan_;
};

class WeightSampler {
 public:
  WeightSampler(const CovarianceModel& model, int n);
  WeightMatrix sample(std::uint64_t seed) const;

 private:
  int n_;
  bool null_;
  std::unique_ptr<FieldSampler> field_;
};

WeightMatrix sample_weights(const CovarianceModel& model, int n, std::uint64_t seed);
TruncatedWeightMatrix sample_truncated_weights(const CovarianceModel& model, int n, int q,
                                               std::uint64_t seed);

}  // namespace hmf
