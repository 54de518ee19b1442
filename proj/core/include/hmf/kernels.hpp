#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "hmf/activation.hpp"
#include "hmf/lattice.hpp"
#include "hmf/network_sde.hpp"
#include "hmf/weights.hpp"

namespace hmf {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Lag-indexed family of time kernels X^k(t_v, t_w), k in I_q, v, w in 0..m.
class LagKernel {
 public:
  LagKernel() = default;
  LagKernel(int q, int nodes);

  int q() const { return q_; }
  int lags() const { return 2 * q_ + 1; }
  int nodes() const { return nodes_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int k, int v, int w) { return data_[index(k, v, w)]; }
  double operator()(int k, int v, int w) const { return data_[index(k, v, w)]; }
  Eigen::Map<RowMatrix> matrix(int k) { return {data_.data() + index(k, 0, 0), nodes_, nodes_}; }
  Eigen::Map<const RowMatrix> matrix(int k) const { return {data_.data() + index(k, 0, 0), nodes_, nodes_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double max_abs() const;

 private:
  std::size_t index(int k, int v, int w) const {
    return (static_cast<std::size_t>(k + q_) * nodes_ + v) * nodes_ + w;
  }
  int q_ = 0, nodes_ = 0;
  std::vector<double> data_;
};

enum class Provenance { Empirical, Gaussian, Fixed };
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// Time composition rule shared by the resolvent, the closed form and the march.
//  OpenRectangle: sum over w < u < v with weight dt. The diagonal carries no
//    weight, matching the strict left-endpoint sums of the discrete dynamics.
//  Trapezoid: sum over w <= u <= v with half weight at both ends.
enum class Quadrature { OpenRectangle, Trapezoid };

struct FeatureCovariance {
  TimeGrid grid;
  LagKernel values;  // C_f^l(t_v, t_w)
  int q() const { return values.q(); }
};

// K and L on a shared grid. L may span a different lag range than K: the
// full-horizon tilt spans the whole torus, the causal tilt keeps I_q.
struct KernelStack {
  TimeGrid grid;
  double sigma = 1.0;
  int lattice_size = 0;
  Provenance provenance = Provenance::Fixed;
  LagKernel K;
  LagKernel L;
  bool causal = false;  // L built row by row with the left-endpoint tilt

  int q() const { return K.q(); }
  bool has_L() const { return !L.empty(); }
};

struct ResolventKernel {
  TimeGrid grid;
  double sigma = 1.0;
  int lattice_size = 1;
  Quadrature rule = Quadrature::OpenRectangle;
  LagKernel M;  // lags span the torus; only v >= w is meaningful
  int p_used = 0;
  double tail_bound = 0.0;
};

// Site average (1/N) sum_j fa[j] fb[j + l] over every ensemble member, with
// exact, order independent accumulation. fvals is laid out like the paths.
double feature_moment(const std::vector<double>& fvals, int ensemble, int lattice_size, int nodes, int l, int v,
                      int w);
double field_moment(const std::vector<double>& vals, int ensemble, int lattice_size, int nodes, int l, int v, int w);

FeatureCovariance cf_from_paths(const LatticeTrajectories& paths, const Activation& f, int q);
// Empirical lag covariance of the raw field, E[Z^0_v Z^l_w].
LagKernel field_covariance(const LatticeTrajectories& paths, int q);
FeatureCovariance cf_from_gaussian(const LagKernel& covZ, const TimeGrid& grid, const Activation& f,
                                   int quad_order = 40);

KernelStack assemble_K(const CovarianceModel& model, const FeatureCovariance& cf, int q);

// Spatial DFT of a lag kernel embedded on a torus of the given size.
std::vector<Eigen::MatrixXcd> lattice_dft(const LagKernel& x, int lattice_size);
// Inverse DFT keeping lags in I_q_out. Throws SingularOperator if the result
// carries an imaginary part above 1e-9 relative to its scale.
LagKernel lattice_idft(const std::vector<Eigen::MatrixXcd>& xf, int q_out);

// Full-horizon tilt: per frequency L = (I + sigma^-2 dt K)^-1 K, i.e.
// sigma^2 (I - (I + sigma^-2 K dt)^-1) / dt with weight dt on all m+1 nodes.
KernelStack K_to_L(const KernelStack& stack, double sigma, int lattice_size);
using KToLFunction = std::function<KernelStack(const KernelStack&, double, int)>;

// Row v of the left-endpoint causal tilt for every frequency: the covariance of
// G_v with G_w, w < v, under the Gaussian tilt exp(-sum_{u<v} dt G_u^2 / 2 sigma^2).
// Kf holds per-frequency K on at least v+1 nodes.
std::vector<Eigen::VectorXcd> causal_tilt_row(const std::vector<Eigen::MatrixXcd>& Kf, int v, double sigma,
                                              double dt);
// Strictly lower causal kernel with lags in I_q.
KernelStack causal_tilt(const KernelStack& stack, double sigma, int lattice_size);

Eigen::MatrixXd gaussian_tilt_moment(const Eigen::MatrixXd& Sigma, const Eigen::MatrixXd& A);

// Space-time composition (A o B)^i = sum_l A^l o B^{i-l} on the torus, with
// the time rule applied to the lower triangles of A and B.
LagKernel compose(const LagKernel& A, const LagKernel& B, int lattice_size, double dt, Quadrature rule);

ResolventKernel iterated_kernels(const KernelStack& stack, double sigma, double tol,
                                 Quadrature rule = Quadrature::OpenRectangle, int max_terms = 200);

// sum_{k >= from} x^k / sqrt(k!)
double tail_series(double x, int from);

struct KernelCheck {
  double symmetry_error = 0.0;     // max |K^k(v,w) - K^-k(w,v)|
  double min_eigen_ratio = 0.0;    // min over p of lambda_min / ||K~p||
  double max_operator_norm = 0.0;  // max over p of ||dt K~p||
  double identity_error = 0.0;     // spread of the three tilt expressions
  double l_error = 0.0;            // max |L - recomputed L| when L is full-horizon
  bool ok = false;
};
KernelCheck check_kernels(const KernelStack& stack, double sigma, int lattice_size);

}  // namespace hmf
