#pragma once

#include <functional>
#include <vector>

#include "hmf/activation.hpp"
#include "hmf/lattice.hpp"
#include "hmf/network_sde.hpp"

namespace hmf {

// Paths of the sites first_site .. first_site + sites - 1 of Z, laid out [site][v].
struct PathWindow {
  int first_site = 0;
  int sites = 0;
  TimeGrid grid;
  std::vector<double> values;

  double at(int i, int v) const { return values[static_cast<std::size_t>(i) * grid.nodes() + v]; }
};

// sum_i b_i sup_v |f(u^i_v) - f(w^i_v)|
double path_distance_dT(const PathWindow& u, const PathWindow& w, const std::function<double(int)>& b,
                        const Activation& f);

// b * sqrt((1/N) sum_k ||X^k - Y^k||^2), with the squared L2 time norm taken by
// the left rectangle rule sum_{v<m} dt x_v^2 and averaged over ensemble members.
// This is an upper bound on the path-space Wasserstein distance, not the distance.
double wasserstein_upper_bound(const LatticeTrajectories& X, const LatticeTrajectories& Y, double b_sum);

// Lag k between sites and time indices t, s of the probe statistic
// (1/N) sum_j f(V^j_t) f(V^{j+k}_s).
struct Probe {
  int k = 0;
  int t = 0;
  int s = 0;
  double weight = 1.0;
};

struct LagStat {
  Probe probe;
  double estimate = 0.0;
  double se = 0.0;  // standard error across ensemble members, 0 for a single member
  int members = 0;
};

std::vector<LagStat> lag_feature_covariance(const LatticeTrajectories& paths, const Activation& f,
                                            const std::vector<Probe>& probes);

// Quenched runs at one lattice size: one ensemble of noise replicas per weight draw.
struct QuenchedRuns {
  int lattice_size = 0;
  std::vector<LatticeTrajectories> draws;
};

struct ConvergenceEntry {
  int lattice_size = 0;
  int draws = 0;
  int replicas = 0;
  // Weighted sup over probes of |pooled quenched estimate - limit estimate|,
  // and the combined standard error at the maximizing probe.
  double discrepancy = 0.0;
  double se = 0.0;
  // Median over draws and probes of the per-draw discrepancy, and the median
  // over probes of the per-draw standard deviation combined with the limit SE.
  double median_discrepancy = 0.0;
  double median_se = 0.0;
  std::vector<LagStat> pooled;
};

struct ConvergenceReport {
  std::vector<ConvergenceEntry> entries;
  std::vector<LagStat> limit;
  // Least squares fit log(median discrepancy) = intercept + slope log N.
  double slope = 0.0, intercept = 0.0, slope_se = 0.0;
  double band_lo = 0.0, band_hi = 0.0;  // slope +- 1.96 slope_se
};

ConvergenceReport convergence_report(const std::vector<QuenchedRuns>& quenched, const LatticeTrajectories& limit,
                                     const Activation& f, const std::vector<Probe>& probes);

double median(std::vector<double> xs);

}  // namespace hmf
