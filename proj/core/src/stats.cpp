#include "hmf/stats.hpp"

#include <algorithm>
#include <cmath>

#include "hmf/error.hpp"
#include "hmf/kernels.hpp"
#include "hmf/parallel.hpp"

namespace hmf {

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t h = xs.size() / 2;
  return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

double path_distance_dT(const PathWindow& u, const PathWindow& w, const std::function<double(int)>& b,
                        const Activation& f) {
  if (u.first_site != w.first_site || u.sites != w.sites || !(u.grid == w.grid) ||
      u.values.size() != w.values.size() || u.values.size() != static_cast<std::size_t>(u.sites) * u.grid.nodes())
    throw WindowMismatch("path windows differ in sites or grid");
  double total = 0.0;
  for (int i = 0; i < u.sites; ++i) {
    double sup = 0.0;
    for (int v = 0; v < u.grid.nodes(); ++v) sup = std::max(sup, std::fabs(f(u.at(i, v)) - f(w.at(i, v))));
    total += b(u.first_site + i) * sup;
  }
  return total;
}

double wasserstein_upper_bound(const LatticeTrajectories& X, const LatticeTrajectories& Y, double b_sum) {
  if (X.ensemble() != Y.ensemble() || X.lattice_size() != Y.lattice_size() || !(X.grid() == Y.grid()))
    throw ShapeMismatch("trajectory sets differ in shape or grid");
  const int m = X.grid().m;
  const double dt = X.grid().dt();
  double acc = 0.0;
  for (int e = 0; e < X.ensemble(); ++e)
    for (int k = 0; k < X.lattice_size(); ++k) {
      const auto x = X.path(e, k);
      const auto y = Y.path(e, k);
      for (int v = 0; v < m; ++v) acc += dt * (x[v] - y[v]) * (x[v] - y[v]);
    }
  return b_sum * std::sqrt(acc / (static_cast<double>(X.ensemble()) * X.lattice_size()));
}

std::vector<LagStat> lag_feature_covariance(const LatticeTrajectories& paths, const Activation& f,
                                            const std::vector<Probe>& probes) {
  const int E = paths.ensemble(), N = paths.lattice_size(), n_t = paths.nodes();
  for (const auto& p : probes) {
    if (std::abs(p.k) > half_width(N)) throw LagTooLarge("probe lag exceeds the lattice");
    if (p.t < 0 || p.t >= n_t || p.s < 0 || p.s >= n_t) throw GridMismatch("probe time outside the grid");
  }
  std::vector<double> fvals(paths.data().size());
  for (std::size_t i = 0; i < fvals.size(); ++i) fvals[i] = f(paths.data()[i]);

  std::vector<LagStat> out(probes.size());
  parallel_for(probes.size(), [&](std::size_t pi) {
    const Probe& p = probes[pi];
    LagStat st{p, feature_moment(fvals, E, N, n_t, p.k, p.t, p.s), 0.0, E};
    if (E > 1) {
      std::vector<double> member(E);
      for (int e = 0; e < E; ++e) {
        const std::vector<double> one(fvals.begin() + static_cast<std::ptrdiff_t>(e) * N * n_t,
                                      fvals.begin() + static_cast<std::ptrdiff_t>(e + 1) * N * n_t);
        member[e] = feature_moment(one, 1, N, n_t, p.k, p.t, p.s);
      }
      double mean = 0.0;
      for (double x : member) mean += x;
      mean /= E;
      double ss = 0.0;
      for (double x : member) ss += (x - mean) * (x - mean);
      st.se = std::sqrt(ss / (E - 1) / E);
    }
    out[pi] = st;
  });
  return out;
}

ConvergenceReport convergence_report(const std::vector<QuenchedRuns>& quenched, const LatticeTrajectories& limit,
                                     const Activation& f, const std::vector<Probe>& probes) {
  if (probes.empty()) throw ConfigError("convergence_report needs at least one probe");
  ConvergenceReport rep;
  rep.limit = lag_feature_covariance(limit, f, probes);
  const std::size_t P = probes.size();

  for (const auto& run : quenched) {
    if (run.draws.empty()) throw InsufficientReplicas("no weight draws at some lattice size");
    ConvergenceEntry entry;
    entry.lattice_size = run.lattice_size;
    entry.draws = static_cast<int>(run.draws.size());
    entry.replicas = run.draws.front().ensemble();

    std::vector<std::vector<LagStat>> per_draw;
    for (const auto& d : run.draws) {
      if (!(d.grid() == limit.grid())) throw GridMismatch("quenched and limit runs use different grids");
      if (d.lattice_size() != run.lattice_size) throw DimensionMismatch("draw has the wrong lattice size");
      if (d.ensemble() < 2) throw InsufficientReplicas("standard errors need at least two replicas per draw");
      per_draw.push_back(lag_feature_covariance(d, f, probes));
    }
    const int D = entry.draws;

    std::vector<double> all_dev, probe_scale;
    entry.discrepancy = -1.0;
    for (std::size_t i = 0; i < P; ++i) {
      double mean = 0.0;
      for (const auto& s : per_draw) mean += s[i].estimate;
      mean /= D;
      double spread = 0.0, pooled_se = 0.0;
      if (D > 1) {
        double ss = 0.0;
        for (const auto& s : per_draw) ss += (s[i].estimate - mean) * (s[i].estimate - mean);
        spread = std::sqrt(ss / (D - 1));
        pooled_se = spread / std::sqrt(static_cast<double>(D));
      } else {
        spread = pooled_se = per_draw.front()[i].se;
      }
      const double lim = rep.limit[i].estimate, lim_se = rep.limit[i].se;
      entry.pooled.push_back({probes[i], mean, pooled_se, D * entry.replicas});

      const double d = probes[i].weight * std::fabs(mean - lim);
      if (d > entry.discrepancy) {
        entry.discrepancy = d;
        entry.se = probes[i].weight * std::hypot(pooled_se, lim_se);
      }
      for (const auto& s : per_draw) all_dev.push_back(probes[i].weight * std::fabs(s[i].estimate - lim));
      probe_scale.push_back(probes[i].weight * std::hypot(spread, lim_se));
    }
    entry.median_discrepancy = median(all_dev);
    entry.median_se = median(probe_scale);
    rep.entries.push_back(std::move(entry));
  }

  // Fit only over strictly positive discrepancies.
  std::vector<double> xs, ys;
  for (const auto& e : rep.entries)
    if (e.median_discrepancy > 0.0) {
      xs.push_back(std::log(static_cast<double>(e.lattice_size)));
      ys.push_back(std::log(e.median_discrepancy));
    }
  const std::size_t n = xs.size();
  if (n >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) mx += xs[i], my += ys[i];
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sxx += (xs[i] - mx) * (xs[i] - mx), sxy += (xs[i] - mx) * (ys[i] - my);
    if (sxx > 0.0) {
      rep.slope = sxy / sxx;
      rep.intercept = my - rep.slope * mx;
      if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double r = ys[i] - rep.intercept - rep.slope * xs[i];
          rss += r * r;
        }
        rep.slope_se = std::sqrt(rss / (n - 2) / sxx);
      }
    }
  }
  rep.band_lo = rep.slope - 1.96 * rep.slope_se;
  rep.band_hi = rep.slope + 1.96 * rep.slope_se;
  return rep;
}

}  // namespace hmf
