#include "hmf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "hmf/error.hpp"
#include "hmf/rng.hpp"
#include "hmf/tensor_io.hpp"

#ifndef HMF_VERSION
#define HMF_VERSION "dev"
#endif

namespace hmf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string init_kind(InitialCondition::Kind k) {
  switch (k) {
    case InitialCondition::Kind::Zero: return "zero";
    case InitialCondition::Kind::Constant: return "constant";
    case InitialCondition::Kind::Gaussian: return "gaussian";
  }
  return "zero";
}

json model_json(const ModelSpec& m) {
  json j{{"family", m.family}};
  if (m.family == "product") {
    j["c"] = m.c;
    j["decay"] = m.decay;
    j["ratio"] = m.ratio;
  } else if (m.family == "delta") {
    j["lambda2"] = m.lambda2;
  }
  return j;
}

json grid_meta(const TimeGrid& g) { return {{"T", g.T}, {"m", g.m}}; }

TimeGrid grid_from(const json& j) { return {j.at("T").get<double>(), j.at("m").get<int>()}; }

json lag_kernel_meta(const LagKernel& k) { return {{"q", k.q()}, {"nodes", k.nodes()}}; }

Tensor lag_tensor(const LagKernel& k) {
  Tensor t({static_cast<std::uint64_t>(k.lags()), static_cast<std::uint64_t>(k.nodes()),
            static_cast<std::uint64_t>(k.nodes())});
  t.data = k.data();
  return t;
}

LagKernel lag_from_tensor(const Tensor& t) {
  if (t.shape.size() != 3 || t.shape[0] % 2 == 0 || t.shape[1] != t.shape[2])
    throw ShapeMismatch("kernel tensor must have shape [2q+1, m+1, m+1]");
  LagKernel k(static_cast<int>(t.shape[0] / 2), static_cast<int>(t.shape[1]));
  k.data() = t.data;
  return k;
}

json read_meta(const fs::path& p) {
  try {
    return json::parse(read_sidecar(p));
  } catch (const json::exception& e) {
    throw IoError("bad sidecar for " + p.string() + ": " + e.what());
  }
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

template <class Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.error_class(), e.name(), "stage '" + stage + "': " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw IoError("stage '" + stage + "': " + e.what());
  }
}

fs::path draw_dir(const fs::path& root, int N) { return root / "quenched" / ("N" + std::to_string(N)); }

std::string draw_name(int d, const char* what) {
  std::ostringstream ss;
  ss << "draw" << std::setw(3) << std::setfill('0') << d << "_" << what << ".hmt";
  return ss.str();
}

}  // namespace

CovarianceModel ModelSpec::build() const {
  if (family == "product") return CovarianceModel::product(c, decay, ratio);
  if (family == "delta") return CovarianceModel::delta(lambda2);
  if (family == "zero") return CovarianceModel::zero();
  throw ConfigError("unknown model family '" + family + "'");
}

SdeConfig RunConfig::sde() const {
  SdeConfig s;
  s.sigma = sigma;
  s.f = Activation::by_name(activation);
  s.grid = grid();
  s.alpha = alpha;
  s.init = init;
  return s;
}

MarchConfig RunConfig::march() const {
  MarchConfig mc;
  mc.lattice_size = lattice_size;
  mc.q = q;
  mc.grid = grid();
  mc.sigma = sigma;
  mc.f = Activation::by_name(activation);
  mc.ensemble = ensemble;
  mc.cf_mode = cf_mode;
  mc.seed = derive_seed(seed, "limit");
  mc.quad_order = quad_order;
  mc.kernel_stride = kernel_stride;
  return mc;
}

std::vector<Probe> default_probes(const RunConfig& cfg) {
  const int h = cfg.m / 2, e = cfg.m;
  std::vector<Probe> out;
  const int kmax = std::min(3, half_width(cfg.ladder.empty() ? cfg.lattice_size
                                                             : *std::min_element(cfg.ladder.begin(), cfg.ladder.end())));
  for (int k = 0; k <= kmax; ++k)
    for (auto [t, s] : {std::pair{h, h}, {e, e}, {e, h}, {h, e}}) out.push_back({k, t, s, 1.0});
  return out;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, {"model", "sde", "march", "quenched", "weights", "seed", "output_dir", "probes"}, "config");
  RunConfig c;
  if (!j.contains("seed")) throw ConfigError("config needs a master seed");
  read_opt(j, "seed", c.seed, "config");
  read_opt(j, "output_dir", c.output_dir, "config");

  if (j.contains("model")) {
    const auto& m = j["model"];
    reject_unknown(m, {"family", "c", "decay", "ratio", "lambda2"}, "model");
    read_opt(m, "family", c.model.family, "model");
    read_opt(m, "c", c.model.c, "model");
    read_opt(m, "decay", c.model.decay, "model");
    read_opt(m, "ratio", c.model.ratio, "model");
    read_opt(m, "lambda2", c.model.lambda2, "model");
  }
  if (j.contains("sde")) {
    const auto& s = j["sde"];
    reject_unknown(s, {"sigma", "activation", "T", "m", "alpha", "init"}, "sde");
    read_opt(s, "sigma", c.sigma, "sde");
    read_opt(s, "activation", c.activation, "sde");
    read_opt(s, "T", c.T, "sde");
    read_opt(s, "m", c.m, "sde");
    read_opt(s, "alpha", c.alpha, "sde");
    if (s.contains("init")) {
      const auto& in = s["init"];
      reject_unknown(in, {"kind", "value", "stddev"}, "sde.init");
      std::string kind = "zero";
      read_opt(in, "kind", kind, "sde.init");
      if (kind == "zero")
        c.init.kind = InitialCondition::Kind::Zero;
      else if (kind == "constant")
        c.init.kind = InitialCondition::Kind::Constant;
      else if (kind == "gaussian")
        c.init.kind = InitialCondition::Kind::Gaussian;
      else
        throw ConfigError("unknown init kind '" + kind + "'");
      read_opt(in, "value", c.init.value, "sde.init");
      read_opt(in, "stddev", c.init.stddev, "sde.init");
    }
  }
  if (j.contains("march")) {
    const auto& m = j["march"];
    reject_unknown(m, {"lattice_size", "q", "ensemble", "cf_mode", "quad_order", "kernel_stride", "resolvent_tol"},
                   "march");
    read_opt(m, "lattice_size", c.lattice_size, "march");
    read_opt(m, "q", c.q, "march");
    read_opt(m, "ensemble", c.ensemble, "march");
    std::string mode = to_string(c.cf_mode);
    read_opt(m, "cf_mode", mode, "march");
    c.cf_mode = cf_mode_from_string(mode);
    read_opt(m, "quad_order", c.quad_order, "march");
    read_opt(m, "kernel_stride", c.kernel_stride, "march");
    read_opt(m, "resolvent_tol", c.resolvent_tol, "march");
  }
  if (j.contains("quenched")) {
    const auto& qd = j["quenched"];
    reject_unknown(qd, {"ladder", "weight_draws", "replicas"}, "quenched");
    read_opt(qd, "ladder", c.ladder, "quenched");
    read_opt(qd, "weight_draws", c.weight_draws, "quenched");
    read_opt(qd, "replicas", c.replicas, "quenched");
  }
  if (j.contains("weights")) {
    reject_unknown(j["weights"], {"n"}, "weights");
    read_opt(j["weights"], "n", c.weights_n, "weights");
  }
  if (j.contains("probes")) {
    if (!j["probes"].is_array()) throw ConfigError("probes must be an array");
    for (const auto& p : j["probes"]) {
      reject_unknown(p, {"k", "t", "s", "weight"}, "probe");
      Probe pr;
      read_opt(p, "k", pr.k, "probe");
      read_opt(p, "t", pr.t, "probe");
      read_opt(p, "s", pr.s, "probe");
      read_opt(p, "weight", pr.weight, "probe");
      c.probes.push_back(pr);
    }
  } else {
    c.probes = default_probes(c);
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["model"] = model_json(c.model);
  j["sde"] = {{"sigma", c.sigma},
              {"activation", c.activation},
              {"T", c.T},
              {"m", c.m},
              {"alpha", c.alpha},
              {"init", {{"kind", init_kind(c.init.kind)}, {"value", c.init.value}, {"stddev", c.init.stddev}}}};
  j["march"] = {{"lattice_size", c.lattice_size}, {"q", c.q},
                {"ensemble", c.ensemble},         {"cf_mode", to_string(c.cf_mode)},
                {"quad_order", c.quad_order},     {"kernel_stride", c.kernel_stride},
                {"resolvent_tol", c.resolvent_tol}};
  j["quenched"] = {{"ladder", c.ladder}, {"weight_draws", c.weight_draws}, {"replicas", c.replicas}};
  j["weights"] = {{"n", c.weights_n}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["probes"] = json::array();
  for (const auto& p : c.probes) j["probes"].push_back({{"k", p.k}, {"t", p.t}, {"s", p.s}, {"weight", p.weight}});
  return j.dump(2);
}

void validate_config(const RunConfig& c) {
  const auto model = c.model.build();
  c.sde().validate();
  c.march().validate();
  if (!(c.sigma > 0.0)) throw ConfigError("sigma must be positive for experiments");
  if (!(c.resolvent_tol > 0.0)) throw ConfigError("resolvent_tol must be positive");
  if (c.weight_draws < 1 || c.replicas < 1) throw ConfigError("need at least one draw and one replica");
  if (c.weights_n < 0) throw ConfigError("weights.n must be nonnegative");
  if (c.output_dir.empty()) throw ConfigError("output_dir must be set");
  std::vector<int> sizes = c.ladder;
  sizes.push_back(c.lattice_size);
  for (int N : c.ladder) require_odd_lattice(N, "ladder");
  for (int N : sizes) {
    const auto rep = validate(model, half_width(N));
    if (!rep.ok) {
      if (!rep.envelope_violations.empty() || !rep.decay_violations.empty())
        throw EnvelopeViolation("N = " + std::to_string(N) + ": " + rep.summary());
      throw SpectrumNotPositive("N = " + std::to_string(N) + ": " + rep.summary());
    }
  }
  const int min_size = *std::min_element(sizes.begin(), sizes.end());
  for (const auto& p : c.probes) {
    if (std::abs(p.k) > half_width(min_size)) throw LagTooLarge("probe lag exceeds the smallest lattice");
    if (p.t < 0 || p.t > c.m || p.s < 0 || p.s > c.m) throw ConfigError("probe time index outside 0..m");
    if (!(p.weight > 0.0)) throw ConfigError("probe weights must be positive");
  }
}

void write_trajectories(const fs::path& path, const LatticeTrajectories& x, const std::string& kind) {
  Tensor t({static_cast<std::uint64_t>(x.ensemble()), static_cast<std::uint64_t>(x.lattice_size()),
            static_cast<std::uint64_t>(x.nodes())});
  t.data = x.data();
  write_tensor(path, t);
  json meta{{"kind", kind}, {"lattice_size", x.lattice_size()}, {"ensemble", x.ensemble()},
            {"grid", grid_meta(x.grid())}, {"seed", x.seed()}, {"layout", "member,site,time"}};
  write_sidecar(path, meta.dump(2));
}

LatticeTrajectories read_trajectories(const fs::path& path) {
  const Tensor t = read_tensor(path);
  const json meta = read_meta(path);
  if (t.shape.size() != 3) throw ShapeMismatch("trajectory tensor must have rank 3");
  const TimeGrid g = grid_from(meta.at("grid"));
  if (t.shape[2] != static_cast<std::uint64_t>(g.nodes())) throw ShapeMismatch("trajectory tensor does not match its grid");
  LatticeTrajectories x(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), g,
                        meta.value("seed", std::uint64_t{0}));
  x.data() = t.data;
  return x;
}

void write_weights(const fs::path& path, const WeightMatrix& J, const RunConfig& cfg) {
  Tensor t({static_cast<std::uint64_t>(J.size()), static_cast<std::uint64_t>(J.size())});
  t.data = J.entries;
  write_tensor(path, t);
  json meta{{"kind", "weights"}, {"n", J.n}, {"seed", J.seed}, {"model", model_json(cfg.model)}};
  write_sidecar(path, meta.dump(2));
}

WeightMatrix read_weights(const fs::path& path) {
  const Tensor t = read_tensor(path);
  const json meta = read_meta(path);
  WeightMatrix J;
  J.n = meta.at("n").get<int>();
  J.seed = meta.value("seed", std::uint64_t{0});
  if (t.shape.size() != 2 || t.shape[0] != t.shape[1] || t.shape[0] != static_cast<std::uint64_t>(J.size()))
    throw ShapeMismatch("weight tensor must be N x N");
  J.entries = t.data;
  return J;
}

void write_kernels(const fs::path& base, const KernelStack& st) {
  json meta{{"kind", "kernels"},
            {"sigma", st.sigma},
            {"grid", grid_meta(st.grid)},
            {"lattice_size", st.lattice_size},
            {"provenance", to_string(st.provenance)},
            {"causal", st.causal},
            {"K", lag_kernel_meta(st.K)}};
  if (st.has_L()) meta["L"] = lag_kernel_meta(st.L);
  const fs::path kp = base.string() + "_K.hmt";
  write_tensor(kp, lag_tensor(st.K));
  write_sidecar(kp, meta.dump(2));
  if (st.has_L()) {
    const fs::path lp = base.string() + "_L.hmt";
    write_tensor(lp, lag_tensor(st.L));
    write_sidecar(lp, meta.dump(2));
  }
}

KernelStack read_kernels(const fs::path& base) {
  const fs::path kp = base.string() + "_K.hmt";
  const json meta = read_meta(kp);
  KernelStack st;
  st.sigma = meta.at("sigma").get<double>();
  st.grid = grid_from(meta.at("grid"));
  st.lattice_size = meta.at("lattice_size").get<int>();
  st.provenance = provenance_from_string(meta.at("provenance").get<std::string>());
  st.causal = meta.at("causal").get<bool>();
  st.K = lag_from_tensor(read_tensor(kp));
  if (meta.contains("L")) st.L = lag_from_tensor(read_tensor(base.string() + "_L.hmt"));
  return st;
}

void write_resolvent(const fs::path& path, const ResolventKernel& M) {
  write_tensor(path, lag_tensor(M.M));
  json meta{{"kind", "resolvent"},
            {"sigma", M.sigma},
            {"grid", grid_meta(M.grid)},
            {"lattice_size", M.lattice_size},
            {"rule", M.rule == Quadrature::Trapezoid ? "trapezoid" : "open_rectangle"},
            {"p_used", M.p_used},
            {"tail_bound", M.tail_bound}};
  write_sidecar(path, meta.dump(2));
}

ResolventKernel read_resolvent(const fs::path& path) {
  const json meta = read_meta(path);
  ResolventKernel M;
  M.sigma = meta.at("sigma").get<double>();
  M.grid = grid_from(meta.at("grid"));
  M.lattice_size = meta.at("lattice_size").get<int>();
  M.rule = meta.at("rule").get<std::string>() == "trapezoid" ? Quadrature::Trapezoid : Quadrature::OpenRectangle;
  M.p_used = meta.at("p_used").get<int>();
  M.tail_bound = meta.at("tail_bound").get<double>();
  M.M = lag_from_tensor(read_tensor(path));
  return M;
}

namespace {
std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}
}  // namespace

void write_probe_csv(const fs::path& path, const std::vector<LagStat>& stats, int lattice_size) {
  auto os = open_csv(path);
  os << "probe_id,k,t,s,estimate,se,N\n";
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    os << i << ',' << s.probe.k << ',' << s.probe.t << ',' << s.probe.s << ',' << s.estimate << ',' << s.se << ','
       << lattice_size << '\n';
  }
}

void write_convergence_csv(const fs::path& path, const ConvergenceReport& rep) {
  auto os = open_csv(path);
  os << "N,draws,replicas,discrepancy,se,median_discrepancy,median_se\n";
  for (const auto& e : rep.entries)
    os << e.lattice_size << ',' << e.draws << ',' << e.replicas << ',' << e.discrepancy << ',' << e.se << ','
       << e.median_discrepancy << ',' << e.median_se << '\n';
}

Kurtosis sample_kurtosis(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 4) throw EnsembleTooSmall("kurtosis needs at least four samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d2 = (x - mean) * (x - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  return {m2 > 0.0 ? m4 / (m2 * m2) : 0.0, std::sqrt(24.0 / n)};
}

void write_limit_summary(const fs::path& path, const LimitLaw& law, const Activation& f) {
  const auto& Z = law.Z;
  const int E = Z.ensemble(), N = Z.lattice_size(), m = Z.grid().m;
  auto os = open_csv(path);
  os << "statistic,k,t,s,estimate,se,N\n";
  for (int v = 0; v <= m; ++v) {
    std::vector<double> member(E, 0.0);
    for (int e = 0; e < E; ++e) {
      for (int j = 0; j < N; ++j) member[e] += f(Z.at(e, j, v));
      member[e] /= N;
    }
    double mean = 0.0;
    for (double x : member) mean += x;
    mean /= E;
    double ss = 0.0;
    for (double x : member) ss += (x - mean) * (x - mean);
    const double se = E > 1 ? std::sqrt(ss / (E - 1) / E) : 0.0;
    os << "mean_f,0," << v << ',' << v << ',' << mean << ',' << se << ',' << N << '\n';
  }
  const int kmax = half_width(N);
  std::vector<Probe> probes;
  for (int k = 0; k <= std::min(kmax, 3); ++k)
    for (int v = 0; v <= m; ++v) probes.push_back({k, v, v, 1.0});
  for (const auto& s : lag_feature_covariance(Z, f, probes))
    os << "lag_moment," << s.probe.k << ',' << s.probe.t << ',' << s.probe.s << ',' << s.estimate << ',' << s.se << ','
       << N << '\n';
  if (E >= 4) {
    std::vector<double> zt(E);
    for (int e = 0; e < E; ++e) zt[e] = Z.at(e, kmax, m);  // site 0
    const auto k = sample_kurtosis(zt);
    os << "kurtosis_Z0T,0," << m << ',' << m << ',' << k.value << ',' << k.se << ',' << N << '\n';
  }
}

std::string RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["code_version"] = code_version;
  j["artifacts"] = json::array();
  for (const auto& a : artifacts) j["artifacts"].push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  j["timings"] = json::object();
  for (const auto& [stage, secs] : timings) j["timings"][stage] = secs;
  return j.dump(2);
}

std::string code_version() { return HMF_VERSION; }

RunManifest run_experiment(const RunConfig& cfg) {
  in_stage("validate", [&] { validate_config(cfg); });
  const fs::path root = cfg.output_dir;
  RunManifest man;
  man.config_hash = sha256_text(dump_config(cfg));
  man.code_version = code_version();
  const auto model = cfg.model.build();
  const auto sde = cfg.sde();

  in_stage("prepare", [&] {
    fs::create_directories(root);
    std::ofstream(root / "config.json") << dump_config(cfg) << '\n';
  });

  std::vector<QuenchedRuns> quenched;
  {
    Stopwatch sw;
    in_stage("quenched", [&] {
      for (int N : cfg.ladder) {
        const int n = half_width(N);
        const WeightSampler sampler(model, n);
        QuenchedRuns runs{N, {}};
        const fs::path dir = draw_dir(root, N);
        for (int d = 0; d < cfg.weight_draws; ++d) {
          const std::uint64_t key = static_cast<std::uint64_t>(N) << 32 | static_cast<std::uint64_t>(d);
          const WeightMatrix J = sampler.sample(derive_seed(cfg.seed, "weight-draw", key));
          auto traj = simulate_quenched(J, sde, derive_seed(cfg.seed, "replicas", key), cfg.replicas);
          write_weights(dir / draw_name(d, "weights"), J, cfg);
          write_trajectories(dir / draw_name(d, "traj"), traj, "quenched");
          runs.draws.push_back(std::move(traj));
        }
        quenched.push_back(std::move(runs));
      }
    });
    man.timings.emplace_back("quenched", sw.seconds());
  }

  LimitLaw law;
  {
    Stopwatch sw;
    in_stage("limit", [&] {
      law = march(model, cfg.march());
      write_trajectories(root / "limit" / "Z.hmt", law.Z, "limit");
      write_trajectories(root / "limit" / "theta.hmt", law.theta, "theta");
      write_kernels(root / "limit" / "kernels", law.kernels);
      write_limit_summary(root / "limit" / "summary.csv", law, cfg.march().f);
    });
    man.timings.emplace_back("limit", sw.seconds());
  }

  {
    Stopwatch sw;
    in_stage("resolvent", [&] {
      const auto M = iterated_kernels(law.kernels, cfg.sigma, cfg.resolvent_tol);
      write_resolvent(root / "limit" / "M.hmt", M);
    });
    man.timings.emplace_back("resolvent", sw.seconds());
  }

  {
    Stopwatch sw;
    in_stage("compare", [&] {
      const auto rep = convergence_report(quenched, law.Z, sde.f, cfg.probes);
      write_convergence_csv(root / "reports" / "convergence.csv", rep);
      write_probe_csv(root / "reports" / "limit_probes.csv", rep.limit, cfg.lattice_size);
      for (const auto& e : rep.entries)
        write_probe_csv(root / "reports" / ("quenched_probes_N" + std::to_string(e.lattice_size) + ".csv"), e.pooled,
                        e.lattice_size);
      json fit{{"slope", rep.slope}, {"intercept", rep.intercept}, {"slope_se", rep.slope_se},
               {"band", {rep.band_lo, rep.band_hi}}};
      std::ofstream(root / "reports" / "fit.json") << fit.dump(2) << '\n';
    });
    man.timings.emplace_back("compare", sw.seconds());
  }

  in_stage("manifest", [&] {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
      if (entry.is_regular_file() && entry.path().filename() != "manifest.json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files)
      man.artifacts.push_back({fs::relative(p, root).generic_string(), sha256_file(p), fs::file_size(p)});
    std::ofstream(root / "manifest.json") << man.to_json() << '\n';
  });
  return man;
}

ConvergenceReport compare_run(const RunConfig& cfg) {
  return in_stage("compare", [&] {
    const fs::path root = cfg.output_dir;
    std::vector<QuenchedRuns> quenched;
    for (int N : cfg.ladder) {
      QuenchedRuns runs{N, {}};
      for (int d = 0; d < cfg.weight_draws; ++d) runs.draws.push_back(read_trajectories(draw_dir(root, N) / draw_name(d, "traj")));
      quenched.push_back(std::move(runs));
    }
    const auto limit = read_trajectories(root / "limit" / "Z.hmt");
    return convergence_report(quenched, limit, Activation::by_name(cfg.activation), cfg.probes);
  });
}

}  // namespace hmf
