#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "hmf/error.hpp"
#include "hmf/harness.hpp"
#include "hmf/tensor_io.hpp"

using namespace hmf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hmf_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig tiny_run(const fs::path& out) {
  RunConfig c;
  c.model.family = "zero";
  c.T = 1.0;
  c.m = 4;
  c.lattice_size = 9;
  c.q = 3;
  c.ensemble = 64;
  c.ladder = {9, 17};
  c.weight_draws = 2;
  c.replicas = 8;
  c.weights_n = 2;
  c.seed = 99;
  c.output_dir = out.string();
  c.probes = default_probes(c);
  return c;
}

std::map<std::string, std::string> checksums(const RunManifest& m) {
  std::map<std::string, std::string> out;
  for (const auto& a : m.artifacts) out[a.path] = a.sha256;
  return out;
}

}  // namespace

TEST(Config, RoundTrip) {
  RunConfig c = tiny_run("somewhere");
  c.model = {"product", 0.7, 3.0, 0.25, 1.0};
  c.init.kind = InitialCondition::Kind::Gaussian;
  c.init.stddev = 0.3;
  c.cf_mode = CfMode::Gaussian;
  const auto back = parse_config(dump_config(c));
  EXPECT_EQ(dump_config(back), dump_config(c));
  EXPECT_EQ(back.model.decay, 3.0);
  EXPECT_EQ(back.ladder, c.ladder);
  EXPECT_EQ(back.cf_mode, CfMode::Gaussian);
  EXPECT_EQ(back.probes.size(), c.probes.size());
}

TEST(Config, DefaultsAndDefaultProbes) {
  const auto c = parse_config(R"({"seed": 5})");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.lattice_size, 33);
  EXPECT_EQ(c.probes.size(), 16u);
  for (const auto& p : c.probes) {
    EXPECT_TRUE(p.t == c.m / 2 || p.t == c.m);
    EXPECT_TRUE(p.s == c.m / 2 || p.s == c.m);
    EXPECT_GE(p.k, 0);
    EXPECT_LE(p.k, 3);
  }
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config(R"({"seed": 1, "colour": 2})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": 1, "sde": {"sigmaa": 2}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sde": {"sigma": 2}})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);

  auto c = parse_config(R"({"seed": 1, "quenched": {"ladder": [17, 32]}})");
  EXPECT_THROW(validate_config(c), DimensionMismatch);
  c = parse_config(R"({"seed": 1, "model": {"family": "product", "c": -1.0}})");
  EXPECT_THROW(validate_config(c), Error);
  c = parse_config(R"({"seed": 1, "probes": [{"k": 9, "t": 1, "s": 1}]})");
  EXPECT_THROW(validate_config(c), LagTooLarge);
  try {
    validate_config(parse_config(R"({"seed": 1, "sde": {"sigma": 0}})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), 1);
  }
}

TEST(Persistence, TrajectoriesRoundTrip) {
  const auto dir = scratch("traj");
  LatticeTrajectories x(3, 5, {1.5, 4}, 17);
  std::mt19937_64 eng(1);
  std::normal_distribution<double> nd;
  for (auto& v : x.data()) v = nd(eng);
  write_trajectories(dir / "x.hmt", x, "quenched");
  EXPECT_TRUE(fs::exists(dir / "x.hmt.json"));
  const auto y = read_trajectories(dir / "x.hmt");
  EXPECT_EQ(y.ensemble(), 3);
  EXPECT_EQ(y.lattice_size(), 5);
  EXPECT_EQ(y.grid().T, 1.5);
  EXPECT_EQ(y.grid().m, 4);
  EXPECT_EQ(y.data(), x.data());
}

TEST(Persistence, WeightsRoundTrip) {
  const auto dir = scratch("weights");
  const RunConfig cfg = tiny_run(dir);
  const auto J = sample_weights(CovarianceModel::product(1.0), 3, 42);
  write_weights(dir / "J.hmt", J, cfg);
  const auto K = read_weights(dir / "J.hmt");
  EXPECT_EQ(K.n, 3);
  EXPECT_EQ(K.entries, J.entries);
}

TEST(Persistence, KernelsAndResolventRoundTrip) {
  const auto dir = scratch("kernels");
  const TimeGrid g{1.0, 3};
  KernelStack st;
  st.grid = g;
  st.sigma = 0.8;
  st.lattice_size = 5;
  st.K = LagKernel(2, 4);
  st.L = LagKernel(2, 4);
  std::mt19937_64 eng(3);
  std::normal_distribution<double> nd;
  for (int k = -2; k <= 2; ++k)
    for (int v = 0; v < 4; ++v)
      for (int w = 0; w < 4; ++w) {
        st.K(k, v, w) = nd(eng);
        st.L(k, v, w) = nd(eng);
      }
  write_kernels(dir / "st", st);
  EXPECT_TRUE(fs::exists(dir / "st_K.hmt"));
  EXPECT_TRUE(fs::exists(dir / "st_L.hmt"));
  const auto back = read_kernels(dir / "st");
  EXPECT_EQ(back.lattice_size, 5);
  EXPECT_EQ(back.sigma, 0.8);
  EXPECT_EQ(back.K.data(), st.K.data());
  EXPECT_EQ(back.L.data(), st.L.data());

  const auto M = iterated_kernels(st, 2.0, 1e-10);
  write_resolvent(dir / "M.hmt", M);
  const auto R = read_resolvent(dir / "M.hmt");
  EXPECT_EQ(R.M.data(), M.M.data());
  EXPECT_EQ(R.p_used, M.p_used);
  EXPECT_EQ(R.rule, M.rule);
  EXPECT_EQ(R.sigma, 2.0);
}

TEST(Kurtosis, NormalSample) {
  std::mt19937_64 eng(8);
  std::normal_distribution<double> nd(2.0, 3.0);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = nd(eng);
  const auto k = sample_kurtosis(xs);
  EXPECT_NEAR(k.se, std::sqrt(24.0 / 20000.0), 1e-15);
  EXPECT_LT(std::fabs(k.value - 3.0), 3.0 * k.se);
  EXPECT_NEAR(sample_kurtosis({-1.0, 1.0, -1.0, 1.0}).value, 1.0, 1e-14);
}

TEST(Run, ZeroModelEndToEnd) {
  const auto dir = scratch("run");
  const auto cfg = tiny_run(dir);
  const auto man = run_experiment(cfg);

  // Every file of the run, apart from the manifest, is listed with its checksum.
  std::set<std::string> on_disk;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      on_disk.insert(fs::relative(e.path(), dir).generic_string());
  std::set<std::string> listed;
  for (const auto& a : man.artifacts) {
    listed.insert(a.path);
    EXPECT_EQ(a.sha256, sha256_file(dir / a.path)) << a.path;
    EXPECT_EQ(a.bytes, fs::file_size(dir / a.path)) << a.path;
  }
  EXPECT_EQ(listed, on_disk);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  for (const char* f : {"config.json", "limit/Z.hmt", "limit/theta.hmt", "limit/summary.csv", "limit/M.hmt",
                        "reports/convergence.csv", "reports/fit.json", "quenched/N9/draw000_weights.hmt",
                        "quenched/N17/draw001_traj.hmt"})
    EXPECT_TRUE(listed.count(f)) << f;
  EXPECT_EQ(man.config_hash, sha256_text(dump_config(cfg)));

  // With J = 0 every site is an independent Brownian motion in both systems.
  const auto rep = compare_run(cfg);
  ASSERT_EQ(rep.entries.size(), 2u);
  for (const auto& e : rep.entries) EXPECT_LT(e.discrepancy, 3.0 * e.se) << e.lattice_size;

  std::ifstream csv(dir / "reports" / "convergence.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "N,draws,replicas,discrepancy,se,median_discrepancy,median_se");
  for (const auto& e : rep.entries) {
    ASSERT_TRUE(std::getline(csv, line));
    std::stringstream ss(line);
    std::vector<double> cols;
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(std::stod(c));
    ASSERT_EQ(cols.size(), 7u);
    EXPECT_EQ(cols[0], e.lattice_size);
    EXPECT_EQ(cols[1], 2);
    EXPECT_EQ(cols[2], 8);
    EXPECT_NEAR(cols[3], e.discrepancy, 1e-12 * (1.0 + e.discrepancy));
    EXPECT_NEAR(cols[5], e.median_discrepancy, 1e-12 * (1.0 + e.median_discrepancy));
  }
}

TEST(Run, ReproducibleChecksums) {
  const auto dir = scratch("repro");
  auto cfg = tiny_run(dir);
  cfg.model = {"product", 0.5, 4.0, 0.5, 1.0};
  const auto a = checksums(run_experiment(cfg));
  fs::remove_all(dir);
  const auto b = checksums(run_experiment(cfg));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Selftest, AllChecksPass) {
  for (const auto& c : selftest()) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

TEST(Selftest, DetectsSignError) {
  SelftestOptions opts;
  opts.k_to_l = [](const KernelStack& st, double sigma, int N) {
    // (I - c K)^{-1} K in place of (I + c K)^{-1} K.
    KernelStack neg = st;
    for (auto& x : neg.K.data()) x = -x;
    auto out = K_to_L(neg, sigma, N);
    out.K = st.K;
    for (auto& x : out.L.data()) x = -x;
    return out;
  };
  bool found = false;
  for (const auto& c : selftest(opts))
    if (c.name == "operator_identity") {
      found = true;
      EXPECT_FALSE(c.passed) << c.detail;
    }
  EXPECT_TRUE(found);
}
