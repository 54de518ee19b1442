#include <CLI/CLI.hpp>
#include <filesystem>
#include <iostream>
#include <string>

#include "hmf/error.hpp"
#include "hmf/harness.hpp"
#include "hmf/rng.hpp"

namespace fs = std::filesystem;

namespace {

struct Args {
  std::string config, out, weights, kernels, resolvent, trajectories, rule = "open_rectangle";
  int n = -1, replicas = -1, q = -1;
  double tol = 1e-10, lambda2 = 1.0;
  long long seed = -1;
};

void print_report(const hmf::ConvergenceReport& rep) {
  std::cout << "N,draws,replicas,discrepancy,se,median_discrepancy,median_se\n";
  for (const auto& e : rep.entries)
    std::cout << e.lattice_size << ',' << e.draws << ',' << e.replicas << ',' << e.discrepancy << ',' << e.se << ','
              << e.median_discrepancy << ',' << e.median_se << '\n';
  std::cout << "fitted exponent " << rep.slope << " [" << rep.band_lo << ", " << rep.band_hi << "]\n";
}

int cmd_validate(const Args& a) {
  const auto cfg = hmf::load_config(a.config);
  hmf::validate_config(cfg);
  std::cout << "config ok\n";
  return 0;
}

int cmd_weights_validate(const Args& a) {
  const auto cfg = hmf::load_config(a.config);
  const int n = a.n >= 0 ? a.n : cfg.weights_n;
  const auto rep = hmf::validate(cfg.model.build(), n);
  std::cout << rep.summary() << '\n';
  return rep.ok ? 0 : 1;
}

int cmd_weights_sample(const Args& a) {
  const auto cfg = hmf::load_config(a.config);
  const int n = a.n >= 0 ? a.n : cfg.weights_n;
  const std::uint64_t seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : hmf::derive_seed(cfg.seed, "cli-weights");
  const auto J = hmf::sample_weights(cfg.model.build(), n, seed);
  hmf::write_weights(a.out, J, cfg);
  std::cout << "wrote " << a.out << " (N = " << J.size() << ")\n";
  return 0;
}

int cmd_simulate(const Args& a) {
  const auto cfg = hmf::load_config(a.config);
  const auto J = hmf::read_weights(a.weights);
  const int replicas = a.replicas > 0 ? a.replicas : cfg.replicas;
  const std::uint64_t seed = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : hmf::derive_seed(cfg.seed, "cli-quenched");
  const auto traj = hmf::simulate_quenched(J, cfg.sde(), seed, replicas);
  hmf::write_trajectories(a.out, traj, "quenched");
  std::cout << "wrote " << a.out << '\n';
  return 0;
}

int cmd_kernels_build(const Args& a) {
  const auto cfg = hmf::load_config(a.config);
  const auto paths = hmf::read_trajectories(a.trajectories);
  const int q = a.q >= 0 ? a.q : std::min(cfg.q, hmf::half_width(paths.lattice_size()));
  const auto cf = hmf::cf_from_paths(paths, hmf::Activation::by_name(cfg.activation), q);
  auto st = hmf::assemble_K(cfg.model.build(), cf, q);
  st.provenance = hmf::Provenance::Empirical;
  st = hmf::K_to_L(st, cfg.sigma, paths.lattice_size());
  hmf::write_kernels(a.out, st);
  std::cout << "wrote " << a.out << "_K.hmt and " << a.out << "_L.hmt\n";
  return 0;
}

int cmd_kernels_resolvent(const Args& a) {
  const auto st = hmf::read_kernels(a.kernels);
  const auto rule = a.rule == "trapezoid" ? hmf::Quadrature::Trapezoid : hmf::Quadrature::OpenRectangle;
  const auto M = hmf::iterated_kernels(st, st.sigma, a.tol, rule);
  hmf::write_resolvent(a.out, M);
  std::cout << "p_used " << M.p_used << ", tail bound " << M.tail_bound << '\n';
  return 0;
}

int cmd_kernels_check(const Args& a) {
  const auto st = hmf::read_kernels(a.kernels);
  const int N = st.lattice_size > 0 ? st.lattice_size : 2 * st.q() + 1;
  const auto r = hmf::check_kernels(st, st.sigma, N);
  std::cout << "symmetry error " << r.symmetry_error << "\nmin eigen ratio " << r.min_eigen_ratio
            << "\nmax operator norm " << r.max_operator_norm << "\nidentity error " << r.identity_error
            << "\nL error " << r.l_error << '\n'
            << (r.ok ? "ok" : "FAILED") << '\n';
  return r.ok ? 0 : 2;
}

int cmd_limit_march(const Args& a) {
  const auto cfg = hmf::load_config(a.config);
  const auto mc = cfg.march();
  const auto law = hmf::march(cfg.model.build(), mc);
  const fs::path dir = a.out;
  hmf::write_trajectories(dir / "Z.hmt", law.Z, "limit");
  hmf::write_trajectories(dir / "theta.hmt", law.theta, "theta");
  hmf::write_kernels(dir / "kernels", law.kernels);
  hmf::write_limit_summary(dir / "summary.csv", law, mc.f);
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

int cmd_limit_closed_form(const Args& a) {
  const auto cfg = hmf::load_config(a.config);
  const auto st = hmf::read_kernels(a.kernels);
  const auto M = hmf::read_resolvent(a.resolvent);
  const auto mc = cfg.march();
  const auto Z = hmf::sample_closed_form(st, M, st.sigma, M.lattice_size, st.grid, mc.seed, mc.ensemble);
  hmf::write_trajectories(a.out, Z, "closed_form");
  std::cout << "wrote " << a.out << '\n';
  return 0;
}

int cmd_limit_single_site(const Args& a) {
  const auto cfg = hmf::load_config(a.config);
  const auto mc = cfg.march();
  const auto law = hmf::single_site_uncorrelated(a.lambda2, mc);
  const fs::path dir = a.out;
  hmf::write_trajectories(dir / "Z.hmt", law.Z, "single_site");
  hmf::write_kernels(dir / "kernels", law.kernels);
  hmf::write_limit_summary(dir / "summary.csv", law, mc.f);
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

hmf::RunConfig run_config(const Args& a) {
  auto cfg = hmf::load_config(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  return cfg;
}

int cmd_compare(const Args& a) {
  const auto cfg = run_config(a);
  print_report(hmf::compare_run(cfg));
  return 0;
}

int cmd_selftest() {
  bool all = true;
  for (const auto& c : hmf::selftest()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    all = all && c.passed;
  }
  return all ? 0 : 2;
}

int cmd_run(const Args& a) {
  const auto cfg = run_config(a);
  const auto man = hmf::run_experiment(cfg);
  std::cout << "run complete: " << man.artifacts.size() << " artifacts in " << cfg.output_dir << '\n';
  for (const auto& [stage, secs] : man.timings) std::cout << "  " << stage << ": " << secs << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice Hopfield network mean-field toolkit"};
  app.require_subcommand(1);
  Args a;
  int (*action)(const Args&) = nullptr;
  bool selftest = false;

  auto need_config = [&](CLI::App* c) { c->add_option("--config", a.config, "JSON config file")->required(); };

  auto* validate = app.add_subcommand("validate", "Validate a config");
  need_config(validate);
  validate->callback([&] { action = cmd_validate; });

  auto* weights = app.add_subcommand("weights", "Weight covariance models and sampling");
  weights->require_subcommand(1);
  auto* wv = weights->add_subcommand("validate", "Check envelope and spectral positivity");
  need_config(wv);
  wv->add_option("--n", a.n, "lattice half-size");
  wv->callback([&] { action = cmd_weights_validate; });
  auto* ws = weights->add_subcommand("sample", "Draw one weight matrix");
  need_config(ws);
  ws->add_option("--out", a.out)->required();
  ws->add_option("--n", a.n, "lattice half-size");
  ws->add_option("--seed", a.seed);
  ws->callback([&] { action = cmd_weights_sample; });

  auto* simulate = app.add_subcommand("simulate", "Finite-size network simulation");
  simulate->require_subcommand(1);
  auto* sq = simulate->add_subcommand("quenched", "Euler-Maruyama replicas for fixed weights");
  need_config(sq);
  sq->add_option("--weights", a.weights)->required();
  sq->add_option("--out", a.out)->required();
  sq->add_option("--replicas", a.replicas);
  sq->add_option("--seed", a.seed);
  sq->callback([&] { action = cmd_simulate; });

  auto* kernels = app.add_subcommand("kernels", "Kernel construction and checks");
  kernels->require_subcommand(1);
  auto* kb = kernels->add_subcommand("build", "K and full-horizon L from trajectories");
  need_config(kb);
  kb->add_option("--trajectories", a.trajectories)->required();
  kb->add_option("--out", a.out, "output base path")->required();
  kb->add_option("--q", a.q);
  kb->callback([&] { action = cmd_kernels_build; });
  auto* kr = kernels->add_subcommand("resolvent", "Resolvent kernel by iterated kernels");
  kr->add_option("--kernels", a.kernels, "kernel base path")->required();
  kr->add_option("--out", a.out)->required();
  kr->add_option("--tol", a.tol);
  kr->add_option("--rule", a.rule)->check(CLI::IsMember({"open_rectangle", "trapezoid"}));
  kr->callback([&] { action = cmd_kernels_resolvent; });
  auto* kc = kernels->add_subcommand("check", "Symmetry, PSD and tilt identity checks");
  kc->add_option("--kernels", a.kernels, "kernel base path")->required();
  kc->callback([&] { action = cmd_kernels_check; });

  auto* limit = app.add_subcommand("limit", "Limit dynamics");
  limit->require_subcommand(1);
  auto* lm = limit->add_subcommand("march", "Self-consistent time march");
  need_config(lm);
  lm->add_option("--out", a.out, "output directory")->required();
  lm->callback([&] { action = cmd_limit_march; });
  auto* lc = limit->add_subcommand("closed-form", "Sample through the resolvent representation");
  need_config(lc);
  lc->add_option("--kernels", a.kernels, "kernel base path")->required();
  lc->add_option("--resolvent", a.resolvent)->required();
  lc->add_option("--out", a.out)->required();
  lc->callback([&] { action = cmd_limit_closed_form; });
  auto* ls = limit->add_subcommand("single-site", "Uncorrelated single-site reduction");
  need_config(ls);
  ls->add_option("--lambda2", a.lambda2);
  ls->add_option("--out", a.out, "output directory")->required();
  ls->callback([&] { action = cmd_limit_single_site; });

  auto* compare = app.add_subcommand("compare", "Convergence report of a completed run");
  need_config(compare);
  compare->add_option("--out", a.out, "run directory, overrides output_dir");
  compare->callback([&] { action = cmd_compare; });

  auto* st = app.add_subcommand("selftest", "Fast oracle checks");
  st->callback([&] { selftest = true; });

  auto* run = app.add_subcommand("run", "Full pipeline");
  need_config(run);
  run->add_option("--out", a.out, "output directory, overrides output_dir");
  run->callback([&] { action = cmd_run; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (selftest) return cmd_selftest();
    return action ? action(a) : 1;
  } catch (const hmf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
