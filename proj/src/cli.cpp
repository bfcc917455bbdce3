#include "fourns/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <vector>

#include "fourns/bitree.hpp"
#include "fourns/dynamics.hpp"
#include "fourns/errors.hpp"
#include "fourns/io.hpp"
#include "fourns/measure.hpp"
#include "fourns/normal_form.hpp"

namespace fourns {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_as(const std::string& key, const std::string& value) {
  T out{};
  std::istringstream ss(value);
  ss >> out;
  if (ss.fail() || !ss.eof()) throw ValidationError("invalid value '" + value + "' for " + key);
  return out;
}

std::string num(double x) { return format_number(x); }

std::vector<int> doubling_list(int N) {
  std::vector<int> out;
  for (int n = 2; n <= N; n *= 2) out.push_back(n);
  return out;
}

// Artifacts collected by an experiment: name -> content.
using Outputs = std::map<std::string, std::string>;

json estimate_json(const std::string& name, const json& params, const McEstimate& e, std::uint64_t seed) {
  return {{"name", name},
          {"params", params},
          {"mean", e.mean},
          {"std_err", std::isfinite(e.std_err) ? json(e.std_err) : json("inf")},
          {"n_samples", e.n_samples},
          {"log_space", e.log_space},
          {"flagged", e.flagged},
          {"seed", seed}};
}

std::vector<double> uniform_grid(double t_final, int intervals) {
  std::vector<double> ts;
  for (int i = 0; i <= intervals; ++i) ts.push_back(t_final * i / intervals);
  return ts;
}

Outputs run_simulate(const RunConfig& cfg, std::ostream& log) {
  GaussianSampler sampler(cfg.s, cfg.effective_M(), cfg.seed);
  FlowConfig fc;
  fc.N = cfg.N;
  fc.M = cfg.effective_M();
  fc.dt = cfg.dt;
  fc.t_final = cfg.t_final;
  fc.sample_times = uniform_grid(cfg.t_final, 10);
  const auto sigma = SobolevIndex::make(cfg.s, cfg.eps).sigma;
  const auto traj = flow_truncated(sampler.sample(0), fc);
  CsvTable modes({"t", "n", "re", "im"});
  CsvTable diag({"t", "mass", "hamiltonian", "norm_sigma"});
  for (const auto& u : traj) {
    for (int n = -u.cutoff(); n <= u.cutoff(); ++n) {
      modes.add_row({num(u.time()), std::to_string(n), num(u[n].real()), num(u[n].imag())});
    }
    diag.add_row({num(u.time()), num(mass(u)), num(hamiltonian(u, cfg.N)), num(sobolev_norm(u, sigma))});
  }
  log << "simulated " << traj.size() << " samples to t = " << cfg.t_final << "\n";
  return {{"trajectory.csv", modes.str()}, {"diagnostics.csv", diag.str()}};
}

Outputs run_energy_drift(const RunConfig& cfg, std::ostream& log) {
  GaussianSampler sampler(cfg.s, cfg.effective_M(), cfg.seed);
  FlowConfig fc;
  fc.N = cfg.N;
  fc.M = cfg.effective_M();
  fc.dt = cfg.dt;
  fc.t_final = cfg.t_final;
  fc.sample_times = uniform_grid(cfg.t_final, std::max(2, static_cast<int>(std::lround(cfg.t_final / (10 * cfg.dt)))));
  std::vector<int> J_list;
  for (int j = 0; j <= cfg.J; ++j) J_list.push_back(j);
  CsvTable table({"sample", "J", "sup_rate", "sup_finite_difference", "max_mismatch"});
  json records = json::array();
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    const auto rows = energy_drift(sampler.sample(k), fc, J_list, cfg.s, cfg.c_impl);
    for (const auto& r : rows) {
      table.add_row({std::to_string(k), std::to_string(r.J), num(r.sup_rate), num(r.sup_finite_difference),
                     num(r.max_mismatch)});
      records.push_back({{"sample", k},
                         {"J", r.J},
                         {"sup_rate", r.sup_rate},
                         {"sup_finite_difference", r.sup_finite_difference},
                         {"max_mismatch", r.max_mismatch}});
    }
  }
  log << "energy drift for " << cfg.samples << " trajectories, J = 0.." << cfg.J << "\n";
  return {{"drift.csv", table.str()}, {"drift.json", json_text(records)}};
}

Outputs run_bitree_audit(const RunConfig& cfg, std::ostream& log) {
  const auto trees = enumerate_chronicles(cfg.J);
  json list = json::array();
  for (const auto& t : trees) list.push_back(audit_json(t));
  CsvTable counts({"n_root", "assignments"});
  std::uint64_t total = 0;
  for (int n = -cfg.N; n <= cfg.N; ++n) {
    std::uint64_t c = 0;
    for (const auto& t : trees) c += enumerate_assignments(t, n, cfg.N).size();
    total += c;
    counts.add_row({std::to_string(n), std::to_string(c)});
  }
  const json report{{"J", cfg.J},
                    {"N", cfg.N},
                    {"chronicles", trees.size()},
                    {"expected_chronicles", chronicle_count(cfg.J)},
                    {"assignments", total},
                    {"trees", list}};
  log << "J = " << cfg.J << ": " << trees.size() << " chronicles\n";
  return {{"audit.json", json_text(report)}, {"assignments.csv", counts.str()}};
}

Outputs run_telescope(const RunConfig& cfg, std::ostream& log) {
  GaussianSampler sampler(cfg.s, cfg.N, cfg.seed);
  NormalFormEngine engine({.s = cfg.s, .N = cfg.N, .c_impl = cfg.c_impl});
  CsvTable table({"sample", "t", "residual"});
  double worst = 0.0;
  const double t = cfg.t_final;
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    const auto v = sampler.sample(k).low_modes(cfg.N);
    const double r = telescoping_residual(engine, v, t, cfg.J);
    worst = std::max(worst, r);
    table.add_row({std::to_string(k), num(t), num(r)});
  }
  const json report{{"J", cfg.J}, {"N", cfg.N}, {"s", cfg.s}, {"samples", cfg.samples}, {"max_residual", worst}};
  log << "max telescoping residual " << worst << "\n";
  return {{"residuals.csv", table.str()}, {"telescope.json", json_text(report)}};
}

Outputs run_qi_check(const RunConfig& cfg, std::ostream& log) {
  const int M = cfg.effective_M();
  const auto sigma = SobolevIndex::make(cfg.s, cfg.eps).sigma;
  GaussianSampler sampler(cfg.s, M, cfg.seed);
  SobolevBall ball{sigma, std::sqrt(expected_sobolev_square(cfg.s, sigma, M)), std::nullopt};
  McOptions opt{.J = cfg.J, .s = cfg.s, .N = cfg.N, .n_samples = cfg.samples, .c_impl = cfg.c_impl,
                .dt = cfg.dt, .workers = cfg.workers};
  CsvTable table({"t", "lhs_mean", "lhs_std_err", "rhs_mean", "rhs_std_err", "sigmas", "pass"});
  json records = json::array();
  for (double t : {0.0, cfg.t_final}) {
    const auto r = change_of_variable_check([&](const FourierState& u) { return ball.contains(u); }, sampler, t, opt);
    const bool pass = r.sigmas <= 3.0;
    table.add_row({num(t), num(r.lhs.mean), num(r.lhs.std_err), num(r.rhs.mean), num(r.rhs.std_err), num(r.sigmas),
                   pass ? "1" : "0"});
    const json params{{"t", t}, {"J", cfg.J}, {"N", cfg.N}, {"M", M}, {"s", cfg.s}, {"radius", ball.radius}};
    records.push_back(estimate_json("lhs", params, r.lhs, cfg.seed));
    records.push_back(estimate_json("rhs", params, r.rhs, cfg.seed));
    log << "t = " << t << ": lhs " << r.lhs.mean << " +- " << r.lhs.std_err << ", rhs " << r.rhs.mean << " +- "
        << r.rhs.std_err << " (" << r.sigmas << " sigma)\n";
  }
  return {{"qi.csv", table.str()}, {"qi.json", json_text(records)}};
}

Outputs run_convergence(const RunConfig& cfg, std::ostream& log) {
  const auto N_list = doubling_list(cfg.N);
  if (N_list.empty()) throw ValidationError("convergence needs N >= 2");
  const auto sigma = SobolevIndex::make(cfg.s, cfg.eps).sigma;
  GaussianSampler sampler(cfg.s, cfg.effective_M(), cfg.seed);
  CsvTable table({"sample", "N", "difference"});
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    for (const auto& r : convergence_experiment(sampler.sample(k), cfg.t_final, N_list, sigma, cfg.dt)) {
      table.add_row({std::to_string(k), std::to_string(r.N), num(r.difference)});
    }
  }
  log << "convergence sweep over " << N_list.size() << " cutoffs\n";
  return {{"convergence.csv", table.str()}};
}

Outputs run_weight_sweep(const RunConfig& cfg, std::ostream& log) {
  const auto N_list = doubling_list(cfg.N);
  if (N_list.empty()) throw ValidationError("weight-sweep needs N >= 2");
  GaussianSampler sampler(cfg.s, cfg.effective_M(), cfg.seed);
  CsvTable table({"sample", "N", "log_weight", "weight"});
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    for (const auto& r : weight_convergence_sweep(sampler.sample(k), cfg.J, cfg.s, N_list, cfg.c_impl)) {
      table.add_row({std::to_string(k), std::to_string(r.N), num(r.log_weight), num(r.weight)});
    }
  }
  log << "weight sweep over " << N_list.size() << " cutoffs\n";
  return {{"weights.csv", table.str()}};
}

std::filesystem::path output_root(const RunConfig& cfg) {
  if (!cfg.out.empty()) return cfg.out;
  if (const char* env = std::getenv("FOURNS_OUT"); env && *env) return env;
  return "runs";
}

}  // namespace

void RunConfig::validate() const {
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands)) {
    throw ValidationError("unknown command '" + command + "'");
  }
  if (!(s > 0.0 && s <= 5.0)) throw ValidationError("s must lie in (0, 5]");
  if (!(eps > 0.0 && eps < 0.5)) throw ValidationError("eps must lie in (0, 1/2)");
  SobolevIndex::make(s, eps);
  if (N < 1 || N > 64) throw ValidationError("N must lie in [1, 64]");
  if (M != -1 && (M < N || M > 4096)) throw ValidationError("M must satisfy N <= M <= 4096");
  if (J < 0 || J > kDefaultMaxGenerations) throw ValidationError("J must lie in [0, 5]");
  if (!(dt > 0.0 && dt <= 0.1)) throw ValidationError("dt must lie in (0, 0.1]");
  if (!(t_final >= 0.0 && t_final <= 100.0)) throw ValidationError("t_final must lie in [0, 100]");
  if (samples < 1) throw ValidationError("samples must be positive");
  if (!(c_impl > 0.0 && std::isfinite(c_impl))) throw ValidationError("c_impl must be positive");
  if (workers < 1 || workers > 256) throw ValidationError("workers must lie in [1, 256]");
  if (command == "telescope" && J < 1) throw ValidationError("telescope needs J >= 1");
  if (command == "bitree-audit" && J < 1) throw ValidationError("bitree-audit needs J >= 1");
  if (command == "qi-check") {
    if (N > 8 || J > 3) throw ValidationError("qi-check is limited to N <= 8 and J <= 3");
    if (samples < 100) throw ValidationError("qi-check needs at least 100 samples");
  }
  if ((command == "convergence" || command == "weight-sweep") && N < 2) {
    throw ValidationError(command + " needs N >= 2");
  }
}

json RunConfig::to_json() const {
  return {{"command", command}, {"s", s},         {"eps", eps},         {"N", N},
          {"M", effective_M()}, {"J", J},         {"dt", dt},           {"t_final", t_final},
          {"seed", seed},       {"samples", samples}, {"c_impl", c_impl}};
}

std::string RunConfig::hash() const { return git_blob_sha1(to_json().dump()).substr(0, 16); }

int RunConfig::effective_M() const {
  if (M >= 0) return M;
  if (command == "qi-check" || command == "convergence") return 2 * N;
  return N;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_setting(RunConfig& cfg, const std::string& key_in, const std::string& value) {
  std::string key = key_in;
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "command") cfg.command = value;
  else if (key == "s") cfg.s = parse_as<double>(key, value);
  else if (key == "eps") cfg.eps = parse_as<double>(key, value);
  else if (key == "N") cfg.N = parse_as<int>(key, value);
  else if (key == "M") cfg.M = parse_as<int>(key, value);
  else if (key == "J") cfg.J = parse_as<int>(key, value);
  else if (key == "dt") cfg.dt = parse_as<double>(key, value);
  else if (key == "t-final") cfg.t_final = parse_as<double>(key, value);
  else if (key == "seed") cfg.seed = parse_as<std::uint64_t>(key, value);
  else if (key == "samples") cfg.samples = parse_as<std::size_t>(key, value);
  else if (key == "c-impl") cfg.c_impl = parse_as<double>(key, value);
  else if (key == "out") cfg.out = value;
  else if (key == "workers") cfg.workers = parse_as<int>(key, value);
  else throw ValidationError("unknown config key '" + key_in + "'");
}

std::filesystem::path run(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto dir = output_root(cfg) / (cfg.command + "-" + cfg.hash());
  const auto started = std::chrono::steady_clock::now();
  json manifest{{"command", cfg.command},
                {"config", cfg.to_json()},
                {"config_hash", cfg.hash()},
                {"workers", cfg.workers},
                {"status", "running"},
                {"started_unix", std::chrono::duration_cast<std::chrono::seconds>(
                                     std::chrono::system_clock::now().time_since_epoch())
                                     .count()}};
  write_text_file(dir / "manifest.json", json_text(manifest));

  Outputs outputs;
  try {
    if (cfg.command == "simulate") outputs = run_simulate(cfg, log);
    else if (cfg.command == "energy-drift") outputs = run_energy_drift(cfg, log);
    else if (cfg.command == "bitree-audit") outputs = run_bitree_audit(cfg, log);
    else if (cfg.command == "telescope") outputs = run_telescope(cfg, log);
    else if (cfg.command == "qi-check") outputs = run_qi_check(cfg, log);
    else if (cfg.command == "convergence") outputs = run_convergence(cfg, log);
    else outputs = run_weight_sweep(cfg, log);
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    manifest["exit_code"] = exit_code_for(e);
    write_text_file(dir / "manifest.json", json_text(manifest));
    throw;
  }

  json hashes = json::object();
  for (const auto& [name, content] : outputs) {
    write_text_file(dir / name, content);
    hashes[name] = git_blob_sha1(content);
  }
  manifest["outputs"] = hashes;
  manifest["status"] = "ok";
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_text_file(dir / "manifest.json", json_text(manifest));
  log << "wrote " << dir.string() << "\n";
  return dir;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 1;
  if (dynamic_cast<const IoError*>(&e)) return 3;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return 3;
  return 2;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Experiments for the truncated fourth-order NLS and its normal form expansion", "fourns"};
  std::string command, config_path;
  RunConfig flags;
  app.add_option("command", command, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(std::vector<std::string>(std::begin(kCommands), std::end(kCommands))));
  app.add_option("--config", config_path, "Flat key = value config file; flags override it");
  auto* o_s = app.add_option("--s", flags.s, "Regularity of the Gaussian measure");
  auto* o_eps = app.add_option("--eps", flags.eps, "sigma = s - 1/2 - eps");
  auto* o_N = app.add_option("--N", flags.N, "Truncation cutoff");
  auto* o_M = app.add_option("--M", flags.M, "Ambient mode cap");
  auto* o_J = app.add_option("--J", flags.J, "Normal form depth / bi-tree generation");
  auto* o_dt = app.add_option("--dt", flags.dt, "Time step");
  auto* o_t = app.add_option("--t-final", flags.t_final, "Final time");
  auto* o_seed = app.add_option("--seed", flags.seed, "Random seed");
  auto* o_samples = app.add_option("--samples", flags.samples, "Number of random samples");
  auto* o_c = app.add_option("--c-impl", flags.c_impl, "Region constant");
  auto* o_out = app.add_option("--out", flags.out, "Output root (default $FOURNS_OUT or ./runs)");
  auto* o_workers = app.add_option("--workers", flags.workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      for (const auto& [k, v] : parse_config_text(read_text_file(config_path))) apply_setting(cfg, k, v);
    }
    cfg.command = command;
    if (o_s->count()) cfg.s = flags.s;
    if (o_eps->count()) cfg.eps = flags.eps;
    if (o_N->count()) cfg.N = flags.N;
    if (o_M->count()) cfg.M = flags.M;
    if (o_J->count()) cfg.J = flags.J;
    if (o_dt->count()) cfg.dt = flags.dt;
    if (o_t->count()) cfg.t_final = flags.t_final;
    if (o_seed->count()) cfg.seed = flags.seed;
    if (o_samples->count()) cfg.samples = flags.samples;
    if (o_c->count()) cfg.c_impl = flags.c_impl;
    if (o_out->count()) cfg.out = flags.out;
    if (o_workers->count()) cfg.workers = flags.workers;
    run(cfg, std::cout);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace fourns
