// Acceptance battery: one PASS/FAIL line per criterion. With no arguments
// every criterion runs; otherwise only the listed numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fourns/bitree.hpp"
#include "fourns/dynamics.hpp"
#include "fourns/measure.hpp"
#include "fourns/normal_form.hpp"
#include "fourns/spectral.hpp"
#include "oracles.hpp"

using namespace fourns;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome phase_algebra() {
  long checked = 0, bad = 0;
  for (int n1 = -32; n1 <= 32; ++n1)
    for (int n2 = -32; n2 <= 32; ++n2)
      for (int n3 = -32; n3 <= 32; ++n3) {
        const int n = n1 - n2 + n3;
        if (std::abs(n) > 32) continue;
        const auto q = PhaseQuadruple::make(n1, n2, n3, n);
        ++checked;
        if (phase_phi(q) != oracle::phi_factored(n1, n2, n3) || phase_mu(q) != oracle::mu_factored(n1, n2, n3)) ++bad;
      }
  return {bad == 0, fmt("%ld quadruples, %ld mismatches", checked, bad)};
}

Outcome bitree_cardinalities() {
  const std::uint64_t expected[] = {1, 4, 24, 192, 1920};
  std::string detail;
  bool ok = true;
  for (int J = 1; J <= 5; ++J) {
    const auto trees = enumerate_chronicles(J);
    std::set<std::vector<int>> distinct;
    bool valid = true;
    for (const auto& t : trees) {
      distinct.insert({t.chronicle().begin(), t.chronicle().end()});
      valid = valid && t.valid();
    }
    const bool good = trees.size() == expected[J - 1] && distinct.size() == trees.size() && valid &&
                      chronicle_count(J) == expected[J - 1];
    ok = ok && good;
    detail += fmt("%sJ=%d:%zu", J > 1 ? " " : "", J, trees.size());
  }
  return {ok, detail};
}

Outcome assignment_oracle() {
  const std::pair<int, int> cases[] = {{1, 1}, {1, 2}, {2, 1}};
  std::string detail;
  bool ok = true;
  for (auto [J, N] : cases) {
    std::size_t total = 0;
    for (const auto& tree : enumerate_chronicles(J)) {
      for (int nr = -N; nr <= N; ++nr) {
        std::set<std::vector<int>> got;
        for (const auto& a : enumerate_assignments(tree, nr, N)) got.insert(a.freq);
        const auto want = oracle::brute_force_assignments(tree, nr, N);
        ok = ok && got == want;
        total += want.size();
      }
    }
    detail += fmt("%s(J=%d,N=%d):%zu", detail.empty() ? "" : " ", J, N, total);
  }
  return {ok, detail};
}

Outcome nonlinearity_oracle() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  int count = 0;
  for (int N = 1; N <= 6; ++N) {
    CubicNonlinearity fft(N, true, CubicNonlinearity::Backend::fft);
    const int states = N <= 2 ? 4 : 3;  // 20 states in total
    for (int k = 0; k < states; ++k, ++count) {
      const auto u = oracle::random_state(rng, N, 0.35);
      std::vector<cplx> out(u.size());
      fft.apply(u, out);
      worst = std::max(worst, oracle::rel_diff(out, oracle::cubic_direct(u, N, true)));
    }
  }
  return {worst <= 1e-12 && count == 20, fmt("%d states, max relative error %.3e", count, worst)};
}

Outcome single_mode() {
  struct Case { int N, M, n; cplx c; };
  const Case cases[] = {{4, 4, 2, {0.7, 0.2}}, {8, 8, -3, {1.3, 0.0}}, {16, 16, 5, {0.0, 0.5}}, {2, 6, 1, {0.9, -0.4}},
                        {3, 3, 0, {1.1, 0.3}}};
  double worst = 0.0;
  for (const auto& cs : cases) {
    FlowConfig cfg;
    cfg.N = cs.N;
    cfg.M = cs.M;
    cfg.dt = 1e-3;
    cfg.t_final = 1.0;
    const auto traj = flow_truncated(FourierState::single_mode(cs.M, cs.n, cs.c), cfg);
    const double omega = std::pow(cs.n, 4) - std::norm(cs.c);
    const auto exact = FourierState::single_mode(cs.M, cs.n, cs.c * std::exp(cplx(0.0, -omega)));
    worst = std::max(worst, oracle::rel_diff(traj.back().modes(), exact.modes()));
  }
  return {worst <= 1e-8, fmt("max relative error %.3e at t = 1", worst)};
}

Outcome conservation() {
  GaussianSampler sampler(0.35, 16, 606);
  double mass_drift = 0.0, ham_drift = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto u0 = sampler.sample(static_cast<std::uint64_t>(k));
    FlowConfig cfg;
    cfg.N = 16;
    cfg.M = 16;
    // Resolves the fastest phase, max |phi| dt ~ 0.65.
    cfg.dt = 5e-6;
    cfg.t_final = 1.0;
    for (int i = 0; i <= 20; ++i) cfg.sample_times.push_back(i / 20.0);
    const auto traj = flow_truncated(u0, cfg);
    const double m0 = mass(u0), h0 = hamiltonian(u0, 16);
    for (const auto& u : traj) {
      mass_drift = std::max(mass_drift, std::abs(mass(u) - m0) / m0);
      ham_drift = std::max(ham_drift, std::abs(hamiltonian(u, 16) - h0) / std::abs(h0));
    }
  }
  return {mass_drift <= 1e-8 && ham_drift <= 1e-6,
          fmt("N=16, dt=5e-6: relative mass drift %.3e, Hamiltonian drift %.3e", mass_drift, ham_drift)};
}

double traj_diff(const Trajectory& a, const Trajectory& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, oracle::rel_diff(a[i].modes(), b[i].modes()));
  return worst;
}

Outcome gauge_suite() {
  GaussianSampler sampler(0.35, 16, 707);
  double unitary = 0.0, g_equiv = 0.0, j_consistency = 0.0;
  for (int k = 0; k < 3; ++k) {
    const auto u = sampler.sample(static_cast<std::uint64_t>(k));
    const auto g = GaugeData::from_initial(u);
    for (double t : {0.0, 0.37, 1.0, 12.5}) {
      const auto ut = u.with_time(t);
      const auto fwd = gauge_J(ut, g, GaugeDirection::forward);
      const auto back = gauge_J(fwd, g, GaugeDirection::inverse);
      for (int n = -16; n <= 16; ++n) unitary = std::max(unitary, std::abs(std::abs(fwd[n]) - std::abs(ut[n])));
      unitary = std::max(unitary, oracle::rel_diff(back.modes(), ut.modes()));
    }

    FlowConfig cfg;
    cfg.N = 8;
    cfg.M = 8;
    cfg.dt = 1e-5;
    cfg.t_final = 1.0;
    cfg.sample_times = {0.0, 0.25, 0.5, 0.75, 1.0};
    const auto u8 = u.resized(8);
    auto plain_cfg = cfg;
    plain_cfg.renormalized = false;
    g_equiv = std::max(g_equiv, traj_diff(gauge_G(flow_truncated(u8, plain_cfg)), flow_truncated(u8, cfg)));

    cfg.M = 16;
    auto gauged_cfg = cfg;
    gauged_cfg.scheme = Scheme::gauged_rk4;
    const auto ungauged = flow_truncated(u, cfg);
    const auto gauged = flow_truncated(u, gauged_cfg);
    Trajectory mapped;
    for (const auto& s : ungauged) mapped.push_back(gauge_J(s, g, GaugeDirection::forward));
    j_consistency = std::max(j_consistency, traj_diff(gauged, mapped));
  }
  return {unitary <= 1e-14 && g_equiv <= 1e-7 && j_consistency <= 1e-6,
          fmt("J unitarity %.1e, G-equivalence %.3e, gauged vs ungauged %.3e", unitary, g_equiv, j_consistency)};
}

Outcome telescoping() {
  double worst = 0.0;
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> time(0.0, 1.0);
  int evaluated = 0;
  for (double s : {0.35, 0.5}) {
    for (int N : {1, 2}) {
      NormalFormEngine engine({.s = s, .N = N});
      GaussianSampler sampler(s, N, 808 + static_cast<std::uint64_t>(N));
      for (int J : {1, 2, 3}) {
        for (int k = 0; k < 50; ++k, ++evaluated) {
          const auto v = sampler.sample(static_cast<std::uint64_t>(k)).low_modes(N);
          worst = std::max(worst, telescoping_residual(engine, v, time(rng), J));
        }
      }
    }
  }
  return {worst <= 1e-9, fmt("%d evaluations, max relative residual %.3e", evaluated, worst)};
}

Outcome drift_reduction() {
  GaussianSampler sampler(0.35, 2, 909);
  int reduced = 0;
  double mismatch_coarse = 0.0, mismatch_fine = 0.0;
  const int J_list[] = {0, 1, 2};
  for (int k = 0; k < 10; ++k) {
    const auto u0 = sampler.sample(static_cast<std::uint64_t>(k));
    std::map<int, std::vector<DriftRow>> by_h;
    for (int intervals : {50, 100}) {
      FlowConfig cfg;
      cfg.N = 2;
      cfg.M = 2;
      cfg.dt = 1e-3;
      cfg.t_final = 1.0;
      for (int i = 0; i <= intervals; ++i) cfg.sample_times.push_back(static_cast<double>(i) / intervals);
      by_h[intervals] = energy_drift(u0, cfg, J_list, 0.35);
    }
    const auto& fine = by_h[100];
    if (fine[2].sup_rate < fine[0].sup_rate) ++reduced;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      mismatch_coarse += by_h[50][i].max_mismatch;
      mismatch_fine += fine[i].max_mismatch;
    }
  }
  const double order = std::log2(mismatch_coarse / mismatch_fine);
  return {reduced >= 9 && order >= 1.8 && order <= 2.2,
          fmt("J=2 below plain drift in %d/10; finite-difference mismatch order %.2f", reduced, order)};
}

Outcome change_of_variable() {
  const double s = 0.35;
  const int N = 2, M = 4;
  const auto sigma = SobolevIndex::make(s).sigma;
  GaussianSampler sampler(s, M, 1010);
  SobolevBall ball{sigma, std::sqrt(expected_sobolev_square(s, sigma, M)), std::nullopt};
  const SetPredicate A = [&](const FourierState& u) { return ball.contains(u); };
  McOptions opt{.J = 2, .s = s, .N = N, .n_samples = 100000};
  const auto r0 = change_of_variable_check(A, sampler, 0.0, opt);
  const auto r5 = change_of_variable_check(A, sampler, 0.5, opt);
  const bool exact0 = r0.lhs.mean == r0.rhs.mean && r0.lhs.std_err == r0.rhs.std_err;
  return {exact0 && r5.sigmas <= 3.0 && !r5.lhs.flagged && !r5.rhs.flagged,
          fmt("t=0: %.6f vs %.6f (identical %s); t=0.5: %.6f +- %.6f vs %.6f +- %.6f, %.2f sigma", r0.lhs.mean,
              r0.rhs.mean, exact0 ? "yes" : "no", r5.lhs.mean, r5.lhs.std_err, r5.rhs.mean, r5.rhs.std_err,
              r5.sigmas)};
}

Outcome liouville() {
  GaussianSampler sampler(0.35, 1, 1111);
  double worst = 0.0;
  bool conditioned = true;
  for (int k = 0; k < 5; ++k) {
    const auto u0 = sampler.sample(static_cast<std::uint64_t>(k));
    for (double t : {0.1, 0.5}) {
      const auto r = jacobian_det(u0, t, 1);
      worst = std::max(worst, std::abs(r.det - 1.0));
      conditioned = conditioned && r.well_conditioned;
    }
  }
  return {worst <= 1e-5 && conditioned, fmt("max |det - 1| = %.3e", worst)};
}

Outcome convergence_in_N() {
  const double s = 0.35;
  const auto sigma = SobolevIndex::make(s).sigma;
  const int N_list[] = {2, 4, 8, 16};
  GaussianSampler sampler(s, 16, 1212);
  bool monotone = true;
  double final_worst = 0.0;
  std::string tail;
  for (int k = 0; k < 5; ++k) {
    // The reference cutoff 32 needs dt ~ 1/(2 * 32^4) to be resolved.
    const auto rows =
        convergence_experiment(sampler.sample(static_cast<std::uint64_t>(k)), 1.0, N_list, sigma, 2e-6);
    for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].difference < rows[i - 1].difference;
    final_worst = std::max(final_worst, rows.back().difference);
    if (k == 0) {
      for (const auto& r : rows) tail += fmt(" %d:%.2e", r.N, r.difference);
    }
  }
  return {monotone && final_worst < 1e-3,
          fmt("monotone %s, max difference at N=16 %.3e (sample 0:%s)", monotone ? "yes" : "no", final_worst,
              tail.c_str())};
}

Outcome weight_stability() {
  const double s = 0.35;
  const int N_list[] = {2, 4, 8, 16};
  GaussianSampler sampler(s, 16, 1313);
  double tail = 0.0;
  int shrinking = 0;
  for (int k = 0; k < 10; ++k) {
    const auto rows = weight_convergence_sweep(sampler.sample(static_cast<std::uint64_t>(k)), 2, s, N_list);
    const double d1 = std::abs(rows[2].weight - rows[1].weight);
    const double d2 = std::abs(rows[3].weight - rows[2].weight);
    tail = std::max(tail, d2);
    if (d2 < d1) ++shrinking;
  }
  return {tail < 1e-3, fmt("max |F_16 - F_8| = %.3e, shrinking tail in %d/10", tail, shrinking)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "phase algebra", 1.0, phase_algebra},
      {2, "bi-tree cardinalities", 10.0, bitree_cardinalities},
      {3, "assignment oracle", 30.0, assignment_oracle},
      {4, "nonlinearity oracle", 5.0, nonlinearity_oracle},
      {5, "single-mode closed form", 5.0, single_mode},
      {6, "conservation", 60.0, conservation},
      {7, "gauge suite", 60.0, gauge_suite},
      {8, "telescoping identity", 600.0, telescoping},
      {9, "drift reduction", 900.0, drift_reduction},
      {10, "change of variable", 1800.0, change_of_variable},
      {11, "Liouville", 300.0, liouville},
      {12, "convergence in N", 600.0, convergence_in_N},
      {13, "weight stability", 600.0, weight_stability},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed <= c.budget_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] %2d %-24s %s; %.2f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), elapsed, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
