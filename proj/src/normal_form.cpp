#include "fourns/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <random>
#include <string>
#include <unordered_map>

#include "fourns/errors.hpp"

namespace fourns {

namespace {

constexpr std::uint16_t kPad = 0xFFFF;

PhaseInt quartic_int(int n) {
  const PhaseInt x = n;
  return x * x * x * x;
}

double quartic(int n) { return static_cast<double>(quartic_int(n)); }

using Key = std::array<std::uint16_t, CompiledForm::kMaxDegree>;

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto c : k) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// Accumulates (coef, monomial) pairs, merging equal terminal multisets.
class FormBuilder {
 public:
  explicit FormBuilder(int degree) { form_.degree = degree; }

  void add(const Key& key, cplx coef, double psi) {
    ++form_.raw_count;
    auto [it, fresh] = index_.try_emplace(key, form_.terms.size());
    if (fresh) {
      CompiledForm::Term t;
      t.coef = coef;
      t.psi = psi;
      t.factor = key;
      form_.terms.push_back(t);
    } else {
      form_.terms[it->second].coef += coef;
    }
  }

  CompiledForm finish() {
    // Drop monomials whose contributions cancelled exactly.
    std::erase_if(form_.terms, [](const CompiledForm::Term& t) { return t.coef == cplx{}; });
    return std::move(form_);
  }

 private:
  CompiledForm form_;
  std::unordered_map<Key, std::size_t, KeyHash> index_;
};

void check_modes(std::span<const cplx> v, int N) {
  if (v.size() != static_cast<std::size_t>(2 * N + 1)) {
    throw ValidationError("form input must hold 2N+1 = " + std::to_string(2 * N + 1) + " modes, got " +
                          std::to_string(v.size()));
  }
}

}  // namespace

const char* to_string(FormKind kind) {
  switch (kind) {
    case FormKind::base: return "base";
    case FormKind::boundary_N0: return "boundary_N0";
    case FormKind::resonant_R: return "resonant_R";
    case FormKind::region_N1: return "region_N1";
    case FormKind::remainder_N2: return "remainder_N2";
  }
  return "unknown";
}

void FormParams::validate() const {
  if (!std::isfinite(s)) throw ValidationError("s must be finite");
  if (N < 0 || N > 1000) throw ValidationError("form cutoff N must lie in [0, 1000]");
  if (!(c_impl > 0.0) || !std::isfinite(c_impl)) throw ValidationError("c_impl must be positive");
  if (max_tree_generation < 1 || max_tree_generation > kDefaultMaxGenerations + 1) {
    throw ValidationError("max_tree_generation must lie in [1, " + std::to_string(kDefaultMaxGenerations + 1) + "]");
  }
}

NormalFormEngine::NormalFormEngine(FormParams params) : params_(params) {
  params_.validate();
  cache_.resize(static_cast<std::size_t>(params_.max_tree_generation + 1));
}

double NormalFormEngine::base(std::span<const cplx> v, double t) const {
  const int N = params_.N;
  check_modes(v, N);
  auto at = [&](int n) { return v[static_cast<std::size_t>(n + N)]; };
  cplx total{};
  for (int n = -N; n <= N; ++n) {
    cplx inner{};
    for (int n1 = -N; n1 <= N; ++n1) {
      if (n1 == n) continue;
      for (int n2 = -N; n2 <= N; ++n2) {
        const int n3 = n - n1 + n2;
        if (n3 < -N || n3 > N || n3 == n) continue;
        const double phi = quartic(n1) - quartic(n2) + quartic(n3) - quartic(n);
        inner += std::polar(1.0, -phi * t) * at(n1) * std::conj(at(n2)) * at(n3);
      }
    }
    total += bracket_pow(n, 2.0 * params_.s) * inner * std::conj(at(n));
  }
  // -Re(i z) = Im(z)
  return total.imag();
}

NormalFormEngine::Generation NormalFormEngine::compile(int g) const {
  const int N = params_.N;
  const double c = params_.c_impl;
  const PhaseSumMode mode = params_.mode;
  const int degree = 2 * g + 2;
  FormBuilder n1(degree), n2(degree), n0(degree);

  std::vector<double> root_weight(static_cast<std::size_t>(2 * N + 1));
  for (int n = -N; n <= N; ++n) root_weight[static_cast<std::size_t>(n + N)] = bracket_pow(n, 2.0 * params_.s);

  std::vector<PhaseInt> phi(static_cast<std::size_t>(g + 1)), psi(phi.size()), tphi(phi.size());
  std::vector<int> sigma(phi.size());
  auto cumulative = [&](int j) { return mode == PhaseSumMode::signed_sum ? psi[static_cast<std::size_t>(j)] : tphi[static_cast<std::size_t>(j)]; };
  // A_j with threshold keyed by j: |cum_{j+1}| <= c (2j+4)^3 max(|cum_j|, |phi_1|).
  auto in_A = [&](int j) {
    const double next = std::abs(static_cast<double>(cumulative(j + 1)));
    const double thr = region_threshold(j, c);
    return next <= thr * std::abs(static_cast<double>(cumulative(j))) ||
           next <= thr * std::abs(static_cast<double>(phi[1]));
  };

  for (const auto& tree : enumerate_chronicles(g, params_.max_tree_generation)) {
    const auto events = tree.chronicle();
    for (int j = 1; j <= g; ++j) sigma[static_cast<std::size_t>(j)] = tree.generation_sign(j);
    const auto terminals = tree.terminals();
    for (int nr = -N; nr <= N; ++nr) {
      bool last_in_A = false;
      auto enter = [&](int j, std::span<const int> f) {
        const auto& a = tree.node(events[static_cast<std::size_t>(j - 1)]);
        const int na = f[static_cast<std::size_t>(events[static_cast<std::size_t>(j - 1)])];
        const auto ch = a.children;
        const auto ju = static_cast<std::size_t>(j);
        phi[ju] = quartic_int(f[static_cast<std::size_t>(ch[0])]) - quartic_int(f[static_cast<std::size_t>(ch[1])]) +
                  quartic_int(f[static_cast<std::size_t>(ch[2])]) - quartic_int(na);
        tphi[ju] = tphi[ju - 1] + phi[ju];
        psi[ju] = psi[ju - 1] + sigma[ju] * phi[ju];
        if (j >= 2) {
          const bool a_prev = in_A(j - 1);
          if (j <= g - 1 && a_prev) return false;
          if (j == g) last_in_A = a_prev;
        }
        return true;
      };
      auto leaf = [&](std::span<const int> f) {
        cplx w = root_weight[static_cast<std::size_t>(nr + N)];
        for (int k = 1; k < g; ++k) {
          const auto p = psi[static_cast<std::size_t>(k)];
          if (p == 0) throw NumericalGuardError("zero phase denominator on a retained assignment at generation " +
                                                std::to_string(k));
          w *= -static_cast<double>(sigma[static_cast<std::size_t>(k)]) / static_cast<double>(p);
        }
        Key key;
        key.fill(kPad);
        for (std::size_t i = 0; i < terminals.size(); ++i) {
          const int id = terminals[i];
          key[i] = static_cast<std::uint16_t>(2 * (f[static_cast<std::size_t>(id)] + N) +
                                              (tree.node(id).conjugated ? 1 : 0));
        }
        std::sort(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(terminals.size()));
        const double sg = sigma[static_cast<std::size_t>(g)];
        const auto pg = psi[static_cast<std::size_t>(g)];
        const cplx coef = w * cplx(0.0, -sg);
        const bool region = g >= 2 && last_in_A;
        (region ? n1 : n2).add(key, coef, static_cast<double>(pg));
        if (!region) {
          if (pg == 0) throw NumericalGuardError("zero phase denominator on a retained assignment at generation " +
                                                 std::to_string(g));
          for (int k = 2; k <= g; ++k) {
            const double lhs = std::abs(static_cast<double>(cumulative(k)));
            const double rhs = region_threshold(k - 1, c) *
                               std::max(std::abs(static_cast<double>(cumulative(k - 1))),
                                        std::abs(static_cast<double>(phi[1])));
            if (!(lhs > rhs)) throw NumericalGuardError("phase lower bound violated at generation " + std::to_string(k));
          }
          n0.add(key, w * (sg / static_cast<double>(pg)), static_cast<double>(pg));
        }
      };
      walk_assignments(tree, nr, N, enter, leaf);
    }
  }
  Generation out;
  out.n1 = n1.finish();
  out.n2 = n2.finish();
  out.n0_next = n0.finish();
  return out;
}

const NormalFormEngine::Generation& NormalFormEngine::generation(int g) {
  if (g < 1 || g > params_.max_tree_generation) {
    throw ValidationError("bi-tree generation " + std::to_string(g) + " exceeds the cap " +
                          std::to_string(params_.max_tree_generation));
  }
  std::lock_guard lock(mutex_);
  auto& slot = cache_[static_cast<std::size_t>(g)];
  if (!slot) slot = std::make_unique<Generation>(compile(g));
  return *slot;
}

const CompiledForm& NormalFormEngine::form_for(FormKind kind, int j, bool& resonant) {
  resonant = false;
  switch (kind) {
    case FormKind::base:
      if (j != 1) throw ValidationError("base form exists only for j = 1");
      return generation(1).n2;
    case FormKind::boundary_N0:
      if (j < 2) throw ValidationError("boundary_N0 requires j >= 2");
      return generation(j - 1).n0_next;
    case FormKind::resonant_R:
      if (j < 2) throw ValidationError("resonant_R requires j >= 2");
      resonant = true;
      return generation(j - 1).n0_next;
    case FormKind::region_N1:
      if (j < 2) throw ValidationError("region_N1 requires j >= 2");
      return generation(j).n1;
    case FormKind::remainder_N2:
      if (j < 1) throw ValidationError("remainder_N2 requires j >= 1");
      return generation(j).n2;
  }
  throw ValidationError("unknown form kind");
}

void NormalFormEngine::fill_values(std::span<const cplx> v, double t, std::vector<cplx>& out) const {
  const int N = params_.N;
  out.resize(static_cast<std::size_t>(2 * (2 * N + 1)));
  for (int n = -N; n <= N; ++n) {
    const auto k = static_cast<std::size_t>(n + N);
    const cplx u = t == 0.0 ? v[k] : std::polar(1.0, -quartic(n) * t) * v[k];
    out[2 * k] = u;
    out[2 * k + 1] = std::conj(u);
  }
}

double NormalFormEngine::evaluate(FormKind kind, int j, std::span<const cplx> v, double t) {
  check_modes(v, params_.N);
  if (kind == FormKind::base) {
    if (j != 1) throw ValidationError("base form exists only for j = 1");
    return base(v, t);
  }
  bool resonant = false;
  const auto& form = form_for(kind, j, resonant);
  std::vector<cplx> val;
  fill_values(v, t, val);
  const int d = form.degree;
  double total = 0.0;
  for (const auto& term : form.terms) {
    cplx prod = term.coef;
    for (int i = 0; i < d; ++i) prod *= val[term.factor[static_cast<std::size_t>(i)]];
    if (resonant) {
      double ins = 0.0;
      for (int i = 0; i < d; ++i) {
        const auto code = term.factor[static_cast<std::size_t>(i)];
        ins += ((code & 1U) ? -1.0 : 1.0) * std::norm(val[code]);
      }
      total -= (prod * cplx(0.0, ins)).real();
    } else {
      total += prod.real();
    }
  }
  return total;
}

double NormalFormEngine::boundary_derivative(int j, std::span<const cplx> v, double t, std::span<const cplx> dvdt) {
  const int N = params_.N;
  check_modes(v, N);
  check_modes(dvdt, N);
  bool resonant = false;
  const auto& form = form_for(FormKind::boundary_N0, j, resonant);
  std::vector<cplx> val, dval;
  fill_values(v, t, val);
  fill_values(dvdt, t, dval);
  const int d = form.degree;
  std::array<cplx, CompiledForm::kMaxDegree + 1> prefix{}, suffix{};
  double total = 0.0;
  for (const auto& term : form.terms) {
    prefix[0] = 1.0;
    for (int i = 0; i < d; ++i) prefix[static_cast<std::size_t>(i + 1)] = prefix[static_cast<std::size_t>(i)] * val[term.factor[static_cast<std::size_t>(i)]];
    suffix[static_cast<std::size_t>(d)] = 1.0;
    for (int i = d - 1; i >= 0; --i) suffix[static_cast<std::size_t>(i)] = suffix[static_cast<std::size_t>(i + 1)] * val[term.factor[static_cast<std::size_t>(i)]];
    cplx acc = cplx(0.0, -term.psi) * prefix[static_cast<std::size_t>(d)];
    for (int i = 0; i < d; ++i) {
      acc += prefix[static_cast<std::size_t>(i)] * dval[term.factor[static_cast<std::size_t>(i)]] * suffix[static_cast<std::size_t>(i + 1)];
    }
    total += (term.coef * acc).real();
  }
  return total;
}

std::size_t NormalFormEngine::term_count(FormKind kind, int j) {
  bool resonant = false;
  return form_for(kind, j, resonant).terms.size();
}

std::uint64_t NormalFormEngine::raw_term_count(FormKind kind, int j) {
  bool resonant = false;
  return form_for(kind, j, resonant).raw_count;
}

NormalFormEngine& shared_engine(const FormParams& params) {
  params.validate();
  using Key = std::tuple<double, int, double, int, int>;
  static std::mutex mutex;
  static std::map<Key, std::unique_ptr<NormalFormEngine>> engines;
  const Key key{params.s, params.N, params.c_impl, static_cast<int>(params.mode), params.max_tree_generation};
  std::lock_guard lock(mutex);
  auto& slot = engines[key];
  if (!slot) slot = std::make_unique<NormalFormEngine>(params);
  return *slot;
}

std::vector<cplx> interaction_velocity(std::span<const cplx> v, double t, int N) {
  check_modes(v, N);
  std::vector<cplx> u(v.size()), out(v.size());
  for (int n = -N; n <= N; ++n) {
    const auto k = static_cast<std::size_t>(n + N);
    u[k] = std::polar(1.0, -quartic(n) * t) * v[k];
  }
  CubicNonlinearity(N, true).apply(u, out);
  for (int n = -N; n <= N; ++n) {
    const auto k = static_cast<std::size_t>(n + N);
    out[k] = cplx(0.0, -1.0) * std::polar(1.0, quartic(n) * t) * out[k];
  }
  return out;
}

std::vector<cplx> to_interaction(const FourierState& u, double t, int N) {
  auto v = u.low_modes(N);
  if (t != 0.0) {
    for (int n = -N; n <= N; ++n) v[static_cast<std::size_t>(n + N)] *= std::polar(1.0, quartic(n) * t);
  }
  return v;
}

double eval_N1_base(const FourierState& v, double t, double s, int N) {
  if (N > v.cutoff()) throw ValidationError("eval_N1_base requires N <= M");
  return shared_engine({.s = s, .N = N}).base(v.low_modes(N), t);
}

MultilinearValue eval_form(const FourierState& v, double t, int j, FormKind kind, double s, int N, double c_impl) {
  if (N > v.cutoff()) throw ValidationError("eval_form requires N <= M");
  const double value = shared_engine({.s = s, .N = N, .c_impl = c_impl}).evaluate(kind, j, v.low_modes(N), t);
  if (!std::isfinite(value)) throw NumericalGuardError("non-finite form value");
  return {value, j, kind};
}

double telescoping_residual(NormalFormEngine& engine, std::span<const cplx> v, double t, int J) {
  if (J < 1 || J > kDefaultMaxGenerations) {
    throw ValidationError("telescoping depth J must lie in [1, " + std::to_string(kDefaultMaxGenerations) + "]");
  }
  const int N = engine.params().N;
  const double lhs = engine.base(v, t);
  const auto dvdt = interaction_velocity(v, t, N);
  double rhs = 0.0;
  for (int j = 2; j <= J + 1; ++j) {
    rhs += engine.boundary_derivative(j, v, t, dvdt);
    rhs += engine.evaluate(FormKind::region_N1, j, v, t);
    rhs += engine.evaluate(FormKind::resonant_R, j, v, t);
  }
  rhs += engine.evaluate(FormKind::remainder_N2, J + 1, v, t);
  return std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
}

double telescoping_residual(const FourierState& v, double t, int J, double s, int N, double c_impl) {
  if (N > v.cutoff()) throw ValidationError("telescoping_residual requires N <= M");
  return telescoping_residual(shared_engine({.s = s, .N = N, .c_impl = c_impl}), v.low_modes(N), t, J);
}

EnergyReport modified_energy(NormalFormEngine& engine, const FourierState& u, double t, int J) {
  if (J < 0 || J > kDefaultMaxGenerations) {
    throw ValidationError("J must lie in [0, " + std::to_string(kDefaultMaxGenerations) + "]");
  }
  const int N = engine.params().N;
  const auto v = to_interaction(u, t, N);
  EnergyReport r;
  for (int n = -N; n <= N; ++n) {
    r.plain_energy += 0.5 * bracket_pow(n, 2.0 * engine.params().s) * std::norm(u[n]);
  }
  for (int j = 2; j <= J + 1; ++j) {
    const double c = engine.evaluate(FormKind::boundary_N0, j, v, t);
    r.corrections.push_back(c);
    r.weight_logF += c;
  }
  r.modified_energy = r.plain_energy - r.weight_logF;
  return r;
}

EnergyReport modified_energy(const FourierState& u, double t, int J, double s, int N, double c_impl) {
  return modified_energy(shared_engine({.s = s, .N = N, .c_impl = c_impl}), u, t, J);
}

double modified_energy_rate(NormalFormEngine& engine, const FourierState& u, int J) {
  const auto v = u.low_modes(engine.params().N);
  if (J == 0) return engine.base(v, 0.0);
  double rate = 0.0;
  for (int j = 2; j <= J + 1; ++j) {
    rate += engine.evaluate(FormKind::region_N1, j, v, 0.0);
    rate += engine.evaluate(FormKind::resonant_R, j, v, 0.0);
  }
  return rate + engine.evaluate(FormKind::remainder_N2, J + 1, v, 0.0);
}

WeightResult weight_F(NormalFormEngine& engine, const FourierState& u, int J) {
  const auto report = modified_energy(engine, u, 0.0, J);
  WeightResult w;
  w.log_weight = report.weight_logF;
  if (!std::isfinite(w.log_weight)) throw NumericalGuardError("non-finite log-weight");
  constexpr double kMaxLog = 700.0;
  if (w.log_weight > kMaxLog) {
    w.overflow = true;
    w.weight = std::numeric_limits<double>::infinity();
  } else {
    w.weight = std::exp(w.log_weight);
  }
  return w;
}

WeightResult weight_F(const FourierState& u, int J, double s, int N, double c_impl) {
  return weight_F(shared_engine({.s = s, .N = N, .c_impl = c_impl}), u, J);
}

std::vector<DriftRow> energy_drift(const FourierState& u0, const FlowConfig& cfg, std::span<const int> J_list,
                                   double s, double c_impl) {
  cfg.validate();
  if (cfg.sample_times.size() < 3) throw ValidationError("energy_drift needs at least three sample times");
  const auto traj = flow_truncated(u0, cfg);
  NormalFormEngine engine({.s = s, .N = cfg.N, .c_impl = c_impl});
  const auto& ts = cfg.sample_times;
  std::vector<DriftRow> rows;
  for (int J : J_list) {
    std::vector<double> E, rate;
    for (const auto& u : traj) {
      E.push_back(modified_energy(engine, u, 0.0, J).modified_energy);
      rate.push_back(modified_energy_rate(engine, u, J));
    }
    DriftRow row;
    row.J = J;
    for (double r : rate) row.sup_rate = std::max(row.sup_rate, std::abs(r));
    for (std::size_t i = 1; i + 1 < E.size(); ++i) {
      const double fd = (E[i + 1] - E[i - 1]) / (ts[i + 1] - ts[i - 1]);
      row.sup_finite_difference = std::max(row.sup_finite_difference, std::abs(fd));
      row.max_mismatch = std::max(row.max_mismatch, std::abs(fd - rate[i]));
    }
    rows.push_back(row);
  }
  return rows;
}

FormNormEstimate estimate_form_norm(int j, FormKind kind, double s, double eps, int N, int trials,
                                    std::uint64_t seed, double c_impl) {
  if (trials <= 0) throw ValidationError("estimate_form_norm requires a positive number of trials");
  const auto idx = SobolevIndex::make(s, eps);
  NormalFormEngine engine({.s = s, .N = N, .c_impl = c_impl});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto W = static_cast<std::size_t>(2 * N + 1);

  auto normalize = [&](std::vector<cplx>& v) {
    const double nrm = sobolev_norm(v, idx.sigma);
    if (nrm > 0.0) {
      for (auto& x : v) x /= nrm;
    }
  };
  auto value = [&](const std::vector<cplx>& v) {
    return kind == FormKind::base ? std::abs(engine.base(v, 0.0)) : std::abs(engine.evaluate(kind, j, v, 0.0));
  };

  std::vector<cplx> best(W), trial(W);
  double best_val = -1.0;
  for (int k = 0; k < trials; ++k) {
    for (auto& x : trial) x = cplx(normal(rng), normal(rng));
    normalize(trial);
    const double f = value(trial);
    if (f > best_val) {
      best_val = f;
      best = trial;
    }
  }
  // Local refinement of the best candidate by shrinking random perturbations.
  double step = 0.5;
  for (int k = 0; k < trials; ++k) {
    for (std::size_t i = 0; i < W; ++i) trial[i] = best[i] + step * cplx(normal(rng), normal(rng)) / bracket_pow(static_cast<int>(i) - N, idx.sigma);
    normalize(trial);
    const double f = value(trial);
    if (f > best_val) {
      best_val = f;
      best = trial;
    } else {
      step = std::max(step * 0.97, 1e-4);
    }
  }

  FormNormEstimate est;
  est.sup = best_val;
  est.trials = trials;
  for (int k = 1; k <= j - 1; ++k) est.decay_factor *= std::pow(2.0 * k + 2.0, -1.0 / 3.0);
  return est;
}

}  // namespace fourns
