#include "fourns/measure.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include "fourns/dynamics.hpp"
#include "fourns/errors.hpp"

namespace fourns {

GaussianSampler::GaussianSampler(double s, int M, std::uint64_t seed) : s_(s), M_(M), seed_(seed) {
  if (!std::isfinite(s)) throw ValidationError("sampler regularity s must be finite");
  if (M < 0 || M > kMaxFrequency) throw ValidationError("sampler cutoff M out of range");
}

FourierState GaussianSampler::sample(std::uint64_t index) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<cplx> modes(static_cast<std::size_t>(2 * M_ + 1));
  for (int n = -M_; n <= M_; ++n) {
    const double re = normal(rng);
    const double im = normal(rng);
    modes[static_cast<std::size_t>(n + M_)] = cplx(re, im) / bracket_pow(n, s_);
  }
  return FourierState(std::move(modes));
}

FourierState sample_mu_s(GaussianSampler& sampler) { return sampler.next(); }

double expected_sobolev_square(double s, double sigma, int M) {
  double total = 0.0;
  for (int n = -M; n <= M; ++n) total += bracket_pow(n, 2.0 * (sigma - s));
  return total;
}

double separation_in_sigmas(const McEstimate& a, const McEstimate& b) {
  const double diff = std::abs(a.mean - b.mean);
  if (diff == 0.0) return 0.0;
  const double se = std::hypot(a.std_err, b.std_err);
  return se > 0.0 ? diff / se : std::numeric_limits<double>::infinity();
}

bool SobolevBall::contains(const FourierState& u) const {
  if (!center) return sobolev_norm(u, sigma) <= radius;
  const int M = std::max(u.cutoff(), center->cutoff());
  return sobolev_norm(u.resized(M) - center->resized(M), sigma) <= radius;
}

void McOptions::validate(std::size_t min_samples) const {
  if (J < 0 || J > kDefaultMaxGenerations) throw ValidationError("J out of range");
  if (N < 0) throw ValidationError("N must be non-negative");
  if (n_samples < min_samples) {
    throw ValidationError("at least " + std::to_string(min_samples) + " samples are required");
  }
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(c_impl > 0.0)) throw ValidationError("c_impl must be positive");
  if (workers < 1) throw ValidationError("workers must be at least 1");
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t i = 0; i < count; ++i) pool.emplace_back(body);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

McEstimate estimate_from_logs(std::span<const double> logs) {
  McEstimate est;
  est.n_samples = logs.size();
  if (logs.size() < 2) throw ValidationError("an estimate needs at least two samples");
  double shift = -std::numeric_limits<double>::infinity();
  for (double l : logs) {
    if (std::isnan(l)) throw NumericalGuardError("NaN log-weight");
    shift = std::max(shift, l);
  }
  if (shift == -std::numeric_limits<double>::infinity()) {
    est.flagged = true;
    est.std_err = std::numeric_limits<double>::infinity();
    return est;
  }
  const double n = static_cast<double>(logs.size());
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - shift);
  const double mean = sum / n;
  double sq = 0.0;
  for (double l : logs) {
    const double d = std::exp(l - shift) - mean;
    sq += d * d;
  }
  const double se = std::sqrt(sq / (n - 1.0) / n);
  constexpr double kMaxLog = 700.0;
  if (shift > kMaxLog) {
    est.log_space = true;
    est.mean = shift + std::log(mean);
    est.std_err = se / mean;  // first-order error of the log
  } else {
    est.mean = std::exp(shift) * mean;
    est.std_err = std::exp(shift) * se;
  }
  return est;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Q(P u) = sum_{|n|<=N} <n>^(2s) |u_n|^2.
double gaussian_quadratic(const FourierState& u, double s, int N) {
  double q = 0.0;
  for (int n = -N; n <= N; ++n) q += bracket_pow(n, 2.0 * s) * std::norm(u[n]);
  return q;
}

// Per-sample logs computed in parallel against one shared engine.
template <class F>
std::vector<double> sample_logs(const McOptions& opt, F&& per_sample) {
  std::vector<double> logs(opt.n_samples, kNegInf);
  NormalFormEngine shared({.s = opt.s, .N = opt.N, .c_impl = opt.c_impl});
  // Compile every form once up front so workers only read the cache.
  for (int j = 2; j <= opt.J + 1; ++j) shared.term_count(FormKind::boundary_N0, j);
  parallel_for(opt.n_samples, opt.workers, [&](std::size_t k) { logs[k] = per_sample(shared, k); });
  return logs;
}

}  // namespace

McEstimate mc_weighted_measure(const SetPredicate& A, const GaussianSampler& sampler, const McOptions& opt) {
  opt.validate();
  const auto logs = sample_logs(opt, [&](NormalFormEngine& engine, std::size_t k) {
    const auto u = sampler.sample(k);
    if (!A(u)) return kNegInf;
    return weight_F(engine, u, opt.J).log_weight;
  });
  return estimate_from_logs(logs);
}

ChangeOfVariable change_of_variable_check(const SetPredicate& A, const GaussianSampler& sampler, double t,
                                          const McOptions& opt) {
  opt.validate();
  if (opt.N > 8 || opt.J > 3) throw ValidationError("change_of_variable_check is limited to N <= 8, J <= 3");
  ChangeOfVariable out;
  const auto lhs = sample_logs(opt, [&](NormalFormEngine& engine, std::size_t k) {
    const auto u = sampler.sample(k);
    if (!A(t == 0.0 ? u : evolve(u, -t, opt.N, opt.dt))) return kNegInf;
    return weight_F(engine, u, opt.J).log_weight;
  });
  const auto rhs = sample_logs(opt, [&](NormalFormEngine& engine, std::size_t k) {
    const auto u = sampler.sample(k);
    if (!A(u)) return kNegInf;
    const auto ut = t == 0.0 ? u : evolve(u, t, opt.N, opt.dt);
    // Difference first so t = 0 reproduces the left side exactly.
    return weight_F(engine, ut, opt.J).log_weight +
           (gaussian_quadratic(u, opt.s, opt.N) - gaussian_quadratic(ut, opt.s, opt.N));
  });
  out.lhs = estimate_from_logs(lhs);
  out.rhs = estimate_from_logs(rhs);
  out.sigmas = separation_in_sigmas(out.lhs, out.rhs);
  return out;
}

GronwallProbe gronwall_probe(const SetPredicate& D, const GaussianSampler& sampler, std::span<const double> tau_grid,
                             const McOptions& opt) {
  opt.validate();
  if (tau_grid.empty()) throw ValidationError("gronwall_probe needs a non-empty tau grid");
  GronwallProbe probe;
  for (double tau : tau_grid) {
    const auto logs = sample_logs(opt, [&](NormalFormEngine& engine, std::size_t k) {
      const auto u = sampler.sample(k);
      if (!D(tau == 0.0 ? u : evolve(u, -tau, opt.N, opt.dt))) return kNegInf;
      return weight_F(engine, u, opt.J).log_weight;
    });
    auto est = estimate_from_logs(logs);
    if (est.flagged || !(est.mean > 0.0) || !std::isfinite(est.mean)) {
      throw NumericalGuardError("Gronwall probe estimate not finite and positive at tau = " + std::to_string(tau));
    }
    probe.rows.push_back({tau, est});
  }
  if (probe.rows.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& r : probe.rows) {
      mx += r.tau;
      my += r.estimate.log_space ? r.estimate.mean : std::log(r.estimate.mean);
    }
    const double n = static_cast<double>(probe.rows.size());
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : probe.rows) {
      const double y = r.estimate.log_space ? r.estimate.mean : std::log(r.estimate.mean);
      sxy += (r.tau - mx) * (y - my);
      sxx += (r.tau - mx) * (r.tau - mx);
    }
    probe.fitted_rate = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return probe;
}

std::vector<WeightRow> weight_convergence_sweep(const FourierState& u, int J, double s, std::span<const int> N_list,
                                                double c_impl) {
  std::vector<WeightRow> rows;
  for (int N : N_list) {
    const auto w = weight_F(shared_engine({.s = s, .N = N, .c_impl = c_impl}), u, J);
    rows.push_back({N, w.log_weight, w.weight});
  }
  return rows;
}

}  // namespace fourns
