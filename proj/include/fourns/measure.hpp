#pragma once

// Gaussian measures on truncated Fourier series and Monte Carlo estimates of
// weighted measures under the truncated flow.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fourns/normal_form.hpp"
#include "fourns/spectral.hpp"

namespace fourns {

/// Draws u_n = g_n <n>^(-s), |n| <= M, with g_n standard complex Gaussians
/// (real and imaginary parts of variance 1/2). Sample k depends only on
/// (seed, k), so any worker may draw any sample.
class GaussianSampler {
 public:
  GaussianSampler(double s, int M, std::uint64_t seed);

  double s() const { return s_; }
  int cutoff() const { return M_; }
  std::uint64_t seed() const { return seed_; }

  FourierState sample(std::uint64_t index) const;
  /// Sequential stream: sample(0), sample(1), ...
  FourierState next() { return sample(counter_++); }

 private:
  double s_;
  int M_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

FourierState sample_mu_s(GaussianSampler& sampler);

/// Sum_{|n|<=M} <n>^(2(sigma - s)): the mean of ||u||_{H^sigma}^2 under the sampler.
double expected_sobolev_square(double s, double sigma, int M);

struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n_samples = 0;
  /// true when `mean` and `std_err` are natural logs (the linear value overflowed).
  bool log_space = false;
  /// set when no sample hit the set; std_err is then +inf.
  bool flagged = false;
};

/// Combined standard errors separating two estimates (|a - b| / sqrt(se_a^2 + se_b^2)).
double separation_in_sigmas(const McEstimate& a, const McEstimate& b);

/// Closed ball in H^sigma.
struct SobolevBall {
  double sigma = 0.0;
  double radius = 1.0;
  std::optional<FourierState> center;

  bool contains(const FourierState& u) const;
};

using SetPredicate = std::function<bool(const FourierState&)>;

struct McOptions {
  int J = 2;
  double s = 0.35;
  int N = 2;
  std::size_t n_samples = 1000;
  double c_impl = 1.0;
  double dt = 1e-3;
  int workers = 1;

  void validate(std::size_t min_samples = 100) const;
};

/// Runs fn(k) for k in [0, n) on `workers` threads. fn must only write to
/// per-index storage.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Mean and standard error from per-sample log-values (-inf encodes 0),
/// evaluated with a common shift so large logs do not overflow.
McEstimate estimate_from_logs(std::span<const double> logs);

/// rho_{s,N}(A) = E_mu[1_A F_{s,N}].
McEstimate mc_weighted_measure(const SetPredicate& A, const GaussianSampler& sampler, const McOptions& opt);

struct ChangeOfVariable {
  McEstimate lhs;
  McEstimate rhs;
  double sigmas = 0.0;  ///< separation in combined standard errors
};

/// LHS = E[1_A(Phi_N(-t) u) F(u)],
/// RHS = E[1_A(u) exp(log F(P Phi_N(t) u) - Q(P Phi_N(t) u) + Q(P u))],
/// Q(u) = sum <n>^(2s) |u_n|^2 being the sampler's log-density.
ChangeOfVariable change_of_variable_check(const SetPredicate& A, const GaussianSampler& sampler, double t,
                                          const McOptions& opt);

struct GronwallRow {
  double tau = 0.0;
  McEstimate estimate;
};

struct GronwallProbe {
  std::vector<GronwallRow> rows;
  double fitted_rate = 0.0;  ///< least-squares slope of log(estimate) against tau
};

GronwallProbe gronwall_probe(const SetPredicate& D, const GaussianSampler& sampler, std::span<const double> tau_grid,
                             const McOptions& opt);

struct WeightRow {
  int N = 0;
  double log_weight = 0.0;
  double weight = 1.0;
};

std::vector<WeightRow> weight_convergence_sweep(const FourierState& u, int J, double s, std::span<const int> N_list,
                                                double c_impl = 1.0);

}  // namespace fourns
