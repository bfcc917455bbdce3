#pragma once

// Multilinear forms generated by iterated normal form reductions of the
// H^s energy, evaluated on the interaction representation v = S(-t) u.
//
// For an ordered bi-tree T of generation g with index function n, write
// sigma_k = -1 when the node expanded at generation k carries a conjugate,
// psi_k = sum_{l<=k} sigma_l phi_l, and
//     W(T, n) = <n_r>^{2s} prod_{k<g} (-sigma_k / psi_k).
// With M_T(v) the product of v (or conj v) over the terminal nodes:
//     N^(g)     = Re sum 1_{cap_{k<=g-2} A_k^c} W (-i sigma_g) e^{-i psi_g t} M_T
//     N_0^(g+1) = Re sum 1_{cap_{k<=g-1} A_k^c} W (sigma_g / psi_g) e^{-i psi_g t} M_T
//     R^(g+1)   = -Re sum_b (same terms) * (i sigma_b |v_{n_b}|^2)
// and N^(g) splits into N_1^(g) (on A_{g-1}) and N_2^(g) (on A_{g-1}^c).
// These satisfy N_2^(g) = d/dt N_0^(g+1) + R^(g+1) + N^(g+1) exactly along
// the truncated interaction-representation flow.

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "fourns/bitree.hpp"
#include "fourns/dynamics.hpp"
#include "fourns/spectral.hpp"

namespace fourns {

enum class FormKind { base, boundary_N0, resonant_R, region_N1, remainder_N2 };

const char* to_string(FormKind kind);

struct MultilinearValue {
  double value = 0.0;
  int generation = 1;
  FormKind kind = FormKind::base;
};

struct FormParams {
  double s = 0.35;
  int N = 2;
  double c_impl = 1.0;
  PhaseSumMode mode = PhaseSumMode::signed_sum;
  /// Deepest bi-tree generation the engine will enumerate.
  int max_tree_generation = kDefaultMaxGenerations + 1;

  void validate() const;
};

/// Sum over distinct monomials of coef * prod(factors); factors are packed as
/// 2 (n + N) + conj.
struct CompiledForm {
  static constexpr int kMaxDegree = 2 * (kDefaultMaxGenerations + 1) + 2;
  struct Term {
    cplx coef;
    double psi = 0.0;
    std::array<std::uint16_t, kMaxDegree> factor{};
  };
  int degree = 0;
  std::vector<Term> terms;
  std::uint64_t raw_count = 0;  ///< (tree, assignment) pairs merged into `terms`
};

class NormalFormEngine {
 public:
  explicit NormalFormEngine(FormParams params);
  NormalFormEngine(const NormalFormEngine&) = delete;
  NormalFormEngine& operator=(const NormalFormEngine&) = delete;

  const FormParams& params() const { return params_; }

  /// N^(1)(t)(v) by direct summation over Gamma_N(n). `v` holds 2N+1 modes.
  double base(std::span<const cplx> v, double t) const;

  /// The form of the given kind and generation at (v, t).
  double evaluate(FormKind kind, int j, std::span<const cplx> v, double t);

  /// d/dt N_0^(j)(t)(v(t)) by the product rule, given dv/dt at time t.
  double boundary_derivative(int j, std::span<const cplx> v, double t, std::span<const cplx> dvdt);

  /// Number of merged monomials / raw (tree, assignment) pairs behind a form.
  std::size_t term_count(FormKind kind, int j);
  std::uint64_t raw_term_count(FormKind kind, int j);

 private:
  struct Generation {
    CompiledForm n1, n2, n0_next;
  };

  const Generation& generation(int g);
  Generation compile(int g) const;
  const CompiledForm& form_for(FormKind kind, int j, bool& resonant);
  void fill_values(std::span<const cplx> v, double t, std::vector<cplx>& out) const;

  FormParams params_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<Generation>> cache_;
};

/// Process-wide engine for the given parameters; compiled forms are reused
/// across calls. Safe to call from several threads.
NormalFormEngine& shared_engine(const FormParams& params);

/// dv/dt from the truncated interaction-representation equation at (v, t).
std::vector<cplx> interaction_velocity(std::span<const cplx> v, double t, int N);

/// v = S(-t) P_{<=N} u on the modes |n| <= N.
std::vector<cplx> to_interaction(const FourierState& u, double t, int N);

double eval_N1_base(const FourierState& v, double t, double s, int N);

MultilinearValue eval_form(const FourierState& v, double t, int j, FormKind kind, double s, int N,
                           double c_impl = 1.0);

/// |LHS - RHS| / (1 + |LHS|) for the J-step expansion of d/dt (1/2)||v||_{H^s}^2.
double telescoping_residual(const FourierState& v, double t, int J, double s, int N, double c_impl = 1.0);
double telescoping_residual(NormalFormEngine& engine, std::span<const cplx> v, double t, int J);

struct EnergyReport {
  double plain_energy = 0.0;
  std::vector<double> corrections;  ///< N_0^(j), j = 2..J+1
  double modified_energy = 0.0;
  double weight_logF = 0.0;
};

EnergyReport modified_energy(const FourierState& u, double t, int J, double s, int N, double c_impl = 1.0);
EnergyReport modified_energy(NormalFormEngine& engine, const FourierState& u, double t, int J);

/// d/dt of the modified energy from the expansion:
/// sum_{j=2}^{J+1} (N_1^(j) + R^(j)) + N_2^(J+1); J = 0 gives N^(1).
double modified_energy_rate(NormalFormEngine& engine, const FourierState& u, int J);

struct WeightResult {
  double log_weight = 0.0;
  double weight = 1.0;
  bool overflow = false;
};

WeightResult weight_F(const FourierState& u, int J, double s, int N, double c_impl = 1.0);
WeightResult weight_F(NormalFormEngine& engine, const FourierState& u, int J);

struct DriftRow {
  int J = 0;
  double sup_rate = 0.0;                ///< sup_t |d E^(J) / dt| from the expansion
  double sup_finite_difference = 0.0;   ///< sup over interior samples of centered differences
  double max_mismatch = 0.0;            ///< sup |analytic - finite difference|
};

/// Modified-energy rates along a flow_truncated trajectory. Sample times come
/// from cfg.sample_times (at least three); J = 0 is the plain energy.
std::vector<DriftRow> energy_drift(const FourierState& u0, const FlowConfig& cfg, std::span<const int> J_list,
                                   double s, double c_impl = 1.0);

struct FormNormEstimate {
  double sup = 0.0;           ///< largest |form| seen on unit H^sigma inputs
  double decay_factor = 1.0;  ///< prod_{k=1}^{j-1} (2k+2)^(-1/3), for trend comparison
  int trials = 0;
};

FormNormEstimate estimate_form_norm(int j, FormKind kind, double s, double eps, int N, int trials,
                                    std::uint64_t seed, double c_impl = 1.0);

}  // namespace fourns
