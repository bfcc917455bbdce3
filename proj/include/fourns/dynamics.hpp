#pragma once

// Time integration of the frequency-truncated fourth-order NLS and the
// gauge transforms acting on its solutions.

#include <span>
#include <vector>

#include "fourns/spectral.hpp"

namespace fourns {

enum class Scheme { interaction_rk4, gauged_rk4 };

struct FlowConfig {
  int N = 4;               ///< truncation cutoff for the nonlinearity
  int M = 4;               ///< ambient mode cap, M >= N
  double dt = 1e-3;        ///< largest step; each sample interval is split evenly
  double t_final = 1.0;
  Scheme scheme = Scheme::interaction_rk4;
  /// Times (relative to the initial time stamp) at which states are returned.
  /// Empty means {0, t_final}. Must be sorted and lie in [0, t_final].
  std::vector<double> sample_times;
  /// false integrates the cubic equation without the 2 * mean(|u|^2) counterterm.
  bool renormalized = true;

  void validate() const;
  std::vector<double> resolved_sample_times() const;
};

using Trajectory = std::vector<FourierState>;

/// Any coefficient above this modulus aborts the flow.
inline constexpr double kBlowUpThreshold = 1e12;

/// Integrating-factor RK4 for the truncated dynamics: the low modes are
/// advanced by RK4 in the interaction representation, the modes |n| > N
/// rotate exactly by exp(-i t n^4).
Trajectory flow_truncated(const FourierState& u0, const FlowConfig& cfg);

/// Advance by a signed duration; negative durations integrate backwards.
FourierState evolve(const FourierState& u0, double duration, int N, double dt, bool renormalized = true);

/// sum_n |u_n|^2 over every stored mode.
double mass(const FourierState& state);

/// Conserved energy of the renormalized truncated flow on E_N:
///   H = sum n^4 |u_n|^2 + 1/2 sum_{n1-n2+n3-n4=0} u1 u2* u3 u4* - (sum |u_n|^2)^2,
/// all sums over |n| <= N. The flow is i du_n/dt = dH/d(conj u_n).
double hamiltonian(const FourierState& state, int N);

/// Multiplies each state by exp(2 i t sum_n |u_n(t)|^2).
Trajectory gauge_G(const Trajectory& traj);

struct GaugeData {
  std::vector<double> u0_sq;  ///< |u0(n)|^2, index n + M
  int cutoff = 0;

  static GaugeData from_initial(const FourierState& u0);
  double at(int n) const {
    return (n < -cutoff || n > cutoff) ? 0.0 : u0_sq[static_cast<std::size_t>(n + cutoff)];
  }
};

enum class GaugeDirection { forward, inverse };

/// Forward multiplies u(n, t) by exp(-i t |u0(n)|^2); inverse undoes it.
FourierState gauge_J(const FourierState& state, const GaugeData& g, GaugeDirection direction);

/// Gauged truncated flow: phases exp(i t Theta) on Gamma_N(n), the diagonal
/// term -(|v_n|^2 - |u0(n)|^2) v_n, and the modified propagator
/// exp(-i t (n^4 + |u0(n)|^2)) on |n| > N.
Trajectory flow_gauged(const FourierState& u0, const FlowConfig& cfg);

struct ConvergenceRow {
  int N = 0;
  double difference = 0.0;  ///< ||Phi_ref(t) u0 - Phi_N(t) u0||_{H^sigma}
};

/// Cauchy-style sweep against the reference cutoff N_ref = 2 max(N_list).
std::vector<ConvergenceRow> convergence_experiment(const FourierState& u0, double t, std::span<const int> N_list,
                                                   double sigma, double dt = 1e-3);

struct JacobianResult {
  double det = 1.0;
  /// |det(h) - det(h/2)|, the finite-difference step sensitivity.
  double step_sensitivity = 0.0;
  bool well_conditioned = true;
};

/// |det| of the central finite-difference Jacobian of u_N(0) -> u_N(t) on
/// E_N in (Re, Im) coordinates.
JacobianResult jacobian_det(const FourierState& u0, double t, int N, double dt = 1e-3, double fd_step = 1e-5,
                            double sensitivity_tol = 1e-6);

}  // namespace fourns
