#include "fourns/dynamics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fourns/errors.hpp"

namespace fourns {

namespace {

double quartic(int n) {
  const double x = static_cast<double>(n);
  return x * x * x * x;
}

// Integrating-factor RK4 on the modes |n| <= N with diagonal linear part
// lambda_n and a nonlinear right-hand side F(t, y). Higher modes are rotated
// exactly by exp(lambda_n * duration).
class IfRk4 {
 public:
  using Rhs = std::function<void(double, std::span<const cplx>, std::span<cplx>)>;

  IfRk4(int N, std::vector<cplx> lambda_low, Rhs rhs)
      : N_(N), lambda_(std::move(lambda_low)), rhs_(std::move(rhs)), W_(static_cast<std::size_t>(2 * N + 1)) {
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_, &e1_, &e2_}) v->resize(W_);
  }

  // Advances y (2N+1 low modes) from t0 by `duration` using steps of at most dt.
  void advance(std::vector<cplx>& y, double t0, double duration, double dt) {
    if (duration == 0.0) return;
    const double steps_f = std::ceil(std::abs(duration) / dt - 1e-9);
    const long steps = std::max(1L, static_cast<long>(steps_f));
    const double h = duration / static_cast<double>(steps);
    if (h != h_) {
      for (std::size_t k = 0; k < W_; ++k) {
        e1_[k] = std::exp(lambda_[k] * (0.5 * h));
        e2_[k] = std::exp(lambda_[k] * h);
      }
      h_ = h;
    }
    for (long i = 0; i < steps; ++i) step(y, t0 + h * static_cast<double>(i), h);
  }

 private:
  void step(std::vector<cplx>& y, double t, double h) {
    rhs_(t, y, k1_);
    for (std::size_t k = 0; k < W_; ++k) tmp_[k] = e1_[k] * (y[k] + 0.5 * h * k1_[k]);
    rhs_(t + 0.5 * h, tmp_, k2_);
    for (std::size_t k = 0; k < W_; ++k) tmp_[k] = e1_[k] * y[k] + 0.5 * h * k2_[k];
    rhs_(t + 0.5 * h, tmp_, k3_);
    for (std::size_t k = 0; k < W_; ++k) tmp_[k] = e2_[k] * y[k] + h * e1_[k] * k3_[k];
    rhs_(t + h, tmp_, k4_);
    for (std::size_t k = 0; k < W_; ++k) {
      y[k] = e2_[k] * y[k] + (h / 6.0) * (e2_[k] * k1_[k] + 2.0 * e1_[k] * (k2_[k] + k3_[k]) + k4_[k]);
      if (!(std::abs(y[k]) <= kBlowUpThreshold)) {
        throw NumericalGuardError("flow blow-up at t = " + std::to_string(t + h) + " (|u_n| > 1e12); reduce dt");
      }
    }
  }

  int N_;
  std::vector<cplx> lambda_;
  Rhs rhs_;
  std::size_t W_;
  double h_ = 0.0;
  std::vector<cplx> k1_, k2_, k3_, k4_, tmp_, e1_, e2_;
};

std::vector<cplx> free_lambda(int N) {
  std::vector<cplx> lam(static_cast<std::size_t>(2 * N + 1));
  for (int n = -N; n <= N; ++n) lam[static_cast<std::size_t>(n + N)] = cplx(0.0, -quartic(n));
  return lam;
}

IfRk4 truncated_integrator(int N, bool renormalized) {
  auto op = std::make_shared<CubicNonlinearity>(N, renormalized);
  return IfRk4(N, free_lambda(N), [op](double, std::span<const cplx> y, std::span<cplx> out) {
    op->apply(y, out);
    for (auto& z : out) z = cplx(z.imag(), -z.real());  // -i z
  });
}

void write_low(std::vector<cplx>& full, int M, int N, const std::vector<cplx>& low) {
  for (int n = -N; n <= N; ++n) full[static_cast<std::size_t>(n + M)] = low[static_cast<std::size_t>(n + N)];
}

// Rotates the modes N < |n| <= M by exp(-i duration * (n^4 + extra(n))).
template <class Extra>
void rotate_high(std::vector<cplx>& full, int M, int N, double duration, Extra extra) {
  for (int n = -M; n <= M; ++n) {
    if (std::abs(n) <= N) continue;
    auto& z = full[static_cast<std::size_t>(n + M)];
    z *= std::exp(cplx(0.0, -duration * (quartic(n) + extra(n))));
  }
}

std::vector<cplx> to_vector(const FourierState& s) { return {s.modes().begin(), s.modes().end()}; }

}  // namespace

// ---------------------------------------------------------------------------

void FlowConfig::validate() const {
  if (N < 0) throw ValidationError("FlowConfig: N must be non-negative");
  if (M < N) throw ValidationError("FlowConfig: M must be >= N");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("FlowConfig: dt must be > 0");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ValidationError("FlowConfig: t_final must be >= 0");
  double prev = 0.0;
  for (double s : sample_times) {
    if (!(s >= prev) || s > t_final) throw ValidationError("FlowConfig: sample times must be sorted in [0, t_final]");
    prev = s;
  }
}

std::vector<double> FlowConfig::resolved_sample_times() const {
  if (!sample_times.empty()) return sample_times;
  return {0.0, t_final};
}

FourierState evolve(const FourierState& u0, double duration, int N, double dt, bool renormalized) {
  const int M = u0.cutoff();
  if (N > M) throw ValidationError("evolve requires N <= M");
  if (!(dt > 0.0)) throw ValidationError("evolve requires dt > 0");
  auto integ = truncated_integrator(N, renormalized);
  auto low = u0.low_modes(N);
  integ.advance(low, u0.time(), duration, dt);
  auto full = to_vector(u0);
  write_low(full, M, N, low);
  rotate_high(full, M, N, duration, [](int) { return 0.0; });
  return FourierState(std::move(full), u0.time() + duration);
}

Trajectory flow_truncated(const FourierState& u0, const FlowConfig& cfg) {
  cfg.validate();
  if (cfg.scheme == Scheme::gauged_rk4) return flow_gauged(u0, cfg);
  const FourierState start = u0.cutoff() == cfg.M ? u0 : u0.resized(cfg.M);
  const int M = cfg.M, N = cfg.N;

  auto integ = truncated_integrator(N, cfg.renormalized);
  auto low = start.low_modes(N);
  auto full = to_vector(start);
  Trajectory out;
  double t = 0.0;
  for (double ts : cfg.resolved_sample_times()) {
    integ.advance(low, start.time() + t, ts - t, cfg.dt);
    rotate_high(full, M, N, ts - t, [](int) { return 0.0; });
    t = ts;
    write_low(full, M, N, low);
    out.emplace_back(full, start.time() + t);
  }
  return out;
}

double mass(const FourierState& state) {
  double m = 0.0;
  for (const auto& z : state.modes()) m += std::norm(z);
  return m;
}

double hamiltonian(const FourierState& state, int N) {
  const auto u = state.low_modes(N);
  double kinetic = 0.0, m = 0.0;
  for (int n = -N; n <= N; ++n) {
    const double a = std::norm(u[static_cast<std::size_t>(n + N)]);
    kinetic += quartic(n) * a;
    m += a;
  }
  // sum_{n1-n2+n3-n4=0} u1 u2* u3 u4* = sum_k |w_k|^2 with w_k = sum_{n1-n2=k} u_{n1} conj(u_{n2})
  double quartic_sum = 0.0;
  for (int k = -2 * N; k <= 2 * N; ++k) {
    cplx w{};
    for (int n1 = std::max(-N, k - N); n1 <= std::min(N, k + N); ++n1) {
      w += u[static_cast<std::size_t>(n1 + N)] * std::conj(u[static_cast<std::size_t>(n1 - k + N)]);
    }
    quartic_sum += std::norm(w);
  }
  return kinetic + 0.5 * quartic_sum - m * m;
}

Trajectory gauge_G(const Trajectory& traj) {
  Trajectory out;
  out.reserve(traj.size());
  for (const auto& s : traj) {
    const cplx phase = std::exp(cplx(0.0, 2.0 * s.time() * mass(s)));
    std::vector<cplx> m(s.modes().begin(), s.modes().end());
    for (auto& z : m) z *= phase;
    out.emplace_back(std::move(m), s.time());
  }
  return out;
}

GaugeData GaugeData::from_initial(const FourierState& u0) {
  GaugeData g;
  g.cutoff = u0.cutoff();
  for (const auto& z : u0.modes()) g.u0_sq.push_back(std::norm(z));
  return g;
}

FourierState gauge_J(const FourierState& state, const GaugeData& g, GaugeDirection direction) {
  const double sign = direction == GaugeDirection::forward ? -1.0 : 1.0;
  const int M = state.cutoff();
  std::vector<cplx> m(state.modes().begin(), state.modes().end());
  for (int n = -M; n <= M; ++n) {
    m[static_cast<std::size_t>(n + M)] *= std::exp(cplx(0.0, sign * state.time() * g.at(n)));
  }
  return FourierState(std::move(m), state.time());
}

Trajectory flow_gauged(const FourierState& u0, const FlowConfig& cfg) {
  cfg.validate();
  const FourierState start = u0.cutoff() == cfg.M ? u0 : u0.resized(cfg.M);
  const int M = cfg.M, N = cfg.N;
  const GaugeData g = GaugeData::from_initial(start);
  const double t_origin = start.time();

  std::vector<double> alpha(static_cast<std::size_t>(2 * N + 1));
  for (int n = -N; n <= N; ++n) alpha[static_cast<std::size_t>(n + N)] = g.at(n);

  auto op = std::make_shared<CubicNonlinearity>(N, true);
  auto scratch = std::make_shared<std::array<std::vector<cplx>, 3>>();
  for (auto& v : *scratch) v.resize(alpha.size());

  // i dv/dt = n^4 v + e^{-i t a_n} nonres(e^{i t a} v)_n - (|v_n|^2 - a_n) v_n
  IfRk4 integ(N, free_lambda(N), [=](double t, std::span<const cplx> y, std::span<cplx> out) {
    auto& [ungauged, nonres, res] = *scratch;
    const double tau = t - t_origin;
    for (std::size_t k = 0; k < y.size(); ++k) ungauged[k] = y[k] * std::exp(cplx(0.0, tau * alpha[k]));
    op->split(ungauged, nonres, res);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const cplx rhs = nonres[k] * std::exp(cplx(0.0, -tau * alpha[k])) - (std::norm(y[k]) - alpha[k]) * y[k];
      out[k] = cplx(rhs.imag(), -rhs.real());
    }
  });

  auto low = start.low_modes(N);
  auto full = to_vector(start);
  Trajectory out;
  double t = 0.0;
  for (double ts : cfg.resolved_sample_times()) {
    integ.advance(low, t_origin + t, ts - t, cfg.dt);
    rotate_high(full, M, N, ts - t, [&](int n) { return g.at(n); });
    t = ts;
    write_low(full, M, N, low);
    out.emplace_back(full, t_origin + t);
  }
  return out;
}

std::vector<ConvergenceRow> convergence_experiment(const FourierState& u0, double t, std::span<const int> N_list,
                                                   double sigma, double dt) {
  if (N_list.empty()) throw ValidationError("convergence_experiment: empty N list");
  const int N_ref = 2 * *std::max_element(N_list.begin(), N_list.end());
  const int M = std::max(N_ref, u0.cutoff());
  const FourierState start = u0.resized(M);
  const FourierState reference = evolve(start, t, N_ref, dt);
  std::vector<ConvergenceRow> rows;
  for (int N : N_list) {
    if (N < 0) throw ValidationError("convergence_experiment: negative cutoff");
    const FourierState approx = evolve(start, t, N, dt);
    rows.push_back({N, sobolev_norm(reference - approx, sigma)});
  }
  return rows;
}

JacobianResult jacobian_det(const FourierState& u0, double t, int N, double dt, double fd_step,
                            double sensitivity_tol) {
  if (N < 0 || N > 2) throw ValidationError("jacobian_det: N must be in [0, 2]");
  const int W = 2 * N + 1;
  const int dim = 2 * W;
  const auto base = u0.low_modes(N);

  auto flow_map = [&](const Eigen::VectorXd& x) {
    std::vector<cplx> m(static_cast<std::size_t>(W));
    for (int k = 0; k < W; ++k) m[static_cast<std::size_t>(k)] = cplx(x[2 * k], x[2 * k + 1]);
    const auto out = evolve(FourierState(std::move(m), u0.time()), t, N, dt).low_modes(N);
    Eigen::VectorXd y(dim);
    for (int k = 0; k < W; ++k) {
      y[2 * k] = out[static_cast<std::size_t>(k)].real();
      y[2 * k + 1] = out[static_cast<std::size_t>(k)].imag();
    }
    return y;
  };

  Eigen::VectorXd x0(dim);
  for (int k = 0; k < W; ++k) {
    x0[2 * k] = base[static_cast<std::size_t>(k)].real();
    x0[2 * k + 1] = base[static_cast<std::size_t>(k)].imag();
  }

  auto det_with_step = [&](double h) {
    Eigen::MatrixXd jac(dim, dim);
    for (int c = 0; c < dim; ++c) {
      Eigen::VectorXd xp = x0, xm = x0;
      xp[c] += h;
      xm[c] -= h;
      jac.col(c) = (flow_map(xp) - flow_map(xm)) / (2.0 * h);
    }
    return std::abs(jac.determinant());
  };

  JacobianResult r;
  if (t == 0.0) return r;
  r.det = det_with_step(fd_step);
  r.step_sensitivity = std::abs(r.det - det_with_step(0.5 * fd_step));
  r.well_conditioned = r.step_sensitivity <= sensitivity_tol;
  return r;
}

}  // namespace fourns
