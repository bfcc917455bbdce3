#include "fourns/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>

#include "fourns/errors.hpp"

namespace fourns {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr int kDirectCutoff = 6;

void check_frequency(int n) {
  if (std::abs(n) > kMaxFrequency) {
    throw NumericalGuardError("frequency " + std::to_string(n) + " exceeds the exact phase range (|n| <= " +
                              std::to_string(kMaxFrequency) + ")");
  }
}


}  // namespace

double bracket_pow(int n, double two_r) {
  const double b2 = 1.0 + static_cast<double>(n) * static_cast<double>(n);
  return std::pow(b2, 0.5 * two_r);
}

// ---------------------------------------------------------------------------
// FourierState

FourierState::FourierState(int cutoff, double time) : cutoff_(cutoff), time_(time) {
  if (cutoff < 0) throw ValidationError("negative cutoff");
  modes_.assign(static_cast<std::size_t>(2 * cutoff + 1), cplx{});
  validate();
}

FourierState::FourierState(std::vector<cplx> modes, double time) : time_(time), modes_(std::move(modes)) {
  if (modes_.size() % 2 == 0) throw ValidationError("mode array must have odd length 2M+1");
  cutoff_ = static_cast<int>(modes_.size() / 2);
  validate();
}

FourierState FourierState::single_mode(int cutoff, int n, cplx c, double time) {
  if (std::abs(n) > cutoff) throw ValidationError("mode outside the cutoff");
  std::vector<cplx> m(static_cast<std::size_t>(2 * cutoff + 1));
  m[static_cast<std::size_t>(n + cutoff)] = c;
  return FourierState(std::move(m), time);
}

void FourierState::validate() const {
  if (!std::isfinite(time_)) throw ValidationError("non-finite time stamp");
  for (const auto& z : modes_) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw NumericalGuardError("non-finite Fourier coefficient");
    }
  }
}

std::vector<cplx> FourierState::low_modes(int N) const {
  std::vector<cplx> out(static_cast<std::size_t>(2 * N + 1));
  for (int n = -N; n <= N; ++n) out[static_cast<std::size_t>(n + N)] = (*this)[n];
  return out;
}

FourierState FourierState::with_time(double t) const {
  FourierState r = *this;
  r.time_ = t;
  r.validate();
  return r;
}

FourierState FourierState::with_modes(std::vector<cplx> modes) const { return FourierState(std::move(modes), time_); }

FourierState FourierState::projected(int N) const {
  FourierState r = *this;
  for (int n = -cutoff_; n <= cutoff_; ++n) {
    if (std::abs(n) > N) r.modes_[static_cast<std::size_t>(n + cutoff_)] = cplx{};
  }
  return r;
}

FourierState FourierState::resized(int cutoff) const {
  return FourierState(low_modes(cutoff), time_);
}

FourierState FourierState::scaled(double lambda) const {
  FourierState r = *this;
  for (auto& z : r.modes_) z *= lambda;
  r.validate();
  return r;
}

FourierState operator-(const FourierState& a, const FourierState& b) {
  const int M = std::max(a.cutoff(), b.cutoff());
  std::vector<cplx> m(static_cast<std::size_t>(2 * M + 1));
  for (int n = -M; n <= M; ++n) m[static_cast<std::size_t>(n + M)] = a[n] - b[n];
  return FourierState(std::move(m), a.time());
}

SobolevIndex SobolevIndex::make(double s, double eps) {
  if (!(eps > 0.0) || !std::isfinite(s) || !std::isfinite(eps)) {
    throw ValidationError("Sobolev index requires finite s and eps > 0");
  }
  return SobolevIndex{s, eps, s - 0.5 - eps};
}

double sobolev_norm(std::span<const cplx> low, double r) {
  const int N = static_cast<int>(low.size() / 2);
  double acc = 0.0;
  for (int n = -N; n <= N; ++n) acc += bracket_pow(n, 2.0 * r) * std::norm(low[static_cast<std::size_t>(n + N)]);
  return std::sqrt(acc);
}

double sobolev_norm(const FourierState& state, double r) { return sobolev_norm(state.modes(), r); }

// ---------------------------------------------------------------------------
// Phases

PhaseQuadruple PhaseQuadruple::make(int n1, int n2, int n3, int n) {
  if (n != n1 - n2 + n3) throw ValidationError("quadruple violates n = n1 - n2 + n3");
  return {n1, n2, n3, n};
}

int PhaseQuadruple::max_abs() const { return std::max({std::abs(n1), std::abs(n2), std::abs(n3), std::abs(n)}); }

PhaseInt phase_phi(const PhaseQuadruple& q) {
  for (int x : {q.n1, q.n2, q.n3, q.n}) check_frequency(x);
  // |n| <= 1e4 keeps every partial sum below 4e16.
  auto p4 = [](int x) {
    const PhaseInt y = x;
    return y * y * y * y;
  };
  return p4(q.n1) - p4(q.n2) + p4(q.n3) - p4(q.n);
}

PhaseInt phase_mu(const PhaseQuadruple& q) {
  for (int x : {q.n1, q.n2, q.n3, q.n}) check_frequency(x);
  auto p2 = [](int x) { return static_cast<PhaseInt>(x) * x; };
  return p2(q.n1) - p2(q.n2) + p2(q.n3) - p2(q.n);
}

std::vector<PhaseQuadruple> gamma_set(int n, int N) {
  if (N < 0 || std::abs(n) > N) throw ValidationError("gamma_set requires |n| <= N");
  std::vector<PhaseQuadruple> out;
  for (int n1 = -N; n1 <= N; ++n1) {
    if (n1 == n) continue;
    for (int n2 = -N; n2 <= N; ++n2) {
      const int n3 = n - n1 + n2;
      if (n3 < -N || n3 > N || n3 == n) continue;
      out.push_back({n1, n2, n3, n});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cubic nonlinearity

int fast_transform_length(int n) {
  for (int L = std::max(n, 1);; ++L) {
    int m = L;
    for (int p : {2, 3, 5}) {
      while (m % p == 0) m /= p;
    }
    if (m == 1) return L;
  }
}

struct CubicNonlinearity::FftWork {
  int L = 0;
  fftw_complex* buf = nullptr;
  fftw_plan to_physical = nullptr;
  fftw_plan to_fourier = nullptr;

  explicit FftWork(int length) : L(length) {
    std::lock_guard lock(planner_mutex());
    buf = fftw_alloc_complex(static_cast<std::size_t>(L));
    to_physical = fftw_plan_dft_1d(L, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    to_fourier = fftw_plan_dft_1d(L, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~FftWork() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(to_fourier);
    fftw_destroy_plan(to_physical);
    fftw_free(buf);
  }
  FftWork(const FftWork&) = delete;
  FftWork& operator=(const FftWork&) = delete;
};

CubicNonlinearity::CubicNonlinearity(int N, bool renormalized, Backend backend)
    : N_(N), renormalized_(renormalized) {
  if (N < 0) throw ValidationError("negative truncation cutoff");
  use_fft_ = backend == Backend::fft || (backend == Backend::automatic && N > kDirectCutoff);
  if (use_fft_) fft_ = std::make_unique<FftWork>(fast_transform_length(3 * (2 * N + 1)));
}

CubicNonlinearity::~CubicNonlinearity() = default;
CubicNonlinearity::CubicNonlinearity(CubicNonlinearity&&) noexcept = default;
CubicNonlinearity& CubicNonlinearity::operator=(CubicNonlinearity&&) noexcept = default;

int CubicNonlinearity::transform_length() const { return fft_ ? fft_->L : 0; }

void CubicNonlinearity::convolution(std::span<const cplx> in, std::span<cplx> out) {
  const int N = N_;
  const auto W = static_cast<std::size_t>(2 * N + 1);
  if (in.size() != W || out.size() != W) throw ValidationError("coefficient array size mismatch");

  if (!use_fft_) {
    for (int n = -N; n <= N; ++n) {
      cplx acc{};
      for (int n1 = -N; n1 <= N; ++n1) {
        const cplx a = in[static_cast<std::size_t>(n1 + N)];
        // n3 = n - n1 + n2 must lie in [-N, N]
        const int lo = std::max(-N, n1 - n - N);
        const int hi = std::min(N, n1 - n + N);
        cplx inner{};
        for (int n2 = lo; n2 <= hi; ++n2) {
          inner += std::conj(in[static_cast<std::size_t>(n2 + N)]) * in[static_cast<std::size_t>(n - n1 + n2 + N)];
        }
        acc += a * inner;
      }
      out[static_cast<std::size_t>(n + N)] = acc;
    }
    return;
  }

  FftWork& w = *fft_;
  const int L = w.L;
  auto* buf = reinterpret_cast<cplx*>(w.buf);
  std::fill(buf, buf + L, cplx{});
  for (int n = -N; n <= N; ++n) buf[(n + L) % L] = in[static_cast<std::size_t>(n + N)];
  fftw_execute(w.to_physical);
  for (int j = 0; j < L; ++j) buf[j] *= std::norm(buf[j]);
  fftw_execute(w.to_fourier);
  const double inv = 1.0 / static_cast<double>(L);
  for (int n = -N; n <= N; ++n) out[static_cast<std::size_t>(n + N)] = buf[(n + L) % L] * inv;
}

void CubicNonlinearity::apply(std::span<const cplx> in, std::span<cplx> out) {
  convolution(in, out);
  if (!renormalized_) return;
  double mass = 0.0;
  for (const auto& z : in) mass += std::norm(z);
  for (std::size_t k = 0; k < in.size(); ++k) out[k] -= 2.0 * mass * in[k];
}

void CubicNonlinearity::split(std::span<const cplx> in, std::span<cplx> nonres, std::span<cplx> res) {
  // sum over n1 = n or n3 = n equals 2 m u_n - |u_n|^2 u_n
  convolution(in, nonres);
  double mass = 0.0;
  for (const auto& z : in) mass += std::norm(z);
  for (std::size_t k = 0; k < in.size(); ++k) {
    const cplx r = std::norm(in[k]) * in[k];
    res[k] = r;
    nonres[k] -= 2.0 * mass * in[k] - r;
  }
}

FourierState renorm_nonlinearity(const FourierState& state, int N) {
  if (N > state.cutoff()) throw ValidationError("renorm_nonlinearity requires N <= M");
  CubicNonlinearity op(N, true, CubicNonlinearity::Backend::fft);
  const auto low = state.low_modes(N);
  std::vector<cplx> out(low.size());
  op.apply(low, out);
  return FourierState(out, state.time()).resized(state.cutoff());
}

std::pair<FourierState, FourierState> split_resonant(const FourierState& state, int N) {
  if (N > state.cutoff()) throw ValidationError("split_resonant requires N <= M");
  CubicNonlinearity op(N, true, CubicNonlinearity::Backend::fft);
  const auto low = state.low_modes(N);
  std::vector<cplx> nonres(low.size()), res(low.size());
  op.split(low, nonres, res);
  return {FourierState(nonres, state.time()).resized(state.cutoff()),
          FourierState(res, state.time()).resized(state.cutoff())};
}

}  // namespace fourns
