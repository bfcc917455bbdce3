#pragma once

// Fourier-side state, norms, phase functions, index sets and the
// renormalized cubic nonlinearity on the circle.
//
// Coefficients are stored for n in [-M, M] with the 2*pi factor dropped, so
// the spatial mean of |u|^2 is realized as sum_n |u_n|^2.

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace fourns {

using cplx = std::complex<double>;
using PhaseInt = std::int64_t;

/// Largest frequency for which quartic phase sums are guaranteed exact.
inline constexpr int kMaxFrequency = 10000;

/// Japanese bracket <n>^(2r) = (1 + n^2)^r.
double bracket_pow(int n, double two_r);

class FourierState {
 public:
  FourierState() : FourierState(0) {}
  explicit FourierState(int cutoff, double time = 0.0);
  explicit FourierState(std::vector<cplx> modes, double time = 0.0);

  static FourierState single_mode(int cutoff, int n, cplx c, double time = 0.0);

  int cutoff() const { return cutoff_; }
  double time() const { return time_; }
  std::size_t size() const { return modes_.size(); }

  /// Coefficient u_n; zero outside [-M, M].
  cplx operator[](int n) const {
    return (n < -cutoff_ || n > cutoff_) ? cplx{} : modes_[static_cast<std::size_t>(n + cutoff_)];
  }
  std::span<const cplx> modes() const { return modes_; }

  /// Coefficients for |n| <= N as a contiguous array of length 2N+1
  /// (zero-filled where N exceeds the cutoff).
  std::vector<cplx> low_modes(int N) const;

  FourierState with_time(double t) const;
  FourierState with_modes(std::vector<cplx> modes) const;
  /// P_{<=N}, keeping the cutoff.
  FourierState projected(int N) const;
  /// Same coefficients on a different cutoff (pads with zeros or drops modes).
  FourierState resized(int cutoff) const;
  FourierState scaled(double lambda) const;

 private:
  void validate() const;

  int cutoff_ = 0;
  double time_ = 0.0;
  std::vector<cplx> modes_;
};

FourierState operator-(const FourierState& a, const FourierState& b);

struct SobolevIndex {
  double s = 0.35;
  double eps = 0.01;
  double sigma = s - 0.5 - eps;

  /// Validates eps > 0 and returns sigma = s - 1/2 - eps.
  static SobolevIndex make(double s, double eps = 0.01);
};

/// ( sum_n <n>^(2r) |u_n|^2 )^(1/2)
double sobolev_norm(const FourierState& state, double r);
double sobolev_norm(std::span<const cplx> low, double r);

/// Frequencies (n1, n2, n3, n) with n = n1 - n2 + n3.
struct PhaseQuadruple {
  int n1 = 0;
  int n2 = 0;
  int n3 = 0;
  int n = 0;

  static PhaseQuadruple from_triple(int n1, int n2, int n3) { return {n1, n2, n3, n1 - n2 + n3}; }
  /// Throws ValidationError unless n = n1 - n2 + n3.
  static PhaseQuadruple make(int n1, int n2, int n3, int n);

  /// Membership in Gamma(n): additionally n1 != n and n3 != n.
  bool non_resonant() const { return n1 != n && n3 != n; }
  int max_abs() const;
  friend bool operator==(const PhaseQuadruple&, const PhaseQuadruple&) = default;
};

/// n1^4 - n2^4 + n3^4 - n^4, exact. Throws NumericalGuardError for
/// frequencies beyond kMaxFrequency.
PhaseInt phase_phi(const PhaseQuadruple& q);
/// n1^2 - n2^2 + n3^2 - n^2 = -2 (n - n1)(n - n3).
PhaseInt phase_mu(const PhaseQuadruple& q);

/// Gamma_N(n) in lexicographic (n1, n2) order.
std::vector<PhaseQuadruple> gamma_set(int n, int N);

/// Evaluates the cubic terms of the truncated equation on the modes |n| <= N.
///
/// `apply` returns P N(P u) for the renormalized nonlinearity
///   N(u)_n = sum_{n1-n2+n3=n} u_{n1} conj(u_{n2}) u_{n3} - 2 (sum_m |u_m|^2) u_n
/// or the plain cubic convolution when `renormalized` is false. Not thread
/// safe: the object owns scratch buffers, use one per worker.
class CubicNonlinearity {
 public:
  enum class Backend { automatic, fft, direct };

  explicit CubicNonlinearity(int N, bool renormalized = true, Backend backend = Backend::automatic);
  ~CubicNonlinearity();
  CubicNonlinearity(CubicNonlinearity&&) noexcept;
  CubicNonlinearity& operator=(CubicNonlinearity&&) noexcept;

  int cutoff() const { return N_; }
  bool uses_fft() const { return use_fft_; }
  /// Padded transform length (0 when the direct backend is active).
  int transform_length() const;

  /// in/out hold 2N+1 coefficients, index n + N.
  void apply(std::span<const cplx> in, std::span<cplx> out);
  /// Full cubic convolution sum_{n1-n2+n3=n} u u* u on |n| <= N.
  void convolution(std::span<const cplx> in, std::span<cplx> out);
  /// Non-resonant sum over Gamma_N(n) and the resonant part |u_n|^2 u_n.
  void split(std::span<const cplx> in, std::span<cplx> nonres, std::span<cplx> res);

 private:
  struct FftWork;

  int N_;
  bool renormalized_;
  bool use_fft_;
  std::unique_ptr<FftWork> fft_;
};

/// Smallest length >= n of the form 2^a 3^b 5^c.
int fast_transform_length(int n);

/// P_{<=N} N(P_{<=N} u), via zero-padded FFT (padding factor 3).
FourierState renorm_nonlinearity(const FourierState& state, int N);

/// (non-resonant Gamma_N part, resonant part |u_n|^2 u_n); -i*nonres + i*res
/// equals -i * renorm_nonlinearity.
std::pair<FourierState, FourierState> split_resonant(const FourierState& state, int N);

}  // namespace fourns
