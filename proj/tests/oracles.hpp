#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Each routine is written from the defining formula without reusing library
// internals beyond the data types.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "fourns/bitree.hpp"
#include "fourns/spectral.hpp"

namespace oracle {

using fourns::cplx;

inline double japanese(int n, double power) { return std::pow(1.0 + static_cast<double>(n) * n, power / 2.0); }

/// phi in factored form (n1 - n2)(n1 - n)(n1^2 + n2^2 + n3^2 + n^2 + 2 (n1 + n3)^2).
inline std::int64_t phi_factored(std::int64_t n1, std::int64_t n2, std::int64_t n3) {
  const std::int64_t n = n1 - n2 + n3;
  return (n1 - n2) * (n1 - n) * (n1 * n1 + n2 * n2 + n3 * n3 + n * n + 2 * (n1 + n3) * (n1 + n3));
}

inline std::int64_t mu_factored(std::int64_t n1, std::int64_t n2, std::int64_t n3) {
  const std::int64_t n = n1 - n2 + n3;
  return -2 * (n - n1) * (n - n3);
}

/// Triple loop over n1, n2, n3 in [-N, N] with n1 - n2 + n3 = n.
inline std::vector<cplx> cubic_direct(std::span<const cplx> u, int N, bool renormalized) {
  auto at = [&](int n) { return u[static_cast<std::size_t>(n + N)]; };
  double m = 0.0;
  for (const auto& x : u) m += std::norm(x);
  std::vector<cplx> out(u.size());
  for (int n = -N; n <= N; ++n) {
    cplx acc{};
    for (int n1 = -N; n1 <= N; ++n1) {
      for (int n2 = -N; n2 <= N; ++n2) {
        for (int n3 = -N; n3 <= N; ++n3) {
          if (n1 - n2 + n3 == n) acc += at(n1) * std::conj(at(n2)) * at(n3);
        }
      }
    }
    if (renormalized) acc -= 2.0 * m * at(n);
    out[static_cast<std::size_t>(n + N)] = acc;
  }
  return out;
}

/// H = sum n^4 |u|^2 + 1/2 sum u1 u2* u3 u4* - (sum |u|^2)^2 by a quadruple loop.
inline double hamiltonian_direct(std::span<const cplx> u, int N) {
  auto at = [&](int n) { return u[static_cast<std::size_t>(n + N)]; };
  double kin = 0.0, m = 0.0;
  for (int n = -N; n <= N; ++n) {
    kin += std::pow(n, 4) * std::norm(at(n));
    m += std::norm(at(n));
  }
  cplx quartic{};
  for (int n1 = -N; n1 <= N; ++n1)
    for (int n2 = -N; n2 <= N; ++n2)
      for (int n3 = -N; n3 <= N; ++n3) {
        const int n4 = n1 - n2 + n3;
        if (n4 < -N || n4 > N) continue;
        quartic += at(n1) * std::conj(at(n2)) * at(n3) * std::conj(at(n4));
      }
  return kin + 0.5 * quartic.real() - m * m;
}

/// Every node frequency in [-N, N]^{|T|} filtered by the index-function rules.
inline std::set<std::vector<int>> brute_force_assignments(const fourns::OrderedBiTree& tree, int n_root, int N) {
  const auto nodes = tree.nodes();
  const std::size_t count = nodes.size();
  std::set<std::vector<int>> out;
  std::vector<int> f(count, -N);
  while (true) {
    bool ok = f[0] == n_root && f[1] == n_root;
    for (std::size_t a = 0; ok && a < count; ++a) {
      const auto& nd = nodes[a];
      if (nd.terminal()) continue;
      const int na = f[a];
      const int c1 = f[static_cast<std::size_t>(nd.children[0])];
      const int c2 = f[static_cast<std::size_t>(nd.children[1])];
      const int c3 = f[static_cast<std::size_t>(nd.children[2])];
      ok = na == c1 - c2 + c3 && na != c1 && na != c3 && c2 != c1 && c2 != c3;
    }
    if (ok) out.insert(f);
    std::size_t i = 0;
    while (i < count && f[i] == N) f[i++] = -N;
    if (i == count) break;
    ++f[i];
  }
  return out;
}

/// N_0^(2)(t)(v) = Re sum_n sum_{Gamma_N(n)} <n>^{2s} e^{-i phi t} / phi * v1 v2* v3 vn*.
inline double boundary_two_direct(std::span<const cplx> v, double t, double s, int N) {
  auto at = [&](int n) { return v[static_cast<std::size_t>(n + N)]; };
  double total = 0.0;
  for (int n = -N; n <= N; ++n)
    for (int n1 = -N; n1 <= N; ++n1)
      for (int n2 = -N; n2 <= N; ++n2)
        for (int n3 = -N; n3 <= N; ++n3) {
          if (n1 - n2 + n3 != n || n1 == n || n3 == n) continue;
          const double phi = std::pow(n1, 4) - std::pow(n2, 4) + std::pow(n3, 4) - std::pow(n, 4);
          const cplx term = japanese(n, 2.0 * s) * std::exp(cplx(0.0, -phi * t)) / phi * at(n1) *
                            std::conj(at(n2)) * at(n3) * std::conj(at(n));
          total += term.real();
        }
  return total;
}

/// Complex Gaussian vector with E|v_n|^2 = <n>^{-2s}.
inline std::vector<cplx> random_state(std::mt19937_64& rng, int N, double s) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  std::vector<cplx> v(static_cast<std::size_t>(2 * N + 1));
  for (int n = -N; n <= N; ++n) {
    const double re = g(rng);
    const double im = g(rng);
    v[static_cast<std::size_t>(n + N)] = cplx(re, im) / japanese(n, s);
  }
  return v;
}

inline double rel_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace oracle
