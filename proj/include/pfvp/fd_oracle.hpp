#pragma once

// Finite-difference theta-scheme for u_t = u_xx + f on (0,L), u = g at the ends.
// Shares nothing with the spectral solvers except BoundaryData; used as the
// independent reference for them.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "pfvp/boundary_heat.hpp"

namespace pfvp::fd {

struct CflViolationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FdScheme {
  int M = 64;          // subintervals; M + 1 nodes including both ends
  double dt = 1e-3;
  double theta = 0.5;  // 0.5 = Crank-Nicolson, 1 = backward Euler

  void validate(double L) const {
    if (M < 8) throw std::invalid_argument("fd: need M >= 8");
    if (!(dt > 0.0)) throw std::invalid_argument("fd: dt must be positive");
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("fd: theta outside [0, 1]");
    const double dx = L / M;
    if (theta < 0.5 && dt > dx * dx / (2 * (1 - 2 * theta)))
      throw CflViolationError("fd: explicit part violates dt <= dx^2 / (2 (1 - 2 theta))");
  }
};

struct FdSolution {
  std::vector<double> x;
  std::vector<double> t;
  std::vector<std::vector<double>> u;  // one row per saved time

  const std::vector<double>& final_row() const { return u.back(); }
};

// a: sub-diagonal, b: diagonal, c: super-diagonal; d is overwritten with the solution
inline void thomas(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                   std::vector<double>& d) {
  const std::size_t n = b.size();
  std::vector<double> cp(n), dp(n);
  cp[0] = c[0] / b[0];
  dp[0] = d[0] / b[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = b[i] - a[i] * cp[i - 1];
    cp[i] = c[i] / m;
    dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
  }
  d[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) d[i] = dp[i] - cp[i] * d[i + 1];
}

using Field = std::function<double(double t, double x)>;

// The step is shrunk to T / ceil(T / dt) so the last step lands on T.
// save_every = 0 keeps only the initial and final rows.
inline FdSolution fd_solve(double L, const std::function<double(double)>& u0, const Field& f, const BoundaryData& g,
                           double T, const FdScheme& s, int save_every = 0) {
  s.validate(L);
  g.validate();
  if (!(T > 0.0) || T > g.final_time()) throw std::invalid_argument("fd: T outside the boundary data");
  const int steps = int(std::ceil(T / s.dt - 1e-9));
  const double dt = T / steps;
  FdScheme eff = s;
  eff.dt = dt;
  eff.validate(L);
  const int M = s.M;
  const double dx = L / M, r = dt / (dx * dx), th = s.theta;

  FdSolution out;
  out.x.resize(M + 1);
  for (int i = 0; i <= M; ++i) out.x[i] = i == M ? L : i * dx;
  std::vector<double> u(M + 1);
  for (int i = 0; i <= M; ++i) u[i] = u0(out.x[i]);
  auto inject = [&](std::vector<double>& v, double t) {
    const auto [gl, gr] = g.value(std::min(t, g.final_time()));
    v[0] = gl;
    v[M] = gr;
  };
  inject(u, 0.0);
  out.t.push_back(0.0);
  out.u.push_back(u);

  const std::size_t n = M - 1;
  std::vector<double> a(n, -th * r), b(n, 1 + 2 * th * r), c(n, -th * r), rhs(n);
  a[0] = 0.0;
  c[n - 1] = 0.0;
  std::vector<double> next(M + 1);
  for (int k = 0; k < steps; ++k) {
    const double t0 = k * dt, t1 = k + 1 == steps ? T : (k + 1) * dt;
    inject(next, t1);
    for (int i = 1; i < M; ++i) {
      const double lap = u[i - 1] - 2 * u[i] + u[i + 1];
      rhs[i - 1] = u[i] + (1 - th) * r * lap + dt * (th * f(t1, out.x[i]) + (1 - th) * f(t0, out.x[i]));
    }
    rhs[0] += th * r * next[0];
    rhs[n - 1] += th * r * next[M];
    thomas(a, b, c, rhs);
    for (int i = 1; i < M; ++i) next[i] = rhs[i - 1];
    u.swap(next);
    if ((save_every > 0 && (k + 1) % save_every == 0) || k + 1 == steps) {
      if (out.t.back() != t1) {
        out.t.push_back(t1);
        out.u.push_back(u);
      }
    }
  }
  return out;
}

// Sine coefficients <u, e_j>, j = 1..K, by composite Simpson on the FD nodes.
inline std::vector<double> project(const std::vector<double>& x, const std::vector<double>& u, double L,
                                   std::size_t K) {
  const std::size_t M = x.size() - 1;
  if (M % 2) throw std::invalid_argument("fd projection: Simpson needs an even number of intervals");
  const double h = L / double(M);
  std::vector<double> c(K);
  for (std::size_t j = 1; j <= K; ++j) {
    CompensatedSum s;
    for (std::size_t i = 0; i <= M; ++i) {
      const double w = (i == 0 || i == M) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s.add(w * u[i] * std::sqrt(2.0 / L) * std::sin(double(j) * kPi * x[i] / L));
    }
    c[j - 1] = s.value() * h / 3.0;
  }
  return c;
}

// ||P_K(u_fd - u_spec)||_{L2} over the first K modes.
inline double modal_distance(const std::vector<double>& fd_coeffs, const SpectralVec& spec) {
  if (fd_coeffs.size() > spec.size()) throw std::invalid_argument("fd: more modes than the spectral basis");
  CompensatedSum s;
  for (std::size_t j = 0; j < fd_coeffs.size(); ++j) s.add(std::norm(spec.value(j) - fd_coeffs[j]));
  return std::sqrt(s.value());
}

// ---------------------------------------------------------------------------
// Manufactured data on (0, pi) that both solvers represent without truncation:
//   u0 = a + (b - a) x / pi + sum c_k sin(k x)
//   f  = c0 + sum (p_m + q_m t) sin(m x)
//   g  = (a + c0 t, b + c0 t)
// The shared slope c0 keeps the data compatible at the corners.
struct ManufacturedCase {
  double a = 0.0, b = 0.0, c0 = 0.0, T = 1.0;
  std::vector<std::pair<int, double>> sines;
  struct Term {
    int m;
    double p, q;
  };
  std::vector<Term> forcing;

  double u0(double x) const {
    double v = a + (b - a) * x / kPi;
    for (const auto& [k, c] : sines) v += c * std::sin(k * x);
    return v;
  }
  double f(double t, double x) const {
    double v = c0;
    for (const auto& tm : forcing) v += (tm.p + tm.q * t) * std::sin(tm.m * x);
    return v;
  }
  BoundaryData g() const { return {{0.0, T}, {a, a + c0 * T}, {b, b + c0 * T}}; }
};

inline ManufacturedCase random_case(std::mt19937_64& rng, double T = 1.0) {
  std::normal_distribution<double> n;
  ManufacturedCase c;
  c.T = T;
  c.a = n(rng);
  c.b = n(rng);
  c.c0 = 0.5 * n(rng);
  for (int k = 1; k <= 3; ++k) c.sines.push_back({k, n(rng) / k});
  for (int m = 1; m <= 2; ++m) c.forcing.push_back({m, n(rng), n(rng)});
  return c;
}

inline SourceTerm spectral_source(const ManufacturedCase& c, const BasisPtr& basis) {
  const double unit = std::sqrt(kPi / 2);
  std::vector<cplx> f0 = lift_coeffs(*basis, c.c0, c.c0), f1 = f0;
  for (const auto& tm : c.forcing)
    if (std::size_t(tm.m) <= basis->size()) {
      f0[tm.m - 1] += tm.p * unit;
      f1[tm.m - 1] += (tm.p + tm.q * c.T) * unit;
    }
  return SourceTerm(basis, {0.0, c.T}, {f0, f1});
}

// Spectral trajectory on the interval (0, pi) basis.
inline IbvpTrajectory spectral_trajectory(const ManufacturedCase& c, const BasisPtr& basis,
                                          const std::vector<double>& tgrid) {
  if (basis->spec.kind != DomainKind::interval || basis->spec.L1 != kPi)
    throw std::invalid_argument("manufactured cases live on (0, pi)");
  const double unit = std::sqrt(kPi / 2);  // sin(kx) = sqrt(pi/2) e_k
  const std::size_t N = basis->size();
  std::vector<cplx> u0 = lift_coeffs(*basis, c.a, c.b);
  for (const auto& [k, v] : c.sines)
    if (std::size_t(k) <= N) u0[k - 1] += v * unit;
  return solve_ibvp(SpectralVec(basis, u0), spectral_source(c, basis), c.g(), tgrid);
}

inline SpectralVec spectral_solution(const ManufacturedCase& c, const BasisPtr& basis) {
  return spectral_trajectory(c, basis, {0.0, c.T}).final_state();
}

// FD solution at T projected onto the first K modes, distance to the spectral one.
inline double oracle_distance(const ManufacturedCase& c, const SpectralVec& spectral, const FdScheme& s,
                              std::size_t K) {
  const auto sol = fd_solve(
      kPi, [&](double x) { return c.u0(x); }, [&](double t, double x) { return c.f(t, x); }, c.g(), c.T, s);
  return modal_distance(project(sol.x, sol.final_row(), kPi, K), spectral);
}

}  // namespace pfvp::fd
