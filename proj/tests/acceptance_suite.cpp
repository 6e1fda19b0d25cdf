// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pfvp/pfvp.hpp"

using namespace pfvp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

SpectralVec smooth_vec(const BasisPtr& b, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> c(b->size());
  const double w = double(c.size()) / 8.0;
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = cplx{g(rng), g(rng)} * std::exp(-std::pow((j + 1) / w, 2));
  return SpectralVec(b, c);
}

// piecewise linear in t with K panels, 1/j decay in space
SourceTerm random_source(const BasisPtr& b, std::mt19937_64& rng, double T, std::size_t K, double pow_lambda = 0.0) {
  std::normal_distribution<double> g;
  std::vector<std::vector<cplx>> nodes(K + 1, std::vector<cplx>(b->size()));
  for (auto& n : nodes)
    for (std::size_t j = 0; j < n.size(); ++j)
      n[j] = cplx{g(rng), g(rng)} * std::pow(b->lambdas[j], pow_lambda) / double(j + 1);
  return SourceTerm(b, uniform_grid(T, K), nodes);
}

BoundaryData oscillatory(double T, int k, double phase) {
  BoundaryData g;
  for (int i = 0; i <= 64; ++i) {
    const double t = T * i / 64;
    g.t.push_back(t);
    g.left.push_back(std::sin(k * kPi * t / T + phase));
    g.right.push_back(std::cos(k * kPi * t / T - phase));
  }
  return g;
}

// sine coefficients of the constant 1 on (0, pi), from the integral directly
double b_one(int j) { return std::sqrt(2.0 / kPi) * (1.0 - std::cos(j * kPi)) / j; }

// every solve_ibvp output in the run is checked against u(T) = e^{-TA}u(0) + y_f - z_g
double worst_bijection = 0.0;
std::size_t bijection_count = 0;

void record_bijection(const IbvpTrajectory& tr, const SourceTerm& f) {
  worst_bijection = std::max(worst_bijection, bijection_defect(tr, f));
  ++bijection_count;
}

// ---------------------------------------------------------------------------
void instability() {
  const auto t0 = Clock::now();
  const double T = 1.0;
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  const auto rows = instability_demo(b, T, 30);
  double worst = 0.0;
  for (std::size_t j = 1; j <= 30; ++j) {
    const double ref = T * double(j * j);
    const auto& r = rows[j - 1];
    worst = std::max(worst, std::abs(r.log_initial_norm - std::log(r.final_norm) - ref) / ref);
    // same ratio through the inverse semigroup
    const auto u0 = apply_inverse(SpectralVec::unit(b, j - 1), T);
    worst = std::max(worst, std::abs(u0.log_abs(j - 1) - ref) / ref);
  }
  const double dt = seconds_since(t0);
  report(1, "instability table", rows.size() == 30 && worst <= 1e-10 && dt < 1.0,
         fmt("max log rel err %.2e (<= 1e-10), %.3f s (< 1 s)", worst, dt));
}

void round_trip() {
  const auto t0 = Clock::now();
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  std::mt19937_64 rng(101);
  double worst_u0 = 0.0, worst_end = 0.0;
  int compatible = 0;
  for (int r = 0; r < 100; ++r) {
    const auto u0 = smooth_vec(b, rng);
    const auto f = random_source(b, rng, 1.0, 1 + r % 8);
    const auto uT = solve_cauchy(u0, f, {0.0, 1.0}).final_state();
    try {
      const auto res = solve_fvp({f, uT, 1.0});
      compatible += res.compat.verdict == Verdict::compatible;
      worst_u0 = std::max(worst_u0, norms(res.traj.u.front() - u0).normH / norms(u0).normH);
      worst_end = std::max(worst_end, norms(res.traj.final_state() - uT).normH / norms(uT).normH);
    } catch (const std::exception&) {
      worst_u0 = worst_end = INFINITY;
    }
  }
  const double dt = seconds_since(t0);
  report(2, "round trip", compatible == 100 && worst_u0 <= 1e-7 && worst_end <= 1e-8 && dt < 10.0,
         fmt("%.0f/100 compatible, u0 rel %.2e (<= 1e-7), u(T) rel %.2e (<= 1e-8), %.2f s", compatible, worst_u0,
             worst_end, dt));
}

void incompatibility() {
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  CompatPolicy p;
  p.cutoffs = {16, 32, 64};
  auto tail = [&](const std::function<double(double)>& c) {
    std::vector<cplx> v(64);
    for (std::size_t j = 0; j < 64; ++j) v[j] = c(double(j + 1));
    return check_domain_membership(SpectralVec(b, v), 1.0, p);
  };
  const auto harm = tail([](double j) { return 1.0 / j; });
  const auto expo = tail([](double j) { return std::exp(-j); });  // e^{-sqrt(lambda_j)}
  const auto good = tail([](double j) { return std::exp(-1.5 * j * j); });
  double min_growth = INFINITY;
  for (const auto* r : {&harm, &expo})
    for (double g : r->log_growth) min_growth = std::min(min_growth, g);
  const bool ok = harm.verdict == Verdict::incompatible && expo.verdict == Verdict::incompatible &&
                  min_growth >= std::log(10.0) && good.verdict == Verdict::compatible;
  report(3, "incompatibility detection", ok,
         "1/j " + to_string(harm.verdict) + ", e^-j " + to_string(expo.verdict) + ", e^-1.5j^2 " +
             to_string(good.verdict) + fmt(", min log growth %.4g (>= log 10)", min_growth));
}

void oracle() {
  const auto t0 = Clock::now();
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  std::mt19937_64 rng(42);
  const double C = 5.0;
  double worst_bound = 0.0, min_ratio = INFINITY;
  bool boundary = false;
  for (int r = 0; r < 10; ++r) {
    const auto c = fd::random_case(rng);
    boundary = boundary || c.a != 0.0 || c.b != 0.0;
    const auto tr = fd::spectral_trajectory(c, b, uniform_grid(c.T, 8));
    record_bijection(tr, fd::spectral_source(c, b));
    const double e1 = fd::oracle_distance(c, tr.final_state(), {32, 1.0 / 16, 0.5}, 8);
    const double e2 = fd::oracle_distance(c, tr.final_state(), {64, 1.0 / 32, 0.5}, 8);
    const double h = kPi / 32, dt = 1.0 / 16;
    worst_bound = std::max(worst_bound, e1 / (C * (dt * dt + h * h)));
    min_ratio = std::min(min_ratio, e1 / e2);
  }
  const double dt = seconds_since(t0);
  report(4, "spectral vs Crank-Nicolson", boundary && worst_bound <= 1.0 && min_ratio >= 3.5 && dt < 30.0,
         fmt("err/(5(dt^2+dx^2)) max %.3f (<= 1), min ratio %.2f (>= 3.5), %.2f s (< 30 s)", worst_bound, min_ratio,
             dt));
}

void energy() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> Tdist(0.1, 2.0);
  std::normal_distribution<double> g;
  const std::vector<DomainSpec> specs{DomainSpec::interval(kPi, 32), DomainSpec::interval(0.5, 16),
                                      DomainSpec::rectangle(1.0, 2.0, 6)};
  int energy_bad = 0, sobolev_bad = 0;
  double worst = 0.0;
  for (int r = 0; r < 200; ++r) {
    auto b = build_basis(specs[r % specs.size()]);
    const double T = Tdist(rng);
    std::vector<cplx> c(b->size());
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = cplx{g(rng), g(rng)} * std::exp(-0.1 * j);
    const auto rep = check_energy_estimate(SpectralVec(b, c), random_source(b, rng, T, 1 + r % 7, 0.5));
    energy_bad += !rep.pass;
    sobolev_bad += !rep.sobolev_pass;
    worst = std::max({worst, rep.lhs / rep.rhs, rep.sobolev_lhs / rep.sobolev_rhs});
  }
  report(5, "energy and Sobolev bounds", energy_bad == 0 && sobolev_bad == 0,
         fmt("violations energy %.0f sobolev %.0f of 200, max lhs/rhs %.3f", energy_bad, sobolev_bad, worst));
}

void identities() {
  auto b = build_basis(DomainSpec::interval(kPi, 16));
  std::mt19937_64 rng(66);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int r = 0; r < 100; ++r) {
    const double a0 = n(rng), a1 = n(rng), c1 = n(rng), c2 = n(rng), kink = std::abs(n(rng));
    const double xm = 0.5 + 2.0 * std::uniform_real_distribution<double>()(rng);
    auto fn = [&](double x) {
      return a0 + (a1 - a0) * x / kPi + c1 * std::sin(x) + c2 * std::sin(3 * x) + kink * std::abs(x - xm) -
             kink * ((1 - x / kPi) * xm + x / kPi * (kPi - xm));
    };
    const auto u = sample_on_grid(*b, [&](double x, double) { return cplx(fn(x)); });
    const double s = 1.0 + std::abs(a0) + std::abs(a1) + std::abs(c1) + std::abs(c2) + kink;
    const std::size_t last = u.nx - 1;
    // trace of K_0(a, b)
    const LiftNode k{a0, a1, kPi};
    worst = std::max({worst, std::abs(k(0.0) - a0) / s, std::abs(k(kPi) - a1) / s});
    const auto p = projections_pq(u, b);
    const auto pp = projections_pq(p.Pu, b);
    for (std::size_t i = 0; i <= last; ++i) {
      const double x = b->grid.x[i];
      // K_0 gamma_0 u is the affine interpolant of the end values
      const double q = u.at(0).real() * (1 - x / kPi) + u.at(last).real() * x / kPi;
      worst = std::max(worst, std::abs(p.Qu.at(i) - q) / s);
      worst = std::max(worst, std::abs(pp.Pu.at(i) - p.Pu.at(i)) / s);
      worst = std::max(worst, std::abs(p.Pu.at(i) + p.Qu.at(i) - u.at(i)) / s);
    }
  }
  report(6, "trace/lift/projection ids", worst <= 1e-8, fmt("max rel defect %.2e (<= 1e-8) on 100 samples", worst));
}

void zg() {
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  int cauchy = 0;
  for (int k = 1; k <= 10; ++k) cauchy += zg_eps_sweep(b, oscillatory(1.0, k, 0.3 * k), 1.0).cauchy;
  const double T = 1.0;
  const auto z = zg_integral(b, BoundaryData::constant(T, 1.0, 1.0), T);
  double closed = 0.0;
  for (int j = 1; j <= 64; ++j) {
    const double ref = -b_one(j) * -std::expm1(-T * j * j);  // z_g enters as -b_j (1 - e^{-T lambda_j})
    if (ref != 0.0) closed = std::max(closed, std::abs(z.value(j - 1).real() - ref) / std::abs(ref));
    else closed = std::max(closed, std::abs(z.value(j - 1)));
  }
  const auto g1 = oscillatory(T, 3, 0.1), g2 = oscillatory(T, 5, 0.7);
  auto comb = g1, g2s = g2;
  comb.scale(2.5) += g2s.scale(-0.75);
  double lin = 0.0;
  for (double t : {0.3, 1.0}) {
    const auto ref = 2.5 * zg_integral(b, g1, t) - 0.75 * zg_integral(b, g2, t);
    lin = std::max(lin, norms(zg_integral(b, comb, t) - ref).normH / norms(ref).normH);
  }
  report(7, "boundary integral z_g", cauchy == 10 && closed <= 1e-10 && lin <= 1e-10,
         fmt("cauchy %.0f/10, closed form rel %.2e (<= 1e-10), linearity rel %.2e (<= 1e-10)", cauchy, closed, lin));
}

void steady_state() {
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  const auto f = SourceTerm::zero(b, 5.0);
  const auto tr = solve_ibvp(SpectralVec(b), f, BoundaryData::constant(5.0, 1.0, 1.0), uniform_grid(5.0, 10));
  record_bijection(tr, f);
  // u(T) - 1 = v(T) because the lift of (1, 1) is exactly 1
  const double d = norms(tr.v.back()).normH;
  const double bound = std::sqrt(kPi) * std::exp(-5.0) + 1e-6;
  report(8, "steady state", d <= bound, fmt("||u(5) - 1|| = %.4e (<= %.4e)", d, bound));
}

void generator_lab() {
  using namespace pfvp::lab;
  std::mt19937_64 rng(99);
  double min_sigma = INFINITY, law = 0.0, sup = 0.0;
  bool finite = true;
  cplx argmax;
  for (int r = 0; r < 50; ++r) {
    const MatrixGenerator g(random_elliptic(8, rng));
    for (double t : {0.1, 1.0, 10.0}) min_sigma = std::min(min_sigma, check_injectivity(g, t).sigma_min);
    law = std::max({law, semigroup_law_defect(g.A, 0.3, 0.7), semigroup_law_defect(g.A, 1.0, 2.5)});
    const auto s = check_sectoriality(g, {});
    finite = finite && std::isfinite(s.sup) && std::isfinite(s.argmax.real()) && std::isfinite(s.argmax.imag());
    if (s.sup > sup) {
      sup = s.sup;
      argmax = s.argmax;
    }
  }
  const auto lc = check_logconvexity_criterion(MatrixGenerator(random_selfadjoint(8, rng)), 1000, 7);
  const bool ok = min_sigma > 0.0 && law <= 1e-10 && finite && lc.criterion_fraction == 1.0 &&
                  lc.logconvex_fraction == 1.0 && lc.worst_convexity <= 1e-10;
  report(9, "generator lab", ok,
         fmt("min sigma %.2e (> 0), law %.2e (<= 1e-10), sector sup %.3g at (%.3g", min_sigma, law, sup,
             argmax.real()) +
             fmt(", %.3g); selfadjoint criterion %.3f, log-convex %.3f, worst %.2e (<= 1e-10)", argmax.imag(),
                 lc.criterion_fraction, lc.logconvex_fraction, lc.worst_convexity));
}

void bijection() {
  auto b = build_basis(DomainSpec::interval(kPi, 32));
  std::mt19937_64 rng(110);
  std::normal_distribution<double> n;
  for (int r = 0; r < 10; ++r) {
    std::vector<cplx> c(32);
    for (std::size_t j = 0; j < 32; ++j) c[j] = n(rng) / double(j + 1);
    const auto f = random_source(b, rng, 1.0, 4);
    const auto g = oscillatory(1.0, 1 + r, n(rng));
    record_bijection(solve_ibvp(SpectralVec(b, c), f, g, uniform_grid(1.0, 16)), f);
    record_bijection(solve_ibvp(SpectralVec(b, c), f, g, uniform_grid(1.0, 16), ZgRoute::direct), f);
  }
  report(10, "bijection with boundary data", worst_bijection <= 1e-10,
         fmt("max rel defect %.2e (<= 1e-10) over %.0f solves", worst_bijection, double(bijection_count)));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{instability, round_trip,   incompatibility, oracle,        energy,
                                                    identities,  zg,           steady_state,    generator_lab, bijection};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(int(i + 1), "exception", false, e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
