#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pfvp/fd_oracle.hpp"

using namespace pfvp;
using namespace pfvp::fd;

namespace {

double max_err_single_mode(int M, double dt) {
  const auto sol = fd_solve(
      kPi, [](double x) { return std::sin(x); }, [](double, double) { return 0.0; }, BoundaryData::zero(1.0), 1.0,
      {M, dt, 0.5});
  double e = 0.0;
  for (std::size_t i = 0; i < sol.x.size(); ++i)
    e = std::max(e, std::abs(sol.final_row()[i] - std::exp(-1.0) * std::sin(sol.x[i])));
  return e;
}

}  // namespace

TEST(Thomas, SolvesTridiagonal) {
  // [2 1 0; 1 3 1; 0 1 2] x = [3 5 3] -> x = 1
  std::vector<double> a{0, 1, 1}, b{2, 3, 2}, c{1, 1, 0}, d{3, 5, 3};
  thomas(a, b, c, d);
  for (double v : d) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(FdSolve, SingleModeDecay) {
  EXPECT_LE(max_err_single_mode(200, 1e-3), 1e-4);
  // halving both steps
  const double e1 = max_err_single_mode(40, 0.02), e2 = max_err_single_mode(80, 0.01);
  EXPECT_GE(e1 / e2, 3.5);
}

TEST(FdSolve, SteadyStateFromRest) {
  for (double th : {0.5, 1.0}) {
    const auto sol = fd_solve(
        kPi, [](double) { return 0.0; }, [](double, double) { return 0.0; }, BoundaryData::constant(10.0, 1.0, 1.0),
        10.0, {64, 0.01, th});
    for (double v : sol.final_row()) EXPECT_NEAR(v, 1.0, 1e-3);
    EXPECT_EQ(sol.final_row().front(), 1.0);
    EXPECT_EQ(sol.final_row().back(), 1.0);
  }
}

TEST(FdSolve, SchemeValidationAndCfl) {
  auto zero = [](double) { return 0.0; };
  auto nof = [](double, double) { return 0.0; };
  const auto g = BoundaryData::zero(1.0);
  const double dx = kPi / 32;
  EXPECT_THROW(fd_solve(kPi, zero, nof, g, 1.0, {32, dx * dx, 0.0}), CflViolationError);
  EXPECT_NO_THROW(fd_solve(kPi, zero, nof, g, 1.0, {32, 0.4 * dx * dx, 0.0}));
  EXPECT_NO_THROW(fd_solve(kPi, zero, nof, g, 1.0, {32, 0.1, 0.5}));
  EXPECT_THROW(fd_solve(kPi, zero, nof, g, 1.0, {4, 0.1, 0.5}), std::invalid_argument);
  EXPECT_THROW(fd_solve(kPi, zero, nof, g, 1.0, {32, 0.1, 1.5}), std::invalid_argument);
  EXPECT_THROW(fd_solve(kPi, zero, nof, g, 2.0, {32, 0.1, 0.5}), std::invalid_argument);
  // save_every keeps intermediate rows; last step lands on T
  const auto sol = fd_solve(kPi, zero, nof, g, 1.0, {32, 0.3, 0.5}, 1);
  EXPECT_EQ(sol.t.size(), 5u);
  EXPECT_EQ(sol.t.back(), 1.0);
}

TEST(FdSolve, ProjectionOfSine) {
  const auto sol = fd_solve(
      kPi, [](double x) { return std::sin(2 * x); }, [](double, double) { return 0.0; }, BoundaryData::zero(0.1),
      0.1, {128, 0.1, 0.5});
  const auto c = project(sol.x, sol.u.front(), kPi, 4);
  EXPECT_NEAR(c[1], std::sqrt(kPi / 2), 1e-8);
  EXPECT_NEAR(c[0], 0.0, 1e-12);
  std::vector<double> odd(10, 0.0), xo(10, 0.0);
  EXPECT_THROW(project(xo, odd, kPi, 2), std::invalid_argument);
}

TEST(Oracle, SpectralAgreesWithCrankNicolson) {
  auto basis = build_basis(DomainSpec::interval(kPi, 64));
  std::mt19937_64 rng(21);
  for (int r = 0; r < 10; ++r) {
    const auto c = random_case(rng);
    const auto spec = spectral_solution(c, basis);
    const double e1 = oracle_distance(c, spec, {32, 1.0 / 16, 0.5}, 8);
    const double e2 = oracle_distance(c, spec, {64, 1.0 / 32, 0.5}, 8);
    const double h = kPi / 32;
    EXPECT_LE(e1, 5.0 * (h * h + 1.0 / 256)) << "case " << r;
    EXPECT_GE(e1 / e2, 3.5) << "case " << r << " e1=" << e1 << " e2=" << e2;
  }
}
