#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pfvp/fvp.hpp"

using namespace pfvp;

namespace {

SourceTerm random_source(const BasisPtr& b, std::mt19937_64& rng, double T, std::size_t K) {
  std::normal_distribution<double> g;
  std::vector<double> t = uniform_grid(T, K);
  std::vector<std::vector<cplx>> nodes(t.size(), std::vector<cplx>(b->size()));
  for (auto& n : nodes)
    for (std::size_t j = 0; j < n.size(); ++j) n[j] = cplx{g(rng), g(rng)} / double(j + 1);
  return SourceTerm(b, t, nodes);
}

SpectralVec smooth_vec(const BasisPtr& b, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> c(b->size());
  // Gaussian decay on the scale N/8 keeps the upper half of the modes negligible
  const double w = double(c.size()) / 8.0;
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = cplx{g(rng), g(rng)} * std::exp(-std::pow((j + 1) / w, 2));
  return SpectralVec(b, c);
}

}  // namespace

TEST(Fvp, ManufacturedRoundTrip) {
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  const auto u0 = analyze(b, [](double x, double) { return cplx(x * (kPi - x)); });
  const auto f = SourceTerm::constant(SpectralVec::unit(b, 0), 1.0);
  const auto fwd = solve_cauchy(u0, f, {0.0, 1.0});
  const auto res = solve_fvp({f, fwd.final_state(), 1.0});
  EXPECT_EQ(res.compat.verdict, Verdict::compatible);
  const double s = norms(u0).normH;
  for (std::size_t j = 0; j < 64; ++j) {
    EXPECT_NEAR(std::abs(res.traj.u[0].value(j) - u0.value(j)), 0.0, 1e-8 * s);
    EXPECT_NEAR(std::abs(res.traj.final_state().value(j) - fwd.final_state().value(j)), 0.0,
                1e-8 * norms(fwd.final_state()).normH);
  }
  EXPECT_TRUE(res.ynorm.finite);
  EXPECT_GT(res.stability_ratio, 0.0);
}

TEST(Fvp, SingleModeBackward) {
  auto b = build_basis(DomainSpec::interval(kPi, 16));
  const auto res = solve_fvp({SourceTerm::zero(b, 1.0), SpectralVec::unit(b, 0), 1.0}, {}, uniform_grid(1.0, 4));
  for (std::size_t i = 0; i < res.traj.size(); ++i)
    EXPECT_NEAR(res.traj.u[i].value(0).real(), std::exp(1.0 - res.traj.t[i]), 1e-14);
  EXPECT_NEAR(res.traj.u[0].value(0).real(), std::exp(1.0), 1e-15);
}

TEST(Fvp, HarmonicTailRaisesIncompatible) {
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  std::vector<cplx> c(64);
  for (std::size_t j = 0; j < 64; ++j) c[j] = 1.0 / double(j + 1);
  const FvpData d{SourceTerm::zero(b, 1.0), SpectralVec(b, c), 1.0};
  try {
    solve_fvp(d);
    FAIL() << "expected IncompatibleDataError";
  } catch (const IncompatibleDataError& e) {
    EXPECT_EQ(e.report.verdict, Verdict::incompatible);
    const auto& S = e.report.log_partial_norms;
    for (std::size_t k = 1; k < S.size(); ++k) EXPECT_GT(S[k], S[k - 1] + std::log(10.0));
  }
  // diagnostic reconstruction still available
  const auto u8 = truncated_reconstruction(d, 8);
  EXPECT_NEAR(u8.log_abs(7), 64.0 - std::log(8.0), 1e-12);
  EXPECT_TRUE(u8[8].is_zero());
  EXPECT_FALSE(ynorm(d).finite);
}

TEST(Fvp, FlatTailIsInconclusive) {
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  SpectralVec uT = apply_forward(SpectralVec(b, std::vector<cplx>(64, 1.0)), 1.0);
  EXPECT_THROW(solve_fvp({SourceTerm::zero(b, 1.0), uT, 1.0}), InconclusiveDataError);
}

TEST(YNorm, SingleModeParts) {
  auto b = build_basis(DomainSpec::interval(kPi, 8));
  const auto r = ynorm({SourceTerm::zero(b, 1.0), SpectralVec::unit(b, 0, std::exp(-1.0)), 1.0});
  EXPECT_NEAR(r.uT_sq, std::exp(-2.0), 1e-16);
  EXPECT_EQ(r.f_sq, 0.0);
  EXPECT_NEAR(r.log_inv_sq, 0.0, 1e-15);
  EXPECT_NEAR(r.total, std::sqrt(std::exp(-2.0) + 1), 1e-15);
  EXPECT_TRUE(r.finite);
  const auto z = ynorm({SourceTerm::zero(b, 1.0), SpectralVec(b), 1.0});
  EXPECT_EQ(z.total, 0.0);
  EXPECT_TRUE(z.finite);
}

TEST(YNorm, MatchesSolverInternals) {
  auto b = build_basis(DomainSpec::interval(kPi, 32));
  std::mt19937_64 rng(1);
  const auto u0 = smooth_vec(b, rng);
  const auto f = random_source(b, rng, 1.0, 6);
  const FvpData d{f, solve_cauchy(u0, f, {0.0, 1.0}).final_state(), 1.0};
  const auto y = ynorm(d);
  const auto r = solve_fvp(d);
  EXPECT_EQ(y.total, r.ynorm.total);
  EXPECT_EQ(y.log_inv_sq, r.ynorm.log_inv_sq);
  EXPECT_NEAR(y.log_inv_sq, 2 * norms(u0).log_normH, 1e-13);
}

TEST(Fvp, EndpointExactAndBijection) {
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  std::mt19937_64 rng(2);
  for (int r = 0; r < 10; ++r) {
    const auto u0 = smooth_vec(b, rng);
    const auto f = random_source(b, rng, 1.0, 1 + r);
    const auto uT = solve_cauchy(u0, f, {0.0, 1.0}).final_state();
    const auto res = solve_fvp({f, uT, 1.0});
    for (std::size_t j = 0; j < 64; ++j) {
      EXPECT_EQ(res.traj.final_state().value(j), uT.value(j));
      EXPECT_EQ(res.traj.u[0].value(j), u0.value(j));
    }
  }
}

TEST(Fvp, StabilityConstantHeldOut) {
  auto b = build_basis(DomainSpec::interval(kPi, 32));
  std::mt19937_64 rng(3);
  std::vector<double> ratios;
  for (int r = 0; r < 100; ++r) {
    const auto u0 = smooth_vec(b, rng);
    const auto f = random_source(b, rng, 1.0, 1 + r % 5);
    const auto res = solve_fvp({f, solve_cauchy(u0, f, {0.0, 1.0}).final_state(), 1.0});
    ratios.push_back(res.stability_ratio);
  }
  const double c = 2.0 * *std::max_element(ratios.begin(), ratios.begin() + 50);
  for (std::size_t i = 50; i < 100; ++i) EXPECT_LE(ratios[i], c);
  RecordProperty("fitted_c", std::to_string(c));
}

TEST(Instability, ExactLogRatios) {
  auto b = build_basis(DomainSpec::interval(kPi, 64));
  const auto rows = instability_demo(b, 1.0, 30);
  ASSERT_EQ(rows.size(), 30u);
  EXPECT_NEAR(std::exp(rows[0].log_initial_norm), std::exp(1.0), 1e-15);
  EXPECT_NEAR(std::exp(rows[2].log_initial_norm), 8103.083927575384, 1e-9);
  EXPECT_EQ(rows[29].log_initial_norm, 900.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].final_norm, 1.0);
    EXPECT_EQ(rows[i].log_initial_norm, double((i + 1) * (i + 1)));
    if (i > 0) {
      EXPECT_GE(rows[i].log_initial_norm, rows[i - 1].log_initial_norm);
    }
  }
  EXPECT_THROW(instability_demo(b, 1.0, 65), std::invalid_argument);
  std::stringstream ss;
  write_instability_csv(ss, instability_demo(b, 1.0, 2));
  EXPECT_EQ(ss.str(), "j,lambda,final_norm,log_initial_norm\n1,1,1,1\n2,4,1,4\n");
}
