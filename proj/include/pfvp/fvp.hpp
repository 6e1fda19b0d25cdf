#pragma once

// Final value problem u' + Au = f, u(T) = u_T: compatibility, data norm,
// backward reconstruction and the e^{T lambda_j} instability table.

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfvp/duhamel.hpp"
#include "pfvp/semigroup.hpp"

namespace pfvp {

struct IncompatibleDataError : std::runtime_error {
  CompatReport report;
  explicit IncompatibleDataError(CompatReport r)
      : std::runtime_error("final data incompatible: u_T - y_f is not in D(e^{TA})"), report(std::move(r)) {}
};

struct InconclusiveDataError : std::runtime_error {
  CompatReport report;
  explicit InconclusiveDataError(CompatReport r)
      : std::runtime_error("compatibility inconclusive at this truncation"), report(std::move(r)) {}
};

struct FvpData {
  SourceTerm f;
  SpectralVec uT;
  double T = 1.0;

  void validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
    uT.check_same(SpectralVec(f.basis()));
    if (f.final_time() < T) throw std::invalid_argument("source does not cover [0, T]");
  }
};

struct YNormReport {
  double uT_sq = 0.0;
  double f_sq = 0.0;        // int ||f||_*^2
  double log_inv_sq = kNegInf;  // log |e^{TA}(u_T - y_f)|^2
  double log_total = kNegInf;   // log of the Y-norm (not squared)
  double total = 0.0;           // may be inf
  bool finite = false;

  nlohmann::json to_json() const {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    return {{"uT_sq", uT_sq},       {"f_sq", f_sq},   {"log_inv_sq", num(log_inv_sq)},
            {"log_total", num(log_total)}, {"total", num(total)}, {"finite", finite}};
  }
};

// |u_T|^2 + ||f||^2 + |u0|^2 with u0 = e^{TA}(u_T - y_f), the last in log space.
inline YNormReport assemble_ynorm(double uT_sq, double f_sq, const SpectralVec& u0, bool finite) {
  YNormReport r;
  r.uT_sq = uT_sq;
  r.f_sq = f_sq;
  r.log_inv_sq = 2.0 * norms(u0).log_normH;
  const double a = uT_sq > 0 ? std::log(uT_sq) : kNegInf;
  const double b = f_sq > 0 ? std::log(f_sq) : kNegInf;
  const double parts[] = {a, b, r.log_inv_sq};
  r.log_total = 0.5 * log_sum_exp(parts);
  r.total = r.log_total == kNegInf ? 0.0 : std::exp(r.log_total);
  r.finite = finite;
  return r;
}

inline YNormReport ynorm(const FvpData& d, const CompatPolicy& policy = {}) {
  d.validate();
  const SpectralVec v = d.uT - yield_yf(d.f, d.T);
  const CompatReport c = check_domain_membership(v, d.T, policy);
  return assemble_ynorm(std::pow(norms(d.uT).normH, 2), d.f.l2_vstar_sq(), apply_inverse(v, d.T),
                        c.verdict == Verdict::compatible);
}

struct FvpResult {
  Trajectory traj;
  CompatReport compat;
  YNormReport ynorm;
  double x_norm = 0.0;
  double stability_ratio = 0.0;  // ||u||_X / ||(f, u_T)||_Y
};

inline FvpResult solve_fvp(const FvpData& d, const CompatPolicy& policy = {}, std::vector<double> tgrid = {}) {
  d.validate();
  if (tgrid.empty()) tgrid = uniform_grid(d.T, 64);
  if (tgrid.back() != d.T) throw std::invalid_argument("output grid must end at T");
  const SpectralVec v = d.uT - yield_yf(d.f, d.T);
  CompatReport c = check_domain_membership(v, d.T, policy);
  if (c.verdict == Verdict::incompatible) throw IncompatibleDataError(std::move(c));
  if (c.verdict == Verdict::inconclusive) throw InconclusiveDataError(std::move(c));
  FvpResult r;
  r.ynorm = assemble_ynorm(std::pow(norms(d.uT).normH, 2), d.f.l2_vstar_sq(), *c.u0, true);
  r.traj = solve_cauchy(*c.u0, d.f, tgrid);
  r.compat = std::move(c);
  r.x_norm = xnorm(r.traj);
  r.stability_ratio = r.ynorm.total > 0 ? r.x_norm / r.ynorm.total : 0.0;
  return r;
}

// Backward reconstruction from the first k modes only. A diagnostic for
// incompatible data, not a solution of the final value problem.
inline SpectralVec truncated_reconstruction(const FvpData& d, std::size_t k) {
  d.validate();
  if (k > d.uT.size()) throw std::invalid_argument("truncation above mode count");
  SpectralVec v = d.uT - yield_yf(d.f, d.T);
  for (std::size_t j = k; j < v.size(); ++j) v[j] = ModalCoef();
  return apply_inverse(v, d.T);
}

// ---------------------------------------------------------------------------
struct InstabilityRow {
  std::size_t j;
  double lambda;
  double final_norm;
  double log_initial_norm;
};

// u_T = e_j, u_j(0) = e^{T lambda_j} e_j.
inline std::vector<InstabilityRow> instability_demo(const BasisPtr& b, double T, std::size_t jmax) {
  if (jmax > b->size()) throw std::invalid_argument("jmax exceeds mode count");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  std::vector<InstabilityRow> rows;
  for (std::size_t j = 1; j <= jmax; ++j) {
    const SpectralVec uT = SpectralVec::unit(b, j - 1);
    const SpectralVec u0 = apply_inverse(uT, T);
    rows.push_back({j, b->lambdas[j - 1], norms(uT).normH, norms(u0).log_normH});
  }
  return rows;
}

inline void write_instability_csv(std::ostream& os, const std::vector<InstabilityRow>& rows) {
  os << "j,lambda,final_norm,log_initial_norm\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", r.j, r.lambda, r.final_norm, r.log_initial_norm);
    os << buf;
  }
}

}  // namespace pfvp
