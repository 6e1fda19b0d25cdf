#pragma once

// e^{-tA} and its unbounded inverse e^{tA} in spectral coordinates, plus the
// truncated membership test for D(e^{TA}).

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfvp/spectral_core.hpp"

namespace pfvp {

inline SpectralVec apply_forward(SpectralVec v, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("apply_forward needs t >= 0 (use apply_inverse)");
  if (t == 0.0) return v;
  const auto& lam = v.basis()->lambdas;
  for (std::size_t j = 0; j < v.size(); ++j) v[j].shift_log(-t * lam[j]);
  return v;
}

// Exact log-scale shift; never overflows, the linear mirror may read inf.
inline SpectralVec apply_inverse(SpectralVec v, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("apply_inverse needs t >= 0");
  if (t == 0.0) return v;
  const auto& lam = v.basis()->lambdas;
  for (std::size_t j = 0; j < v.size(); ++j) v[j].shift_log(t * lam[j]);
  return v;
}

// True when some mode of v is out of the double range.
inline bool has_linear_overflow(const SpectralVec& v) {
  for (std::size_t j = 0; j < v.size(); ++j)
    if (v.log_abs(j) > 709.0) return true;
  return false;
}

// ---------------------------------------------------------------------------
enum class Verdict { compatible, incompatible, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::compatible: return "compatible";
    case Verdict::incompatible: return "incompatible";
    default: return "inconclusive";
  }
}

struct CompatPolicy {
  std::vector<std::size_t> cutoffs;  // empty: N/8, N/4, N/2, N
  double rtol_compat = 1e-6;
  double growth_thresh = 10.0;
  double log_bound = 700.0;  // log S must stay below this for "compatible"

  std::vector<std::size_t> resolve(std::size_t n) const {
    std::vector<std::size_t> c = cutoffs;
    if (c.empty()) {
      for (std::size_t d : {8u, 4u, 2u, 1u}) {
        const std::size_t k = std::max<std::size_t>(1, n / d);
        if (c.empty() || c.back() != k) c.push_back(k);
      }
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] == 0 || c[i] > n) throw std::invalid_argument("cutoff outside 1..N");
      if (i > 0 && c[i] <= c[i - 1]) throw std::invalid_argument("cutoffs must be strictly increasing");
    }
    if (!(rtol_compat > 0.0) || !(growth_thresh > 1.0))
      throw std::invalid_argument("policy tolerances must be positive");
    return c;
  }
};

struct CompatReport {
  double T = 0.0;
  std::vector<std::size_t> cutoffs;
  std::vector<double> log_partial_norms;  // log S_{N_k}
  double log_rho = 0.0;                   // log(S_{N_m} / S_{N_{m-1}})
  double rho = 1.0;
  std::vector<double> log_growth;  // consecutive log ratios
  Verdict verdict = Verdict::inconclusive;
  double rtol_compat = 0.0, growth_thresh = 0.0;
  std::optional<SpectralVec> u0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["T"] = T;
    j["cutoffs"] = cutoffs;
    auto logs = nlohmann::json::array();
    for (double l : log_partial_norms) {
      if (std::isfinite(l))
        logs.push_back(l);
      else
        logs.push_back(nullptr);
    }
    j["partial_norms_log"] = logs;
    j["rho"] = std::isfinite(rho) ? nlohmann::json(rho) : nlohmann::json(nullptr);
    j["log_rho"] = std::isfinite(log_rho) ? nlohmann::json(log_rho) : nlohmann::json(nullptr);
    auto gr = nlohmann::json::array();
    for (double g : log_growth) {
      if (std::isfinite(g))
        gr.push_back(g);
      else
        gr.push_back(nullptr);
    }
    j["growth_log"] = gr;
    j["verdict"] = to_string(verdict);
    j["rtol_compat"] = rtol_compat;
    j["growth_thresh"] = growth_thresh;
    j["heuristic"] = "cutoff stabilization of truncated graph norms";
    j["u0"] = u0 ? pfvp::to_json(*u0) : nlohmann::json(nullptr);
    return j;
  }
};

// Log ratio of two log-magnitudes, 0/0 read as 1.
inline double log_ratio(double num, double den) {
  if (num == kNegInf && den == kNegInf) return 0.0;
  return num - den;
}

inline CompatReport check_domain_membership(const SpectralVec& v, double T, const CompatPolicy& policy = {}) {
  if (!(T > 0.0)) throw std::invalid_argument("membership test needs T > 0");
  CompatReport r;
  r.T = T;
  r.cutoffs = policy.resolve(v.size());
  r.rtol_compat = policy.rtol_compat;
  r.growth_thresh = policy.growth_thresh;

  SpectralVec u0 = apply_inverse(v, T);
  std::vector<double> terms;
  std::size_t next = 0;
  for (std::size_t j = 0; j < v.size() && next < r.cutoffs.size(); ++j) {
    const double la = u0.log_abs(j);
    if (la != kNegInf) terms.push_back(2.0 * la);
    if (j + 1 == r.cutoffs[next]) {
      r.log_partial_norms.push_back(0.5 * log_sum_exp(terms));
      ++next;
    }
  }
  const auto& S = r.log_partial_norms;
  for (std::size_t k = 1; k < S.size(); ++k) r.log_growth.push_back(log_ratio(S[k], S[k - 1]));
  r.log_rho = S.size() >= 2 ? r.log_growth.back() : 0.0;
  r.rho = std::exp(r.log_rho);

  const bool bounded = S.back() < policy.log_bound;
  const bool stable = r.log_rho <= std::log1p(policy.rtol_compat);
  bool grows = false;
  for (double g : r.log_growth) grows = grows || g >= std::log(policy.growth_thresh);
  if (stable && bounded) {
    r.verdict = Verdict::compatible;
    r.u0 = std::move(u0);
  } else if (grows) {
    r.verdict = Verdict::incompatible;
  } else {
    r.verdict = Verdict::inconclusive;
  }
  return r;
}

// ---------------------------------------------------------------------------
struct HeightSamples {
  std::vector<double> t, h, log_h;
  bool degenerate = false;
};

inline HeightSamples height_function(const SpectralVec& u0, const std::vector<double>& tgrid) {
  HeightSamples s;
  s.t = tgrid;
  s.degenerate = u0.is_zero();
  for (double t : tgrid) {
    const TripleNorms n = norms(apply_forward(u0, t));
    s.h.push_back(s.degenerate ? 0.0 : n.normH);
    s.log_h.push_back(n.log_normH);
  }
  return s;
}

// log of sum_{j<=cutoff} lambda_j^{2n} e^{-2 t lambda_j} |c_j|^2, i.e. 2 log|A^n e^{-tA} u0|.
inline double log_stiffness(const SpectralVec& u0, double t, int n, std::size_t cutoff) {
  const auto& lam = u0.basis()->lambdas;
  std::vector<double> terms;
  for (std::size_t j = 0; j < std::min(cutoff, u0.size()); ++j) {
    const double la = u0.log_abs(j);
    if (la == kNegInf) continue;
    terms.push_back(2.0 * n * std::log(lam[j]) - 2.0 * t * lam[j] + 2.0 * la);
  }
  return log_sum_exp(terms);
}

}  // namespace pfvp
