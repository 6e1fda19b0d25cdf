#pragma once

// Forward Cauchy problem u' + Au = f, u(0) = u0 in spectral coordinates.
// f is piecewise linear in t; every time integral against e^{-(t-s)A} is done
// in closed form per panel.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfvp/etd.hpp"
#include "pfvp/semigroup.hpp"
#include "pfvp/spectral_core.hpp"

namespace pfvp {

// Piecewise-linear V*-valued source. Panel k runs over [t[k], t[k+1]] with
// values lo[k] at the left end and hi[k] at the right end; for a continuous
// source hi[k] == lo[k+1].
class SourceTerm {
 public:
  SourceTerm() = default;

  // Node samples, continuous interpolant.
  SourceTerm(BasisPtr basis, std::vector<double> t, const std::vector<std::vector<cplx>>& nodes)
      : basis_(std::move(basis)), t_(std::move(t)) {
    if (nodes.size() != t_.size()) throw std::invalid_argument("source: sample count differs from grid");
    check_grid();
    for (std::size_t k = 0; k + 1 < t_.size(); ++k) {
      lo_.push_back(nodes[k]);
      hi_.push_back(nodes[k + 1]);
    }
    check_sizes();
  }

  static SourceTerm from_panels(BasisPtr basis, std::vector<double> t, std::vector<std::vector<cplx>> lo,
                                std::vector<std::vector<cplx>> hi) {
    SourceTerm s;
    s.basis_ = std::move(basis);
    s.t_ = std::move(t);
    s.check_grid();
    if (lo.size() + 1 != s.t_.size() || hi.size() != lo.size())
      throw std::invalid_argument("source: panel count differs from grid");
    s.lo_ = std::move(lo);
    s.hi_ = std::move(hi);
    s.check_sizes();
    return s;
  }

  static SourceTerm zero(BasisPtr basis, double T) {
    std::vector<std::vector<cplx>> n(2, std::vector<cplx>(basis->size()));
    return SourceTerm(basis, {0.0, T}, n);
  }

  static SourceTerm constant(const SpectralVec& v, double T) {
    const auto c = v.values();
    return SourceTerm(v.basis(), {0.0, T}, {c, c});
  }

  const BasisPtr& basis() const { return basis_; }
  const std::vector<double>& grid() const { return t_; }
  double final_time() const { return t_.back(); }
  std::size_t panels() const { return lo_.size(); }
  std::size_t modes() const { return basis_->size(); }
  cplx lo(std::size_t k, std::size_t j) const { return lo_[k][j]; }
  cplx hi(std::size_t k, std::size_t j) const { return hi_[k][j]; }

  // Panel containing t; the last panel is closed on the right.
  std::size_t panel_of(double t) const {
    if (t < t_.front() || t > t_.back()) throw std::out_of_range("time outside the source grid");
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t k = std::size_t(it - t_.begin());
    k = k == 0 ? 0 : k - 1;
    return std::min(k, panels() - 1);
  }

  // Interpolation weight of t in panel k; exactly 1 at t == t[k+1].
  double theta(std::size_t k, double t) const { return (t - t_[k]) / (t_[k + 1] - t_[k]); }

  cplx value(std::size_t j, double t) const {
    const std::size_t k = panel_of(t);
    const double th = theta(k, t);
    return (1.0 - th) * lo_[k][j] + th * hi_[k][j];
  }

  std::vector<cplx> values_at(double t) const {
    std::vector<cplx> out(modes());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = value(j, t);
    return out;
  }

  // int_0^T ||f||_*^2 dt, exact for the linear interpolant.
  double l2_vstar_sq() const {
    CompensatedSum s;
    for (std::size_t j = 0; j < modes(); ++j) {
      CompensatedSum m;
      for (std::size_t k = 0; k < panels(); ++k) {
        const cplx a = lo_[k][j], b = hi_[k][j];
        m.add((t_[k + 1] - t_[k]) * (std::norm(a) + (a * std::conj(b)).real() + std::norm(b)) / 3.0);
      }
      s.add(m.value() / basis_->lambdas[j]);
    }
    return s.value();
  }

  SourceTerm& operator+=(const SourceTerm& o) {
    if (o.t_ != t_ || o.modes() != modes()) throw std::invalid_argument("sources on different grids");
    for (std::size_t k = 0; k < panels(); ++k)
      for (std::size_t j = 0; j < modes(); ++j) {
        lo_[k][j] += o.lo_[k][j];
        hi_[k][j] += o.hi_[k][j];
      }
    return *this;
  }
  SourceTerm& scale(double w) {
    for (auto& p : lo_)
      for (auto& x : p) x *= w;
    for (auto& p : hi_)
      for (auto& x : p) x *= w;
    return *this;
  }

 private:
  void check_grid() const {
    if (t_.size() < 2) throw std::invalid_argument("source: empty time grid");
    if (t_.front() != 0.0) throw std::invalid_argument("source grid must start at t = 0");
    for (std::size_t k = 1; k < t_.size(); ++k)
      if (!(t_[k] > t_[k - 1])) throw std::invalid_argument("source grid must be strictly increasing");
  }
  void check_sizes() const {
    for (const auto& p : lo_)
      if (p.size() != basis_->size()) throw GridMismatchError("source samples do not match basis");
    for (const auto& p : hi_)
      if (p.size() != basis_->size()) throw GridMismatchError("source samples do not match basis");
  }

  BasisPtr basis_;
  std::vector<double> t_;
  std::vector<std::vector<cplx>> lo_, hi_;
};

// CSV: header "t, mode_1_re, mode_1_im, ...", one row per node.
inline void write_source_csv(std::ostream& os, const SourceTerm& f) {
  os << "t";
  for (std::size_t j = 1; j <= f.modes(); ++j) os << ", mode_" << j << "_re, mode_" << j << "_im";
  os << "\n";
  char buf[64];
  for (std::size_t k = 0; k < f.grid().size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", f.grid()[k]);
    os << buf;
    for (std::size_t j = 0; j < f.modes(); ++j) {
      const cplx v = k < f.panels() ? f.lo(k, j) : f.hi(k - 1, j);
      std::snprintf(buf, sizeof buf, ", %.17g, %.17g", v.real(), v.imag());
      os << buf;
    }
    os << "\n";
  }
}

inline std::vector<std::vector<double>> read_numeric_csv(std::istream& is, std::size_t& columns) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("CSV: missing header");
  columns = std::count(line.begin(), line.end(), ',') + 1;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      // strtod, not stod: subnormal values are legitimate here
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || cell.find_first_not_of(" \t\r", std::size_t(end - cell.c_str())) != std::string::npos ||
          !std::isfinite(v))
        throw std::runtime_error("CSV: bad number '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != columns) throw std::runtime_error("CSV: row width differs from header");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline SourceTerm read_source_csv(std::istream& is, const BasisPtr& basis) {
  std::size_t cols = 0;
  const auto rows = read_numeric_csv(is, cols);
  if (cols != 1 + 2 * basis->size()) throw GridMismatchError("source CSV mode count does not match basis");
  std::vector<double> t;
  std::vector<std::vector<cplx>> nodes;
  for (const auto& r : rows) {
    t.push_back(r[0]);
    std::vector<cplx> v(basis->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = {r[1 + 2 * j], r[2 + 2 * j]};
    nodes.push_back(std::move(v));
  }
  return SourceTerm(basis, std::move(t), nodes);
}

// ---------------------------------------------------------------------------
// Y_j(t) = int_0^t e^{-(t-s) lambda_j} f_j(s) ds at each (sorted) time in ts.
// The value at a grid node is bit-identical however it is requested.
inline std::vector<std::vector<cplx>> yields(const SourceTerm& f, const std::vector<double>& ts) {
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (ts[i] < ts[i - 1]) throw std::invalid_argument("time grid must be sorted");
  std::vector<std::size_t> pk(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) pk[i] = f.panel_of(ts[i]);
  std::vector<std::vector<cplx>> out(ts.size(), std::vector<cplx>(f.modes()));
  const auto& tg = f.grid();
  for (std::size_t j = 0; j < f.modes(); ++j) {
    const double lam = f.basis()->lambdas[j];
    cplx Y = 0.0;  // Y at tg[k]
    std::size_t k = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      while (k < pk[i]) {
        Y = std::exp(-lam * (tg[k + 1] - tg[k])) * Y + etd::panel(lam, tg[k + 1] - tg[k], f.lo(k, j), f.hi(k, j));
        ++k;
      }
      const double th = f.theta(k, ts[i]);
      const double dt = ts[i] - tg[k];
      const cplx ft = (1.0 - th) * f.lo(k, j) + th * f.hi(k, j);
      out[i][j] = std::exp(-lam * dt) * Y + etd::panel(lam, dt, f.lo(k, j), ft);
    }
  }
  return out;
}

inline SpectralVec yield_yf(const SourceTerm& f, double T) {
  if (f.grid().size() < 2) throw std::invalid_argument("source: empty time grid");
  return SpectralVec(f.basis(), yields(f, {T})[0]);
}

// ---------------------------------------------------------------------------
struct Trajectory {
  BasisPtr basis;
  std::vector<double> t;
  std::vector<SpectralVec> u;
  std::shared_ptr<const SourceTerm> f;  // for u' = f - Au
  std::vector<TripleNorms> cached;

  std::size_t size() const { return t.size(); }
  const SpectralVec& final_state() const { return u.back(); }
};

inline void check_tgrid(const std::vector<double>& tgrid, double T) {
  if (tgrid.empty()) throw std::invalid_argument("empty output time grid");
  for (std::size_t i = 0; i < tgrid.size(); ++i) {
    if (tgrid[i] < 0.0 || tgrid[i] > T) throw std::out_of_range("output time outside [0, T] of the source");
    if (i > 0 && !(tgrid[i] > tgrid[i - 1])) throw std::invalid_argument("output grid must be increasing");
  }
}

inline std::vector<double> uniform_grid(double T, std::size_t n) {
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = T * double(i) / double(n);
  g[n] = T;
  return g;
}

// u(t) = e^{-tA} u0 + Y(t)
inline Trajectory solve_cauchy(const SpectralVec& u0, const SourceTerm& f, const std::vector<double>& tgrid) {
  u0.check_same(SpectralVec(f.basis()));
  check_tgrid(tgrid, f.final_time());
  Trajectory tr;
  tr.basis = u0.basis();
  tr.t = tgrid;
  tr.f = std::make_shared<SourceTerm>(f);
  const auto Y = yields(f, tgrid);
  for (std::size_t i = 0; i < tgrid.size(); ++i) {
    SpectralVec ui = apply_forward(u0, tgrid[i]);
    ui += SpectralVec(u0.basis(), Y[i]);
    tr.cached.push_back(norms(ui));
    tr.u.push_back(std::move(ui));
  }
  return tr;
}

// Trapezoid X-norm with u' taken from the equation.
inline double xnorm_sq(const Trajectory& tr) {
  if (tr.size() < 2) throw std::invalid_argument("xnorm needs at least two nodes");
  const auto& lam = tr.basis->lambdas;
  std::vector<double> v2(tr.size()), s2(tr.size()), d2(tr.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const TripleNorms n = tr.cached.size() == tr.size() ? tr.cached[i] : norms(tr.u[i]);
    v2[i] = n.normV * n.normV;
    s2[i] = n.normVstar * n.normVstar;
    sup = std::max(sup, n.normH * n.normH);
    CompensatedSum d;
    for (std::size_t j = 0; j < lam.size(); ++j) {
      const cplx fj = tr.f ? tr.f->value(j, tr.t[i]) : cplx{0.0, 0.0};
      d.add(std::norm(fj - lam[j] * tr.u[i].value(j)) / lam[j]);
    }
    d2[i] = d.value();
  }
  CompensatedSum total;
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
    const double h = tr.t[i + 1] - tr.t[i];
    total.add(0.5 * h * (v2[i] + v2[i + 1] + s2[i] + s2[i + 1] + d2[i] + d2[i + 1]));
  }
  total.add(sup);
  return total.value();
}
inline double xnorm(const Trajectory& tr) { return std::sqrt(xnorm_sq(tr)); }

// ---------------------------------------------------------------------------
// Exact-in-time per-mode integrals of |u|^2, lambda |u|^2, |u'|^2 / lambda,
// where u_j on panel k is e^{-lambda s} U_k + panel(lo, f(t_k + s), s).
struct ModalIntegrals {
  double int_V2 = 0.0;      // int ||u||_V^2
  double int_H2 = 0.0;      // int |u|^2
  double int_dVstar2 = 0.0;  // int ||u'||_*^2
  double sup_H2 = 0.0;      // max over panel ends and quadrature points
};

inline ModalIntegrals modal_integrals(const SpectralVec& u0, const SourceTerm& f, double T) {
  const auto& lam = f.basis()->lambdas;
  const auto& tg = f.grid();
  ModalIntegrals out;
  CompensatedSum iv, ih, id;
  // |u(t)|^2 summed over modes on the sampled set
  std::vector<double> sup_samples;
  std::vector<double> tsamp;
  for (std::size_t k = 0; k < f.panels() && tg[k] < T; ++k) {
    tsamp.push_back(tg[k]);
    tsamp.push_back(0.5 * (tg[k] + std::min(T, tg[k + 1])));
  }
  tsamp.push_back(T);
  const auto Ys = yields(f, tsamp);
  for (std::size_t i = 0; i < tsamp.size(); ++i) {
    SpectralVec ui = apply_forward(u0, tsamp[i]);
    ui += SpectralVec(u0.basis(), Ys[i]);
    out.sup_H2 = std::max(out.sup_H2, std::pow(norms(ui).normH, 2));
  }
  const auto u0v = u0.values();
  for (std::size_t j = 0; j < lam.size(); ++j) {
    const double l = lam[j];
    cplx U = u0v[j];
    for (std::size_t k = 0; k < f.panels() && tg[k] < T; ++k) {
      const double h = std::min(T, tg[k + 1]) - tg[k];
      const double H = tg[k + 1] - tg[k];
      const cplx a = f.lo(k, j), b = f.hi(k, j);
      auto uat = [&](double s) {
        const double th = s / H;
        return std::exp(-l * s) * U + etd::panel(l, s, a, (1.0 - th) * a + th * b);
      };
      auto fat = [&](double s) {
        const double th = s / H;
        return (1.0 - th) * a + th * b;
      };
      const double h2 = etd::graded_gauss(l, h, [&](double s) { return std::norm(uat(s)); });
      ih.add(h2);
      iv.add(l * h2);
      id.add(etd::graded_gauss(l, h, [&](double s) { return std::norm(fat(s) - l * uat(s)); }) / l);
      U = uat(h);
    }
  }
  out.int_V2 = iv.value();
  out.int_H2 = ih.value();
  out.int_dVstar2 = id.value();
  return out;
}

struct EnergyReport {
  double lhs = 0.0, rhs = 0.0;
  bool pass = false;
  double sobolev_lhs = 0.0, sobolev_rhs = 0.0;  // sup|u|^2 vs (1 + 1/(lambda_1 T)) int||u||^2 + int||u'||_*^2
  bool sobolev_pass = false;
};

inline EnergyReport check_energy_estimate(const SpectralVec& u0, const SourceTerm& f, double T = -1.0) {
  if (T < 0.0) T = f.final_time();
  const EigenBasis& b = *u0.basis();
  const ModalIntegrals m = modal_integrals(u0, f, T);
  EnergyReport r;
  const double u0sq = std::pow(norms(u0).normH, 2);
  r.lhs = m.int_V2;
  r.rhs = u0sq / b.C4 + f.l2_vstar_sq() / (b.C4 * b.C4);
  r.pass = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-300;
  r.sobolev_lhs = std::max(m.sup_H2, u0sq);
  r.sobolev_rhs = (1.0 + 1.0 / (b.lambdas.front() * T)) * m.int_V2 + m.int_dVstar2;
  r.sobolev_pass = r.sobolev_lhs <= r.sobolev_rhs * (1.0 + 1e-12) + 1e-300;
  return r;
}

// ---------------------------------------------------------------------------
// Constant source whose yield is h: f_j = lambda_j h_j / (1 - e^{-T lambda_j}).
inline SourceTerm surjectivity_witness(const SpectralVec& h, double T) {
  const auto& lam = h.basis()->lambdas;
  std::vector<cplx> c(h.size());
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = lam[j] * h.value(j) / (-std::expm1(-T * lam[j]));
  return SourceTerm(h.basis(), {0.0, T}, {c, c});
}

// max_i rel. deviation between e^{-(T-t)A} u(t) and e^{-TA} u0 + int_0^t e^{-(T-s)A} f ds,
// the integral done by graded Gauss independently of the ETD panels.
inline double integration_factor_defect(const Trajectory& tr, const SpectralVec& u0, double T) {
  const SourceTerm& f = *tr.f;
  const auto& lam = tr.basis->lambdas;
  const auto& tg = f.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.t[i];
    const SpectralVec lhs = apply_forward(tr.u[i], T - t);
    std::vector<cplx> rhs(lam.size());
    for (std::size_t j = 0; j < lam.size(); ++j) {
      const double l = lam[j];
      CompensatedSum re, im;
      for (std::size_t k = 0; k < f.panels() && tg[k] < t; ++k) {
        const double e = std::min(t, tg[k + 1]);
        const double H = tg[k + 1] - tg[k];
        // integrate backwards from e so the grading sits at the near-T end
        auto g = [&](double s, bool real) {
          const double ss = e - s;
          const double th = (ss - tg[k]) / H;
          const cplx fv = (1.0 - th) * f.lo(k, j) + th * f.hi(k, j);
          const cplx w = std::exp(-(T - ss) * l) * fv;
          return real ? w.real() : w.imag();
        };
        re.add(etd::graded_gauss(l, e - tg[k], [&](double s) { return g(s, true); }));
        im.add(etd::graded_gauss(l, e - tg[k], [&](double s) { return g(s, false); }));
      }
      rhs[j] = std::exp(-T * l) * u0.value(j) + cplx{re.value(), im.value()};
    }
    const double scale = std::max(norms(lhs).normH, 1e-300);
    CompensatedSum d;
    for (std::size_t j = 0; j < lam.size(); ++j) d.add(std::norm(lhs.value(j) - rhs[j]));
    worst = std::max(worst, std::sqrt(d.value()) / scale);
  }
  return worst;
}

}  // namespace pfvp
