#pragma once

// Dirichlet Laplacian eigenbasis on an interval or rectangle, coefficient
// transforms and the H / V / V* norms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfvp/modal_coef.hpp"
#include "pfvp/numeric.hpp"

namespace pfvp {

struct InvalidSpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct GridMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class DomainKind { interval, rectangle };

inline std::string to_string(DomainKind k) { return k == DomainKind::interval ? "interval" : "rectangle"; }
inline DomainKind domain_kind_from(const std::string& s) {
  if (s == "interval") return DomainKind::interval;
  if (s == "rectangle") return DomainKind::rectangle;
  throw InvalidSpecError("unknown domain kind '" + s + "'");
}

struct DomainSpec {
  DomainKind kind = DomainKind::interval;
  double L1 = kPi;
  double L2 = kPi;  // rectangle only
  int N = 16;       // modes per axis

  static DomainSpec interval(double L, int N) { return {DomainKind::interval, L, L, N}; }
  static DomainSpec rectangle(double L1, double L2, int N) { return {DomainKind::rectangle, L1, L2, N}; }

  void validate() const {
    if (!(L1 > 0.0) || !std::isfinite(L1)) throw InvalidSpecError("domain length must be positive");
    if (kind == DomainKind::rectangle && (!(L2 > 0.0) || !std::isfinite(L2)))
      throw InvalidSpecError("domain length must be positive");
    if (N < 1) throw InvalidSpecError("mode count must be >= 1");
  }
  std::size_t mode_count() const {
    return kind == DomainKind::interval ? std::size_t(N) : std::size_t(N) * std::size_t(N);
  }
  bool operator==(const DomainSpec& o) const {
    return kind == o.kind && L1 == o.L1 && N == o.N && (kind == DomainKind::interval || L2 == o.L2);
  }
};

// Composite Simpson grid, Q subintervals per axis (Q even), Q+1 nodes.
struct QuadGrid {
  std::vector<double> x, wx;
  std::vector<double> y, wy;  // single node of weight 1 for the interval

  std::size_t nx() const { return x.size(); }
  std::size_t ny() const { return y.size(); }
  std::size_t size() const { return nx() * ny(); }

  static void simpson(double L, int Q, std::vector<double>& nodes, std::vector<double>& w) {
    nodes.resize(Q + 1);
    w.resize(Q + 1);
    const double h = L / Q;
    for (int i = 0; i <= Q; ++i) {
      nodes[i] = (i == Q) ? L : i * h;
      w[i] = (i == 0 || i == Q) ? h / 3.0 : (i % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
    }
  }
};

struct ModeIndex {
  int jx = 1;
  int jy = 0;  // 0 on the interval
};

class EigenBasis {
 public:
  DomainSpec spec;
  std::vector<double> lambdas;
  std::vector<ModeIndex> modes;
  int panels = 0;
  QuadGrid grid;
  double C1 = 1.0, C2 = 1.0, C3 = 1.0, C4 = 1.0;

  std::size_t size() const { return lambdas.size(); }
  double lambda(std::size_t m) const { return lambdas[m]; }

  // sqrt(2/L) sin(j pi x / L)
  static double sine(double L, int j, double x) { return std::sqrt(2.0 / L) * std::sin(j * kPi * x / L); }

  double eval(std::size_t m, double x, double y = 0.0) const {
    const ModeIndex& mi = modes[m];
    if (spec.kind == DomainKind::interval) return sine(spec.L1, mi.jx, x);
    return sine(spec.L1, mi.jx, x) * sine(spec.L2, mi.jy, y);
  }

  nlohmann::json descriptor() const {
    nlohmann::json d;
    d["kind"] = to_string(spec.kind);
    d["lengths"] = spec.kind == DomainKind::interval ? nlohmann::json::array({spec.L1})
                                                     : nlohmann::json::array({spec.L1, spec.L2});
    d["modes"] = spec.N;
    return d;
  }
};

using BasisPtr = std::shared_ptr<const EigenBasis>;

inline BasisPtr build_basis(const DomainSpec& spec) {
  spec.validate();
  auto b = std::make_shared<EigenBasis>();
  b->spec = spec;
  b->panels = 8 * spec.N;
  QuadGrid::simpson(spec.L1, b->panels, b->grid.x, b->grid.wx);
  if (spec.kind == DomainKind::interval) {
    b->grid.y = {0.0};
    b->grid.wy = {1.0};
    const double k = kPi / spec.L1;
    for (int j = 1; j <= spec.N; ++j) {
      b->modes.push_back({j, 0});
      // (j*pi/L)^2; for L == pi this is j*j exactly
      b->lambdas.push_back(spec.L1 == kPi ? double(j) * j : (j * k) * (j * k));
    }
  } else {
    QuadGrid::simpson(spec.L2, b->panels, b->grid.y, b->grid.wy);
    struct Entry {
      double lam;
      ModeIndex mi;
    };
    std::vector<Entry> all;
    for (int j = 1; j <= spec.N; ++j) {
      for (int k = 1; k <= spec.N; ++k) {
        const double a = spec.L1 == kPi ? double(j) * j : (j * kPi / spec.L1) * (j * kPi / spec.L1);
        const double c = spec.L2 == kPi ? double(k) * k : (k * kPi / spec.L2) * (k * kPi / spec.L2);
        all.push_back({a + c, {j, k}});
      }
    }
    std::stable_sort(all.begin(), all.end(), [](const Entry& p, const Entry& q) { return p.lam < q.lam; });
    for (const auto& e : all) {
      b->lambdas.push_back(e.lam);
      b->modes.push_back(e.mi);
    }
  }
  const double l1 = b->lambdas.front();
  b->C1 = 1.0 / std::sqrt(l1);
  b->C2 = 1.0 / l1;
  b->C3 = 1.0;
  b->C4 = 1.0;
  return b;
}

// ---------------------------------------------------------------------------
// Samples on the quadrature grid, x fastest: index = iy * nx + ix.
struct GridFunction {
  std::size_t nx = 0, ny = 0;
  std::vector<cplx> values;

  cplx& at(std::size_t ix, std::size_t iy = 0) { return values[iy * nx + ix]; }
  const cplx& at(std::size_t ix, std::size_t iy = 0) const { return values[iy * nx + ix]; }
};

inline GridFunction sample_on_grid(const EigenBasis& b, const std::function<cplx(double, double)>& fn) {
  GridFunction g{b.grid.nx(), b.grid.ny(), {}};
  g.values.resize(g.nx * g.ny);
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix) g.at(ix, iy) = fn(b.grid.x[ix], b.grid.y[iy]);
  return g;
}

// ---------------------------------------------------------------------------
class SpectralVec {
 public:
  SpectralVec() = default;
  explicit SpectralVec(BasisPtr b) : basis_(std::move(b)), c_(basis_->size()) {}
  SpectralVec(BasisPtr b, const std::vector<cplx>& vals) : SpectralVec(std::move(b)) {
    if (vals.size() != c_.size()) throw GridMismatchError("coefficient count does not match basis");
    for (std::size_t j = 0; j < vals.size(); ++j) c_[j] = ModalCoef(vals[j]);
  }

  static SpectralVec unit(BasisPtr b, std::size_t m, cplx value = 1.0) {
    SpectralVec v(std::move(b));
    v.c_.at(m) = ModalCoef(value);
    return v;
  }

  const BasisPtr& basis() const { return basis_; }
  std::size_t size() const { return c_.size(); }
  ModalCoef& operator[](std::size_t j) { return c_[j]; }
  const ModalCoef& operator[](std::size_t j) const { return c_[j]; }

  // Linear-scale mirror; entries may be +-inf when out of range.
  std::vector<cplx> values() const {
    std::vector<cplx> out(c_.size());
    for (std::size_t j = 0; j < c_.size(); ++j) out[j] = c_[j].value();
    return out;
  }
  cplx value(std::size_t j) const { return c_[j].value(); }
  double log_abs(std::size_t j) const { return c_[j].log_abs(); }

  bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](const ModalCoef& c) { return c.is_zero(); });
  }

  SpectralVec& operator+=(const SpectralVec& o) {
    check_same(o);
    for (std::size_t j = 0; j < c_.size(); ++j) c_[j] += o.c_[j];
    return *this;
  }
  SpectralVec& operator-=(const SpectralVec& o) {
    check_same(o);
    for (std::size_t j = 0; j < c_.size(); ++j) c_[j] -= o.c_[j];
    return *this;
  }
  friend SpectralVec operator+(SpectralVec a, const SpectralVec& b) { return a += b; }
  friend SpectralVec operator-(SpectralVec a, const SpectralVec& b) { return a -= b; }
  SpectralVec operator-() const {
    SpectralVec r = *this;
    for (auto& c : r.c_) c = -c;
    return r;
  }
  SpectralVec& scale(double w) {
    for (auto& c : c_) c.scale(w);
    return *this;
  }
  SpectralVec& scale(cplx w) {
    for (auto& c : c_) c.scale(w);
    return *this;
  }
  friend SpectralVec operator*(double w, SpectralVec v) { return v.scale(w); }

  void check_same(const SpectralVec& o) const {
    if (!basis_ || !o.basis_ || c_.size() != o.c_.size() ||
        (basis_ != o.basis_ && !(basis_->spec == o.basis_->spec)))
      throw GridMismatchError("spectral vectors live on different bases");
  }

 private:
  BasisPtr basis_;
  std::vector<ModalCoef> c_;
};

// Complex inner product sum_j a_j conj(b_j) on linear values, ascending j.
inline cplx inner(const SpectralVec& a, const SpectralVec& b) {
  a.check_same(b);
  CompensatedSum re, im;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const cplx p = a.value(j) * std::conj(b.value(j));
    re.add(p.real());
    im.add(p.imag());
  }
  return {re.value(), im.value()};
}

// ---------------------------------------------------------------------------
inline SpectralVec analyze(const GridFunction& f, const BasisPtr& basis) {
  const EigenBasis& b = *basis;
  if (f.nx != b.grid.nx() || f.ny != b.grid.ny() || f.values.size() != b.grid.size())
    throw GridMismatchError("samples are not on the basis quadrature grid");
  std::vector<cplx> c(b.size());
  const int N = b.spec.N;
  // sine tables per axis
  auto table = [](double L, const std::vector<double>& nodes, int n) {
    std::vector<std::vector<double>> t(n + 1, std::vector<double>(nodes.size()));
    for (int j = 1; j <= n; ++j)
      for (std::size_t i = 0; i < nodes.size(); ++i) t[j][i] = EigenBasis::sine(L, j, nodes[i]);
    return t;
  };
  const auto sx = table(b.spec.L1, b.grid.x, N);
  if (b.spec.kind == DomainKind::interval) {
    for (std::size_t m = 0; m < b.size(); ++m) {
      const int j = b.modes[m].jx;
      CompensatedSum re, im;
      for (std::size_t i = 0; i < f.nx; ++i) {
        const double w = b.grid.wx[i] * sx[j][i];
        re.add(w * f.at(i).real());
        im.add(w * f.at(i).imag());
      }
      c[m] = {re.value(), im.value()};
    }
  } else {
    const auto sy = table(b.spec.L2, b.grid.y, N);
    // reduce along x first: g[j][iy]
    std::vector<std::vector<cplx>> g(N + 1, std::vector<cplx>(f.ny));
    for (int j = 1; j <= N; ++j) {
      for (std::size_t iy = 0; iy < f.ny; ++iy) {
        CompensatedSum re, im;
        for (std::size_t ix = 0; ix < f.nx; ++ix) {
          const double w = b.grid.wx[ix] * sx[j][ix];
          re.add(w * f.at(ix, iy).real());
          im.add(w * f.at(ix, iy).imag());
        }
        g[j][iy] = {re.value(), im.value()};
      }
    }
    for (std::size_t m = 0; m < b.size(); ++m) {
      const auto [j, k] = b.modes[m];
      CompensatedSum re, im;
      for (std::size_t iy = 0; iy < f.ny; ++iy) {
        const double w = b.grid.wy[iy] * sy[k][iy];
        re.add(w * g[j][iy].real());
        im.add(w * g[j][iy].imag());
      }
      c[m] = {re.value(), im.value()};
    }
  }
  return SpectralVec(basis, c);
}

inline SpectralVec analyze(const BasisPtr& basis, const std::function<cplx(double, double)>& fn) {
  return analyze(sample_on_grid(*basis, fn), basis);
}

// Pointwise sum_j c_j e_j(x, y).
inline cplx eval_at(const SpectralVec& v, double x, double y = 0.0) {
  const EigenBasis& b = *v.basis();
  CompensatedSum re, im;
  for (std::size_t m = 0; m < v.size(); ++m) {
    const cplx c = v.value(m);
    if (c == cplx{0.0, 0.0}) continue;
    const double e = b.eval(m, x, y);
    re.add(c.real() * e);
    im.add(c.imag() * e);
  }
  return {re.value(), im.value()};
}

inline GridFunction synthesize(const SpectralVec& v, const QuadGrid& grid) {
  GridFunction g{grid.nx(), grid.ny(), {}};
  g.values.resize(g.nx * g.ny);
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix) g.at(ix, iy) = eval_at(v, grid.x[ix], grid.y[iy]);
  return g;
}
inline GridFunction synthesize(const SpectralVec& v) { return synthesize(v, v.basis()->grid); }

// ---------------------------------------------------------------------------
struct TripleNorms {
  double normH = 0.0, normV = 0.0, normVstar = 0.0;
  // natural logs of the three norms; always filled
  double log_normH = kNegInf, log_normV = kNegInf, log_normVstar = kNegInf;
  bool log_space = false;  // true when linear sums would overflow
};

inline TripleNorms norms(const SpectralVec& v) {
  const EigenBasis& b = *v.basis();
  TripleNorms out;
  double max_log = kNegInf;
  for (std::size_t j = 0; j < v.size(); ++j) max_log = std::max(max_log, v.log_abs(j));
  if (max_log == kNegInf) return out;
  const double log_lam_max = std::log(b.lambdas.back());
  if (max_log + log_lam_max < 300.0 && max_log > -300.0) {
    CompensatedSum h, vv, vs;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double a2 = std::norm(v.value(j));
      h.add(a2);
      vv.add(b.lambdas[j] * a2);
      vs.add(a2 / b.lambdas[j]);
    }
    out.normH = std::sqrt(h.value());
    out.normV = std::sqrt(vv.value());
    out.normVstar = std::sqrt(vs.value());
    out.log_normH = std::log(out.normH);
    out.log_normV = std::log(out.normV);
    out.log_normVstar = std::log(out.normVstar);
    return out;
  }
  out.log_space = true;
  std::vector<double> th, tv, ts;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double la = v.log_abs(j);
    if (la == kNegInf) continue;
    const double ll = std::log(b.lambdas[j]);
    th.push_back(2.0 * la);
    tv.push_back(2.0 * la + ll);
    ts.push_back(2.0 * la - ll);
  }
  out.log_normH = 0.5 * log_sum_exp(th);
  out.log_normV = 0.5 * log_sum_exp(tv);
  out.log_normVstar = 0.5 * log_sum_exp(ts);
  out.normH = std::exp(out.log_normH);
  out.normV = std::exp(out.log_normV);
  out.normVstar = std::exp(out.log_normVstar);
  return out;
}

// ---------------------------------------------------------------------------
// JSON: basis descriptor, [[re,im]] coefficients (null when not finite),
// log_abs and arg arrays (log_abs null for exact zeros).
inline nlohmann::json to_json(const SpectralVec& v) {
  nlohmann::json j;
  j["basis"] = v.basis()->descriptor();
  nlohmann::json coeffs = nlohmann::json::array(), logs = nlohmann::json::array(),
                 args = nlohmann::json::array();
  for (std::size_t m = 0; m < v.size(); ++m) {
    const ScaledComplex s = v[m].approx();
    const cplx lin = s.linear();
    if (std::isfinite(lin.real()) && std::isfinite(lin.imag()))
      coeffs.push_back({lin.real(), lin.imag()});
    else
      coeffs.push_back(nullptr);
    const double la = s.log_abs();
    if (la == kNegInf)
      logs.push_back(nullptr);
    else
      logs.push_back(la);
    args.push_back(std::arg(s.phase()));
  }
  j["coefficients"] = std::move(coeffs);
  j["log_abs"] = std::move(logs);
  j["arg"] = std::move(args);
  return j;
}

inline DomainSpec spec_from_descriptor(const nlohmann::json& d) {
  DomainSpec s;
  s.kind = domain_kind_from(d.at("kind").get<std::string>());
  const auto& len = d.at("lengths");
  s.L1 = len.at(0).get<double>();
  s.L2 = s.kind == DomainKind::rectangle ? len.at(1).get<double>() : s.L1;
  s.N = d.at("modes").get<int>();
  s.validate();
  return s;
}

// The basis may be supplied (must match the descriptor) or rebuilt.
inline SpectralVec spectral_vec_from_json(const nlohmann::json& j, BasisPtr basis = nullptr) {
  const DomainSpec s = spec_from_descriptor(j.at("basis"));
  if (!basis)
    basis = build_basis(s);
  else if (!(basis->spec == s))
    throw GridMismatchError("JSON basis descriptor does not match the configured basis");
  SpectralVec v(basis);
  const auto& coeffs = j.at("coefficients");
  if (coeffs.size() != v.size()) throw GridMismatchError("coefficient count does not match basis");
  for (std::size_t m = 0; m < v.size(); ++m) {
    // linear pair unless it is missing or too small to carry full precision
    const auto& la = j.contains("log_abs") ? j["log_abs"].at(m) : nlohmann::json(nullptr);
    const bool tiny = !la.is_null() && la.get<double>() < -690.0;
    if (!coeffs[m].is_null() && !tiny) {
      v[m] = ModalCoef(cplx{coeffs[m].at(0).get<double>(), coeffs[m].at(1).get<double>()});
    } else {
      const double la = j.at("log_abs").at(m).get<double>();
      const double ar = j.at("arg").at(m).get<double>();
      v[m] = ModalCoef::from_log(la, std::polar(1.0, ar));
    }
  }
  return v;
}

}  // namespace pfvp
