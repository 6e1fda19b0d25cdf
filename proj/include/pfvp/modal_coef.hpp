#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pfvp/numeric.hpp"

namespace pfvp {

// One spectral coefficient. The value is a sum of groups
//
//     sum_g exp(log_scale_g) * (re_g + i im_g),
//
// where re_g, im_g are exact expansions. Scaling by exp(x) only moves
// log_scale, and addition/subtraction are exact, so
// (exp(-T lambda) u0 + y) - y, scaled back by exp(T lambda), returns u0 bit for
// bit. Groups are folded into the log_scale == 0 group only when there are
// more than kMaxGroups of them and the value fits the double range.
class ModalCoef {
 public:
  ModalCoef() = default;
  ModalCoef(cplx z) {  // NOLINT(google-explicit-constructor)
    if (z != cplx{0.0, 0.0}) groups_.push_back({0.0, Expansion(z.real()), Expansion(z.imag())});
  }
  ModalCoef(double x) : ModalCoef(cplx{x, 0.0}) {}  // NOLINT(google-explicit-constructor)

  // |c| = exp(log_abs), c/|c| = phase. Phase need not be exactly unimodular.
  static ModalCoef from_log(double log_abs, cplx phase) {
    ModalCoef c;
    if (log_abs == kNegInf || phase == cplx{0.0, 0.0}) return c;
    c.groups_.push_back({log_abs, Expansion(phase.real()), Expansion(phase.imag())});
    c.normalize();
    return c;
  }

  bool is_zero() const { return groups_.empty(); }

  ModalCoef& operator+=(const ModalCoef& o) {
    for (const auto& g : o.groups_) groups_.push_back(g);
    normalize();
    return *this;
  }
  ModalCoef& operator-=(const ModalCoef& o) {
    for (auto g : o.groups_) {
      g.re.negate();
      g.im.negate();
      groups_.push_back(std::move(g));
    }
    normalize();
    return *this;
  }
  friend ModalCoef operator+(ModalCoef a, const ModalCoef& b) { return a += b; }
  friend ModalCoef operator-(ModalCoef a, const ModalCoef& b) { return a -= b; }
  ModalCoef operator-() const {
    ModalCoef c = *this;
    for (auto& g : c.groups_) {
      g.re.negate();
      g.im.negate();
    }
    return c;
  }

  // Multiply by exp(x). Out-of-range groups shift exactly in log space.
  ModalCoef& shift_log(double x) {
    for (auto& g : groups_) g.log_scale += x;
    normalize();
    return *this;
  }

  // Multiply by a real factor (rounded per component).
  ModalCoef& scale(double w) {
    if (w == 0.0) {
      groups_.clear();
      return *this;
    }
    for (auto& g : groups_) {
      g.re.scale(w);
      g.im.scale(w);
    }
    normalize();
    return *this;
  }

  // Multiply by a complex factor.
  ModalCoef& scale(cplx w) {
    if (w.imag() == 0.0) return scale(w.real());
    std::vector<Group> out;
    for (const auto& g : groups_) {
      Group h{g.log_scale, {}, {}};
      Expansion a = g.re, b = g.im;
      a.scale(w.real());
      b.scale(w.imag());
      b.negate();
      h.re.add(a);
      h.re.add(b);
      Expansion c = g.re, d = g.im;
      c.scale(w.imag());
      d.scale(w.real());
      h.im.add(c);
      h.im.add(d);
      out.push_back(std::move(h));
    }
    groups_ = std::move(out);
    normalize();
    return *this;
  }

  ScaledComplex approx() const {
    if (groups_.empty()) return {};
    std::size_t ref = 0;
    double best = kNegInf;
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      const cplx e{groups_[k].re.estimate(), groups_[k].im.estimate()};
      const double a = std::abs(e);
      const double la = a == 0.0 ? kNegInf : std::log(a) + groups_[k].log_scale;
      if (la > best) {
        best = la;
        ref = k;
      }
    }
    const double s_ref = groups_[ref].log_scale;
    cplx mant{0.0, 0.0};
    for (const auto& g : groups_) {
      const cplx e{g.re.estimate(), g.im.estimate()};
      mant += g.log_scale == s_ref ? e : e * std::exp(g.log_scale - s_ref);
    }
    return {mant, s_ref};
  }

  cplx value() const { return approx().linear(); }
  double log_abs() const { return approx().log_abs(); }
  double abs() const { return std::abs(value()); }

  // True when the coefficient is held entirely at linear scale.
  bool is_linear() const {
    return groups_.empty() || (groups_.size() == 1 && groups_[0].log_scale == 0.0);
  }
  std::size_t group_count() const { return groups_.size(); }

 private:
  struct Group {
    double log_scale;
    Expansion re;
    Expansion im;
  };

  static double max_abs(const Group& g) { return std::max(g.re.max_abs(), g.im.max_abs()); }
  static double min_abs(const Group& g) {
    double m = std::numeric_limits<double>::infinity();
    if (!g.re.is_zero()) m = std::min(m, g.re.min_abs());
    if (!g.im.is_zero()) m = std::min(m, g.im.min_abs());
    return m;
  }
  static double to_linear(double c, double s) {
    if (std::abs(s) < 700.0) return c * std::exp(s);
    return std::copysign(std::exp(std::log(std::abs(c)) + s), c);
  }

  static constexpr std::size_t kMaxGroups = 4;

  void normalize() {
    std::vector<Group> merged;
    for (auto& g : groups_) {
      if (g.re.is_zero() && g.im.is_zero()) continue;
      auto it = std::find_if(merged.begin(), merged.end(),
                             [&](const Group& h) { return h.log_scale == g.log_scale; });
      if (it == merged.end()) {
        merged.push_back(std::move(g));
      } else {
        it->re.add(g.re);
        it->im.add(g.im);
      }
    }
    std::erase_if(merged, [](const Group& g) { return g.re.is_zero() && g.im.is_zero(); });
    if (merged.size() > kMaxGroups) fold(merged);
    groups_ = std::move(merged);
  }

  static void fold(std::vector<Group>& gs) {
    static constexpr double kFoldLimit = 690.0;
    Group lin{0.0, {}, {}};
    std::vector<Group> rest;
    for (auto& g : gs) {
      if (g.log_scale == 0.0) {
        lin.re.add(g.re);
        lin.im.add(g.im);
        continue;
      }
      const double hi = std::log(max_abs(g)) + g.log_scale;
      const double lo = std::log(min_abs(g)) + g.log_scale;
      if (hi < kFoldLimit && lo > -kFoldLimit) {
        for (double c : g.re.components()) lin.re.add(to_linear(c, g.log_scale));
        for (double c : g.im.components()) lin.im.add(to_linear(c, g.log_scale));
      } else {
        rest.push_back(std::move(g));
      }
    }
    gs.clear();
    if (!lin.re.is_zero() || !lin.im.is_zero()) gs.push_back(std::move(lin));
    for (auto& g : rest) gs.push_back(std::move(g));
  }

  std::vector<Group> groups_;
};

}  // namespace pfvp
