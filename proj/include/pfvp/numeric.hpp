#pragma once

// Floating-point helpers shared by every module: compensated sums,
// log-sum-exp, and exact (error-free) expansion arithmetic.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

namespace pfvp {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Neumaier's variant of Kahan summation. Terms are consumed in call order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// log(sum_i exp(args[i])), stable for arguments far outside the double range.
// Empty input or all -inf gives -inf.
inline double log_sum_exp(std::span<const double> args) {
  double max_arg = kNegInf;
  for (double a : args) max_arg = std::max(max_arg, a);
  if (max_arg == kNegInf) return kNegInf;
  if (std::isinf(max_arg)) return max_arg;
  CompensatedSum sum;
  for (double a : args) sum.add(std::exp(a - max_arg));
  return max_arg + std::log(sum.value());
}

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// ---------------------------------------------------------------------------
// Error-free transformation: s + e == a + b exactly.
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  e = (a - av) + (b - bv);
}

// Nonoverlapping floating-point expansion (Shewchuk), components stored with
// increasing magnitude and zeros eliminated. The represented value is the
// exact real sum of the components.
class Expansion {
 public:
  Expansion() = default;
  explicit Expansion(double x) {
    if (x != 0.0) comp_.push_back(x);
  }

  bool is_zero() const { return comp_.empty(); }
  const std::vector<double>& components() const { return comp_; }

  // grow-expansion with zero elimination; exact for any finite b.
  void add(double b) {
    if (b == 0.0) return;
    std::vector<double> h;
    h.reserve(comp_.size() + 1);
    double q = b;
    for (double c : comp_) {
      double s, e;
      two_sum(q, c, s, e);
      if (e != 0.0) h.push_back(e);
      q = s;
    }
    if (q != 0.0) h.push_back(q);
    comp_ = std::move(h);
    trim();
  }

  void add(const Expansion& other) {
    for (double c : other.comp_) add(c);
  }

  void negate() {
    for (double& c : comp_) c = -c;
  }

  // Scale by w; each product is rounded, so this is exact only to a relative
  // eps per component. The result is renormalized.
  void scale(double w) {
    std::vector<double> old = std::move(comp_);
    comp_.clear();
    for (double c : old) add(c * w);
  }

  // Sum of components from smallest to largest.
  double estimate() const {
    double s = 0.0;
    for (double c : comp_) s += c;
    return s;
  }

  double max_abs() const { return comp_.empty() ? 0.0 : std::abs(comp_.back()); }
  double min_abs() const { return comp_.empty() ? 0.0 : std::abs(comp_.front()); }

 private:
  // Components below 2^-1000 of the leading one carry no usable information
  // and only slow later operations down.
  void trim() {
    if (comp_.size() <= 8) return;
    comp_.erase(comp_.begin(), comp_.end() - 8);
  }

  std::vector<double> comp_;
};

// A complex number as mant * exp(log_scale); used to report values whose
// magnitude leaves the double range.
struct ScaledComplex {
  cplx mant{0.0, 0.0};
  double log_scale = 0.0;

  double log_abs() const {
    const double a = std::abs(mant);
    return a == 0.0 ? kNegInf : std::log(a) + log_scale;
  }
  cplx phase() const {
    const double a = std::abs(mant);
    return a == 0.0 ? cplx{0.0, 0.0} : mant / a;
  }
  // Linear value; may overflow to inf or underflow to 0.
  cplx linear() const {
    if (mant == cplx{0.0, 0.0}) return {0.0, 0.0};
    const double la = log_abs();
    if (la > 709.7) {
      const cplx p = phase();
      constexpr double inf = std::numeric_limits<double>::infinity();
      return {p.real() == 0.0 ? 0.0 : std::copysign(inf, p.real()),
              p.imag() == 0.0 ? 0.0 : std::copysign(inf, p.imag())};
    }
    if (log_scale == 0.0) return mant;
    return phase() * std::exp(la);
  }
};

}  // namespace pfvp
