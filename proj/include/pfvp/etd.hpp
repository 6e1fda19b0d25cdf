#pragma once

// Exponential integration of a linear-in-time forcing over one panel.

#include <array>
#include <cmath>

#include "pfvp/numeric.hpp"

namespace pfvp::etd {

// psi1(z) = int_0^1 e^{-z s} ds, psi2(z) = int_0^1 s e^{-z s} ds,
// psi3(z) = int_0^1 (1 - s) e^{-z s} ds = psi1 - psi2.
struct Psi {
  double p1, p2, p3;
};

// Below this the closed forms lose digits to cancellation; the series is
// used instead (20 terms reach 0.5^20 / 20! ~ 4e-25).
inline constexpr double kSeriesBelow = 0.5;

inline Psi psi(double z) {
  if (z < kSeriesBelow) {
    double term = 1.0;  // (-z)^k / k!
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    for (int k = 0; k < 20; ++k) {
      p1 += term / (k + 1);
      p2 += term / (k + 2);
      p3 += term / ((k + 1.0) * (k + 2.0));
      term *= -z / (k + 1);
    }
    return {p1, p2, p3};
  }
  const double em = -std::expm1(-z);  // 1 - e^{-z}
  const double p1 = em / z;
  const double p2 = (em - z * std::exp(-z)) / (z * z);
  // 1/z - (1 - e^{-z})/z^2
  const double p3 = (z - em) / (z * z);
  return {p1, p2, p3};
}

// int_0^h e^{-lambda (h - s)} [a (1 - s/h) + b s/h] ds
inline cplx panel(double lambda, double h, cplx a, cplx b) {
  if (h == 0.0) return {0.0, 0.0};
  const Psi p = psi(lambda * h);
  return h * (a * p.p2 + b * p.p3);
}

// 8-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 8> kGaussX = {
    -0.9602898564975362, -0.7966664774136267, -0.525532409916329, -0.18343464249564978,
    0.18343464249564978, 0.525532409916329,   0.7966664774136267, 0.9602898564975362};
inline constexpr std::array<double, 8> kGaussW = {
    0.10122853629037669, 0.22238103445337434, 0.31370664587788705, 0.36268378337836177,
    0.36268378337836177, 0.31370664587788705, 0.22238103445337434, 0.10122853629037669};

// int_0^h fn(s) ds for integrands with a boundary layer of width 1/lambda at
// s = 0: Gauss on [0, 1/l], [1/l, 2/l], [2/l, 4/l], ... capped at h.
template <class F>
double graded_gauss(double lambda, double h, F&& fn) {
  CompensatedSum sum;
  double lo = 0.0;
  double hi = std::min(h, 1.0 / lambda);
  while (lo < h) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < kGaussX.size(); ++i) sum.add(half * kGaussW[i] * fn(mid + half * kGaussX[i]));
    lo = hi;
    hi = std::min(h, 2.0 * hi);
  }
  return sum.value();
}

}  // namespace pfvp::etd
