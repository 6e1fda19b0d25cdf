#pragma once

// Dense-matrix stand-ins for the generator: sectoriality of the resolvent,
// injectivity of e^{-tA}, the inverse chain and the log-convexity criterion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <nlohmann/json.hpp>

#include "pfvp/numeric.hpp"

namespace pfvp::lab {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr Eigen::Index kMaxDim = 64;

inline double sigma_max(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}
inline double sigma_min(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

struct MatrixGenerator {
  Mat A;
  bool selfadjoint = false, normal = false, hyponormal = false;
  double c4 = 0.0;  // min Re<Av,v>/<v,v> = smallest eigenvalue of the Hermitian part
  double c3 = 0.0;  // |<Au,v>| <= c3 |u||v|

  explicit MatrixGenerator(Mat a, double tol = 1e-12) : A(std::move(a)) {
    if (A.rows() != A.cols() || A.rows() < 1) throw std::invalid_argument("generator must be square");
    if (A.rows() > kMaxDim) throw std::invalid_argument("generator dimension above 64");
    if (!A.allFinite()) throw std::invalid_argument("generator has non-finite entries");
    const double s = std::max(A.norm(), 1e-300);
    const Mat Ah = A.adjoint();
    selfadjoint = (A - Ah).norm() <= tol * s;
    const Mat comm = Ah * A - A * Ah;
    normal = comm.norm() <= tol * s * s;
    Eigen::SelfAdjointEigenSolver<Mat> ce(0.5 * (comm + comm.adjoint()));
    hyponormal = ce.eigenvalues().minCoeff() >= -tol * s * s;
    Eigen::SelfAdjointEigenSolver<Mat> he(0.5 * (A + Ah));
    c4 = he.eigenvalues().minCoeff();
    c3 = sigma_max(A);
  }

  Eigen::Index dim() const { return A.rows(); }
  bool elliptic() const { return c4 > 0.0; }
  // half-angle of analyticity arccot(c3/c4)
  double theta_analytic() const { return c4 > 0 ? std::atan(c4 / c3) : 0.0; }
};

// ---------------------------------------------------------------------------
inline Mat exp_semigroup(const Mat& A, double t) {
  if (t == 0.0) return Mat::Identity(A.rows(), A.cols());
  return Mat((-t * A).exp());
}

inline double semigroup_law_defect(const Mat& A, double s, double t) {
  const Mat lhs = exp_semigroup(A, s) * exp_semigroup(A, t);
  const Mat rhs = exp_semigroup(A, s + t);
  return (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300);
}

// Smallest M with ||e^{-tA}|| <= M e^{-c4 t} on the grid.
inline double fitted_type_constant(const MatrixGenerator& g, const std::vector<double>& tgrid) {
  double M = 0.0;
  for (double t : tgrid) M = std::max(M, sigma_max(exp_semigroup(g.A, t)) * std::exp(g.c4 * t));
  return M;
}

// ---------------------------------------------------------------------------
struct SectorSpec {
  double omega = 0.0;
  double theta = kPi / 4;
  double bound = 1e6;  // pass threshold for the sampled sup
  int rays = 64, radii = 32;
  double r_min = 1e-3, r_max = 1e3;

  void validate() const {
    if (!(omega >= 0.0)) throw std::invalid_argument("sector: omega must be >= 0");
    if (!(theta > 0.0 && theta < kPi / 2)) throw std::invalid_argument("sector: theta must lie in (0, pi/2)");
    if (rays * radii < 64) throw std::invalid_argument("sector: fewer than 64 samples");
    if (!(r_min > 0.0 && r_max > r_min)) throw std::invalid_argument("sector: bad radius range");
  }
};

// lambda = omega + r e^{i phi}, |phi| < pi/2 + theta (open sector, rays at cell centres),
// radii log-spaced over [r_min, r_max].
inline std::vector<cplx> sector_samples(const SectorSpec& s) {
  s.validate();
  std::vector<cplx> out;
  const double half = kPi / 2 + s.theta;
  for (int k = 0; k < s.rays; ++k) {
    const double phi = -half + (k + 0.5) * 2 * half / s.rays;
    for (int i = 0; i < s.radii; ++i) {
      const double r = s.r_min * std::pow(s.r_max / s.r_min, double(i) / (s.radii - 1));
      out.push_back(s.omega + std::polar(r, phi));
    }
  }
  return out;
}

struct SectorReport {
  double sup = 0.0;
  cplx argmax{0.0, 0.0};
  bool pass = false;
  std::size_t samples = 0;
  std::vector<cplx> skipped;  // samples on (numerically) the spectrum
  double theta_analytic = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json sk = nlohmann::json::array();
    for (const auto& z : skipped) sk.push_back({z.real(), z.imag()});
    return {{"sup", std::isfinite(sup) ? nlohmann::json(sup) : nlohmann::json(nullptr)},
            {"argmax", {argmax.real(), argmax.imag()}},
            {"pass", pass},
            {"samples", samples},
            {"skipped", sk},
            {"theta_analytic", theta_analytic}};
  }
};

// sup |lambda - omega| ||(lambda + A)^{-1}||: the resolvent of the generator -A
// of e^{-tA}, sampled on the sector.
inline SectorReport check_sectoriality(const MatrixGenerator& g, const SectorSpec& spec, std::ostream* log = nullptr) {
  SectorReport r;
  r.theta_analytic = g.theta_analytic();
  const auto lam = sector_samples(spec);
  const Mat I = Mat::Identity(g.dim(), g.dim());
  const double scale = std::max(1.0, g.c3);
  for (const cplx& z : lam) {
    const double smin = sigma_min(z * I + g.A);
    if (smin <= 1e-13 * (std::abs(z) + scale)) {
      r.skipped.push_back(z);
      if (log) *log << "sectoriality: sample " << z << " on the spectrum, skipped\n";
      continue;
    }
    ++r.samples;
    const double v = std::abs(z - spec.omega) / smin;
    if (v > r.sup) {
      r.sup = v;
      r.argmax = z;
    }
  }
  r.pass = r.samples > 0 && std::isfinite(r.sup) && r.sup <= spec.bound;
  return r;
}

// ---------------------------------------------------------------------------
struct InjectivityReport {
  double t = 0.0;
  double sigma_min = 0.0;         // 1 / sigma_max(e^{tA})
  double sigma_min_direct = 0.0;  // SVD of e^{-tA}; loses digits below eps * sigma_max
  double lower_bound = 0.0;       // e^{-t sigma_max(A)}
  bool bound_ok = false;          // sigma_min >= lower_bound / 100

  nlohmann::json to_json() const {
    return {{"t", t}, {"sigma_min", sigma_min}, {"sigma_min_direct", sigma_min_direct},
            {"lower_bound", lower_bound}, {"bound_ok", bound_ok}};
  }
};

inline InjectivityReport check_injectivity(const MatrixGenerator& g, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("injectivity: t must be positive");
  InjectivityReport r;
  r.t = t;
  r.sigma_min = 1.0 / sigma_max(exp_semigroup(g.A, -t));
  r.sigma_min_direct = sigma_min(exp_semigroup(g.A, t));
  r.lower_bound = std::exp(-t * g.c3);
  r.bound_ok = r.sigma_min >= r.lower_bound / 100.0;
  return r;
}

// ---------------------------------------------------------------------------
struct LogConvexityReport {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double criterion_fraction = 0.0;  // x with 2 (Re<Ax,x>)^2 <= Re<A^2x,x>|x|^2 + |Ax|^2|x|^2
  double logconvex_fraction = 0.0;  // x0 with log h discretely convex
  double orbit_criterion_fraction = 0.0;  // x0 whose sampled orbit satisfies the criterion throughout
  double worst_criterion = 0.0;     // max of lhs - rhs (normalised by |Ax|^2 |x|^2)
  double worst_convexity = 0.0;     // max violation of the discrete inequality on log h
  bool implication_observed = false;

  nlohmann::json to_json() const {
    return {{"trials", trials},
            {"seed", seed},
            {"criterion_fraction", criterion_fraction},
            {"logconvex_fraction", logconvex_fraction},
            {"orbit_criterion_fraction", orbit_criterion_fraction},
            {"worst_criterion", worst_criterion},
            {"worst_convexity", worst_convexity},
            {"implication_observed", implication_observed}};
  }
};

inline Vec random_unit(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec x(d);
  for (Eigen::Index i = 0; i < d; ++i) x(i) = {n(rng), n(rng)};
  return x / x.norm();
}

// 2 (Re<Ax,x>)^2 - Re<A^2x,x>|x|^2 - |Ax|^2|x|^2, relative to |Ax|^2|x|^2
inline double criterion_margin(const Mat& A, const Vec& x) {
  const Vec Ax = A * x;
  const double nx = x.squaredNorm();
  const double re = x.dot(Ax).real();  // Eigen's dot conjugates the first argument
  const double re2 = x.dot(A * Ax).real();
  const double s = std::max(Ax.squaredNorm() * nx, 1e-300);
  return (2 * re * re - re2 * nx - Ax.squaredNorm() * nx) / s;
}

struct OrbitCheck {
  double violation;  // max over interior nodes of log h(t_k) - (log h(t_{k-1}) + log h(t_{k+1})) / 2
  double margin;     // max criterion margin at the orbit points
};

// h(t) = |e^{-tA} x0| on n + 1 uniform nodes of [0, tmax]
inline OrbitCheck check_orbit(const Mat& A, const Vec& x0, double tmax = 2.0, int n = 40) {
  const Mat step = exp_semigroup(A, tmax / n);
  std::vector<double> lh;
  OrbitCheck r{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Vec x = x0;
  for (int k = 0; k <= n; ++k) {
    lh.push_back(std::log(x.norm()));
    r.margin = std::max(r.margin, criterion_margin(A, x));
    x = step * x;
  }
  for (int k = 1; k < n; ++k) r.violation = std::max(r.violation, lh[k] - 0.5 * (lh[k - 1] + lh[k + 1]));
  return r;
}

inline double logconvexity_violation(const Mat& A, const Vec& x0, double tmax = 2.0, int n = 40) {
  return check_orbit(A, x0, tmax, n).violation;
}

// Uniformly drawn x rarely land where the criterion fails, while orbits are
// drawn towards the slow eigenvectors; the criterion is therefore also
// evaluated along each sampled orbit.
inline LogConvexityReport check_logconvexity_criterion(const MatrixGenerator& g, std::size_t trials,
                                                        std::uint64_t seed = 1, double tol = 1e-10) {
  if (trials < 1) throw std::invalid_argument("log-convexity: need at least one trial");
  std::mt19937_64 rng(seed);
  LogConvexityReport r;
  r.trials = trials;
  r.seed = seed;
  r.worst_criterion = r.worst_convexity = -std::numeric_limits<double>::infinity();
  std::size_t crit = 0, conv = 0, orbit = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double m = criterion_margin(g.A, random_unit(g.dim(), rng));
    r.worst_criterion = std::max(r.worst_criterion, m);
    if (m <= 1e-12) ++crit;
    const OrbitCheck o = check_orbit(g.A, random_unit(g.dim(), rng));
    r.worst_convexity = std::max(r.worst_convexity, o.violation);
    if (o.violation <= tol) ++conv;
    if (o.margin <= 1e-12) ++orbit;
  }
  r.criterion_fraction = double(crit) / trials;
  r.logconvex_fraction = double(conv) / trials;
  r.orbit_criterion_fraction = double(orbit) / trials;
  r.implication_observed = crit == trials && orbit == trials && conv == trials;
  return r;
}

// ---------------------------------------------------------------------------
// Finite-dimensional shadow of the descending chain: the smallest C with
// ||e^{tA}v|| <= C (||v|| + ||e^{t'A}v||) over the samples.
struct ChainReport {
  double t = 0.0, tp = 0.0;
  double max_ratio = 0.0;
  bool holds_with_one = false;

  nlohmann::json to_json() const {
    return {{"t", t}, {"t_prime", tp}, {"max_ratio", max_ratio}, {"holds_with_one", holds_with_one}};
  }
};

inline double chain_ratio(const Mat& A, double t, double tp, const Vec& v) {
  const double num = (exp_semigroup(A, -t) * v).norm();
  return num / (v.norm() + (exp_semigroup(A, -tp) * v).norm());
}

inline ChainReport inverse_chain_demo(const MatrixGenerator& g, double t, double tp, std::size_t samples = 100,
                                      std::uint64_t seed = 1) {
  if (!(0.0 < t && t < tp)) throw std::invalid_argument("chain: need 0 < t < t'");
  ChainReport r;
  r.t = t;
  r.tp = tp;
  std::mt19937_64 rng(seed);
  const Mat Et = exp_semigroup(g.A, -t), Etp = exp_semigroup(g.A, -tp);
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec v = random_unit(g.dim(), rng);
    r.max_ratio = std::max(r.max_ratio, (Et * v).norm() / (v.norm() + (Etp * v).norm()));
  }
  r.holds_with_one = r.max_ratio <= 1.0 + 1e-12;
  return r;
}

// ---------------------------------------------------------------------------
// Elliptic test matrices: Gaussian entries, shifted so the Hermitian part has
// smallest eigenvalue c4.
inline Mat random_elliptic(Eigen::Index d, std::mt19937_64& rng, double c4 = 0.5) {
  std::normal_distribution<double> n;
  Mat M(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) M(i, j) = cplx{n(rng), n(rng)} / std::sqrt(double(d));
  Eigen::SelfAdjointEigenSolver<Mat> he(0.5 * (M + M.adjoint()));
  return M + (c4 - he.eigenvalues().minCoeff()) * Mat::Identity(d, d);
}

inline Mat random_selfadjoint(Eigen::Index d, std::mt19937_64& rng, double c4 = 0.5) {
  const Mat M = random_elliptic(d, rng, c4);
  return 0.5 * (M + M.adjoint());
}

// "d" on the first line, then d rows of 2d reals (re im pairs).
inline Mat read_matrix(std::istream& is) {
  long d = 0;
  if (!(is >> d) || d < 1 || d > kMaxDim) throw std::runtime_error("matrix: bad dimension line");
  Mat A(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      double re, im;
      if (!(is >> re >> im)) throw std::runtime_error("matrix: expected " + std::to_string(2 * d * d) + " reals");
      A(i, j) = {re, im};
    }
  std::string rest;
  if (is >> rest) throw std::runtime_error("matrix: trailing data");
  return A;
}

inline void write_matrix(std::ostream& os, const Mat& A) {
  os << A.rows() << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%s%.17g %.17g", j ? " " : "", A(i, j).real(), A(i, j).imag());
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace pfvp::lab
