#pragma once

// pfvp command line. Exit codes: 0 success, 1 usage/config/IO error,
// 2 incompatible final data (report on stdout), 3 inconclusive (report on stdout).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pfvp/boundary_heat.hpp"
#include "pfvp/config.hpp"
#include "pfvp/duhamel.hpp"
#include "pfvp/fd_oracle.hpp"
#include "pfvp/fvp.hpp"
#include "pfvp/generator_lab.hpp"

namespace pfvp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode { kOk = 0, kUsage = 1, kIncompatible = 2, kInconclusive = 3 };

// Spectral vector from JSON (as written by this tool) or CSV "mode, re, im"
// with 1-based modes; modes not listed are zero.
inline SpectralVec read_vec(const fs::path& p, const BasisPtr& b) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  if (p.extension() == ".json") {
    json j;
    try {
      in >> j;
      return spectral_vec_from_json(j, b);
    } catch (const json::exception& e) {
      throw std::runtime_error(p.string() + ": " + e.what());
    }
  }
  std::size_t cols = 0;
  const auto rows = read_numeric_csv(in, cols);
  if (cols != 3) throw std::runtime_error(p.string() + ": expected columns mode, re, im");
  SpectralVec v(b);
  for (const auto& r : rows) {
    const double m = r[0];
    if (m != std::floor(m) || m < 1 || m > double(b->size()))
      throw GridMismatchError(p.string() + ": mode index outside 1.." + std::to_string(b->size()));
    v[std::size_t(m) - 1] = ModalCoef(cplx{r[1], r[2]});
  }
  return v;
}

inline SourceTerm read_source(const RunConfig& c, const BasisPtr& b) {
  if (c.f_path.empty()) return SourceTerm::zero(b, c.T);
  std::ifstream in(c.f_path);
  if (!in) throw ConfigError("cannot open " + c.f_path.string());
  return read_source_csv(in, b);
}

inline std::optional<BoundaryData> read_boundary(const RunConfig& c) {
  if (c.g_path.empty()) return std::nullopt;
  std::ifstream in(c.g_path);
  if (!in) throw ConfigError("cannot open " + c.g_path.string());
  return read_boundary_csv(in);
}

inline void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// "t, x, u" (interval) or "t, x, y, u" (rectangle) on an equispaced grid
inline std::string trajectory_csv(const Trajectory& tr, std::size_t n = 64) {
  std::ostringstream os;
  const auto& s = tr.basis->spec;
  char buf[128];
  if (s.kind == DomainKind::interval) {
    os << "t, x, u\n";
    for (std::size_t i = 0; i < tr.size(); ++i)
      for (std::size_t p = 0; p <= n; ++p) {
        const double x = p == n ? s.L1 : s.L1 * double(p) / double(n);
        const double u = (p == 0 || p == n) ? 0.0 : eval_at(tr.u[i], x).real();
        std::snprintf(buf, sizeof buf, "%.17g, %.17g, %.17g\n", tr.t[i], x, u);
        os << buf;
      }
  } else {
    const std::size_t m = 16;
    os << "t, x, y, u\n";
    for (std::size_t i = 0; i < tr.size(); ++i)
      for (std::size_t q = 0; q <= m; ++q)
        for (std::size_t p = 0; p <= m; ++p) {
          const double x = s.L1 * double(p) / double(m), y = s.L2 * double(q) / double(m);
          const bool edge = p == 0 || q == 0 || p == m || q == m;
          const double u = edge ? 0.0 : eval_at(tr.u[i], x, y).real();
          std::snprintf(buf, sizeof buf, "%.17g, %.17g, %.17g, %.17g\n", tr.t[i], x, y, u);
          os << buf;
        }
  }
  return os.str();
}

inline std::string ibvp_csv(const IbvpTrajectory& tr) {
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  return os.str();
}

inline json norms_json(const SpectralVec& v) {
  const TripleNorms n = norms(v);
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"H", num(n.normH)},         {"V", num(n.normV)},         {"Vstar", num(n.normVstar)},
          {"log_H", num(n.log_normH)}, {"log_V", num(n.log_normV)}, {"log_Vstar", num(n.log_normVstar)}};
}

inline int report_failure(const CompatReport& r, std::ostream& out) {
  out << dump(r.to_json());
  return r.verdict == Verdict::incompatible ? kIncompatible : kInconclusive;
}

// ---------------------------------------------------------------------------
inline int cmd_forward(const RunConfig& c, std::ostream& out) {
  if (c.u0_path.empty()) throw ConfigError("forward needs u0.path");
  const BasisPtr b = build_basis(c.domain());
  const SpectralVec u0 = read_vec(c.u0_path, b);
  const SourceTerm f = read_source(c, b);
  const auto g = read_boundary(c);
  const auto grid = uniform_grid(c.T, c.steps);
  json rep;
  SpectralVec uT(b);
  if (g) {
    const IbvpTrajectory tr = solve_ibvp(u0, f, *g, grid);
    uT = tr.final_state();
    rep["x1norm"] = x1norm(tr);
    rep["bijection_defect"] = bijection_defect(tr, f);
    write_file(c.out_dir / "trajectory.csv", ibvp_csv(tr));
  } else {
    const Trajectory tr = solve_cauchy(u0, f, grid);
    uT = tr.final_state();
    rep["xnorm"] = xnorm(tr);
    const EnergyReport e = check_energy_estimate(u0, f, c.T);
    rep["energy"] = {{"lhs", e.lhs}, {"rhs", e.rhs}, {"pass", e.pass}, {"sobolev_pass", e.sobolev_pass}};
    write_file(c.out_dir / "trajectory.csv", trajectory_csv(tr));
  }
  rep["T"] = c.T;
  rep["uT_norms"] = norms_json(uT);
  write_file(c.out_dir / "uT.json", dump(to_json(uT)));
  write_file(c.out_dir / "report.json", dump(rep));
  out << dump(rep);
  return kOk;
}

inline int cmd_backward(const RunConfig& c, std::ostream& out, bool inhom) {
  if (c.uT_path.empty()) throw ConfigError("backward needs uT.path");
  const BasisPtr b = build_basis(c.domain());
  const SpectralVec uT = read_vec(c.uT_path, b);
  const SourceTerm f = read_source(c, b);
  const auto g = read_boundary(c);
  if (inhom && !g) throw ConfigError("backward-inhom needs g.path");
  const auto grid = uniform_grid(c.T, c.steps);
  json rep;
  try {
    if (g) {
      const InhomResult r = solve_fvp_inhomogeneous(f, *g, uT, c.T, c.policy, grid);
      rep["compat"] = r.compat.to_json();
      rep["y1norm"] = r.y1.to_json();
      rep["x1norm"] = r.x1;
      rep["stability_ratio"] = r.stability_ratio;
      rep["bijection_defect"] = bijection_defect(r.traj, f);
      write_file(c.out_dir / "u0.json", dump(to_json(r.traj.traj.u.front())));
      write_file(c.out_dir / "trajectory.csv", ibvp_csv(r.traj));
    } else {
      const FvpResult r = solve_fvp({f, uT, c.T}, c.policy, grid);
      rep["compat"] = r.compat.to_json();
      rep["ynorm"] = r.ynorm.to_json();
      rep["xnorm"] = r.x_norm;
      rep["stability_ratio"] = r.stability_ratio;
      write_file(c.out_dir / "u0.json", dump(to_json(r.traj.u.front())));
      write_file(c.out_dir / "trajectory.csv", trajectory_csv(r.traj));
    }
  } catch (const IncompatibleDataError& e) {
    return report_failure(e.report, out);
  } catch (const InconclusiveDataError& e) {
    return report_failure(e.report, out);
  }
  write_file(c.out_dir / "report.json", dump(rep));
  out << dump(rep);
  return kOk;
}

inline int cmd_check_compat(const RunConfig& c, std::ostream& out) {
  if (c.uT_path.empty()) throw ConfigError("check-compat needs uT.path");
  const BasisPtr b = build_basis(c.domain());
  const SpectralVec uT = read_vec(c.uT_path, b);
  const SourceTerm f = read_source(c, b);
  const auto g = read_boundary(c);
  CompatReport r;
  if (g) {
    r = inhom_membership(inhom_setup(f, *g, uT, c.T), c.T, c.policy);
  } else {
    FvpData d{f, uT, c.T};
    d.validate();
    r = check_domain_membership(uT - yield_yf(f, c.T), c.T, c.policy);
  }
  if (r.verdict != Verdict::compatible) return report_failure(r, out);
  out << dump(r.to_json());
  return kOk;
}

inline int cmd_instability(const std::optional<RunConfig>& c, double T, std::size_t jmax, std::ostream& out) {
  DomainSpec s = c ? c->domain() : DomainSpec::interval(kPi, int(std::max<std::size_t>(64, jmax)));
  const auto rows = instability_demo(build_basis(s), T, jmax);
  std::ostringstream os;
  write_instability_csv(os, rows);
  if (c) write_file(c->out_dir / "instability.csv", os.str());
  out << os.str();
  return kOk;
}

inline int cmd_norms(const RunConfig& c, std::ostream& out) {
  const BasisPtr b = build_basis(c.domain());
  json rep = json::object();
  if (!c.u0_path.empty()) rep["u0"] = norms_json(read_vec(c.u0_path, b));
  if (!c.uT_path.empty()) rep["uT"] = norms_json(read_vec(c.uT_path, b));
  if (!c.f_path.empty()) rep["f_l2_vstar_sq"] = read_source(c, b).l2_vstar_sq();
  if (const auto g = read_boundary(c)) rep["g_surrogate_h12_sq"] = surrogate_h12_sq(*g);
  if (rep.empty()) throw ConfigError("norms needs at least one of u0.path, uT.path, f.path, g.path");
  out << dump(rep);
  return kOk;
}

inline int cmd_oracle(const RunConfig& c, std::ostream& out) {
  if (c.kind != DomainKind::interval || c.L1 != kPi) throw ConfigError("oracle-compare runs on the interval (0, pi)");
  const BasisPtr b = build_basis(c.domain());
  std::mt19937_64 rng(c.seed);
  const std::size_t K = std::min<std::size_t>(8, b->size());
  json rows = json::array();
  std::ostringstream csv;
  csv << "case, err_coarse, err_fine, ratio\n";
  bool pass = true;
  char buf[128];
  for (std::size_t i = 0; i < c.instances; ++i) {
    const auto mc = fd::random_case(rng, c.T);
    const SpectralVec spec = fd::spectral_solution(mc, b);
    const double e1 = fd::oracle_distance(mc, spec, {c.fd_M, c.fd_dt, c.fd_theta}, K);
    const double e2 = fd::oracle_distance(mc, spec, {2 * c.fd_M, c.fd_dt / 2, c.fd_theta}, K);
    const double ratio = e1 / e2;
    pass = pass && ratio >= 3.5;
    rows.push_back({{"case", i}, {"err_coarse", e1}, {"err_fine", e2}, {"ratio", ratio}});
    std::snprintf(buf, sizeof buf, "%zu, %.17g, %.17g, %.17g\n", i, e1, e2, ratio);
    csv << buf;
  }
  const json rep = {{"seed", c.seed}, {"modes_compared", K}, {"cases", rows}, {"pass", pass}};
  write_file(c.out_dir / "oracle.csv", csv.str());
  write_file(c.out_dir / "oracle.json", dump(rep));
  out << dump(rep);
  return kOk;
}

inline int cmd_generator_lab(const RunConfig& c, std::ostream& out) {
  lab::Mat A;
  std::mt19937_64 rng(c.seed);
  if (!c.matrix_path.empty()) {
    std::ifstream in(c.matrix_path);
    A = lab::read_matrix(in);
  } else {
    A = lab::random_elliptic(c.lab_dim, rng);
  }
  const lab::MatrixGenerator g(A);
  json inj = json::array();
  for (double t : {0.1, 1.0, 10.0}) inj.push_back(lab::check_injectivity(g, t).to_json());
  json rep = {{"dim", g.dim()},
              {"selfadjoint", g.selfadjoint},
              {"normal", g.normal},
              {"hyponormal", g.hyponormal},
              {"c3", g.c3},
              {"c4", g.c4},
              {"sector", lab::check_sectoriality(g, {}).to_json()},
              {"injectivity", inj},
              {"semigroup_law_defect", lab::semigroup_law_defect(g.A, 0.3, 0.7)},
              {"logconvexity", lab::check_logconvexity_criterion(g, c.lab_trials, c.seed).to_json()},
              {"chain", lab::inverse_chain_demo(g, 0.5, 1.5, 100, c.seed).to_json()}};
  write_file(c.out_dir / "generator_lab.json", dump(rep));
  out << dump(rep);
  return kOk;
}

// ---------------------------------------------------------------------------
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Final value problems for the heat equation: spectral solvers and checks", "pfvp"};
  app.require_subcommand(1);
  std::string config, out_dir;
  double T = 1.0;
  std::size_t jmax = 8;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"forward", "solve the Cauchy problem (with boundary data if g.path is set)"},
                      {"backward", "solve the final value problem"},
                      {"backward-inhom", "final value problem with Dirichlet data g"},
                      {"check-compat", "report whether u_T - y_f (+ z_g) lies in D(e^{TA})"},
                      {"instability-demo", "table of e^{T lambda_j} amplification"},
                      {"norms", "H, V, V* norms of the configured data"},
                      {"oracle-compare", "spectral vs finite-difference solutions on manufactured data"},
                      {"generator-lab", "matrix generator checks"}};
  for (const auto& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    auto* opt = sc->add_option("-c,--config", config, "run configuration (key = value)");
    sc->add_option("-o,--out", out_dir, "override out.dir");
    if (std::string(s.name) == "instability-demo") {
      sc->add_option("--T", T, "final time")->check(CLI::PositiveNumber);
      sc->add_option("--jmax", jmax, "number of modes")->check(CLI::PositiveNumber);
    } else {
      opt->required();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    std::optional<RunConfig> cfg;
    if (!config.empty()) {
      cfg = load_config(config);
      if (!out_dir.empty()) cfg->out_dir = out_dir;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "instability-demo") return cmd_instability(cfg, T, jmax, out);
    const RunConfig& c = *cfg;
    if (name == "forward") return cmd_forward(c, out);
    if (name == "backward") return cmd_backward(c, out, false);
    if (name == "backward-inhom") return cmd_backward(c, out, true);
    if (name == "check-compat") return cmd_check_compat(c, out);
    if (name == "norms") return cmd_norms(c, out);
    if (name == "oracle-compare") return cmd_oracle(c, out);
    if (name == "generator-lab") return cmd_generator_lab(c, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace pfvp::cli
