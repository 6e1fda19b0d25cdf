#pragma once

// Flat "key = value" run configuration. '#' starts a comment; relative paths
// are taken relative to the config file.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfvp/semigroup.hpp"
#include "pfvp/spectral_core.hpp"

namespace pfvp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  DomainKind kind = DomainKind::interval;
  double L1 = kPi, L2 = kPi;
  std::size_t modes = 64;
  double T = 1.0;
  std::filesystem::path f_path, g_path, uT_path, u0_path, matrix_path;
  std::filesystem::path out_dir = ".";
  CompatPolicy policy;
  std::uint64_t seed = 1;
  std::size_t steps = 64;      // output grid intervals on [0, T]
  std::size_t instances = 10;  // oracle-compare
  int fd_M = 32;
  double fd_dt = 1.0 / 16;
  double fd_theta = 0.5;
  int lab_dim = 8;
  std::size_t lab_trials = 1000;

  DomainSpec domain() const {
    return kind == DomainKind::interval ? DomainSpec::interval(L1, int(modes)) : DomainSpec::rectangle(L1, L2, int(modes));
  }

  void validate() const {
    try {
      domain().validate();
      policy.resolve(domain().mode_count());
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    if (!(T > 0.0)) throw ConfigError("T must be positive");
    if (!(policy.rtol_compat > 0.0)) throw ConfigError("policy.rtol_compat must be positive");
    if (!(policy.growth_thresh > 1.0)) throw ConfigError("policy.growth_thresh must exceed 1");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    for (const auto* p : {&f_path, &g_path, &uT_path, &u0_path, &matrix_path})
      if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("file not found: " + p->string());
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long d = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad non-negative integer for " + key + ": '" + v + "'");
  }
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is, const std::filesystem::path& base = ".") {
  RunConfig c;
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string k = detail::trim(line.substr(0, eq)), v = detail::trim(line.substr(eq + 1));
    if (k.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(k, v).second) throw ConfigError("duplicate key " + k);
  }
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base / p;
  };
  std::optional<std::string> lengths;
  for (const auto& [k, v] : kv) {
    if (k == "domain.kind") {
      try {
        c.kind = domain_kind_from(v);
      } catch (const std::exception&) {
        throw ConfigError("domain.kind must be interval or rectangle");
      }
    } else if (k == "domain.length") {
      lengths = v;
    } else if (k == "modes") {
      c.modes = detail::to_uint(k, v);
    } else if (k == "T") {
      c.T = detail::to_double(k, v);
    } else if (k == "f.path") {
      c.f_path = path(v);
    } else if (k == "g.path") {
      c.g_path = path(v);
    } else if (k == "uT.path") {
      c.uT_path = path(v);
    } else if (k == "u0.path") {
      c.u0_path = path(v);
    } else if (k == "matrix.path") {
      c.matrix_path = path(v);
    } else if (k == "out.dir") {
      c.out_dir = path(v);
    } else if (k == "seed") {
      c.seed = detail::to_uint(k, v);
    } else if (k == "policy.rtol_compat") {
      c.policy.rtol_compat = detail::to_double(k, v);
    } else if (k == "policy.growth_thresh") {
      c.policy.growth_thresh = detail::to_double(k, v);
    } else if (k == "policy.cutoffs") {
      std::stringstream ss(v);
      std::string item;
      c.policy.cutoffs.clear();
      while (std::getline(ss, item, ',')) c.policy.cutoffs.push_back(detail::to_uint(k, detail::trim(item)));
    } else if (k == "steps") {
      c.steps = detail::to_uint(k, v);
    } else if (k == "instances") {
      c.instances = detail::to_uint(k, v);
    } else if (k == "fd.M") {
      c.fd_M = int(detail::to_uint(k, v));
    } else if (k == "fd.dt") {
      c.fd_dt = detail::to_double(k, v);
    } else if (k == "fd.theta") {
      c.fd_theta = detail::to_double(k, v);
    } else if (k == "lab.dim") {
      c.lab_dim = int(detail::to_uint(k, v));
    } else if (k == "lab.trials") {
      c.lab_trials = detail::to_uint(k, v);
    } else {
      throw ConfigError("unknown key " + k);
    }
  }
  if (lengths) {
    // "L" for the interval, "L1, L2" for the rectangle; the literal "pi" is allowed
    std::vector<double> ls;
    std::stringstream ss(*lengths);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      ls.push_back(item == "pi" ? kPi : detail::to_double("domain.length", item));
    }
    if (ls.empty() || ls.size() > 2) throw ConfigError("domain.length takes one or two values");
    c.L1 = ls[0];
    c.L2 = ls.size() == 2 ? ls[1] : ls[0];
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  return parse_config(in, file.parent_path().empty() ? "." : file.parent_path());
}

}  // namespace pfvp
