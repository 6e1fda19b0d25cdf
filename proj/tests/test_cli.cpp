#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kSamples = PFVP_SAMPLES_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pfvp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = pfvp::cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pfvp_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string cfg(const std::string& name) { return (kSamples / name).string(); }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"no-such-command"}).code, 1);
  EXPECT_EQ(run({"backward"}).code, 1);  // --config required
  const auto r = run({"backward", "-c", "/nonexistent/x.cfg"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, CheckCompatExitCodes) {
  const auto ok = run({"check-compat", "-c", cfg("check_compat_ok.cfg"), "-o", scratch("ok").string()});
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("\"compatible\""), std::string::npos);
  const auto bad = run({"check-compat", "-c", cfg("check_compat_bad.cfg"), "-o", scratch("bad").string()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("\"incompatible\""), std::string::npos);
}

TEST(Cli, BackwardRefusesIncompatibleWithoutWriting) {
  // same uT as the failing compat check, run through the solver
  const fs::path conf = scratch("bad_backward.cfg");
  std::ofstream(conf) << "domain.kind = interval\ndomain.length = pi\nmodes = 64\nT = 1\n"
                                             << "uT.path = " << cfg("uT_harmonic.csv") << "\n";
  const fs::path out = scratch("bad_backward_out");
  const auto r = run({"backward", "-c", conf.string(), "-o", out.string()});
  fs::remove(conf);
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(out / "u0.json"));
}

TEST(Cli, InstabilityTable) {
  const auto r = run({"instability-demo", "--T", "1", "--jmax", "8"});
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<double> cols;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) cols.push_back(std::stod(item));
    ASSERT_GE(cols.size(), 3u);
    const double j = cols[0];
    EXPECT_EQ(j, rows);
    // log of the amplification is T lambda_j = j^2 on (0, pi)
    EXPECT_NEAR(cols.back(), j * j, 1e-10 * j * j) << line;
  }
  EXPECT_EQ(rows, 8);
}

TEST(Cli, SameConfigSameBytes) {
  for (const std::string c : {"forward_boundary.cfg", "backward.cfg", "backward_inhom.cfg", "oracle.cfg",
                              "generator_lab.cfg"}) {
    std::vector<std::string> cmd = {c == "backward_inhom.cfg"  ? "backward-inhom"
                                    : c == "backward.cfg"      ? "backward"
                                    : c == "oracle.cfg"        ? "oracle-compare"
                                    : c == "generator_lab.cfg" ? "generator-lab"
                                                               : "forward"};
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    auto ca = cmd, cb = cmd;
    ca.insert(ca.end(), {"-c", cfg(c), "-o", a.string()});
    cb.insert(cb.end(), {"-c", cfg(c), "-o", b.string()});
    const auto ra = run(ca), rb = run(cb);
    ASSERT_EQ(ra.code, 0) << c << ": " << ra.err;
    ASSERT_EQ(rb.code, 0) << c;
    EXPECT_EQ(ra.out, rb.out) << c;
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << c << " " << e.path().filename();
    }
    EXPECT_GT(files, 0u) << c;
  }
}

TEST(Cli, ConfigErrors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return pfvp::parse_config(in);
  };
  EXPECT_THROW(parse("modes = 64\nmodes = 32\n"), pfvp::ConfigError);
  EXPECT_THROW(parse("color = blue\n"), pfvp::ConfigError);
  EXPECT_THROW(parse("T = -1\n"), pfvp::ConfigError);
  EXPECT_THROW(parse("T = 1x\n"), pfvp::ConfigError);
  EXPECT_THROW(parse("modes = -3\n"), pfvp::ConfigError);
  EXPECT_THROW(parse("domain.kind = sphere\n"), pfvp::ConfigError);
  EXPECT_THROW(parse("just some words\n"), pfvp::ConfigError);
  EXPECT_THROW(parse("uT.path = /nonexistent/file.csv\n"), pfvp::ConfigError);
  const auto c = parse("# comment\ndomain.kind = rectangle  # trailing\ndomain.length = 1, 2\nmodes = 8\n");
  EXPECT_EQ(c.kind, pfvp::DomainKind::rectangle);
  EXPECT_EQ(c.L1, 1.0);
  EXPECT_EQ(c.L2, 2.0);
}
