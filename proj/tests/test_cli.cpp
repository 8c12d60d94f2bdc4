#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fastdiff/io.hpp"
#include "fastdiff/params.hpp"

#ifndef FASTDIFF_CLI_BIN
#error "FASTDIFF_CLI_BIN must point at the built binary"
#endif

using namespace fastdiff;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
};

// popen captures stdout only; stderr goes to the test log, which is where
// diagnostics belong anyway.
RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(FASTDIFF_CLI_BIN) + " " + args;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  RunResult r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fastdiff_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// report.json must be byte-identical across reruns except for the timestamp.
std::string strip_timestamp(const std::string& text) {
  std::istringstream is(text);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line))
    if (line.find("\"timestamp\"") == std::string::npos) os << line << "\n";
  return os.str();
}

}  // namespace

TEST(Cli, ParamsPrintsDerivedConstants) {
  const RunResult r = run_cli("params --override scenario.N=6 --override scenario.m=0.4 2>/dev/null");
  ASSERT_EQ(r.status, 0) << r.out;
  const Json j = Json::parse(r.out);
  const ProblemParams p = derive_params(6, 0.4, 1.0);
  EXPECT_EQ(j.at("N").get<int>(), 6);
  EXPECT_DOUBLE_EQ(j.at("beta").get<double>(), p.beta);
  EXPECT_DOUBLE_EQ(j.at("Cstar").get<double>(), p.Cstar);
  EXPECT_EQ(j.at("regime"), "NonIntegrable");
}

TEST(Cli, UnknownKeyIsUsageError) {
  const RunResult r = run_cli("params --override grid.intervalz=12 2>&1");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("grid.intervalz"), std::string::npos);
}

TEST(Cli, OutOfRangeValueIsUsageError) {
  const RunResult r = run_cli("params --override scenario.m=0.9 2>&1");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("scenario.m"), std::string::npos);
}

TEST(Cli, MissingConfigFileIsUsageError) {
  const RunResult r = run_cli("run /nonexistent/config.ini 2>&1");
  EXPECT_EQ(r.status, 2);
}

TEST(Cli, MissingSubcommandIsUsageError) {
  EXPECT_EQ(run_cli("2>&1").status, 2);
  EXPECT_EQ(run_cli("frobnicate 2>&1").status, 2);
}

TEST(Cli, RunWritesReportAndExitsZero) {
  const fs::path dir = fresh_dir("run");
  const fs::path cfg = dir / "cfg.ini";
  {
    std::ofstream os(cfg);
    os << "[scenario]\nname = barenblatt-selftest\n\n[grid]\nintervals = 200\n";
  }
  const RunResult r =
      run_cli("run " + cfg.string() + " --out " + (dir / "out").string() + " 2>&1");
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("overall: PASS"), std::string::npos);

  ASSERT_TRUE(fs::exists(dir / "out" / "report.json"));
  ASSERT_TRUE(fs::exists(dir / "out" / "report.txt"));
  const Json rep = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_EQ(rep.at("scenario"), "barenblatt-selftest");
  EXPECT_TRUE(rep.at("all_passed").get<bool>());
  EXPECT_EQ(rep.at("config").at("intervals").get<int>(), 200);
  EXPECT_FALSE(rep.at("checks").empty());
}

TEST(Cli, SelftestSubcommandEqualsRunWithDefaults) {
  const fs::path dir = fresh_dir("selftest");
  const RunResult r = run_cli("selftest --override grid.intervals=200 --out " +
                              (dir / "out").string() + " 2>&1");
  ASSERT_EQ(r.status, 0) << r.out;
  const Json rep = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_EQ(rep.at("scenario"), "barenblatt-selftest");
  EXPECT_TRUE(rep.at("all_passed").get<bool>());
}

TEST(Cli, FailedCheckExitsOne) {
  const fs::path dir = fresh_dir("fail");
  // an impossible tolerance turns a healthy run into a red report
  const RunResult r = run_cli("selftest --override grid.intervals=200 --override "
                              "tolerances.trapped=1e-30 --out " +
                              (dir / "out").string() + " 2>&1");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("overall: FAIL"), std::string::npos);
  const Json rep = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_FALSE(rep.at("all_passed").get<bool>());
}

TEST(Cli, ReportIsDeterministicUpToTimestamp) {
  const fs::path dir = fresh_dir("determinism");
  const std::string base = "selftest --override grid.intervals=200 --out ";
  ASSERT_EQ(run_cli(base + (dir / "a").string() + " 2>&1").status, 0);
  ASSERT_EQ(run_cli(base + (dir / "b").string() + " 2>&1").status, 0);
  const std::string a = slurp(dir / "a" / "report.json");
  const std::string b = slurp(dir / "b" / "report.json");
  EXPECT_EQ(strip_timestamp(a), strip_timestamp(b));
  // series files carry no timestamps at all, so they match byte for byte
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("series_", 0) == 0) EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / name));
  }
}

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run_cli("--help 2>&1").status, 0);
  EXPECT_EQ(run_cli("run --help 2>&1").status, 0);
}
