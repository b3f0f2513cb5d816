#include "slipstokes/config.hpp"
#include "slipstokes/runner.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace slipstokes;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("slipstokes_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd =
      std::string("\"") + SLIPSTOKES_CLI + "\" " + args + " > \"" + stdout_file.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Runner, SummaryHashIsDeterministic) {
  RunConfig c;
  c.experiment = "simulate";
  c.n = 8;
  c.out_dir = scratch("det_a").string();
  const RunOutcome a = run_experiment(c);
  c.out_dir = scratch("det_b").string();
  const RunOutcome b = run_experiment(c);
  EXPECT_TRUE(a.passed);
  EXPECT_EQ(a.summary_hash, b.summary_hash);
  EXPECT_EQ(a.summary.at("metrics").dump(), b.summary.at("metrics").dump());
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "summary.json"));
  c.seed = 5;
  c.out_dir = scratch("det_c").string();
  EXPECT_NE(run_experiment(c).summary_hash, a.summary_hash);
}

TEST(Cli, ListPrintsCatalog) {
  const fs::path dir = scratch("list");
  ASSERT_EQ(run_cli("list", dir / "out.txt"), 0);
  const nlohmann::json catalog = nlohmann::json::parse(slurp(dir / "out.txt"));
  EXPECT_EQ(catalog.size(), 6u);
}

TEST(Cli, SuccessfulRunExitsZero) {
  const fs::path dir = scratch("ok");
  write_file(dir / "run.toml", "[grid]\nn = 8\n");
  const int code = run_cli("simulate --config \"" + (dir / "run.toml").string() + "\" --out \"" +
                               (dir / "out").string() + "\" --format json,csv",
                           dir / "stdout.txt");
  EXPECT_EQ(code, 0) << slurp(dir / "stdout.txt");
  const nlohmann::json line = nlohmann::json::parse(slurp(dir / "stdout.txt"));
  EXPECT_TRUE(line.at("passed").get<bool>());
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "trace.csv"));
}

TEST(Cli, BadConfigExitsTwo) {
  const fs::path dir = scratch("bad");
  write_file(dir / "run.toml", "[time]\ntime_set = [[0.5, 3.0]]\n");
  EXPECT_EQ(run_cli("diagnostics --config \"" + (dir / "run.toml").string() + "\"",
                    dir / "stdout.txt"),
            2);
  EXPECT_NE(slurp(dir / "stdout.txt").find("time_set"), std::string::npos);
  EXPECT_EQ(run_cli("simulate --bogus", dir / "stdout2.txt"), 2);
}

TEST(Cli, FailedCheckExitsThree) {
  const fs::path dir = scratch("tight");
  write_file(dir / "run.toml", "[grid]\nn = 8\n[tolerances]\nenergy = 1e-30\n");
  EXPECT_EQ(run_cli("simulate --config \"" + (dir / "run.toml").string() + "\" --out \"" +
                        (dir / "out").string() + "\"",
                    dir / "stdout.txt"),
            3);
  const nlohmann::json summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  EXPECT_FALSE(summary.at("passed").get<bool>());
}

TEST(Cli, NumericFailureWritesErrorReport) {
  const fs::path dir = scratch("bracket");
  write_file(dir / "run.toml",
             "[grid]\nn = 8\n[min_time]\nbudget = 1e-30\nt_lo = 0.1\nt_hi = 0.2\n");
  EXPECT_EQ(run_cli("min-time --config \"" + (dir / "run.toml").string() + "\" --out \"" +
                        (dir / "out").string() + "\"",
                    dir / "stdout.txt"),
            3);
  const nlohmann::json report = nlohmann::json::parse(slurp(dir / "out" / "error.json"));
  EXPECT_EQ(report.at("error").at("kind"), "bracketing");
}
