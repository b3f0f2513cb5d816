#include "slipstokes/config.hpp"
#include "slipstokes/errors.hpp"
#include "slipstokes/runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace ss = slipstokes;

namespace {

void report_error(ss::ErrorKind kind, const std::string& message, const std::string& out_dir) {
  const auto report = ss::error_report(kind, message);
  std::cerr << report.dump() << "\n";
  if (out_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!ec) std::ofstream(std::filesystem::path(out_dir) / "error.json") << report.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stokes flow with slip walls: estimates and bang-bang null controls"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> formats;

  app.add_subcommand("list", "Print the experiment catalog as JSON");
  for (const auto& name : ss::experiment_names()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    sub->add_option("--config", config_path, "Configuration file (key = value or JSON)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out_dir, "Override the output directory");
    sub->add_option("--format", formats, "Artifact formats: csv,json,bin")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ss::kExitConfig;
  }

  CLI::App* verb = app.get_subcommands().front();
  if (verb->get_name() == "list") {
    std::cout << ss::list_experiments().dump(2) << "\n";
    return ss::kExitSuccess;
  }

  ss::RunConfig config;
  try {
    if (!config_path.empty()) config = ss::parse_config_file(config_path);
    config.experiment = verb->get_name();
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!formats.empty()) config.formats = formats;
    ss::validate_config(config);
  } catch (const ss::Error& e) {
    report_error(e.kind(), e.what(), "");
    return ss::kExitConfig;
  }

  try {
    const ss::RunOutcome outcome = ss::run_experiment(config);
    const nlohmann::json line = {{"experiment", config.experiment},
                                 {"passed", outcome.passed},
                                 {"summary_hash", outcome.summary_hash},
                                 {"out", config.out_dir}};
    std::cout << line.dump() << "\n";
    return outcome.exit_code();
  } catch (const ss::Error& e) {
    report_error(e.kind(), e.what(), config.out_dir);
    return ss::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    report_error(ss::ErrorKind::Internal, e.what(), config.out_dir);
    return ss::kExitInternal;
  }
}
