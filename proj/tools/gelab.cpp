#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gelab/cli.hpp"
#include "gelab/error.hpp"

int main(int argc, char** argv) {
  namespace cli = gelab::cli;
  CLI::App app{"Coagulation and gelation experiments"};
  app.set_version_flag("--version", cli::kVersion);
  std::string scenario_name;
  std::string config_path;
  std::string out_dir = "gelab_out";
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("scenario", scenario_name, "Scenario to run")
      ->required()
      ->check(CLI::IsMember(cli::scenario_names()));
  app.add_option("--config", config_path, "Config file of section.key = value lines")->required();
  app.add_option("--out", out_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides run.seed)");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads for independent runs")
                          ->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto scenario = *cli::parse_scenario(scenario_name);
    cli::RunConfig config = cli::parse_config_file(config_path, scenario);
    if (*seed_opt) {
      config.seed = seed;
      config.effective["run.seed"] = std::to_string(seed);
    }
    if (*threads_opt) {
      config.threads = threads;
      config.effective["run.threads"] = std::to_string(threads);
    }
    cli::ensure_writable(out_dir);

    const auto start = std::chrono::steady_clock::now();
    const cli::Report report = cli::run_scenario(config);
    const auto files = cli::emit_report(report, out_dir);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ofstream manifest(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    manifest << cli::manifest_json(config, report, files, wall);
    if (!manifest.flush()) throw gelab::IoError("failed writing manifest.json");

    for (const auto& line : report.summary) std::cout << line << '\n';
    std::cout << "wrote " << files.size() + 1 << " files to " << out_dir << '\n';
    return report.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "gelab: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
}
