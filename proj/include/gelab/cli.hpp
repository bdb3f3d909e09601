#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gelab/diagnostics.hpp"
#include "gelab/kernels.hpp"
#include "gelab/measures.hpp"
#include "gelab/solver_fv.hpp"
#include "gelab/solver_mc.hpp"

namespace gelab::cli {

inline constexpr const char* kVersion = "0.3.0";

enum class Scenario { SimulateFv, SimulateMc, SweepVmax, SweepN, CertifyKernel, CascadeProbe };

std::optional<Scenario> parse_scenario(std::string_view name);
std::string to_string(Scenario s);
std::vector<std::string> scenario_names();

// Names accepted by kernel.form, sorted.
std::vector<std::string> kernel_form_names();

struct ConfigEntry {
  std::string value;
  int line = 0;
};

// Syntax pass over `section.key = value` lines with `#` comments. Throws
// ConfigError on malformed lines, duplicate keys and unknown keys.
std::map<std::string, ConfigEntry> read_config_text(std::string_view text);

struct DiagnosticsSpec {
  double epsilon = 0.01;
  double theta = 0.2;
  std::vector<double> R_values;
  std::vector<double> m_values;
  double blowup_R = 4.0;
  double cascade_t = 0.5;
  int cascade_steps = 3;
  double search_L = 4.0;
  int search_depth = 20;
  int search_extensions = 4;
};

struct RunConfig {
  Scenario scenario = Scenario::SimulateFv;
  std::string kernel_form;
  Kernel kernel = Kernel::constant();
  InitialSpec init = init::Exponential{};
  FvConfig fv;
  McConfig mc;
  std::vector<double> sweep_vmax;
  std::vector<std::int64_t> sweep_n;
  DiagnosticsSpec diag;
  KernelParams declared;
  CertificationSampling sampling;
  bool assert_diagonal_vanishing = true;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string source_text;
  // Every recognised key with the value in force, defaults included.
  std::map<std::string, std::string> effective;
};

// Validates the config for the scenario and applies defaults. Errors name
// the missing key, list the valid kernel forms or give the offending line.
RunConfig parse_config(std::string_view text, Scenario scenario);
RunConfig parse_config_file(const std::filesystem::path& path, Scenario scenario);

struct Artifact {
  std::string name;
  std::string content;
};

struct RunRecord {
  std::string id;
  std::string status;
};

struct Report {
  std::vector<Artifact> artifacts;
  std::vector<RunRecord> runs;
  std::vector<std::string> summary;
  // 0 on success, 3 when a run ended in a numerical failure or a failed
  // certificate.
  int exit_code = 0;
};

Report run_scenario(const RunConfig& config);

// Creates the directory if needed and proves it writable. Throws IoError.
void ensure_writable(const std::filesystem::path& dir);

// Writes the artifacts in order and returns their names. Throws
// InsufficientDataError("nothing to report") for an empty report.
std::vector<std::string> emit_report(const Report& report, const std::filesystem::path& out_dir);

std::uint64_t fnv1a(std::string_view bytes);

std::string manifest_json(const RunConfig& config, const Report& report, const std::vector<std::string>& files,
                          double wall_seconds);

// Process exit code for an exception escaping a scenario.
int exit_code_for(const std::exception& e);

// CSV tables in their fixed column order.
std::string trajectory_csv(const Trajectory& traj);
std::string events_csv(const EventLog& log);
std::string ensemble_csv(const EnsembleResult& result);
std::string certificate_csv(const CertificateReport& report);
std::string sweep_csv(const std::vector<GelationEstimate>& estimates);
std::string distribution_csv(const SizeDistribution& dist);

struct DiagnosticRow {
  std::string run_id;
  std::string name;
  std::string value;
};
std::string diagnostics_csv(const std::vector<DiagnosticRow>& rows);

}  // namespace gelab::cli
