#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gelab/cli.hpp"
#include "gelab/error.hpp"

namespace gelab::cli {

namespace {

std::string opt(const std::optional<double>& v, const char* missing) {
  return v ? format_double(*v) : std::string(missing);
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
  std::string s = "time,M0,M1_in,gel_mass\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto& d = traj.diagnostics[i];
    s += format_double(traj.times[i]) + "," + format_double(d.M0) + "," + format_double(d.M1_in) + "," +
         format_double(d.gel_mass) + "\n";
  }
  return s;
}

std::string events_csv(const EventLog& log) {
  std::string s = "event_index,time,v_small,v_large,v_merged\n";
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const auto& e = log.events[i];
    s += std::to_string(i) + "," + format_double(e.time) + "," + format_double(e.v_small) + "," +
         format_double(e.v_large) + "," + format_double(e.v_merged) + "\n";
  }
  return s;
}

std::string ensemble_csv(const EnsembleResult& result) {
  std::string s = "replica,tgel_or_censored,largest_final_particle\n";
  for (std::size_t r = 0; r < result.replicas.size(); ++r) {
    const auto& rep = result.replicas[r];
    s += std::to_string(r) + "," + opt(rep.t_gel, "censored") + "," + format_double(rep.largest_final) + "\n";
  }
  return s;
}

std::string certificate_csv(const CertificateReport& report) {
  std::string s = "bound_name,status,margin,witness_v,witness_vprime\n";
  for (const auto& b : report.bounds)
    s += b.name + "," + to_string(b.status) + "," + format_double(b.margin) + "," + format_double(b.witness_v) + "," +
         format_double(b.witness_vprime) + "\n";
  return s;
}

std::string sweep_csv(const std::vector<GelationEstimate>& estimates) {
  std::string s = "v_max,t_gel_eps\n";
  for (const auto& e : estimates) s += format_double(e.v_max) + "," + opt(e.t_gel_eps, "none") + "\n";
  return s;
}

std::string distribution_csv(const SizeDistribution& dist) {
  std::ostringstream os;
  write_csv(os, dist);
  return os.str();
}

std::string diagnostics_csv(const std::vector<DiagnosticRow>& rows) {
  std::string s = "run_id,diagnostic_name,value\n";
  for (const auto& r : rows) s += r.run_id + "," + r.name + "," + r.value + "\n";
  return s;
}

void ensure_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".gelab_write_probe";
  {
    std::ofstream out(probe, std::ios::binary | std::ios::trunc);
    if (!out || !(out << "probe") || !out.flush())
      throw IoError("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

std::vector<std::string> emit_report(const Report& report, const std::filesystem::path& out_dir) {
  if (report.artifacts.empty()) throw InsufficientDataError("nothing to report");
  std::vector<std::string> names;
  for (const auto& a : report.artifacts) {
    std::ofstream out(out_dir / a.name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + (out_dir / a.name).string() + " for writing");
    out << a.content;
    if (!out.flush()) throw IoError("failed writing " + (out_dir / a.name).string());
    names.push_back(a.name);
  }
  return names;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string manifest_json(const RunConfig& config, const Report& report, const std::vector<std::string>& files,
                          double wall_seconds) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config.source_text)));
  nlohmann::ordered_json j;
  j["tool"] = "gelab";
  j["version"] = kVersion;
  j["scenario"] = to_string(config.scenario);
  j["config_hash"] = hash;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  j["wall_clock_seconds"] = wall_seconds;
  nlohmann::ordered_json eff = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.effective) eff[k] = v;
  j["effective_config"] = eff;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& r : report.runs) runs.push_back({{"id", r.id}, {"status", r.status}});
  j["runs"] = runs;
  j["files"] = files;
  j["exit_code"] = report.exit_code;
  return j.dump(2) + "\n";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const UnsupportedFormError*>(&e))
    return 2;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  if (dynamic_cast<const Error*>(&e)) return 3;
  return 1;
}

}  // namespace gelab::cli
