#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "gelab/cli.hpp"
#include "gelab/error.hpp"

namespace gelab::cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "run.seed", "run.threads",
      "kernel.form", "kernel.gamma", "kernel.d1", "kernel.d2", "kernel.value",
      "kernel.h_x", "kernel.h_y", "kernel.g_x", "kernel.g_y",
      "init.form", "init.atoms", "init.mean", "init.lower", "init.upper",
      "solver.v_min", "solver.v_max", "solver.bins_per_decade", "solver.dt_safety", "solver.t_end",
      "solver.sample_interval", "solver.dt_min", "solver.stop_gel_fraction",
      "mc.n_particles", "mc.t_end", "mc.n_replicas",
      "sweep.v_max", "sweep.n",
      "diagnostics.epsilon", "diagnostics.theta", "diagnostics.R", "diagnostics.m", "diagnostics.blowup_R",
      "diagnostics.cascade_t", "diagnostics.cascade_steps", "diagnostics.search_L", "diagnostics.search_depth",
      "diagnostics.search_extensions",
      "certify.gamma", "certify.H", "certify.H0", "certify.H1", "certify.G0", "certify.G1", "certify.k",
      "certify.v_min", "certify.v_max", "certify.n_v", "certify.n_x", "certify.R_checks",
      "certify.assert_diagonal_vanishing",
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

class Reader {
 public:
  Reader(std::map<std::string, ConfigEntry> entries, Scenario scenario)
      : entries_(std::move(entries)), scenario_(scenario) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const ConfigEntry& require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw ConfigError("missing required key '" + key + "' for scenario " + to_string(scenario_));
    return it->second;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const std::string v = has(key) ? entries_.at(key).value : fallback;
    effective[key] = v;
    return v;
  }
  std::string text(const std::string& key) {
    const std::string v = require(key).value;
    effective[key] = v;
    return v;
  }

  double number(const std::string& key) { return record(key, parse_double(require(key), key)); }
  double number(const std::string& key, double fallback) {
    return record(key, has(key) ? parse_double(entries_.at(key), key) : fallback);
  }

  std::int64_t integer(const std::string& key) {
    const std::int64_t v = parse_int(require(key), key);
    effective[key] = std::to_string(v);
    return v;
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const std::int64_t v = has(key) ? parse_int(entries_.at(key), key) : fallback;
    effective[key] = std::to_string(v);
    return v;
  }

  std::vector<double> numbers(const std::string& key) { return numbers_of(key, require(key)); }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (has(key)) return numbers_of(key, entries_.at(key));
    effective[key] = join_numbers(fallback);
    return fallback;
  }

  std::vector<std::int64_t> integers(const std::string& key) {
    const ConfigEntry& e = require(key);
    std::vector<std::int64_t> out;
    for (const auto& item : split(e.value, ',')) out.push_back(parse_int(ConfigEntry{item, e.line}, key));
    std::vector<std::string> parts;
    for (auto v : out) parts.push_back(std::to_string(v));
    effective[key] = join(parts, ",");
    return out;
  }

  bool boolean(const std::string& key, bool fallback) {
    bool v = fallback;
    if (has(key)) {
      const auto& e = entries_.at(key);
      if (e.value == "true" || e.value == "1") {
        v = true;
      } else if (e.value == "false" || e.value == "0") {
        v = false;
      } else {
        throw ConfigError("config line " + std::to_string(e.line) + ": expected true or false for " + key);
      }
    }
    effective[key] = v ? "true" : "false";
    return v;
  }

  std::map<std::string, std::string> effective;

 private:
  static double parse_double(const ConfigEntry& e, const std::string& key) {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    if (b != end && *b == '+') ++b;
    auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc() || res.ptr != end || e.value.empty())
      throw ConfigError("config line " + std::to_string(e.line) + ": malformed number '" + e.value + "' for " + key);
    return v;
  }
  static std::int64_t parse_int(const ConfigEntry& e, const std::string& key) {
    std::int64_t v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc() || res.ptr != end || e.value.empty())
      throw ConfigError("config line " + std::to_string(e.line) + ": malformed integer '" + e.value + "' for " + key);
    return v;
  }
  static std::string join_numbers(const std::vector<double>& xs) {
    std::vector<std::string> parts;
    for (double x : xs) parts.push_back(format_double(x));
    return join(parts, ",");
  }
  double record(const std::string& key, double v) {
    effective[key] = format_double(v);
    return v;
  }
  std::vector<double> numbers_of(const std::string& key, const ConfigEntry& e) {
    std::vector<double> out;
    for (const auto& item : split(e.value, ',')) out.push_back(parse_double(ConfigEntry{item, e.line}, key));
    effective[key] = join_numbers(out);
    return out;
  }

  std::map<std::string, ConfigEntry> entries_;
  Scenario scenario_;
};

Profile read_profile(Reader& r, const std::string& xkey, const std::string& ykey) {
  Profile p{r.numbers(xkey), r.numbers(ykey)};
  if (p.x.size() != p.y.size()) throw ConfigError(xkey + " and " + ykey + " must have the same length");
  return p;
}

Kernel read_kernel(Reader& r, std::string& form_name) {
  form_name = r.text("kernel.form");
  try {
    if (form_name == "rain" || form_name == "differential_sedimentation") return Kernel::differential_sedimentation();
    if (form_name == "sum") return Kernel::sum(r.number("kernel.gamma"));
    if (form_name == "power_difference") return Kernel::power_difference(r.number("kernel.d1"), r.number("kernel.d2"));
    if (form_name == "abs_difference") return Kernel::abs_difference(r.number("kernel.d1"), r.number("kernel.d2"));
    if (form_name == "constant") return Kernel::constant(r.number("kernel.value", 1.0));
    if (form_name == "composed")
      return Kernel::composed(read_profile(r, "kernel.h_x", "kernel.h_y"), read_profile(r, "kernel.g_x", "kernel.g_y"));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  throw ConfigError("unknown kernel form '" + form_name + "'; valid forms: " + join(kernel_form_names(), ", "));
}

InitialSpec read_init(Reader& r) {
  const std::string form = r.text("init.form");
  if (form == "dirac") {
    init::Dirac d;
    const std::string atoms = r.text("init.atoms");
    for (const auto& item : split(atoms, ',')) {
      const auto parts = split(item, ':');
      if (parts.size() != 2) throw ConfigError("init.atoms: expected volume:weight pairs, got '" + item + "'");
      double v = 0.0, w = 0.0;
      auto r1 = std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), v);
      auto r2 = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), w);
      if (r1.ec != std::errc() || r2.ec != std::errc() || r1.ptr != parts[0].data() + parts[0].size() ||
          r2.ptr != parts[1].data() + parts[1].size())
        throw ConfigError("init.atoms: malformed number in '" + item + "'");
      d.atoms.push_back(Atom{v, w});
    }
    return d;
  }
  if (form == "exponential") return init::Exponential{r.number("init.mean", 1.0)};
  if (form == "uniform") return init::Uniform{r.number("init.lower"), r.number("init.upper")};
  throw ConfigError("unknown init form '" + form + "'; valid forms: dirac, exponential, uniform");
}

std::vector<std::string> required_keys(Scenario s) {
  switch (s) {
    case Scenario::SimulateFv:
      return {"kernel.form", "init.form", "solver.v_max", "solver.t_end"};
    case Scenario::SimulateMc:
      return {"kernel.form", "init.form", "mc.n_particles", "mc.t_end"};
    case Scenario::SweepVmax:
      return {"kernel.form", "init.form", "sweep.v_max", "solver.t_end"};
    case Scenario::SweepN:
      return {"kernel.form", "init.form", "sweep.n", "mc.t_end", "mc.n_replicas"};
    case Scenario::CertifyKernel:
      return {"kernel.form"};
    case Scenario::CascadeProbe:
      return {"kernel.form", "init.form", "solver.v_max", "diagnostics.cascade_t"};
  }
  return {};
}

void read_fv(Reader& r, FvConfig& fv, double v_max_default, double t_end_default, double stop_default) {
  fv.v_min = r.number("solver.v_min", fv.v_min);
  fv.v_max = r.number("solver.v_max", v_max_default);
  fv.bins_per_decade = static_cast<int>(r.integer("solver.bins_per_decade", fv.bins_per_decade));
  fv.dt_safety = r.number("solver.dt_safety", fv.dt_safety);
  fv.t_end = r.number("solver.t_end", t_end_default);
  fv.sample_interval = r.number("solver.sample_interval", fv.sample_interval);
  fv.dt_min = r.number("solver.dt_min", fv.dt_min);
  fv.stop_gel_fraction = r.number("solver.stop_gel_fraction", stop_default);
  fv.validate();
}

void read_mc(Reader& r, McConfig& mc, std::int64_t n_default) {
  mc.n_particles = r.integer("mc.n_particles", n_default);
  mc.t_end = r.number("mc.t_end");
  mc.n_replicas = static_cast<int>(r.integer("mc.n_replicas", 1));
}

}  // namespace

std::optional<Scenario> parse_scenario(std::string_view name) {
  if (name == "simulate_fv") return Scenario::SimulateFv;
  if (name == "simulate_mc") return Scenario::SimulateMc;
  if (name == "sweep_vmax") return Scenario::SweepVmax;
  if (name == "sweep_n") return Scenario::SweepN;
  if (name == "certify_kernel") return Scenario::CertifyKernel;
  if (name == "cascade_probe") return Scenario::CascadeProbe;
  return std::nullopt;
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::SimulateFv: return "simulate_fv";
    case Scenario::SimulateMc: return "simulate_mc";
    case Scenario::SweepVmax: return "sweep_vmax";
    case Scenario::SweepN: return "sweep_n";
    case Scenario::CertifyKernel: return "certify_kernel";
    case Scenario::CascadeProbe: return "cascade_probe";
  }
  return "unknown";
}

std::vector<std::string> scenario_names() {
  return {"simulate_fv", "simulate_mc", "sweep_vmax", "sweep_n", "certify_kernel", "cascade_probe"};
}

std::vector<std::string> kernel_form_names() {
  return {"abs_difference", "composed", "constant", "differential_sedimentation", "power_difference", "rain", "sum"};
}

std::map<std::string, ConfigEntry> read_config_text(std::string_view text) {
  std::map<std::string, ConfigEntry> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key + "' lacks a section");
    if (!known_keys().count(key))
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (out.count(key)) throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    out.emplace(key, ConfigEntry{value, line_no});
  }
  return out;
}

RunConfig parse_config(std::string_view text, Scenario scenario) {
  Reader r(read_config_text(text), scenario);
  for (const auto& key : required_keys(scenario)) r.require(key);

  RunConfig c;
  c.scenario = scenario;
  c.source_text = std::string(text);
  c.seed = static_cast<std::uint64_t>(r.integer("run.seed", 0));
  c.threads = static_cast<int>(r.integer("run.threads", 1));
  if (c.threads < 1) throw ConfigError("run.threads must be at least 1");
  c.kernel = read_kernel(r, c.kernel_form);

  DiagnosticsSpec& d = c.diag;
  d.epsilon = r.number("diagnostics.epsilon", d.epsilon);
  if (!(d.epsilon > 0.0 && d.epsilon < 1.0)) throw ConfigError("diagnostics.epsilon must lie in (0,1)");
  d.theta = r.number("diagnostics.theta", d.theta);
  if (!(d.theta > 0.0 && d.theta < 1.0)) throw ConfigError("diagnostics.theta must lie in (0,1)");
  c.mc.theta = d.theta;

  switch (scenario) {
    case Scenario::SimulateFv:
      c.init = read_init(r);
      read_fv(r, c.fv, c.fv.v_max, 1.0, 0.0);
      d.R_values = r.numbers("diagnostics.R", {});
      d.m_values = r.numbers("diagnostics.m", {});
      d.blowup_R = r.number("diagnostics.blowup_R", d.blowup_R);
      break;
    case Scenario::SimulateMc:
      c.init = read_init(r);
      read_mc(r, c.mc, c.mc.n_particles);
      break;
    case Scenario::SweepVmax: {
      c.init = read_init(r);
      c.sweep_vmax = r.numbers("sweep.v_max");
      if (c.sweep_vmax.empty()) throw ConfigError("sweep.v_max must list at least one value");
      const double top = *std::max_element(c.sweep_vmax.begin(), c.sweep_vmax.end());
      read_fv(r, c.fv, top, 1.0, d.epsilon);
      break;
    }
    case Scenario::SweepN:
      c.init = read_init(r);
      c.sweep_n = r.integers("sweep.n");
      if (c.sweep_n.empty()) throw ConfigError("sweep.n must list at least one value");
      read_mc(r, c.mc, c.sweep_n.front());
      break;
    case Scenario::CertifyKernel: {
      KernelParams p;
      try {
        p = derived_params(c.kernel);
      } catch (const Error&) {
        // Tabulated kernels without a scaling law: only explicit values apply.
      }
      p.gamma = r.number("certify.gamma", p.gamma);
      p.H = r.number("certify.H", p.H);
      p.H0 = r.number("certify.H0", p.H0);
      p.H1 = r.number("certify.H1", p.H1);
      p.G0 = r.number("certify.G0", p.G0);
      p.G1 = r.number("certify.G1", p.G1);
      p.k = r.number("certify.k", p.k);
      c.declared = p;
      CertificationSampling& s = c.sampling;
      s.v_min = r.number("certify.v_min", s.v_min);
      s.v_max = r.number("certify.v_max", s.v_max);
      s.n_v = static_cast<int>(r.integer("certify.n_v", s.n_v));
      s.n_x = static_cast<int>(r.integer("certify.n_x", s.n_x));
      s.R_checks = r.numbers("certify.R_checks", s.R_checks);
      try {
        s.validate();
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
      c.assert_diagonal_vanishing = r.boolean("certify.assert_diagonal_vanishing", true);
      break;
    }
    case Scenario::CascadeProbe:
      c.init = read_init(r);
      d.cascade_t = r.number("diagnostics.cascade_t");
      read_fv(r, c.fv, c.fv.v_max, d.cascade_t, 0.0);
      if (d.cascade_t > c.fv.t_end) throw ConfigError("diagnostics.cascade_t must not exceed solver.t_end");
      d.cascade_steps = static_cast<int>(r.integer("diagnostics.cascade_steps", d.cascade_steps));
      d.search_L = r.number("diagnostics.search_L", d.search_L);
      d.search_depth = static_cast<int>(r.integer("diagnostics.search_depth", d.search_depth));
      d.search_extensions = static_cast<int>(r.integer("diagnostics.search_extensions", d.search_extensions));
      break;
  }
  c.effective = std::move(r.effective);
  return c;
}

RunConfig parse_config_file(const std::filesystem::path& path, Scenario scenario) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), scenario);
}

}  // namespace gelab::cli
