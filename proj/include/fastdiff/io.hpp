#pragma once

// File formats of the lab:
//   * fields      -> CSV with "r,value" columns; grid and tail metadata ride in
//                    '#' header comments so a file is self-describing,
//   * series      -> CSV with columns tau_or_t, sup, l1, weighted_l1,
//   * trajectory  -> directory of field CSVs plus an index.json,
//   * report      -> JSON (machine) and aligned text (human),
//   * config      -> flat INI sections parsed into "section.key" pairs.
// All numbers are written with %.17g, which round-trips doubles exactly and
// keeps outputs byte-deterministic.

#include <cstdio>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fastdiff/diagnostics.hpp"
#include "fastdiff/errors.hpp"
#include "fastdiff/grid.hpp"
#include "fastdiff/params.hpp"
#include "fastdiff/solver.hpp"

namespace fastdiff {

using Json = nlohmann::ordered_json;

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// fields
// ---------------------------------------------------------------------------

// Extra header comments, written as "# key: value" lines (profile metadata).
using CsvComments = std::vector<std::pair<std::string, std::string>>;

inline void write_field_csv(std::ostream& os, const RadialField& f,
                            const CsvComments& extra = {}) {
  const RadialGrid& g = *f.grid;
  os << "# grid: N=" << g.N << " nodes=" << g.size() << " r_lin=" << fmt_g17(g.r_lin)
     << " Rmax=" << fmt_g17(g.Rmax) << " ratio=" << fmt_g17(g.ratio) << "\n";
  if (f.tail.is_power())
    os << "# tail: p=" << fmt_g17(f.tail.p) << " c=" << fmt_g17(f.tail.c) << "\n";
  else
    os << "# tail: none\n";
  for (const auto& [k, v] : extra) os << "# " << k << ": " << v << "\n";
  os << "r,value\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    os << fmt_g17(g.nodes[i]) << "," << fmt_g17(f.values[i]) << "\n";
}

inline void write_field_csv(const std::filesystem::path& path, const RadialField& f,
                            const CsvComments& extra = {}) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  write_field_csv(os, f, extra);
}

namespace detail {

// Pulls "key=value" tokens out of a "# grid: ..." style comment payload.
inline std::map<std::string, std::string> parse_kv_tokens(const std::string& s) {
  std::map<std::string, std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "not a number: '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError(key, "trailing junk in number: '" + s + "'");
  return v;
}

}  // namespace detail

// Reads back what write_field_csv wrote; the grid is reconstructed from the
// metadata comment, so a round trip is exact.
inline RadialField read_field_csv(std::istream& is) {
  std::string line;
  auto grid = std::make_shared<RadialGrid>();
  TailModel tail = TailModel::none();
  bool saw_grid = false;
  std::vector<double> r, v;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# grid:", 0) == 0) {
        auto kv = detail::parse_kv_tokens(line.substr(7));
        grid->N = int(detail::to_double("grid.N", kv.at("N")));
        grid->r_lin = detail::to_double("grid.r_lin", kv.at("r_lin"));
        grid->Rmax = detail::to_double("grid.Rmax", kv.at("Rmax"));
        grid->ratio = detail::to_double("grid.ratio", kv.at("ratio"));
        saw_grid = true;
      } else if (line.rfind("# tail:", 0) == 0 && line.find("none") == std::string::npos) {
        auto kv = detail::parse_kv_tokens(line.substr(7));
        tail = TailModel::power(detail::to_double("tail.p", kv.at("p")),
                                detail::to_double("tail.c", kv.at("c")));
      }
      continue;
    }
    if (line.rfind("r,", 0) == 0) continue;  // column header
    auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("field csv: malformed row '" + line + "'");
    r.push_back(detail::to_double("row.r", line.substr(0, comma)));
    v.push_back(detail::to_double("row.value", line.substr(comma + 1)));
  }
  if (!saw_grid) throw Error("field csv: missing grid metadata comment");
  grid->nodes = std::move(r);
  RadialField f{grid, std::move(v), tail};
  validate_field(f);
  return f;
}

inline RadialField read_field_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open for reading: " + path.string());
  return read_field_csv(is);
}

// ---------------------------------------------------------------------------
// series
// ---------------------------------------------------------------------------

namespace detail {

// NaN marks "not computed" (empty cell), +inf a divergent integral.
inline std::string series_cell(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return "divergent";
  return fmt_g17(x);
}

}  // namespace detail

inline void write_series_csv(std::ostream& os, const SeriesTable& s) {
  os << "tau_or_t,sup,l1,weighted_l1\n";
  for (std::size_t i = 0; i < s.t.size(); ++i)
    os << fmt_g17(s.t[i]) << "," << detail::series_cell(s.sup[i]) << ","
       << detail::series_cell(s.l1[i]) << "," << detail::series_cell(s.weighted[i]) << "\n";
}

inline void write_series_csv(const std::filesystem::path& path, const SeriesTable& s) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  write_series_csv(os, s);
}

// ---------------------------------------------------------------------------
// trajectories
// ---------------------------------------------------------------------------

namespace detail {

inline std::string snap_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%04zu.csv", i);
  return buf;
}

inline Json stats_json(const SolverStats& st) {
  return Json{{"steps", st.steps},
              {"newton_iters", st.newton_iters},
              {"rejected", st.rejected},
              {"last_mass_defect", st.last_mass_defect}};
}

inline void write_trajectory_dir(const std::filesystem::path& dir, const char* time_key,
                                 const std::vector<double>& times,
                                 const std::vector<RadialField>& fields,
                                 const SolverStats& stats, const Json& config_echo) {
  std::filesystem::create_directories(dir);
  Json index;
  index["kind"] = std::string(time_key) == "taus" ? "rescaled" : "trajectory";
  index[time_key] = times;
  Json files = Json::array();
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string name = snap_name(i);
    write_field_csv(dir / name, fields[i]);
    files.push_back(name);
  }
  index["files"] = std::move(files);
  index["stats"] = stats_json(stats);
  index["config"] = config_echo;
  std::ofstream os(dir / "index.json");
  if (!os) throw Error("cannot open for writing: " + (dir / "index.json").string());
  os << index.dump(2) << "\n";
}

}  // namespace detail

inline void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                             const SolverStats& stats, const Json& config_echo = Json::object()) {
  detail::write_trajectory_dir(dir, "times", traj.times, traj.fields, stats, config_echo);
}

inline void write_trajectory(const std::filesystem::path& dir, const RescaledTrajectory& traj,
                             const SolverStats& stats, const Json& config_echo = Json::object()) {
  detail::write_trajectory_dir(dir, "taus", traj.taus, traj.fields, stats, config_echo);
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

inline Json params_json(const ProblemParams& p) {
  return Json{{"N", p.N},
              {"m", p.m},
              {"T", p.T},
              {"beta", p.beta},
              {"gamma", p.gamma},
              {"Cstar", p.Cstar},
              {"weight_alpha", p.weight_alpha},
              {"q", p.q()},
              {"regime", to_string(p.regime)},
              {"yamabe", p.is_yamabe}};
}

namespace detail {

// JSON has no inf/NaN; keep the CSV conventions (null / "divergent").
inline Json series_value_json(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return "divergent";
  return x;
}

}  // namespace detail

inline Json report_json(const DiagnosticsReport& rep, const ProblemParams& params,
                        const std::string& timestamp) {
  Json j;
  j["scenario"] = rep.scenario;
  j["timestamp"] = timestamp;
  j["params"] = params_json(params);
  j["all_passed"] = rep.all_passed();
  Json checks = Json::array();
  for (const auto& c : rep.checks)
    checks.push_back(Json{{"name", c.name},
                          {"passed", c.passed},
                          {"applicable", c.applicable},
                          {"worst_value", detail::series_value_json(c.worst_value)},
                          {"location", c.location},
                          {"tolerance", c.tolerance}});
  j["checks"] = std::move(checks);
  Json series = Json::array();
  for (const auto& s : rep.series) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < s.t.size(); ++i)
      rows.push_back(Json::array({s.t[i], detail::series_value_json(s.sup[i]),
                                  detail::series_value_json(s.l1[i]),
                                  detail::series_value_json(s.weighted[i])}));
    series.push_back(Json{{"name", s.name}, {"columns", {"tau_or_t", "sup", "l1", "weighted_l1"}},
                          {"rows", std::move(rows)}});
  }
  j["series"] = std::move(series);
  return j;
}

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string format_report_text(const DiagnosticsReport& rep) {
  std::ostringstream os;
  os << "scenario: " << rep.scenario << "\n\n";
  std::size_t w = 5;
  for (const auto& c : rep.checks) w = std::max(w, c.name.size());
  auto pad = [](const std::string& s, std::size_t width) {
    return s + std::string(width > s.size() ? width - s.size() : 0, ' ');
  };
  auto num = [](double x) {
    if (std::isinf(x)) return std::string("divergent");
    char buf[24];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return std::string(buf);
  };
  os << pad("check", w) << "  status  " << pad("worst", 12) << pad("tolerance", 12) << "at\n";
  for (const auto& c : rep.checks) {
    const char* status = !c.applicable ? "n/a " : c.passed ? "PASS" : "FAIL";
    os << pad(c.name, w) << "  " << status << "    " << pad(num(c.worst_value), 12)
       << pad(num(c.tolerance), 12) << num(c.location) << "\n";
  }
  for (const auto& s : rep.series) {
    os << "\nseries " << s.name << " (" << s.t.size() << " rows)";
    if (!s.t.empty()) {
      os << ", last: t=" << num(s.t.back());
      if (!std::isnan(s.sup.back())) os << " sup=" << num(s.sup.back());
      if (!std::isnan(s.l1.back())) os << " l1=" << num(s.l1.back());
      if (!std::isnan(s.weighted.back())) os << " weighted=" << num(s.weighted.back());
    }
    os << "\n";
  }
  os << "\noverall: " << (rep.all_passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// config files
// ---------------------------------------------------------------------------

// Flat INI dialect: "[section]" headers, "key = value" lines, '#'/';' comments.
// Keys flatten to "section.key"; validation against the known-key table
// happens when a scenario consumes the map (ConfigReader below).
using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_ini(const std::string& text) {
  ConfigMap out;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("line " + std::to_string(lineno), "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    if (value.empty()) throw ConfigError(section + "." + key, "empty value");
    if (section.empty()) throw ConfigError(key, "key appears before any [section] header");
    std::string path = section + "." + key;
    if (out.count(path)) throw ConfigError(path, "duplicate key");
    out[path] = value;
  }
  return out;
}

inline ConfigMap parse_ini_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_ini(ss.str());
}

// "--override section.key=value" — inserted after file parsing, so it wins.
inline void apply_override(ConfigMap& cfg, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(spec, "override must look like section.key=value");
  std::string key = spec.substr(0, eq);
  if (key.find('.') == std::string::npos)
    throw ConfigError(key, "override key must be section-qualified (section.key)");
  cfg[key] = spec.substr(eq + 1);
}

// Typed access with defaults. Every known key is pulled through get_*; finish()
// then rejects whatever is left in the map, which is how unknown keys are
// reported with their full path.
class ConfigReader {
 public:
  explicit ConfigReader(ConfigMap cfg) : cfg_(std::move(cfg)) {}

  bool has(const std::string& key) const { return cfg_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& dflt) {
    used_.insert(key);
    auto it = cfg_.find(key);
    return it == cfg_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) {
    used_.insert(key);
    auto it = cfg_.find(key);
    return it == cfg_.end() ? dflt : detail::to_double(key, it->second);
  }

  int get_int(const std::string& key, int dflt) {
    double v = get_double(key, double(dflt));
    if (v != std::floor(v)) throw ConfigError(key, "expected an integer");
    return int(v);
  }

  bool get_bool(const std::string& key, bool dflt) {
    used_.insert(key);
    auto it = cfg_.find(key);
    if (it == cfg_.end()) return dflt;
    const std::string& s = it->second;
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError(key, "expected a boolean, got '" + s + "'");
  }

  // List of doubles, comma-separated.
  std::vector<double> get_doubles(const std::string& key, std::vector<double> dflt) {
    used_.insert(key);
    auto it = cfg_.find(key);
    if (it == cfg_.end()) return dflt;
    std::vector<double> out;
    std::istringstream is(it->second);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(detail::to_double(key, tok));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : cfg_)
      if (!used_.count(key)) throw ConfigError(key, "unknown key");
  }

 private:
  ConfigMap cfg_;
  std::set<std::string> used_;
};

}  // namespace fastdiff
