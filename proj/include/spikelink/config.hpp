#pragma once

// INI-style pipeline configuration.
//
//   [global]
//   delta_t = 0.05
//   t_sim = 10
//
//   [enc]
//   kind = encoder
//   model = regular
//   n_neurons = 2
//
//   [connections]
//   adapter.out -> enc.in
//
// Keys are checked against a per (kind, model) schema; unknown keys are
// errors and missing keys take their schema default.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spikelink/csv.hpp"
#include "spikelink/runtime.hpp"

namespace spikelink {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public ConfigError {
 public:
  SyntaxError(std::size_t line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownKey : public ConfigError {
 public:
  UnknownKey(std::string section, std::string key, std::size_t line)
      : ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' in section [" + section + "]"),
        section_(std::move(section)),
        key_(std::move(key)) {}
  const std::string& section() const { return section_; }
  const std::string& key() const { return key_; }

 private:
  std::string section_;
  std::string key_;
};

class DanglingConnection : public ConfigError {
 public:
  DanglingConnection(std::size_t line, const std::string& stage)
      : ConfigError("line " + std::to_string(line) + ": connection references undeclared stage '" + stage + "'") {}
};

class BadValue : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct GlobalSettings {
  double delta_t = 0.05;
  double t_sim = 10.0;
  RunMode mode = RunMode::deterministic;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  unsigned trials = 5;  // benchmark repetitions

  friend bool operator==(const GlobalSettings&, const GlobalSettings&) = default;
};

struct StageSection {
  std::string name;
  std::string kind;
  std::string model;
  std::map<std::string, std::string> params;  // all schema keys, defaults filled

  friend bool operator==(const StageSection&, const StageSection&) = default;

  const std::string& get(const std::string& key) const {
    const auto it = params.find(key);
    if (it == params.end()) throw BadValue("[" + name + "] has no key '" + key + "'");
    return it->second;
  }
  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
};

struct ConnectionSpec {
  std::string from_stage;
  std::string from_port;
  std::string to_stage;
  std::string to_port;

  friend bool operator==(const ConnectionSpec&, const ConnectionSpec&) = default;
};

struct ConfigDocument {
  GlobalSettings global;
  std::vector<StageSection> stages;
  std::vector<ConnectionSpec> connections;
  std::string base_dir;  // for relative paths; not part of equality

  friend bool operator==(const ConfigDocument& a, const ConfigDocument& b) {
    return a.global == b.global && a.stages == b.stages && a.connections == b.connections;
  }

  const StageSection& stage(const std::string& name) const {
    for (const auto& s : stages)
      if (s.name == name) return s;
    throw ConfigError("no stage named '" + name + "'");
  }
  StageSection& stage(const std::string& name) {
    for (auto& s : stages)
      if (s.name == name) return s;
    throw ConfigError("no stage named '" + name + "'");
  }

  std::string resolve(const std::string& path) const {
    if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(base_dir) / path).string();
  }
};

// ---------------------------------------------------------------------------
// Value parsing
// ---------------------------------------------------------------------------

namespace config_detail {

inline double to_number(const std::string& v, const std::string& what) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw BadValue(what + ": '" + v + "' is not a number");
  }
  if (used != v.size() || !std::isfinite(d)) throw BadValue(what + ": '" + v + "' is not a finite number");
  return d;
}

inline std::int64_t to_integer(const std::string& v, const std::string& what) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw BadValue(what + ": '" + v + "' is not an integer");
  }
  if (used != v.size()) throw BadValue(what + ": '" + v + "' is not an integer");
  return i;
}

inline bool to_flag(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw BadValue(what + ": '" + v + "' is not a boolean");
}

inline std::vector<double> to_numbers(const std::string& v, const std::string& what) {
  std::vector<double> out;
  if (detail::trim(v).empty()) return out;
  for (const auto& cell : detail::split(v, ',')) out.push_back(to_number(cell, what));
  return out;
}

}  // namespace config_detail

inline double StageSection::number(const std::string& key) const {
  return config_detail::to_number(get(key), "[" + name + "] " + key);
}
inline std::int64_t StageSection::integer(const std::string& key) const {
  return config_detail::to_integer(get(key), "[" + name + "] " + key);
}
inline bool StageSection::flag(const std::string& key) const {
  return config_detail::to_flag(get(key), "[" + name + "] " + key);
}
inline std::vector<double> StageSection::numbers(const std::string& key) const {
  return config_detail::to_numbers(get(key), "[" + name + "] " + key);
}

// Matrix text: rows separated by ';', cells by ','.
inline Matrix parse_inline_matrix(const std::string& text, const std::string& what) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : detail::split(text, ';')) {
    if (row.empty()) continue;
    rows.push_back(config_detail::to_numbers(row, what));
  }
  if (rows.empty()) throw BadValue(what + ": empty matrix");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw BadValue(what + ": ragged matrix");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

enum class ValueType { number, integer, flag, text, numbers };

struct KeySpec {
  std::string key;
  std::string default_value;
  ValueType type = ValueType::number;
};

struct ModelSchema {
  std::string kind;
  std::string model;
  std::vector<KeySpec> keys;
};

inline const std::vector<ModelSchema>& stage_schemas() {
  using V = ValueType;
  static const std::vector<ModelSchema> schemas = {
      {"source", "constant", {{"width", "1", V::integer}, {"value", "0", V::number}}},
      {"source",
       "step",
       {{"width", "1", V::integer}, {"low", "-1", V::number}, {"high", "1", V::number}, {"step_time", "1", V::number}}},
      {"source", "sine", {{"width", "1", V::integer}, {"amplitude", "1", V::number}, {"frequency", "0.5", V::number}}},
      {"source",
       "robot",
       {{"arena", "", V::text},
        {"x", "1", V::number},
        {"y", "1", V::number},
        {"heading", "0", V::number},
        {"radius", "0.2", V::number},
        {"n_beams", "100", V::integer},
        {"fov", "3.141592653589793", V::number},
        {"max_range", "5", V::number},
        {"v_max_lin", "0.5", V::number},
        {"omega_max", "1.5", V::number},
        {"substep", "0.001", V::number},
        {"proximity", "true", V::flag},
        {"halt_on_collision", "false", V::flag}}},
      {"adapter", "channel_map", {{"inputs", "1", V::integer}, {"outputs", "1", V::integer}, {"map", "identity", V::text}}},
      {"encoder", "regular", {{"n_neurons", "1", V::integer}, {"v_min", "1", V::number}, {"v_max", "2", V::number}}},
      {"encoder", "poisson", {{"n_neurons", "1", V::integer}, {"v_min", "1", V::number}, {"v_max", "2", V::number}}},
      {"encoder",
       "nef",
       {{"dim", "1", V::integer},
        {"n_neurons", "100", V::integer},
        {"intercept_lo", "-0.95", V::number},
        {"intercept_hi", "0.95", V::number},
        {"max_rate_lo", "100", V::number},
        {"max_rate_hi", "200", V::number},
        {"tau_m", "0.02", V::number},
        {"t_ref", "0.002", V::number},
        {"dt", "0.001", V::number}}},
      {"network", "parrot", {{"n_neurons", "1", V::integer}, {"delay_ticks", "1", V::integer}}},
      {"network",
       "lif",
       {{"n_neurons", "2", V::integer},
        {"weight", "30", V::number},
        {"weights", "", V::numbers},
        {"bias", "0", V::number},
        {"lateral", "", V::text},
        {"tau_m", "0.02", V::number},
        {"v_thresh", "1", V::number},
        {"v_reset", "0", V::number},
        {"t_ref", "0.002", V::number},
        {"dt", "0.001", V::number}}},
      {"decoder",
       "linear",
       {{"n_neurons", "1", V::integer}, {"outputs", "1", V::integer}, {"tau_dec", "0.03", V::number}, {"phi", "uniform", V::text}}},
      {"decoder",
       "nef",
       {{"population", "", V::text},
        {"tau_dec", "0.03", V::number},
        {"reg", "auto", V::text},  // number or auto
        {"decoders", "auto", V::text}}},
      {"sink", "motor", {{"width", "2", V::integer}, {"bias", "0,0", V::numbers}, {"gain", "1,1", V::numbers}}},
      {"sink", "probe", {{"width", "1", V::integer}}},
  };
  return schemas;
}

inline std::string default_model(const std::string& kind) {
  if (kind == "source") return "constant";
  if (kind == "adapter") return "channel_map";
  if (kind == "encoder") return "regular";
  if (kind == "network") return "parrot";
  if (kind == "decoder") return "linear";
  if (kind == "sink") return "probe";
  throw UnknownStageKind("unknown stage kind '" + kind + "'");
}

inline const ModelSchema& find_schema(const std::string& kind, const std::string& model) {
  parse_stage_kind(kind);
  for (const auto& s : stage_schemas())
    if (s.kind == kind && s.model == model) return s;
  throw UnknownStageKind("unknown model '" + model + "' for stage kind '" + kind + "'");
}

inline void check_value(const KeySpec& spec, const std::string& value, const std::string& what) {
  switch (spec.type) {
    case ValueType::number: config_detail::to_number(value, what); break;
    case ValueType::integer: config_detail::to_integer(value, what); break;
    case ValueType::flag: config_detail::to_flag(value, what); break;
    case ValueType::numbers: config_detail::to_numbers(value, what); break;
    case ValueType::text: break;
  }
}

// ---------------------------------------------------------------------------
// Parse / render
// ---------------------------------------------------------------------------

inline ConfigDocument parse_config(const std::string& text) {
  ConfigDocument doc;
  struct RawSection {
    std::string name;
    std::size_t line = 0;
    std::vector<std::tuple<std::string, std::string, std::size_t>> entries;
  };
  std::vector<RawSection> sections;
  std::vector<std::pair<ConnectionSpec, std::size_t>> conns;
  enum class Where { none, global, connections, stage } where = Where::none;
  bool seen_global = false;
  bool seen_connections = false;

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) {
      // ';' only starts a comment at the beginning of a line; it separates
      // matrix rows inside values.
      if (line[c] == '#' || detail::trim(line.substr(0, c)).empty()) line.erase(c);
    }
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw SyntaxError(lineno, "unterminated section header");
      const std::string name = detail::trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw SyntaxError(lineno, "empty section name");
      if (name == "global") {
        if (seen_global) throw SyntaxError(lineno, "duplicate [global]");
        seen_global = true;
        where = Where::global;
      } else if (name == "connections") {
        if (seen_connections) throw SyntaxError(lineno, "duplicate [connections]");
        seen_connections = true;
        where = Where::connections;
      } else {
        for (const auto& s : sections)
          if (s.name == name) throw SyntaxError(lineno, "duplicate section [" + name + "]");
        if (name.find('.') != std::string::npos) throw SyntaxError(lineno, "stage names may not contain '.'");
        sections.push_back({name, lineno, {}});
        where = Where::stage;
      }
      continue;
    }

    if (where == Where::connections) {
      const auto arrow = line.find("->");
      if (arrow == std::string::npos) throw SyntaxError(lineno, "expected 'stage.port -> stage.port'");
      const auto lhs = detail::trim(line.substr(0, arrow));
      const auto rhs = detail::trim(line.substr(arrow + 2));
      const auto ld = lhs.find('.');
      const auto rd = rhs.find('.');
      if (ld == std::string::npos || rd == std::string::npos || ld == 0 || rd == 0 || ld + 1 == lhs.size() ||
          rd + 1 == rhs.size()) {
        throw SyntaxError(lineno, "expected 'stage.port -> stage.port'");
      }
      conns.push_back({{lhs.substr(0, ld), lhs.substr(ld + 1), rhs.substr(0, rd), rhs.substr(rd + 1)}, lineno});
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SyntaxError(lineno, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw SyntaxError(lineno, "empty key");

    if (where == Where::none) throw SyntaxError(lineno, "key outside of any section");
    if (where == Where::global) {
      auto& g = doc.global;
      const std::string what = "line " + std::to_string(lineno) + ": " + key;
      if (key == "delta_t") {
        g.delta_t = config_detail::to_number(value, what);
        if (!(g.delta_t > 0.0)) throw BadValue(what + " must be > 0");
      } else if (key == "t_sim") {
        g.t_sim = config_detail::to_number(value, what);
        if (!(g.t_sim >= 0.0)) throw BadValue(what + " must be >= 0");
      } else if (key == "mode") {
        try {
          g.mode = parse_run_mode(value);
        } catch (const Error& e) {
          throw BadValue(what + ": " + e.what());
        }
      } else if (key == "seed") {
        const auto s = config_detail::to_integer(value, what);
        if (s < 0) throw BadValue(what + " must be >= 0");
        g.seed = static_cast<std::uint64_t>(s);
      } else if (key == "threads") {
        const auto t = config_detail::to_integer(value, what);
        if (t < 1) throw BadValue(what + " must be >= 1");
        g.threads = static_cast<unsigned>(t);
      } else if (key == "trials") {
        const auto t = config_detail::to_integer(value, what);
        if (t < 1) throw BadValue(what + " must be >= 1");
        g.trials = static_cast<unsigned>(t);
      } else {
        throw UnknownKey("global", key, lineno);
      }
      continue;
    }
    sections.back().entries.emplace_back(key, value, lineno);
  }

  for (const auto& raw_section : sections) {
    StageSection s;
    s.name = raw_section.name;
    for (const auto& [k, v, l] : raw_section.entries) {
      if (k == "kind") s.kind = v;
      if (k == "model") s.model = v;
    }
    if (s.kind.empty()) throw SyntaxError(raw_section.line, "[" + s.name + "] needs a 'kind'");
    if (s.model.empty()) s.model = default_model(s.kind);
    const auto& schema = find_schema(s.kind, s.model);
    for (const auto& [k, v, l] : raw_section.entries) {
      if (k == "kind" || k == "model") continue;
      const auto it = std::find_if(schema.keys.begin(), schema.keys.end(), [&](const KeySpec& ks) { return ks.key == k; });
      if (it == schema.keys.end()) throw UnknownKey(s.name, k, l);
      if (s.params.count(k)) throw SyntaxError(l, "duplicate key '" + k + "'");
      check_value(*it, v, "line " + std::to_string(l) + ": [" + s.name + "] " + k);
      s.params[k] = v;
    }
    for (const auto& ks : schema.keys) s.params.try_emplace(ks.key, ks.default_value);
    doc.stages.push_back(std::move(s));
  }

  for (const auto& [c, line] : conns) {
    const auto known = [&](const std::string& n) {
      return std::any_of(doc.stages.begin(), doc.stages.end(), [&](const StageSection& s) { return s.name == n; });
    };
    if (!known(c.from_stage)) throw DanglingConnection(line, c.from_stage);
    if (!known(c.to_stage)) throw DanglingConnection(line, c.to_stage);
    doc.connections.push_back(c);
  }
  return doc;
}

inline ConfigDocument load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ConfigDocument doc = parse_config(ss.str());
  doc.base_dir = std::filesystem::path(path).parent_path().string();
  return doc;
}

inline std::string render_config(const ConfigDocument& doc) {
  std::ostringstream out;
  out << "[global]\n"
      << "delta_t = " << detail::format_double(doc.global.delta_t) << '\n'
      << "t_sim = " << detail::format_double(doc.global.t_sim) << '\n'
      << "mode = " << to_string(doc.global.mode) << '\n'
      << "seed = " << doc.global.seed << '\n'
      << "threads = " << doc.global.threads << '\n'
      << "trials = " << doc.global.trials << '\n';
  for (const auto& s : doc.stages) {
    out << "\n[" << s.name << "]\n"
        << "kind = " << s.kind << '\n'
        << "model = " << s.model << '\n';
    for (const auto& [k, v] : s.params) out << k << " = " << v << '\n';
  }
  if (!doc.connections.empty()) {
    out << "\n[connections]\n";
    for (const auto& c : doc.connections)
      out << c.from_stage << '.' << c.from_port << " -> " << c.to_stage << '.' << c.to_port << '\n';
  }
  return out.str();
}

// Adds a stage section with schema defaults, then applies `overrides`.
inline StageSection make_section(const std::string& name, const std::string& kind, const std::string& model,
                                 const std::map<std::string, std::string>& overrides = {}) {
  StageSection s{name, kind, model, {}};
  const auto& schema = find_schema(kind, model);
  for (const auto& ks : schema.keys) s.params[ks.key] = ks.default_value;
  for (const auto& [k, v] : overrides) {
    const auto it = std::find_if(schema.keys.begin(), schema.keys.end(), [&](const KeySpec& ks) { return ks.key == k; });
    if (it == schema.keys.end()) throw UnknownKey(name, k, 0);
    check_value(*it, v, "[" + name + "] " + k);
    s.params[k] = v;
  }
  return s;
}

}  // namespace spikelink
