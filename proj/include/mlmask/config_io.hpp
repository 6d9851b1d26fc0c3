#pragma once

// Scenario files: INI-style text with [layers], [masks] and [run] sections.
//
//   [layers]
//   n = 10000
//   alpha = 0.3
//   dist_c = poisson:6
//   dist_s = explicit:0.1,0.2,0.7
//   tc = 0.6
//   ts = 0.5
//
//   [masks]
//   m = 0.2,0.8
//   eps_in = 0.5,0
//   eps_out = 0.6,0
//
//   [run]
//   emergence_threshold = 0.05
//   tolerance = 1e-10
//   max_iterations = 100000

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mlmask/errors.hpp"
#include "mlmask/scenario.hpp"

namespace mlmask {

using IniTree = boost::property_tree::ptree;

inline IniTree read_ini(std::istream& in) {
  IniTree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError({std::string("malformed config: ") + e.what()});
  }
  return tree;
}

inline IniTree read_ini_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  return read_ini(in);
}

namespace detail {

inline std::size_t parse_count(const std::string& text, const std::string& what) {
  const double v = parse_double(text, what);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw ValidationError({what + ": expected a non-negative integer, got '" + text + "'"});
  }
  return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& text, const std::string& what) {
  const auto t = std::string(trim(text));
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ValidationError({what + ": expected true/false, got '" + text + "'"});
}

}  // namespace detail

/// Builds a scenario from an already-read INI tree. Sections listed in
/// `extra_sections` are ignored (sweep files carry a [sweep] section).
inline ScenarioConfig scenario_from_ini(const IniTree& tree,
                                        const std::set<std::string>& extra_sections = {}) {
  static const std::map<std::string, std::set<std::string>> kKeys = {
      {"layers", {"n", "alpha", "dist_c", "dist_s", "tc", "ts", "tail_tolerance"}},
      {"masks", {"m", "eps_in", "eps_out"}},
      {"run", {"emergence_threshold", "tolerance", "max_iterations", "closed_form"}},
  };
  std::vector<std::string> problems;
  std::map<std::string, std::string> values;
  for (const auto& [section, body] : tree) {
    if (extra_sections.count(section)) continue;
    const auto known = kKeys.find(section);
    if (known == kKeys.end()) {
      problems.push_back("unknown section [" + section + "]");
      continue;
    }
    if (!body.data().empty()) problems.push_back("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) {
        problems.push_back("unknown key '" + key + "' in [" + section + "]");
        continue;
      }
      values[key] = value.data();
    }
  }
  for (const char* required : {"alpha", "dist_c", "dist_s", "tc", "ts", "m", "eps_in", "eps_out"}) {
    if (!values.count(required)) problems.push_back(std::string("missing key '") + required + "'");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));

  auto get = [&](const std::string& key) { return values.at(key); };
  ScenarioConfig cfg;
  const double tail = values.count("tail_tolerance")
                          ? detail::parse_double(get("tail_tolerance"), "tail_tolerance")
                          : DegreePmf::kDefaultTailTolerance;
  if (values.count("n")) cfg.n = detail::parse_count(get("n"), "n");
  cfg.alpha = detail::parse_double(get("alpha"), "alpha");
  cfg.dist_c = DegreePmf::parse(get("dist_c"), tail);
  cfg.dist_s = DegreePmf::parse(get("dist_s"), tail);
  cfg.tc_base = detail::parse_double(get("tc"), "tc");
  cfg.ts_base = detail::parse_double(get("ts"), "ts");
  cfg.masks.fraction = detail::parse_double_list(get("m"), "m");
  cfg.masks.eps_in = detail::parse_double_list(get("eps_in"), "eps_in");
  cfg.masks.eps_out = detail::parse_double_list(get("eps_out"), "eps_out");
  if (values.count("emergence_threshold")) {
    cfg.emergence_threshold = detail::parse_double(get("emergence_threshold"), "emergence_threshold");
  }
  if (values.count("tolerance")) cfg.solver.tolerance = detail::parse_double(get("tolerance"), "tolerance");
  if (values.count("max_iterations")) {
    cfg.solver.max_iterations = detail::parse_count(get("max_iterations"), "max_iterations");
  }
  if (values.count("closed_form")) {
    cfg.solver.closed_form_poisson = detail::parse_bool(get("closed_form"), "closed_form");
  }
  validate_scenario(cfg);
  return cfg;
}

inline ScenarioConfig parse_scenario(std::istream& in) { return scenario_from_ini(read_ini(in)); }

inline ScenarioConfig parse_scenario_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_ini(read_ini_file(path));
}

}  // namespace mlmask
