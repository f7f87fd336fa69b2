#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fscb/channel.hpp"

namespace fscb {

/// Raised on malformed channel or V-graph files; the message names the
/// offending key so CLI errors point at the exact entry.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline int lookup_name(const std::vector<std::string>& names, const std::string& name,
                       const std::string& what) {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw ParseError("unknown " + what + " name: '" + name + "'");
}

inline std::vector<std::string> read_name_list(const nlohmann::json& j,
                                               const std::string& key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].empty()) {
    throw ParseError("missing or empty '" + key + "' list");
  }
  std::vector<std::string> names;
  for (const auto& item : j[key]) {
    if (item.is_string()) {
      names.push_back(item.get<std::string>());
    } else if (item.is_number_integer()) {
      names.push_back(std::to_string(item.get<long long>()));
    } else {
      throw ParseError("'" + key + "' entries must be strings");
    }
  }
  return names;
}

inline std::pair<std::string, std::string> split_pair_key(const std::string& key) {
  auto comma = key.find(',');
  if (comma == std::string::npos) {
    throw ParseError("key '" + key + "' is not of the form 'state,input'");
  }
  return {key.substr(0, comma), key.substr(comma + 1)};
}

inline std::string json_to_name(const nlohmann::json& v, const std::string& ctx) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(ctx + ": expected a name");
}

inline double parse_probability(const nlohmann::json& v, const std::string& ctx) {
  double p;
  if (v.is_number()) {
    p = v.get<double>();
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    size_t pos = 0;
    try {
      p = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw ParseError(ctx + ": bad probability '" + s + "'");
    }
    if (pos != s.size()) throw ParseError(ctx + ": bad probability '" + s + "'");
  } else {
    throw ParseError(ctx + ": probabilities must be numbers or decimal strings");
  }
  if (p < 0.0 || p > 1.0) throw ParseError(ctx + ": probability out of [0,1]");
  return p;
}

}  // namespace detail

/// Parses a channel document. Structural problems (bad keys, probabilities
/// off by more than 1e-9) throw ParseError; rows with smaller drift are
/// renormalized. Semantic gaps (missing table entries) are left for
/// validate() so the caller can print the complete report.
inline Fsc read_channel_json(const nlohmann::json& j) {
  using detail::json_to_name;
  using detail::lookup_name;
  using detail::parse_probability;
  using detail::read_name_list;
  using detail::split_pair_key;

  Fsc fsc;
  fsc.state_names = read_name_list(j, "states");
  fsc.input_names = read_name_list(j, "inputs");
  fsc.output_names = read_name_list(j, "outputs");
  fsc.num_states = static_cast<int>(fsc.state_names.size());
  fsc.num_inputs = static_cast<int>(fsc.input_names.size());
  fsc.num_outputs = static_cast<int>(fsc.output_names.size());

  fsc.next.assign(fsc.num_states, std::vector<int>(fsc.num_inputs, -1));
  fsc.emission.assign(fsc.num_states,
                      std::vector<std::vector<double>>(fsc.num_inputs));
  fsc.allowed.assign(fsc.num_states, std::vector<char>(fsc.num_inputs, 1));

  if (!j.contains("initial_state")) throw ParseError("missing 'initial_state'");
  fsc.initial_state = lookup_name(fsc.state_names,
                                  json_to_name(j["initial_state"], "initial_state"),
                                  "state");

  if (!j.contains("next_state") || !j["next_state"].is_object()) {
    throw ParseError("missing 'next_state' map");
  }
  for (const auto& [key, value] : j["next_state"].items()) {
    auto [sname, xname] = split_pair_key(key);
    int s = lookup_name(fsc.state_names, sname, "state");
    int x = lookup_name(fsc.input_names, xname, "input");
    fsc.next[s][x] =
        lookup_name(fsc.state_names, json_to_name(value, "next_state[" + key + "]"), "state");
  }

  if (!j.contains("emission") || !j["emission"].is_object()) {
    throw ParseError("missing 'emission' map");
  }
  for (const auto& [key, value] : j["emission"].items()) {
    auto [sname, xname] = split_pair_key(key);
    int s = lookup_name(fsc.state_names, sname, "state");
    int x = lookup_name(fsc.input_names, xname, "input");
    if (!value.is_array() || static_cast<int>(value.size()) != fsc.num_outputs) {
      throw ParseError("emission[" + key + "]: expected " +
                       std::to_string(fsc.num_outputs) + " probabilities");
    }
    std::vector<double> row(fsc.num_outputs);
    double sum = 0.0;
    for (int y = 0; y < fsc.num_outputs; ++y) {
      row[y] = parse_probability(value[y], "emission[" + key + "]");
      sum += row[y];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ParseError("emission[" + key + "]: row sums to " + std::to_string(sum));
    }
    for (double& p : row) p /= sum;
    fsc.emission[s][x] = std::move(row);
  }
  // Rows never mentioned stay empty and are reported by validate().
  for (int s = 0; s < fsc.num_states; ++s)
    for (int x = 0; x < fsc.num_inputs; ++x)
      if (fsc.emission[s][x].empty()) fsc.emission[s][x].assign(fsc.num_outputs, 0.0);

  if (j.contains("allowed")) {
    if (!j["allowed"].is_object()) throw ParseError("'allowed' must be a map");
    for (auto& row : fsc.allowed) row.assign(fsc.num_inputs, 0);
    for (const auto& [sname, list] : j["allowed"].items()) {
      int s = lookup_name(fsc.state_names, sname, "state");
      if (!list.is_array()) throw ParseError("allowed[" + sname + "]: expected a list");
      for (const auto& xv : list) {
        int x = lookup_name(fsc.input_names, json_to_name(xv, "allowed[" + sname + "]"),
                            "input");
        fsc.allowed[s][x] = 1;
      }
    }
  }
  return fsc;
}

inline Fsc read_channel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open channel file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    return read_channel_json(j);
  } catch (ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Serializes with full round-trip precision; probabilities become decimal
/// strings, matching what the parser prefers.
inline nlohmann::json write_channel_json(const Fsc& fsc) {
  nlohmann::json j;
  j["states"] = fsc.state_names;
  j["inputs"] = fsc.input_names;
  j["outputs"] = fsc.output_names;
  j["initial_state"] = fsc.state_names[fsc.initial_state];
  nlohmann::json next = nlohmann::json::object();
  nlohmann::json emission = nlohmann::json::object();
  nlohmann::json allowed = nlohmann::json::object();
  char buf[64];
  for (int s = 0; s < fsc.num_states; ++s) {
    nlohmann::json allowed_list = nlohmann::json::array();
    for (int x = 0; x < fsc.num_inputs; ++x) {
      std::string key = fsc.state_names[s] + "," + fsc.input_names[x];
      next[key] = fsc.state_names[fsc.next[s][x]];
      nlohmann::json row = nlohmann::json::array();
      for (int y = 0; y < fsc.num_outputs; ++y) {
        std::snprintf(buf, sizeof(buf), "%.17g", fsc.emission[s][x][y]);
        row.push_back(std::string(buf));
      }
      emission[key] = std::move(row);
      if (fsc.allowed[s][x]) allowed_list.push_back(fsc.input_names[x]);
    }
    allowed[fsc.state_names[s]] = std::move(allowed_list);
  }
  j["next_state"] = std::move(next);
  j["emission"] = std::move(emission);
  j["allowed"] = std::move(allowed);
  return j;
}

inline void write_channel_file(const Fsc& fsc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << write_channel_json(fsc).dump(2) << '\n';
}

}  // namespace fscb
