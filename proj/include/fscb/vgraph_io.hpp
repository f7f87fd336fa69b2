#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "fscb/channel_io.hpp"
#include "fscb/vgraph.hpp"

namespace fscb {

/// V-graph document: `vertices` (list of names), `phi` (map "vertex,input"
/// -> vertex; missing pairs mean no edge), optional `v0`. Input names must
/// match the channel the graph will be paired with.
inline VGraph read_vgraph_json(const nlohmann::json& j, const Fsc& fsc) {
  using detail::json_to_name;
  using detail::lookup_name;
  using detail::read_name_list;
  using detail::split_pair_key;

  VGraph vg;
  vg.vertex_names = read_name_list(j, "vertices");
  vg.num_vertices = static_cast<int>(vg.vertex_names.size());
  vg.phi.assign(vg.num_vertices, std::vector<int>(fsc.num_inputs, -1));

  if (!j.contains("phi") || !j["phi"].is_object()) {
    throw ParseError("missing 'phi' map");
  }
  for (const auto& [key, value] : j["phi"].items()) {
    auto [vname, xname] = split_pair_key(key);
    int v = lookup_name(vg.vertex_names, vname, "vertex");
    int x = lookup_name(fsc.input_names, xname, "input");
    vg.phi[v][x] =
        lookup_name(vg.vertex_names, json_to_name(value, "phi[" + key + "]"), "vertex");
  }
  if (j.contains("v0")) {
    vg.v0 = lookup_name(vg.vertex_names, json_to_name(j["v0"], "v0"), "vertex");
  }
  validate_vgraph(vg, fsc.num_inputs);
  return vg;
}

inline VGraph read_vgraph_file(const std::string& path, const Fsc& fsc) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open V-graph file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    return read_vgraph_json(j, fsc);
  } catch (ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline nlohmann::json write_vgraph_json(const VGraph& vg, const Fsc& fsc) {
  nlohmann::json j;
  j["vertices"] = vg.vertex_names;
  nlohmann::json phi = nlohmann::json::object();
  for (int v = 0; v < vg.num_vertices; ++v) {
    for (int x = 0; x < fsc.num_inputs; ++x) {
      if (vg.phi[v][x] >= 0) {
        phi[vg.vertex_names[v] + "," + fsc.input_names[x]] =
            vg.vertex_names[vg.phi[v][x]];
      }
    }
  }
  j["phi"] = std::move(phi);
  j["v0"] = vg.vertex_names[vg.v0];
  return j;
}

}  // namespace fscb
