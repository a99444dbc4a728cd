#pragma once

#include <string>

#include "flowloc/vasculature.hpp"

namespace flowloc::testing {

inline std::string data_path(const std::string& file) {
  return std::string(FLOWLOC_DATA_DIR) + "/" + file;
}

inline VascularGraph reference_graph() { return load_vasculature(data_path("vasculature.json")); }

/// heart -> body -> heart loop; total length 30 cm, uniform speed 10 cm/s.
inline VascularGraph single_cycle_graph() {
  const char* text = R"({
    "schema_version": 1,
    "nodes": [
      {"id": 0, "name": "heart", "kind": "heart", "blood_speed": 10.0,
       "path": [[0,0,0],[10,0,0]], "length": 10.0},
      {"id": 1, "name": "body", "kind": "organ", "blood_speed": 10.0,
       "path": [[10,0,0],[10,20,0]], "length": 20.0}
    ],
    "edges": [{"from": 0, "to": 1}, {"from": 1, "to": 0}]
  })";
  return VascularGraph::from_json_text(text, /*strict_counts=*/false);
}

/// heart -> stem -> {left, right} -> tail -> heart; uniform fork.
inline VascularGraph fork_graph() {
  const char* text = R"({
    "schema_version": 1,
    "nodes": [
      {"id": 0, "name": "heart", "kind": "heart", "blood_speed": 10.0,
       "path": [[0,0,0],[4,0,0]], "length": 4.0},
      {"id": 1, "name": "stem", "kind": "artery", "blood_speed": 10.0,
       "path": [[4,0,0],[10,0,0]], "length": 6.0},
      {"id": 2, "name": "left", "kind": "organ", "blood_speed": 1.0,
       "path": [[10,0,0],[13,4,0]], "length": 5.0},
      {"id": 3, "name": "right", "kind": "organ", "blood_speed": 1.0,
       "path": [[10,0,0],[13,-4,0],[13,-8,0]], "length": 9.0},
      {"id": 4, "name": "tail", "kind": "vein", "blood_speed": 10.0,
       "path": [[13,0,0],[0,0,0]], "length": 13.0}
    ],
    "edges": [
      {"from": 0, "to": 1},
      {"from": 1, "to": 2}, {"from": 1, "to": 3},
      {"from": 2, "to": 4}, {"from": 3, "to": 4},
      {"from": 4, "to": 0}
    ]
  })";
  return VascularGraph::from_json_text(text, /*strict_counts=*/false);
}

}  // namespace flowloc::testing
