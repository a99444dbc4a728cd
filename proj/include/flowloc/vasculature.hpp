#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowloc/geometry.hpp"

namespace flowloc {

enum class RegionKind { Organ, Limb, Head, Vein, Artery, Heart };

RegionKind kind_from_string(const std::string& s);
std::string kind_to_string(RegionKind k);

struct RegionNode {
  int id = -1;
  std::string name;
  RegionKind kind = RegionKind::Organ;
  Polyline path;
  double length = 0.0;       // cm, must match arc_length(path)
  double blood_speed = 0.0;  // cm/s
};

/// Reference cardiovascular graph. Immutable after load; safe to share
/// across threads.
class VascularGraph {
 public:
  /// strict_counts enforces the reference-graph cardinalities (exactly two
  /// hearts, exactly 25 event regions); structural checks always run.
  static VascularGraph from_json_text(const std::string& text, bool strict_counts = true);

  const std::vector<RegionNode>& nodes() const { return nodes_; }
  const RegionNode& node(int id) const;
  int find_node(const std::string& name) const;  // -1 if absent

  /// Flow-directed edges as (from, to) pairs.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  const std::vector<int>& heart_ids() const { return heart_ids_; }
  int anchor_heart() const { return anchor_heart_; }
  void set_anchor_heart(int id);

  /// The region ids eligible to host diagnostic events (organ/limb/head).
  const std::vector<int>& event_region_ids() const { return event_region_ids_; }

  /// One-hop ids along flow direction, ascending order.
  const std::vector<int>& neighbors_downstream(int id) const;

  Point3 region_centroid(int id) const;

  /// FNV-1a hash over ids, kinds, lengths, and edges; identifies the graph
  /// schema in checkpoints and manifests.
  uint64_t schema_hash() const;

  size_t size() const { return nodes_.size(); }

 private:
  void validate(bool strict_counts) const;
  void check_id(int id) const;

  std::vector<RegionNode> nodes_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> downstream_;
  std::vector<int> heart_ids_;
  std::vector<int> event_region_ids_;
  int anchor_heart_ = -1;
};

VascularGraph load_vasculature(const std::string& path);

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace flowloc
