#include "flowloc/vasculature.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace flowloc {

using nlohmann::json;

RegionKind kind_from_string(const std::string& s) {
  if (s == "organ") return RegionKind::Organ;
  if (s == "limb") return RegionKind::Limb;
  if (s == "head") return RegionKind::Head;
  if (s == "vein") return RegionKind::Vein;
  if (s == "artery") return RegionKind::Artery;
  if (s == "heart") return RegionKind::Heart;
  throw ValidationError("unknown region kind: " + s);
}

std::string kind_to_string(RegionKind k) {
  switch (k) {
    case RegionKind::Organ: return "organ";
    case RegionKind::Limb: return "limb";
    case RegionKind::Head: return "head";
    case RegionKind::Vein: return "vein";
    case RegionKind::Artery: return "artery";
    case RegionKind::Heart: return "heart";
  }
  return "?";
}

Point3 point_at_arc(const Polyline& path, double s) {
  if (path.empty()) throw std::invalid_argument("empty polyline");
  if (s <= 0.0) return path.front();
  for (size_t i = 1; i < path.size(); ++i) {
    const double seg = distance(path[i - 1], path[i]);
    if (s <= seg && seg > 0.0) {
      const double t = s / seg;
      return path[i - 1] + (path[i] - path[i - 1]) * t;
    }
    s -= seg;
  }
  return path.back();
}

VascularGraph VascularGraph::from_json_text(const std::string& text, bool strict_counts) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("vasculature parse error: ") + e.what());
  }
  if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != 1)
    throw ValidationError("vasculature: unsupported or missing schema_version");

  VascularGraph g;
  for (const auto& jn : doc.at("nodes")) {
    RegionNode n;
    n.id = jn.at("id").get<int>();
    n.name = jn.at("name").get<std::string>();
    n.kind = kind_from_string(jn.at("kind").get<std::string>());
    n.blood_speed = jn.at("blood_speed").get<double>();
    for (const auto& jp : jn.at("path"))
      n.path.push_back({jp.at(0).get<double>(), jp.at(1).get<double>(), jp.at(2).get<double>()});
    n.length = jn.contains("length") ? jn["length"].get<double>() : arc_length(n.path);
    g.nodes_.push_back(std::move(n));
  }
  std::sort(g.nodes_.begin(), g.nodes_.end(),
            [](const RegionNode& a, const RegionNode& b) { return a.id < b.id; });
  for (size_t i = 0; i < g.nodes_.size(); ++i)
    if (g.nodes_[i].id != static_cast<int>(i))
      throw ValidationError("node ids must be dense 0..n-1; missing id " + std::to_string(i));

  for (const auto& je : doc.at("edges"))
    g.edges_.emplace_back(je.at("from").get<int>(), je.at("to").get<int>());

  g.downstream_.assign(g.nodes_.size(), {});
  for (auto [a, b] : g.edges_) {
    if (a < 0 || b < 0 || a >= static_cast<int>(g.nodes_.size()) ||
        b >= static_cast<int>(g.nodes_.size()))
      throw ValidationError("edge references unknown node id");
    g.downstream_[a].push_back(b);
  }
  for (auto& d : g.downstream_) std::sort(d.begin(), d.end());

  for (const auto& n : g.nodes_) {
    if (n.kind == RegionKind::Heart) g.heart_ids_.push_back(n.id);
    if (n.kind == RegionKind::Organ || n.kind == RegionKind::Limb || n.kind == RegionKind::Head)
      g.event_region_ids_.push_back(n.id);
  }
  g.anchor_heart_ = doc.contains("anchor_heart") ? doc["anchor_heart"].get<int>()
                                                 : (g.heart_ids_.empty() ? -1 : g.heart_ids_[0]);
  g.validate(strict_counts);
  return g;
}

VascularGraph load_vasculature(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vasculature file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return VascularGraph::from_json_text(ss.str());
}

void VascularGraph::validate(bool strict_counts) const {
  if (strict_counts) {
    if (heart_ids_.size() != 2)
      throw ValidationError("expected exactly 2 heart nodes, got " +
                            std::to_string(heart_ids_.size()));
    if (event_region_ids_.size() != 25)
      throw ValidationError("expected exactly 25 event regions, got " +
                            std::to_string(event_region_ids_.size()));
  }
  if (heart_ids_.empty()) throw ValidationError("graph needs at least one heart node");
  if (std::find(heart_ids_.begin(), heart_ids_.end(), anchor_heart_) == heart_ids_.end())
    throw ValidationError("anchor_heart must be one of the heart nodes");

  for (const auto& n : nodes_) {
    const std::string where = "node " + std::to_string(n.id) + " (" + n.name + "): ";
    if (n.path.empty()) throw ValidationError(where + "empty path");
    for (const auto& p : n.path)
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw ValidationError(where + "non-finite path vertex");
    if (!(n.blood_speed > 0.0)) throw ValidationError(where + "blood_speed must be > 0");
    if (!(n.length > 0.0)) throw ValidationError(where + "length must be > 0");
    const double measured = arc_length(n.path);
    if (std::abs(measured - n.length) > 1e-6 * std::max(1.0, std::abs(n.length)))
      throw ValidationError(where + "length does not match polyline arc length");
  }

  // Connectivity over the undirected skeleton.
  std::vector<char> seen(nodes_.size(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::vector<std::vector<int>> undirected(nodes_.size());
  for (auto [a, b] : edges_) {
    undirected[a].push_back(b);
    undirected[b].push_back(a);
  }
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : undirected[u])
      if (!seen[v]) {
        seen[v] = 1;
        q.push(v);
      }
  }
  for (const auto& n : nodes_)
    if (!seen[n.id])
      throw ValidationError("node " + std::to_string(n.id) + " (" + n.name +
                            "): disconnected from the graph");

  // Every node must reach a heart along flow direction within |nodes| hops.
  for (const auto& n : nodes_) {
    std::vector<char> vis(nodes_.size(), 0);
    std::queue<std::pair<int, int>> bfs;
    bfs.push({n.id, 0});
    vis[n.id] = 1;
    bool ok = false;
    while (!bfs.empty() && !ok) {
      auto [u, d] = bfs.front();
      bfs.pop();
      if (d > static_cast<int>(nodes_.size())) break;
      for (int v : downstream_[u]) {
        if (nodes_[v].kind == RegionKind::Heart) {
          ok = true;
          break;
        }
        if (!vis[v]) {
          vis[v] = 1;
          bfs.push({v, d + 1});
        }
      }
    }
    if (!ok && n.kind != RegionKind::Heart)
      throw ValidationError("node " + std::to_string(n.id) + " (" + n.name +
                            "): no downstream path to a heart node");
    if (downstream_[n.id].empty())
      throw ValidationError("node " + std::to_string(n.id) + " (" + n.name +
                            "): dead end (no downstream neighbors)");
  }
}

void VascularGraph::check_id(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw std::out_of_range("unknown region id " + std::to_string(id));
}

const RegionNode& VascularGraph::node(int id) const {
  check_id(id);
  return nodes_[id];
}

int VascularGraph::find_node(const std::string& name) const {
  for (const auto& n : nodes_)
    if (n.name == name) return n.id;
  return -1;
}

void VascularGraph::set_anchor_heart(int id) {
  if (std::find(heart_ids_.begin(), heart_ids_.end(), id) == heart_ids_.end())
    throw std::invalid_argument("anchor must be a heart node");
  anchor_heart_ = id;
}

const std::vector<int>& VascularGraph::neighbors_downstream(int id) const {
  check_id(id);
  return downstream_[id];
}

Point3 VascularGraph::region_centroid(int id) const {
  check_id(id);
  const auto& path = nodes_[id].path;
  Point3 c;
  for (const auto& p : path) c = c + p;
  return c * (1.0 / static_cast<double>(path.size()));
}

uint64_t VascularGraph::schema_hash() const {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& n : nodes_) {
    mix(static_cast<uint64_t>(n.id));
    mix(static_cast<uint64_t>(n.kind));
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(n.length));
    std::memcpy(&bits, &n.length, 8);
    mix(bits);
  }
  for (auto [a, b] : edges_) {
    mix(static_cast<uint64_t>(a));
    mix(static_cast<uint64_t>(b));
  }
  return h;
}

}  // namespace flowloc
