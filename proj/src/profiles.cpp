#include "flowloc/profiles.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace flowloc {

using nlohmann::json;

void Profile::validate() const {
  if (!(height_ratio > 0.0) || !(weight_ratio > 0.0) || !(blood_speed_scale > 0.0))
    throw std::invalid_argument("profile '" + name + "': all ratios must be strictly positive");
  if (!(heart_rate > 0.0))
    throw std::invalid_argument("profile '" + name + "': heart_rate must be positive");
}

const Profile& ProfileSet::get(const std::string& name) const {
  for (const auto& p : profiles)
    if (p.name == name) return p;
  throw std::out_of_range("unknown profile: " + name);
}

bool ProfileSet::has(const std::string& name) const {
  for (const auto& p : profiles)
    if (p.name == name) return true;
  return false;
}

ProfileSet profiles_from_json_text(const std::string& text) {
  json doc = json::parse(text);
  if (doc.value("schema_version", 0) != 1)
    throw std::runtime_error("profiles: unsupported or missing schema_version");
  ProfileSet set;
  for (const auto& jp : doc.at("profiles")) {
    Profile p;
    p.name = jp.at("name").get<std::string>();
    p.height_ratio = jp.at("height_ratio").get<double>();
    p.weight_ratio = jp.at("weight_ratio").get<double>();
    p.blood_speed_scale = jp.at("blood_speed_scale").get<double>();
    p.heart_rate = jp.value("heart_rate", 60.0);
    p.validate();
    set.profiles.push_back(std::move(p));
  }
  return set;
}

ProfileSet load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profiles file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return profiles_from_json_text(ss.str());
}

double radius_scale(double weight_ratio, double height_ratio) {
  if (!(weight_ratio > 0.0) || !(height_ratio > 0.0))
    throw std::invalid_argument("radius_scale: ratios must be strictly positive");
  return std::sqrt(weight_ratio / height_ratio);
}

Point3 scale_point(const Point3& p, const Profile& profile) {
  profile.validate();
  const double k = radius_scale(profile.weight_ratio, profile.height_ratio);
  return {p.x * k, p.y * profile.height_ratio, p.z * k};
}

double blood_speed_scale_from_heart_rate(double heart_rate, double resting_heart_rate) {
  if (!(heart_rate > 0.0) || !(resting_heart_rate > 0.0))
    throw std::invalid_argument("heart rates must be positive");
  return heart_rate / resting_heart_rate;
}

double scaled_region_length(const RegionNode& node, const Profile& profile) {
  Polyline scaled;
  scaled.reserve(node.path.size());
  for (const auto& p : node.path) scaled.push_back(scale_point(p, profile));
  return arc_length(scaled);
}

RawDataset transform_dataset(const RawDataset& raw, const VascularGraph& graph,
                             const Profile& profile) {
  profile.validate();

  // Length ratio per region, from re-measured scaled polylines.
  std::vector<double> length_ratio(graph.size(), 1.0);
  for (const auto& n : graph.nodes())
    length_ratio[n.id] = scaled_region_length(n, profile) / n.length;

  RawDataset out;
  out.event.region_id = raw.event.region_id;
  out.event.location = scale_point(raw.event.location, profile);
  out.config = raw.config;

  std::unordered_map<int, double> device_clock;  // nanodevice id -> last timestamp

  for (const auto& rec : raw.records) {
    if (rec.raw_positions.size() < 2)
      throw std::invalid_argument(
          "transform_dataset: record lacks raw_positions (simulate with keep_raw_positions)");

    ReportRecord nr;
    nr.nanodevice_id = rec.nanodevice_id;
    nr.event_bit = rec.event_bit;

    double start = 0.0;
    if (auto it = device_clock.find(rec.nanodevice_id); it != device_clock.end())
      start = it->second;

    nr.raw_positions.reserve(rec.raw_positions.size());
    double t_acc = start;
    {
      const auto& s0 = rec.raw_positions.front();
      nr.raw_positions.push_back({t_acc, scale_point(s0.position, profile), s0.region_id});
    }
    for (size_t i = 1; i < rec.raw_positions.size(); ++i) {
      const auto& a = rec.raw_positions[i - 1];
      const auto& b = rec.raw_positions[i];
      const double delta = b.time - a.time;
      const double dist = distance(a.position, b.position);
      double scaled_delta;
      if (delta <= 0.0) {
        // Instantaneous hops only occur where consecutive region polylines
        // are not geometrically contiguous; no time passes either way.
        scaled_delta = 0.0;
      } else if (a.region_id == b.region_id || dist <= 1e-12) {
        // Case i: both samples in one region; scale by that region's length ratio.
        scaled_delta = delta * length_ratio[b.region_id];
      } else {
        // Case ii: region transition; assume constant speed over the hop.
        const double speed = dist / delta;
        const double scaled_dist =
            distance(scale_point(a.position, profile), scale_point(b.position, profile));
        scaled_delta = scaled_dist / speed;
      }
      scaled_delta /= profile.blood_speed_scale;
      t_acc += scaled_delta;
      nr.raw_positions.push_back({t_acc, scale_point(b.position, profile), b.region_id});
    }

    nr.circulation_time = t_acc - start;
    nr.timestamp = t_acc;
    device_clock[rec.nanodevice_id] = t_acc;
    out.records.push_back(std::move(nr));
  }
  return out;
}

}  // namespace flowloc
