#pragma once

#include <string>
#include <vector>

#include "flowloc/mobility.hpp"
#include "flowloc/vasculature.hpp"

namespace flowloc {

struct Profile {
  std::string name;
  double height_ratio = 1.0;
  double weight_ratio = 1.0;
  double blood_speed_scale = 1.0;  // activity level
  double heart_rate = 60.0;        // beats/min

  void validate() const;
};

struct ProfileSet {
  std::vector<Profile> profiles;

  const Profile& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

ProfileSet load_profiles(const std::string& path);
ProfileSet profiles_from_json_text(const std::string& text);

/// Cylinder-model radius scaling: sqrt(weight_ratio / height_ratio).
double radius_scale(double weight_ratio, double height_ratio);

/// Y scales by height_ratio; X and Z by the cylinder radius scale.
Point3 scale_point(const Point3& p, const Profile& profile);

/// Convenience linear map from heart rate to an activity blood-speed scale.
double blood_speed_scale_from_heart_rate(double heart_rate, double resting_heart_rate = 60.0);

/// Region arc length after scaling every polyline vertex.
double scaled_region_length(const RegionNode& node, const Profile& profile);

/// Rescales raw positions, time deltas, circulation times, and timestamps of
/// a dataset to the target profile. Requires retained raw_positions.
RawDataset transform_dataset(const RawDataset& raw, const VascularGraph& graph,
                             const Profile& profile);

}  // namespace flowloc
