#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "flowloc/profiles.hpp"

using namespace flowloc;
using flowloc::testing::data_path;
using flowloc::testing::reference_graph;
using flowloc::testing::single_cycle_graph;

namespace {

Profile identity_profile() {
  Profile p;
  p.name = "original";
  return p;
}

RawDataset small_dataset(const VascularGraph& g, uint64_t seed) {
  SimulationConfig cfg;
  cfg.num_nanodevices = 6;
  cfg.sim_time = 120.0;
  cfg.seed = seed;
  const int liver = g.find_node("liver");
  EventSpec ev{liver, g.region_centroid(liver)};
  return simulate(g, cfg, ev);
}

}  // namespace

TEST_CASE("radius scale keeps cylinder volume proportional to weight") {
  // Volume ~ r^2 * h, so (k^2 * height_ratio) must equal weight_ratio.
  for (double w : {0.6, 1.0, 1.3, 2.0})
    for (double h : {0.8, 1.0, 1.15}) {
      const double k = radius_scale(w, h);
      CHECK(k * k * h == doctest::Approx(w).epsilon(1e-12));
    }
  CHECK(radius_scale(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(radius_scale(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(radius_scale(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("scale_point applies height to y and radius scale to x,z") {
  Profile p;
  p.height_ratio = 1.2;
  p.weight_ratio = 0.9;
  const double k = radius_scale(p.weight_ratio, p.height_ratio);
  const Point3 q = scale_point({2.0, -3.0, 5.0}, p);
  CHECK(q.x == doctest::Approx(2.0 * k).epsilon(1e-14));
  CHECK(q.y == doctest::Approx(-3.0 * 1.2).epsilon(1e-14));
  CHECK(q.z == doctest::Approx(5.0 * k).epsilon(1e-14));
}

TEST_CASE("vertical vessels scale exactly by the height ratio") {
  RegionNode node;
  node.path = {{1.0, 0.0, 2.0}, {1.0, 10.0, 2.0}};
  node.length = 10.0;
  Profile p;
  p.height_ratio = 1.15;
  p.weight_ratio = 1.0;
  CHECK(scaled_region_length(node, p) ==
        doctest::Approx(10.0 * 1.15).epsilon(1e-12));
}

TEST_CASE("horizontal vessels scale exactly by the radius scale") {
  RegionNode node;
  node.path = {{0.0, 3.0, 0.0}, {4.0, 3.0, 3.0}};
  node.length = 5.0;
  Profile p;
  p.height_ratio = 0.9;
  p.weight_ratio = 1.3;
  const double k = radius_scale(1.3, 0.9);
  CHECK(scaled_region_length(node, p) == doctest::Approx(5.0 * k).epsilon(1e-12));
}

TEST_CASE("heart rate maps linearly to blood speed scale") {
  CHECK(blood_speed_scale_from_heart_rate(60.0) == doctest::Approx(1.0));
  CHECK(blood_speed_scale_from_heart_rate(90.0) == doctest::Approx(1.5));
  CHECK(blood_speed_scale_from_heart_rate(30.0, 60.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(blood_speed_scale_from_heart_rate(0.0), std::invalid_argument);
}

TEST_CASE("identity profile round-trips a dataset") {
  const VascularGraph g = reference_graph();
  const RawDataset raw = small_dataset(g, 5);
  const RawDataset out = transform_dataset(raw, g, identity_profile());
  REQUIRE(out.records.size() == raw.records.size());
  for (size_t i = 0; i < raw.records.size(); ++i) {
    const auto& a = raw.records[i];
    const auto& b = out.records[i];
    CHECK(b.nanodevice_id == a.nanodevice_id);
    CHECK(b.event_bit == a.event_bit);
    CHECK(b.circulation_time == doctest::Approx(a.circulation_time).epsilon(1e-9));
    CHECK(b.timestamp == doctest::Approx(a.timestamp).epsilon(1e-9));
    REQUIRE(b.raw_positions.size() == a.raw_positions.size());
    for (size_t j = 0; j < a.raw_positions.size(); ++j) {
      CHECK(distance(b.raw_positions[j].position, a.raw_positions[j].position) < 1e-9);
      CHECK(b.raw_positions[j].time == doctest::Approx(a.raw_positions[j].time).epsilon(1e-9));
    }
  }
}

TEST_CASE("activity scale alone divides circulation times") {
  const VascularGraph g = reference_graph();
  const RawDataset raw = small_dataset(g, 9);
  Profile p = identity_profile();
  p.name = "active";
  p.blood_speed_scale = 2.0;
  const RawDataset out = transform_dataset(raw, g, p);
  REQUIRE(out.records.size() == raw.records.size());
  for (size_t i = 0; i < raw.records.size(); ++i) {
    CHECK(out.records[i].circulation_time ==
          doctest::Approx(raw.records[i].circulation_time / 2.0).epsilon(1e-9));
    // Positions are untouched by activity alone.
    CHECK(distance(out.records[i].raw_positions.back().position,
                   raw.records[i].raw_positions.back().position) < 1e-9);
  }
}

TEST_CASE("single-cycle circulation time scales by geometry over speed") {
  // Uniform speed and same-region deltas: every within-region delta scales by
  // that region's length ratio, so a full loop scales by total-length ratio.
  const VascularGraph g = single_cycle_graph();
  SimulationConfig cfg;
  cfg.num_nanodevices = 3;
  cfg.sim_time = 60.0;
  cfg.report_success_prob = 1.0;
  cfg.seed = 4;
  EventSpec ev{1, g.node(1).path.front()};
  const RawDataset raw = simulate(g, cfg, ev);

  Profile p;
  p.name = "tall";
  p.height_ratio = 1.2;
  p.weight_ratio = 1.0;
  const double expected_loop =
      (scaled_region_length(g.node(0), p) + scaled_region_length(g.node(1), p)) / 10.0;
  const RawDataset out = transform_dataset(raw, g, p);
  REQUIRE(!out.records.empty());
  for (const auto& r : out.records)
    CHECK(r.circulation_time == doctest::Approx(expected_loop).epsilon(1e-9));
}

TEST_CASE("transformed deltas re-accumulate to the circulation time") {
  const VascularGraph g = reference_graph();
  const RawDataset raw = small_dataset(g, 11);
  ProfileSet ps = load_profiles(data_path("profiles.json"));
  for (const auto& profile : ps.profiles) {
    const RawDataset out = transform_dataset(raw, g, profile);
    for (const auto& r : out.records) {
      REQUIRE(r.raw_positions.size() >= 2);
      double acc = 0.0;
      for (size_t j = 1; j < r.raw_positions.size(); ++j) {
        const double dt = r.raw_positions[j].time - r.raw_positions[j - 1].time;
        CHECK(dt >= -1e-12);
        acc += dt;
      }
      CHECK(acc == doctest::Approx(r.circulation_time).epsilon(1e-9));
      CHECK(r.circulation_time > 0.0);
    }
  }
}

TEST_CASE("transform requires retained raw positions") {
  const VascularGraph g = single_cycle_graph();
  SimulationConfig cfg;
  cfg.num_nanodevices = 2;
  cfg.sim_time = 30.0;
  cfg.keep_raw_positions = false;
  EventSpec ev{1, g.node(1).path.front()};
  const RawDataset raw = simulate(g, cfg, ev);
  REQUIRE(!raw.records.empty());
  Profile p;
  p.name = "tall";
  p.height_ratio = 1.1;
  CHECK_THROWS_AS(transform_dataset(raw, g, p), std::invalid_argument);
}

TEST_CASE("profile set loads the nine reference profiles") {
  ProfileSet ps = load_profiles(data_path("profiles.json"));
  CHECK(ps.profiles.size() == 9);
  for (const char* name :
       {"original", "tall", "short", "heavy", "light", "active", "inactive", "big", "small"})
    CHECK(ps.has(name));
  const Profile& tall = ps.get("tall");
  CHECK(tall.height_ratio == doctest::Approx(1.15));
  CHECK(ps.get("original").height_ratio == doctest::Approx(1.0));
  CHECK_THROWS_AS(ps.get("missing"), std::out_of_range);
}

TEST_CASE("profile validation rejects non-positive ratios") {
  Profile p;
  p.name = "bad";
  p.height_ratio = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.height_ratio = 1.0;
  p.blood_speed_scale = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
