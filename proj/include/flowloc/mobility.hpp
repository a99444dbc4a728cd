#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowloc/vasculature.hpp"

namespace flowloc {

struct SimulationConfig {
  int num_nanodevices = 64;
  double sim_time = 1100.0;       // s
  double sampling_rate = 3.0;     // Hz
  double detection_threshold = 1.0;  // cm
  double report_success_prob = 0.75;
  uint64_t seed = 1;
  bool keep_raw_positions = true;

  void validate() const;
};

struct EventSpec {
  int region_id = -1;
  Point3 location;
};

struct PositionSample {
  double time = 0.0;  // s, absolute simulation time
  Point3 position;
  int region_id = -1;
};

struct ReportRecord {
  int nanodevice_id = -1;
  bool event_bit = false;
  double circulation_time = 0.0;  // s since this nanodevice's last successful report
  double timestamp = 0.0;         // s, absolute time of this report
  // Samples spanning (previous report, this report]; the first entry is the
  // previous report moment so consecutive deltas cover the full interval.
  std::vector<PositionSample> raw_positions;
};

struct RawDataset {
  EventSpec event;
  SimulationConfig config;
  std::vector<ReportRecord> records;

  int count_positive() const;
  std::vector<double> positive_circulation_times() const;
};

/// Walks nanodevices through the vasculature and collects anchor reports.
RawDataset simulate(const VascularGraph& graph, const SimulationConfig& config,
                    const EventSpec& event);

struct VisitProbabilities {
  std::map<int, double> prob;  // region id -> probability per heart iteration
};

/// Monte-Carlo estimate of per-region visit probability in one
/// heart-to-heart iteration starting from the anchor heart.
VisitProbabilities estimate_visit_probabilities(const VascularGraph& graph, int n_walks,
                                                uint64_t seed);

/// One dataset per (event region, event location); events_per_region
/// locations sampled uniformly along each region polyline.
std::vector<RawDataset> generate_benchmark(const VascularGraph& graph,
                                           const SimulationConfig& config,
                                           int events_per_region);

// Line-delimited serialization: one JSON header line, then one report per line.
std::string dataset_to_jsonl(const RawDataset& ds);
RawDataset dataset_from_jsonl(const std::string& text);
void save_dataset(const RawDataset& ds, const std::string& path);
RawDataset load_dataset(const std::string& path);

std::string probabilities_to_json(const VisitProbabilities& p);
VisitProbabilities probabilities_from_json(const std::string& text);

}  // namespace flowloc
