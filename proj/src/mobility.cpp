#include "flowloc/mobility.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flowloc/random.hpp"
#include "json.hpp"

namespace flowloc {

using nlohmann::json;

void SimulationConfig::validate() const {
  if (num_nanodevices <= 0) throw std::invalid_argument("num_nanodevices must be positive");
  if (!(sim_time > 0.0)) throw std::invalid_argument("zero-duration simulation");
  if (!(sampling_rate > 0.0)) throw std::invalid_argument("sampling_rate must be > 0");
  if (!(detection_threshold > 0.0))
    throw std::invalid_argument("detection_threshold must be > 0");
  if (report_success_prob < 0.0 || report_success_prob > 1.0)
    throw std::invalid_argument("report_success_prob must be in [0,1]");
}

int RawDataset::count_positive() const {
  int n = 0;
  for (const auto& r : records) n += r.event_bit ? 1 : 0;
  return n;
}

std::vector<double> RawDataset::positive_circulation_times() const {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.event_bit) out.push_back(r.circulation_time);
  return out;
}

namespace {

// Walks one nanodevice for the whole simulation window, emitting reports.
void walk_device(const VascularGraph& graph, const SimulationConfig& cfg, const EventSpec& event,
                 int device_id, std::vector<ReportRecord>& out) {
  Rng rng(derive_seed(cfg.seed, {0x6d6f62ULL, static_cast<uint64_t>(device_id)}));

  const int anchor = graph.anchor_heart();
  int region = anchor;
  double s = 0.0;  // arc offset within the current region
  double t = 0.0;
  double last_report_t = 0.0;
  bool event_bit = false;

  std::vector<PositionSample> samples;
  const Point3 anchor_entry = graph.node(anchor).path.front();
  if (cfg.keep_raw_positions) samples.push_back({0.0, anchor_entry, anchor});

  long tick = 1;
  const double dt = 1.0 / cfg.sampling_rate;

  while (true) {
    const RegionNode& rn = graph.node(region);
    const double t_exit = t + (rn.length - s) / rn.blood_speed;

    // Sampling ticks falling inside the current region traversal.
    double tick_t = static_cast<double>(tick) * dt;
    while (tick_t <= t_exit && tick_t <= cfg.sim_time) {
      const Point3 pos = point_at_arc(rn.path, s + (tick_t - t) * rn.blood_speed);
      if (distance(pos, event.location) < cfg.detection_threshold) event_bit = true;
      if (cfg.keep_raw_positions) samples.push_back({tick_t, pos, region});
      ++tick;
      tick_t = static_cast<double>(tick) * dt;
    }
    if (t_exit >= cfg.sim_time) break;

    t = t_exit;
    s = 0.0;
    const auto& next = graph.neighbors_downstream(region);
    region = next[rng.below(next.size())];

    if (region == anchor && rng.bernoulli(cfg.report_success_prob)) {
      ReportRecord rec;
      rec.nanodevice_id = device_id;
      rec.event_bit = event_bit;
      rec.circulation_time = t - last_report_t;
      rec.timestamp = t;
      if (cfg.keep_raw_positions) {
        samples.push_back({t, anchor_entry, anchor});
        rec.raw_positions = std::move(samples);
        samples = {{t, anchor_entry, anchor}};
      }
      out.push_back(std::move(rec));
      last_report_t = t;
      event_bit = false;
    }
  }
}

}  // namespace

RawDataset simulate(const VascularGraph& graph, const SimulationConfig& config,
                    const EventSpec& event) {
  config.validate();
  graph.node(event.region_id);  // throws on unknown id

  RawDataset ds;
  ds.event = event;
  ds.config = config;
  for (int d = 0; d < config.num_nanodevices; ++d) walk_device(graph, config, event, d, ds.records);
  return ds;
}

VisitProbabilities estimate_visit_probabilities(const VascularGraph& graph, int n_walks,
                                                uint64_t seed) {
  if (n_walks < 1) throw std::invalid_argument("n_walks must be >= 1");
  Rng rng(derive_seed(seed, {0x70726f62ULL}));
  const int anchor = graph.anchor_heart();
  const size_t max_steps = 1000 * graph.size();

  std::vector<long> visits(graph.size(), 0);
  std::vector<char> seen(graph.size(), 0);
  for (int w = 0; w < n_walks; ++w) {
    std::fill(seen.begin(), seen.end(), 0);
    seen[anchor] = 1;
    int region = anchor;
    size_t steps = 0;
    do {
      const auto& next = graph.neighbors_downstream(region);
      region = next[rng.below(next.size())];
      seen[region] = 1;
      if (++steps > max_steps)
        throw std::runtime_error("random walk did not return to the heart; no heart cycle?");
    } while (region != anchor);
    for (size_t i = 0; i < graph.size(); ++i) visits[i] += seen[i];
  }

  VisitProbabilities p;
  for (size_t i = 0; i < graph.size(); ++i)
    p.prob[static_cast<int>(i)] = static_cast<double>(visits[i]) / n_walks;
  return p;
}

std::vector<RawDataset> generate_benchmark(const VascularGraph& graph,
                                           const SimulationConfig& config,
                                           int events_per_region) {
  if (events_per_region < 1) throw std::invalid_argument("events_per_region must be >= 1");
  config.validate();

  std::vector<RawDataset> out;
  int event_index = 0;
  for (int rid : graph.event_region_ids()) {
    Rng loc_rng(derive_seed(config.seed, {0x65767432ULL, static_cast<uint64_t>(rid)}));
    const RegionNode& rn = graph.node(rid);
    for (int j = 0; j < events_per_region; ++j) {
      EventSpec ev;
      ev.region_id = rid;
      ev.location = point_at_arc(rn.path, loc_rng.uniform() * rn.length);
      SimulationConfig cfg = config;
      cfg.seed = derive_seed(config.seed, {0x73696dULL, static_cast<uint64_t>(event_index)});
      out.push_back(simulate(graph, cfg, ev));
      ++event_index;
    }
  }
  return out;
}

namespace {

json config_to_json(const SimulationConfig& c) {
  return {{"num_nanodevices", c.num_nanodevices},
          {"sim_time", c.sim_time},
          {"sampling_rate", c.sampling_rate},
          {"detection_threshold", c.detection_threshold},
          {"report_success_prob", c.report_success_prob},
          {"seed", c.seed},
          {"keep_raw_positions", c.keep_raw_positions}};
}

SimulationConfig config_from_json(const json& j) {
  SimulationConfig c;
  c.num_nanodevices = j.at("num_nanodevices").get<int>();
  c.sim_time = j.at("sim_time").get<double>();
  c.sampling_rate = j.at("sampling_rate").get<double>();
  c.detection_threshold = j.at("detection_threshold").get<double>();
  c.report_success_prob = j.at("report_success_prob").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.keep_raw_positions = j.value("keep_raw_positions", true);
  return c;
}

}  // namespace

std::string dataset_to_jsonl(const RawDataset& ds) {
  json header = {{"schema_version", 1},
                 {"kind", "flowloc_raw_dataset"},
                 {"config", config_to_json(ds.config)},
                 {"event",
                  {{"region_id", ds.event.region_id},
                   {"location", {ds.event.location.x, ds.event.location.y, ds.event.location.z}}}}};
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& r : ds.records) {
    json jr = {{"id", r.nanodevice_id},
               {"bit", r.event_bit ? 1 : 0},
               {"ct", r.circulation_time},
               {"ts", r.timestamp}};
    if (!r.raw_positions.empty()) {
      json pos = json::array();
      for (const auto& p : r.raw_positions)
        pos.push_back({p.time, p.position.x, p.position.y, p.position.z, p.region_id});
      jr["pos"] = std::move(pos);
    }
    out += jr.dump();
    out.push_back('\n');
  }
  return out;
}

RawDataset dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file");
  json header = json::parse(line);
  if (header.value("kind", "") != "flowloc_raw_dataset" || header.value("schema_version", 0) != 1)
    throw std::runtime_error("not a flowloc raw dataset (bad header)");

  RawDataset ds;
  ds.config = config_from_json(header.at("config"));
  ds.event.region_id = header.at("event").at("region_id").get<int>();
  const auto& loc = header.at("event").at("location");
  ds.event.location = {loc.at(0).get<double>(), loc.at(1).get<double>(), loc.at(2).get<double>()};

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json jr = json::parse(line);
    ReportRecord r;
    r.nanodevice_id = jr.at("id").get<int>();
    r.event_bit = jr.at("bit").get<int>() != 0;
    r.circulation_time = jr.at("ct").get<double>();
    r.timestamp = jr.at("ts").get<double>();
    if (jr.contains("pos"))
      for (const auto& p : jr["pos"])
        r.raw_positions.push_back({p.at(0).get<double>(),
                                   {p.at(1).get<double>(), p.at(2).get<double>(), p.at(3).get<double>()},
                                   p.at(4).get<int>()});
    ds.records.push_back(std::move(r));
  }
  return ds;
}

void save_dataset(const RawDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dataset_to_jsonl(ds);
}

RawDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_jsonl(ss.str());
}

std::string probabilities_to_json(const VisitProbabilities& p) {
  json j = {{"schema_version", 1}, {"kind", "flowloc_visit_probabilities"}};
  json m = json::object();
  for (auto [id, pr] : p.prob) m[std::to_string(id)] = pr;
  j["prob"] = std::move(m);
  return j.dump(1) + "\n";
}

VisitProbabilities probabilities_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("kind", "") != "flowloc_visit_probabilities")
    throw std::runtime_error("not a visit-probabilities file");
  VisitProbabilities p;
  for (auto& [k, v] : j.at("prob").items()) p.prob[std::stoi(k)] = v.get<double>();
  return p;
}

}  // namespace flowloc
