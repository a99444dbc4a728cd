#include "flowloc/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace flowloc {

using nlohmann::json;

EvalDataset featurize_dataset(const VascularGraph& graph, const RawDataset& raw,
                              const Profile& profile, GraphDesign design,
                              const std::optional<VisitProbabilities>& probs, int dataset_id) {
  EvalDataset out;
  out.graph = build_input_graph(graph, anchor_features(raw), profile, design, probs);
  out.graph.target_region = raw.event.region_id;
  out.truth_region = raw.event.region_id;
  out.truth_location = raw.event.location;
  out.dataset_id = dataset_id;
  return out;
}

std::vector<EvalDataset> featurize_datasets(const VascularGraph& graph,
                                            const std::vector<RawDataset>& raws,
                                            const Profile& profile, GraphDesign design,
                                            const std::optional<VisitProbabilities>& probs) {
  std::vector<EvalDataset> out;
  out.reserve(raws.size());
  for (size_t i = 0; i < raws.size(); ++i)
    out.push_back(featurize_dataset(graph, raws[i], profile, design, probs, static_cast<int>(i)));
  return out;
}

std::vector<TrainSample> to_train_samples(const std::vector<EvalDataset>& datasets) {
  std::vector<TrainSample> out;
  out.reserve(datasets.size());
  for (const auto& d : datasets) out.push_back({d.graph, d.truth_region});
  return out;
}

uint64_t content_hash(const std::string& text) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& config_text, uint64_t seed,
                    const std::vector<std::pair<std::string, uint64_t>>& outputs) {
  json j = {{"tool_version", kToolVersion},
            {"command", command},
            {"config_hash", content_hash(config_text)},
            {"seed", seed},
            {"schema_versions", {{"vasculature", 1}, {"raw_dataset", 1}, {"profiles", 1},
                                 {"input_graph", 1}, {"checkpoint", 1}}}};
  json outs = json::array();
  for (const auto& [name, hash] : outputs) outs.push_back({{"file", name}, {"hash", hash}});
  j["outputs"] = std::move(outs);
  std::filesystem::create_directories(dir);
  std::ofstream f(std::filesystem::path(dir) / "manifest.json", std::ios::binary);
  f << j.dump(1) << "\n";
}

}  // namespace flowloc
