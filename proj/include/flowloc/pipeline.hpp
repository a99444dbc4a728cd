#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowloc/eval.hpp"
#include "flowloc/input_graph.hpp"
#include "flowloc/mobility.hpp"
#include "flowloc/model.hpp"
#include "flowloc/profiles.hpp"

namespace flowloc {

/// Raw dataset -> featurized evaluation sample (unstandardized).
EvalDataset featurize_dataset(const VascularGraph& graph, const RawDataset& raw,
                              const Profile& profile, GraphDesign design,
                              const std::optional<VisitProbabilities>& probs, int dataset_id = -1);

std::vector<EvalDataset> featurize_datasets(const VascularGraph& graph,
                                            const std::vector<RawDataset>& raws,
                                            const Profile& profile, GraphDesign design,
                                            const std::optional<VisitProbabilities>& probs);

std::vector<TrainSample> to_train_samples(const std::vector<EvalDataset>& datasets);

/// FNV-1a over a string; identifies configurations in manifests.
uint64_t content_hash(const std::string& text);

/// Writes `<dir>/manifest.json` recording the config hash, seeds, schema
/// versions and tool version, plus per-output content hashes.
void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& config_text, uint64_t seed,
                    const std::vector<std::pair<std::string, uint64_t>>& outputs);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace flowloc
