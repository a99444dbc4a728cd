#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "flowloc/gmm.hpp"
#include "flowloc/mobility.hpp"
#include "flowloc/profiles.hpp"
#include "flowloc/vasculature.hpp"

namespace flowloc {

struct AnchorFeatures {
  GmmParams gmm;
  double avg_positive_bits = 0.0;
  bool sentinel = false;  // true when no positive-bit records existed

  /// Flattened fixed-length feature vector:
  /// [mean0, var0, w0, mean1, var1, w1, avg_positive_bits].
  Eigen::VectorXd flatten() const;
};

/// GMM over circulation times of positive-bit reports plus the average
/// positive-bit count per nanodevice. All-zero sentinel when no positives.
AnchorFeatures anchor_features(const RawDataset& raw, const EmSettings& settings = {});

enum class GraphDesign { Baseline, A, B, C };

GraphDesign design_from_string(const std::string& s);
std::string design_to_string(GraphDesign d);
inline bool design_has_master(GraphDesign d) { return d == GraphDesign::A || d == GraphDesign::C; }
inline bool design_has_prob_edges(GraphDesign d) {
  return d == GraphDesign::B || d == GraphDesign::C;
}

struct EdgeList {
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<double> weight;  // empty means all-ones

  size_t size() const { return src.size(); }
  void add(int s, int d, double w = 1.0) {
    src.push_back(s);
    dst.push_back(d);
    weight.push_back(w);
  }
};

/// Per-feature standardization statistics, fit on the training set and
/// applied identically at inference.
struct FeatureStats {
  Eigen::VectorXd region_mean, region_std;  // continuous region columns only
  Eigen::VectorXd anchor_mean, anchor_std;
  Eigen::VectorXd master_mean, master_std;
  bool fitted = false;
};

constexpr int kRegionFeatureDim = 8;  // 6 kind one-hots + length + blood_speed
constexpr int kAnchorFeatureDim = 7;
constexpr int kMasterFeatureDim = 6;  // (w, h, hr) and their inverses

struct InputGraph {
  GraphDesign design = GraphDesign::Baseline;
  uint64_t schema_hash = 0;

  Eigen::MatrixXd region_x;  // n_regions x kRegionFeatureDim
  Eigen::MatrixXd anchor_x;  // 1 x kAnchorFeatureDim
  Eigen::MatrixXd master_x;  // 0 or 1 rows x kMasterFeatureDim

  EdgeList region_adj;    // region-region, both flow directions
  EdgeList prob_edges;    // heart -> region, weighted by visit probability
  EdgeList anchor_edges;  // anchor -> every region
  EdgeList master_region; // master -> every region
  EdgeList master_anchor; // master -> anchor

  std::vector<int> event_region_ids;  // argmax restricted to these
  int target_region = -1;             // -1 outside training
  bool standardized = false;

  int num_regions() const { return static_cast<int>(region_x.rows()); }
  Eigen::VectorXd target_vector() const;  // one-hot over region nodes
};

struct ProbEdgeOptions {
  bool undirected = false;  // add region -> heart mirrors
};

InputGraph build_input_graph(const VascularGraph& graph, const AnchorFeatures& feats,
                             const Profile& profile, GraphDesign design,
                             const std::optional<VisitProbabilities>& probs,
                             const ProbEdgeOptions& opts = {});

/// Fit z-score statistics over the graphs' raw (unstandardized) features.
FeatureStats fit_feature_stats(const std::vector<InputGraph>& graphs);
void apply_feature_stats(InputGraph& g, const FeatureStats& stats);

std::string input_graph_to_json(const InputGraph& g, const FeatureStats* stats = nullptr);
InputGraph input_graph_from_json(const std::string& text, FeatureStats* stats_out = nullptr);

}  // namespace flowloc
