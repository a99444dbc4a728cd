#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowloc/input_graph.hpp"

namespace flowloc {

enum class ConvType { GAT, GCN };

struct Hyperparams {
  int hidden_channels = 64;  // {16, 32, ..., 512}
  int hgt_heads = 2;         // {1, 2, 4, 8}
  int gat_heads = 1;         // {1, 2, 3}
  int hgt_layers = 2;        // {0..3}
  int first_layers = 1;      // {0..3}
  int last_layers = 1;       // {0..3}
  ConvType conv_type = ConvType::GCN;
  double learning_rate = 1e-3;   // [1e-5, 0.01]
  double weight_decay = 1e-4;    // [1e-6, 5e-3]
  double max_grad_norm = 2.0;    // [0.5, 5]

  // Accepts the published best configurations whose layer counts exceed the
  // printed search domains (FL/LL up to 4).
  void validate(bool allow_extended_domain = false) const;
};

struct GraphSchema {
  bool has_master = false;
  bool has_prob_edges = false;

  static GraphSchema of(const InputGraph& g) {
    return {g.master_x.rows() > 0, g.prob_edges.size() > 0};
  }
  bool operator==(const GraphSchema&) const = default;
};

/// All learnable arrays, flat and name-addressable.
struct ModelParams {
  Hyperparams hp;
  GraphSchema schema;
  uint64_t graph_schema_hash = 0;
  uint64_t seed = 0;
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> values;

  int find(const std::string& name) const;
  size_t total_entries() const;
};

ModelParams init_model(const Hyperparams& hp, const GraphSchema& schema, uint64_t seed,
                       bool allow_extended_domain = false);

/// Per-region event probabilities (sigmoid outputs), one per region node.
Eigen::VectorXd forward(const ModelParams& m, const InputGraph& g);

/// Mean BCE over region nodes plus an L2 term 0.5*wd*||theta||^2.
std::pair<double, std::vector<Eigen::MatrixXd>> loss_and_gradients(
    const ModelParams& m, const InputGraph& g, const Eigen::VectorXd& target, double wd);

/// Argmax over event-eligible regions.
int predict_region(const ModelParams& m, const InputGraph& g);

struct TrainSample {
  InputGraph graph;
  int target_region = -1;
};

struct TrainOptions {
  int epochs = 300;
  int patience = 30;  // early stopping on validation region accuracy
  uint64_t seed = 0;
  double val_fraction = 0.2;  // stratified by event region
  bool verbose = false;
};

struct TrainRun {
  std::vector<double> train_loss;      // per epoch
  std::vector<double> val_accuracy;    // per epoch
  ModelParams best;                    // checkpoint at max validation accuracy
  double best_val_accuracy = 0.0;
  double best_val_loss = 0.0;
  int best_epoch = -1;
  uint64_t seed = 0;
};

TrainRun train(const std::vector<TrainSample>& dataset, const Hyperparams& hp,
               const TrainOptions& opts, bool allow_extended_domain = false);

struct SearchSpace {
  std::vector<int> hidden_channels = {16, 32, 64, 128, 256, 512};
  std::vector<int> hgt_heads = {1, 2, 4, 8};
  std::vector<int> gat_heads = {1, 2, 3};
  std::vector<int> hgt_layers = {0, 1, 2, 3};
  std::vector<int> first_layers = {0, 1, 2, 3};
  std::vector<int> last_layers = {0, 1, 2, 3};
  std::vector<ConvType> conv_types = {ConvType::GAT, ConvType::GCN};
  double lr_min = 1e-5, lr_max = 0.01;       // log-uniform
  double wd_min = 1e-6, wd_max = 5e-3;       // log-uniform
  double mn_min = 0.5, mn_max = 5.0;         // uniform

  size_t grid_size() const;
};

struct LeaderboardEntry {
  Hyperparams hp;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
};

/// Deterministically enumerates (or subsamples to budget) the discrete grid,
/// drawing the continuous ranges per configuration; ranks by validation
/// accuracy, ties broken by lower loss then lexicographic hyperparams.
std::pair<Hyperparams, std::vector<LeaderboardEntry>> grid_search(
    const std::vector<TrainSample>& dataset, const SearchSpace& space, int budget,
    const TrainOptions& opts, int jobs = 1);

std::string checkpoint_to_json(const ModelParams& m, const FeatureStats& stats);
ModelParams checkpoint_from_json(const std::string& text, FeatureStats* stats_out = nullptr);
void save_checkpoint(const ModelParams& m, const FeatureStats& stats, const std::string& path);
ModelParams load_checkpoint(const std::string& path, FeatureStats* stats_out = nullptr);

std::string conv_type_to_string(ConvType t);
ConvType conv_type_from_string(const std::string& s);

}  // namespace flowloc
