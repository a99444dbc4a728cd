#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "flowloc/model.hpp"
#include "flowloc/random.hpp"

using namespace flowloc;

namespace {

InputGraph random_graph(int n_regions, GraphDesign design, uint64_t seed) {
  Rng rng(seed);
  InputGraph g;
  g.design = design;
  g.schema_hash = seed;
  g.standardized = true;

  g.region_x = Eigen::MatrixXd::Zero(n_regions, kRegionFeatureDim);
  for (int i = 0; i < n_regions; ++i) {
    g.region_x(i, static_cast<int>(rng.below(6))) = 1.0;
    g.region_x(i, 6) = rng.gaussian();
    g.region_x(i, 7) = rng.gaussian();
  }
  g.anchor_x = Eigen::MatrixXd::Zero(1, kAnchorFeatureDim);
  for (int j = 0; j < kAnchorFeatureDim; ++j) g.anchor_x(0, j) = rng.gaussian();

  // Ring plus a few random chords, mirrored like vessel adjacency.
  for (int i = 0; i < n_regions; ++i) {
    const int j = (i + 1) % n_regions;
    g.region_adj.add(i, j);
    g.region_adj.add(j, i);
  }
  for (int k = 0; k < n_regions / 2; ++k) {
    const int a = static_cast<int>(rng.below(static_cast<uint64_t>(n_regions)));
    const int b = static_cast<int>(rng.below(static_cast<uint64_t>(n_regions)));
    if (a == b) continue;
    g.region_adj.add(a, b);
    g.region_adj.add(b, a);
  }
  for (int i = 0; i < n_regions; ++i) g.anchor_edges.add(0, i);

  if (design_has_prob_edges(design))
    for (int i = 1; i < n_regions; ++i) g.prob_edges.add(0, i, rng.uniform());

  if (design_has_master(design)) {
    g.master_x = Eigen::MatrixXd::Zero(1, kMasterFeatureDim);
    for (int j = 0; j < kMasterFeatureDim; ++j) g.master_x(0, j) = rng.gaussian();
    for (int i = 0; i < n_regions; ++i) g.master_region.add(0, i);
    g.master_anchor.add(0, 0);
  } else {
    g.master_x = Eigen::MatrixXd::Zero(0, kMasterFeatureDim);
  }

  g.event_region_ids.resize(n_regions);
  std::iota(g.event_region_ids.begin(), g.event_region_ids.end(), 0);
  g.target_region = static_cast<int>(rng.below(static_cast<uint64_t>(n_regions)));
  return g;
}

double finite_diff(ModelParams m, const InputGraph& g, const Eigen::VectorXd& target, double wd,
                   int pi, int r, int c, double h) {
  m.values[pi](r, c) += h;
  const double up = loss_and_gradients(m, g, target, wd).first;
  m.values[pi](r, c) -= 2.0 * h;
  const double dn = loss_and_gradients(m, g, target, wd).first;
  return (up - dn) / (2.0 * h);
}

void check_gradients(const Hyperparams& hp, GraphDesign design, uint64_t seed, double wd) {
  const InputGraph g = random_graph(6, design, seed);
  ModelParams m = init_model(hp, GraphSchema::of(g), seed + 1);
  const Eigen::VectorXd target = g.target_vector();
  const auto [loss, grads] = loss_and_gradients(m, g, target, wd);
  CHECK(std::isfinite(loss));
  REQUIRE(grads.size() == m.values.size());

  Rng pick(seed + 2);
  for (size_t pi = 0; pi < m.values.size(); ++pi) {
    REQUIRE(grads[pi].rows() == m.values[pi].rows());
    REQUIRE(grads[pi].cols() == m.values[pi].cols());
    const int entries = std::min<int>(3, static_cast<int>(m.values[pi].size()));
    for (int e = 0; e < entries; ++e) {
      const int r = static_cast<int>(pick.below(static_cast<uint64_t>(m.values[pi].rows())));
      const int c = static_cast<int>(pick.below(static_cast<uint64_t>(m.values[pi].cols())));
      const double fd = finite_diff(m, g, target, wd, static_cast<int>(pi), r, c, 1e-5);
      const double an = grads[pi](r, c);
      const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      CHECK_MESSAGE(err < 1e-4, "param ", m.names[pi], " (", r, ",", c, ") fd=", fd,
                    " analytic=", an);
    }
  }
}

std::vector<TrainSample> separable_dataset(int per_class) {
  // Two target regions over one shared graph, distinguishable purely from the
  // sign of the first anchor feature.
  std::vector<TrainSample> out;
  Rng rng(77);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int cls = i % 2;
    InputGraph g = random_graph(4, GraphDesign::Baseline, 1000);
    g.anchor_x.setZero();
    g.anchor_x(0, 0) = cls == 0 ? -2.0 + 0.1 * rng.gaussian() : 2.0 + 0.1 * rng.gaussian();
    g.target_region = cls;
    out.push_back({std::move(g), cls});
  }
  return out;
}

}  // namespace

TEST_CASE("hyperparameter validation enforces the search domains") {
  Hyperparams hp;
  CHECK_NOTHROW(hp.validate());
  SUBCASE("hidden channels must be a power of two in range") {
    hp.hidden_channels = 48;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp.hidden_channels = 8;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    CHECK_NOTHROW(hp.validate(/*allow_extended_domain=*/true));
    hp.hidden_channels = 1024;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp.hidden_channels = 512;
    CHECK_NOTHROW(hp.validate());
  }
  SUBCASE("heads must divide hidden channels and lie in the domain") {
    hp.hgt_heads = 5;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp.hgt_heads = 8;
    hp.hidden_channels = 16;
    CHECK_NOTHROW(hp.validate());
  }
  SUBCASE("layer counts beyond 3 need the extended domain") {
    hp.first_layers = 4;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    CHECK_NOTHROW(hp.validate(/*allow_extended_domain=*/true));
    hp.first_layers = 5;
    CHECK_THROWS_AS(hp.validate(true), std::invalid_argument);
  }
  SUBCASE("continuous ranges") {
    hp.learning_rate = 0.5;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp.learning_rate = 1e-3;
    hp.max_grad_norm = 0.0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
  }
}

TEST_CASE("model initialization is deterministic and seed-sensitive") {
  Hyperparams hp;
  hp.hidden_channels = 16;
  const GraphSchema schema{true, true};
  const ModelParams a = init_model(hp, schema, 9);
  const ModelParams b = init_model(hp, schema, 9);
  const ModelParams c = init_model(hp, schema, 10);
  REQUIRE(a.values.size() == b.values.size());
  bool all_equal = true, any_differ = false;
  for (size_t i = 0; i < a.values.size(); ++i) {
    all_equal = all_equal && a.values[i] == b.values[i];
    any_differ = any_differ || a.values[i] != c.values[i];
  }
  CHECK(all_equal);
  CHECK(any_differ);
  CHECK(a.names.size() == a.values.size());
  CHECK(a.total_entries() > 0);
  CHECK(a.find(a.names.front()) == 0);
  CHECK_THROWS_AS(a.find("no_such_param"), std::out_of_range);
}

TEST_CASE("forward produces probabilities and is deterministic") {
  Hyperparams hp;
  hp.hidden_channels = 16;
  const InputGraph g = random_graph(7, GraphDesign::C, 4);
  const ModelParams m = init_model(hp, GraphSchema::of(g), 5);
  const Eigen::VectorXd p = forward(m, g);
  REQUIRE(p.size() == g.num_regions());
  for (int i = 0; i < p.size(); ++i) {
    CHECK(p(i) > 0.0);
    CHECK(p(i) < 1.0);
  }
  CHECK(forward(m, g) == p);
  const int pred = predict_region(m, g);
  CHECK(pred >= 0);
  CHECK(pred < g.num_regions());
  Eigen::Index argmax;
  p.maxCoeff(&argmax);
  CHECK(pred == static_cast<int>(argmax));
}

TEST_CASE("forward rejects a mismatched graph schema") {
  Hyperparams hp;
  hp.hidden_channels = 16;
  const InputGraph with_master = random_graph(5, GraphDesign::A, 6);
  const InputGraph without = random_graph(5, GraphDesign::Baseline, 6);
  const ModelParams m = init_model(hp, GraphSchema::of(with_master), 7);
  CHECK_THROWS_AS(forward(m, without), std::invalid_argument);
}

TEST_CASE("gradients match central finite differences") {
  Hyperparams hp;
  hp.hidden_channels = 16;
  hp.hgt_heads = 2;
  hp.hgt_layers = 1;
  hp.first_layers = 1;
  hp.last_layers = 1;

  SUBCASE("gcn baseline") {
    hp.conv_type = ConvType::GCN;
    check_gradients(hp, GraphDesign::Baseline, 11, 0.0);
  }
  SUBCASE("gat with heads") {
    hp.conv_type = ConvType::GAT;
    hp.gat_heads = 2;
    check_gradients(hp, GraphDesign::Baseline, 12, 0.0);
  }
  SUBCASE("gcn with master and prob edges") {
    hp.conv_type = ConvType::GCN;
    check_gradients(hp, GraphDesign::C, 13, 0.0);
  }
  SUBCASE("gat design c with weight decay term") {
    hp.conv_type = ConvType::GAT;
    check_gradients(hp, GraphDesign::C, 14, 0.3);
  }
  SUBCASE("deeper hgt stack") {
    hp.conv_type = ConvType::GCN;
    hp.hgt_layers = 2;
    hp.hgt_heads = 4;
    check_gradients(hp, GraphDesign::A, 15, 0.0);
  }
}

TEST_CASE("zero-depth model still forwards and learns through the head") {
  Hyperparams hp;
  hp.hidden_channels = 16;
  hp.hgt_layers = 0;
  hp.first_layers = 0;
  hp.last_layers = 0;
  const InputGraph g = random_graph(5, GraphDesign::Baseline, 21);
  const ModelParams m = init_model(hp, GraphSchema::of(g), 22);
  const Eigen::VectorXd p = forward(m, g);
  REQUIRE(p.size() == 5);
  check_gradients(hp, GraphDesign::Baseline, 23, 0.0);
}

TEST_CASE("outputs are equivariant to region relabeling") {
  Hyperparams hp;
  hp.hidden_channels = 16;
  hp.conv_type = ConvType::GAT;
  hp.gat_heads = 2;
  const int n = 8;
  const InputGraph g = random_graph(n, GraphDesign::C, 31);
  const ModelParams m = init_model(hp, GraphSchema::of(g), 32);
  const Eigen::VectorXd base = forward(m, g);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::rotate(perm.begin(), perm.begin() + 3, perm.end());  // old id -> new id

  InputGraph pg = g;
  for (int i = 0; i < n; ++i) pg.region_x.row(perm[i]) = g.region_x.row(i);
  auto remap_dst = [&](EdgeList& e) {
    for (auto& d : e.dst) d = perm[d];
  };
  for (auto& s : pg.region_adj.src) s = perm[s];
  remap_dst(pg.region_adj);
  remap_dst(pg.anchor_edges);
  // Probability-edge sources name region nodes, so they relabel too.
  for (auto& s : pg.prob_edges.src) s = perm[s];
  remap_dst(pg.prob_edges);
  remap_dst(pg.master_region);
  pg.target_region = perm[g.target_region];

  const Eigen::VectorXd out = forward(m, pg);
  for (int i = 0; i < n; ++i) CHECK(out(perm[i]) == doctest::Approx(base(i)).epsilon(1e-10));
}

TEST_CASE("training separates a linearly separable toy task") {
  const auto data = separable_dataset(12);
  Hyperparams hp;
  hp.hidden_channels = 16;
  hp.hgt_layers = 1;
  hp.first_layers = 1;
  hp.last_layers = 1;
  hp.learning_rate = 0.01;
  TrainOptions opts;
  opts.epochs = 200;
  opts.patience = 200;
  opts.seed = 3;
  const TrainRun run = train(data, hp, opts);
  CHECK(run.best_val_accuracy >= 0.8);
  CHECK(!run.train_loss.empty());
  CHECK(std::isfinite(run.train_loss.back()));
  CHECK(run.best_epoch >= 0);

  // Training is deterministic given the seed.
  const TrainRun again = train(data, hp, opts);
  CHECK(again.train_loss == run.train_loss);
  CHECK(again.best_val_accuracy == run.best_val_accuracy);
}

TEST_CASE("zero-epoch training returns the untrained initialization") {
  const auto data = separable_dataset(4);
  Hyperparams hp;
  hp.hidden_channels = 16;
  TrainOptions opts;
  opts.epochs = 0;
  opts.seed = 1;
  const TrainRun run = train(data, hp, opts);
  CHECK(run.train_loss.empty());
  CHECK(run.best.values.size() > 0);
  // The untrained model still produces valid probabilities.
  const Eigen::VectorXd p = forward(run.best, data.front().graph);
  CHECK(p.size() == data.front().graph.num_regions());
}

TEST_CASE("training rejects an empty dataset") {
  Hyperparams hp;
  hp.hidden_channels = 16;
  CHECK_THROWS_AS(train({}, hp, TrainOptions{}), std::invalid_argument);
}

TEST_CASE("grid search ranks deterministic leaderboard entries") {
  const auto data = separable_dataset(6);
  SearchSpace space;
  space.hidden_channels = {16};
  space.hgt_heads = {1, 2};
  space.gat_heads = {1};
  space.hgt_layers = {0, 1};
  space.first_layers = {1};
  space.last_layers = {1};
  space.conv_types = {ConvType::GCN};
  CHECK(space.grid_size() == 4);

  TrainOptions opts;
  opts.epochs = 25;
  opts.patience = 25;
  opts.seed = 5;
  const auto [best, board] = grid_search(data, space, 4, opts, 2);
  REQUIRE(board.size() == 4);
  for (size_t i = 1; i < board.size(); ++i) {
    const bool ordered = board[i - 1].val_accuracy > board[i].val_accuracy ||
                         (board[i - 1].val_accuracy == board[i].val_accuracy &&
                          board[i - 1].val_loss <= board[i].val_loss);
    CHECK(ordered);
  }
  CHECK(best.hidden_channels == 16);
  CHECK_NOTHROW(best.validate());

  // Budget smaller than the grid subsamples deterministically.
  const auto [best2, board2] = grid_search(data, space, 2, opts, 1);
  CHECK(board2.size() == 2);
  const auto [best3, board3] = grid_search(data, space, 2, opts, 2);
  REQUIRE(board3.size() == 2);
  for (size_t i = 0; i < board2.size(); ++i) {
    CHECK(board2[i].val_accuracy == board3[i].val_accuracy);
    CHECK(board2[i].hp.hgt_heads == board3[i].hp.hgt_heads);
  }
}

TEST_CASE("checkpoints round trip with feature statistics") {
  Hyperparams hp;
  hp.hidden_channels = 16;
  const GraphSchema schema{true, false};
  const ModelParams m = init_model(hp, schema, 41);

  FeatureStats stats;
  stats.fitted = true;
  stats.region_mean = Eigen::VectorXd::Constant(2, 0.5);
  stats.region_std = Eigen::VectorXd::Constant(2, 2.0);
  stats.anchor_mean = Eigen::VectorXd::Constant(kAnchorFeatureDim, -1.0);
  stats.anchor_std = Eigen::VectorXd::Constant(kAnchorFeatureDim, 3.0);
  stats.master_mean = Eigen::VectorXd::Constant(kMasterFeatureDim, 0.25);
  stats.master_std = Eigen::VectorXd::Constant(kMasterFeatureDim, 1.5);

  const std::string text = checkpoint_to_json(m, stats);
  FeatureStats back_stats;
  const ModelParams back = checkpoint_from_json(text, &back_stats);
  CHECK(back.hp.hidden_channels == hp.hidden_channels);
  CHECK(back.schema == m.schema);
  CHECK(back.seed == m.seed);
  REQUIRE(back.values.size() == m.values.size());
  for (size_t i = 0; i < m.values.size(); ++i) {
    CHECK(back.names[i] == m.names[i]);
    CHECK(back.values[i] == m.values[i]);
  }
  CHECK(back_stats.fitted);
  CHECK(back_stats.anchor_mean == stats.anchor_mean);
  CHECK(back_stats.master_std == stats.master_std);
}
