#include "flowloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "flowloc/autodiff.hpp"
#include "flowloc/random.hpp"
#include "json.hpp"

namespace flowloc {

using ad::Mat;
using ad::Tape;
using nlohmann::json;

std::string conv_type_to_string(ConvType t) { return t == ConvType::GAT ? "GAT" : "GCN"; }

ConvType conv_type_from_string(const std::string& s) {
  if (s == "GAT") return ConvType::GAT;
  if (s == "GCN") return ConvType::GCN;
  throw std::invalid_argument("unknown convolution type: " + s);
}

void Hyperparams::validate(bool allow_extended_domain) const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("hyperparams: " + msg); };
  bool hc_ok = false;
  // The extended domain additionally admits narrow widths for cheap tests.
  for (int v = allow_extended_domain ? 8 : 16; v <= 512; v *= 2)
    hc_ok = hc_ok || hidden_channels == v;
  if (!hc_ok) fail("hidden_channels must be one of {16, 32, ..., 512}");
  if (hgt_heads != 1 && hgt_heads != 2 && hgt_heads != 4 && hgt_heads != 8)
    fail("hgt_heads must be in {1, 2, 4, 8}");
  if (gat_heads < 1 || gat_heads > 3) fail("gat_heads must be in {1, 2, 3}");
  const int layer_max = allow_extended_domain ? 4 : 3;
  if (hgt_layers < 0 || hgt_layers > 3) fail("hgt_layers must be in {0..3}");
  if (first_layers < 0 || first_layers > layer_max) fail("first_layers out of domain");
  if (last_layers < 0 || last_layers > layer_max) fail("last_layers out of domain");
  if (learning_rate < 1e-5 || learning_rate > 0.01) fail("learning_rate outside [1e-5, 0.01]");
  if (weight_decay < 1e-6 || weight_decay > 5e-3) fail("weight_decay outside [1e-6, 5e-3]");
  if (max_grad_norm < 0.5 || max_grad_norm > 5.0) fail("max_grad_norm outside [0.5, 5]");
  if (hidden_channels % hgt_heads != 0) fail("hidden_channels must divide by hgt_heads");
}

int ModelParams::find(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw std::out_of_range("no parameter named " + name);
}

size_t ModelParams::total_entries() const {
  size_t n = 0;
  for (const auto& v : values) n += static_cast<size_t>(v.size());
  return n;
}

namespace {

// Relation and target-type inventory implied by a schema.
std::vector<std::string> hgt_relations(const GraphSchema& s) {
  std::vector<std::string> rels = {"rr", "ar"};
  if (s.has_prob_edges) rels.push_back("pr");
  if (s.has_master) {
    rels.push_back("mr");
    rels.push_back("ma");
  }
  return rels;
}

void push_param(ModelParams& m, Rng& rng, const std::string& name, long rows, long cols,
                bool zero = false) {
  Mat w(rows, cols);
  if (zero) {
    w.setZero();
  } else {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
  }
  m.names.push_back(name);
  m.values.push_back(std::move(w));
}

void push_conv_params(ModelParams& m, Rng& rng, const std::string& prefix, const Hyperparams& hp) {
  const int hc = hp.hidden_channels;
  push_param(m, rng, prefix + ".W", hc, hc);
  push_param(m, rng, prefix + ".b", 1, hc, /*zero=*/true);
  if (hp.conv_type == ConvType::GAT) {
    push_param(m, rng, prefix + ".a_src", hc, hp.gat_heads);
    push_param(m, rng, prefix + ".a_dst", hc, hp.gat_heads);
  }
}

}  // namespace

ModelParams init_model(const Hyperparams& hp, const GraphSchema& schema, uint64_t seed,
                       bool allow_extended_domain) {
  hp.validate(allow_extended_domain);
  ModelParams m;
  m.hp = hp;
  m.schema = schema;
  m.seed = seed;
  Rng rng(derive_seed(seed, {0x696e6974ULL}));
  const int hc = hp.hidden_channels;

  push_param(m, rng, "embed.region.W", kRegionFeatureDim, hc);
  push_param(m, rng, "embed.region.b", 1, hc, true);
  push_param(m, rng, "embed.anchor.W", kAnchorFeatureDim, hc);
  push_param(m, rng, "embed.anchor.b", 1, hc, true);
  if (schema.has_master) {
    push_param(m, rng, "embed.master.W", kMasterFeatureDim, hc);
    push_param(m, rng, "embed.master.b", 1, hc, true);
  }

  for (int i = 0; i < hp.first_layers; ++i)
    push_conv_params(m, rng, "fl" + std::to_string(i), hp);

  for (int i = 0; i < hp.hgt_layers; ++i) {
    const std::string p = "hgt" + std::to_string(i);
    for (const auto& rel : hgt_relations(schema)) {
      push_param(m, rng, p + "." + rel + ".Wk", hc, hc);
      push_param(m, rng, p + "." + rel + ".Wq", hc, hc);
      push_param(m, rng, p + "." + rel + ".Wv", hc, hc);
    }
    push_param(m, rng, p + ".region.Wo", hc, hc);
    push_param(m, rng, p + ".region.bo", 1, hc, true);
    if (schema.has_master) {
      push_param(m, rng, p + ".anchor.Wo", hc, hc);
      push_param(m, rng, p + ".anchor.bo", 1, hc, true);
    }
  }

  for (int i = 0; i < hp.last_layers; ++i)
    push_conv_params(m, rng, "ll" + std::to_string(i), hp);

  push_param(m, rng, "head.W", hc, 1);
  push_param(m, rng, "head.b", 1, 1, true);
  return m;
}

namespace {

// Tape-resident model: parameters registered as tape inputs in order.
struct TapeModel {
  Tape* tape;
  const ModelParams* params;
  std::vector<int> param_ids;

  int p(const std::string& name) const { return param_ids[params->find(name)]; }
};

struct ConvEdges {
  std::vector<int> src, dst;
  std::vector<double> weight;      // raw edge weights (1 for adjacency/self)
  std::vector<double> gcn_coeff;   // symmetric-degree-normalized weights
};

// Region-node convolution operates over adjacency plus (when present)
// probability edges, plus self loops.
ConvEdges build_conv_edges(const InputGraph& g) {
  ConvEdges e;
  const int n = g.num_regions();
  auto add = [&e](int s, int d, double w) {
    e.src.push_back(s);
    e.dst.push_back(d);
    e.weight.push_back(w);
  };
  for (size_t i = 0; i < g.region_adj.size(); ++i)
    add(g.region_adj.src[i], g.region_adj.dst[i], g.region_adj.weight[i]);
  for (size_t i = 0; i < g.prob_edges.size(); ++i)
    add(g.prob_edges.src[i], g.prob_edges.dst[i], g.prob_edges.weight[i]);
  for (int i = 0; i < n; ++i) add(i, i, 1.0);

  std::vector<double> deg(static_cast<size_t>(n), 0.0);
  for (size_t i = 0; i < e.src.size(); ++i) deg[static_cast<size_t>(e.dst[i])] += e.weight[i];
  e.gcn_coeff.resize(e.src.size());
  for (size_t i = 0; i < e.src.size(); ++i)
    e.gcn_coeff[i] =
        e.weight[i] / std::sqrt(deg[static_cast<size_t>(e.src[i])] * deg[static_cast<size_t>(e.dst[i])]);
  return e;
}

int conv_layer(TapeModel& tm, int h, const ConvEdges& edges, const std::string& prefix, int n) {
  Tape& t = *tm.tape;
  const Hyperparams& hp = tm.params->hp;
  const int hw = t.matmul(h, tm.p(prefix + ".W"));

  int agg;
  if (hp.conv_type == ConvType::GCN) {
    const int msg = t.scale_rows(t.gather_rows(hw, edges.src), edges.gcn_coeff);
    agg = t.scatter_add_rows(msg, edges.dst, n);
  } else {
    const int a_src = tm.p(prefix + ".a_src");
    const int a_dst = tm.p(prefix + ".a_dst");
    std::vector<int> head_outs;
    for (int head = 0; head < hp.gat_heads; ++head) {
      const int s1 = t.matmul(hw, t.slice_cols(a_src, head, 1));
      const int s2 = t.matmul(hw, t.slice_cols(a_dst, head, 1));
      const int score =
          t.leaky_relu(t.add(t.gather_rows(s1, edges.src), t.gather_rows(s2, edges.dst)), 0.2);
      int alpha = t.segment_softmax(score, edges.dst, n);
      // Probability-edge weights rescale the normalized attention.
      alpha = t.scale_rows(alpha, edges.weight);
      const int msg = t.mul_colvec(t.gather_rows(hw, edges.src), alpha);
      head_outs.push_back(t.scatter_add_rows(msg, edges.dst, n));
    }
    agg = head_outs[0];
    for (size_t i = 1; i < head_outs.size(); ++i) agg = t.add(agg, head_outs[i]);
    if (head_outs.size() > 1) agg = t.scale(agg, 1.0 / static_cast<double>(head_outs.size()));
  }
  return t.relu(t.add_rowvec(agg, tm.p(prefix + ".b")));
}

// Multi-head scaled dot-product attention for one relation; returns the
// aggregated messages at the destination nodes (n_dst x HC).
int hgt_relation(TapeModel& tm, const std::string& prefix, int x_src, int x_dst,
                 const EdgeList& edges, int n_dst) {
  Tape& t = *tm.tape;
  const int heads = tm.params->hp.hgt_heads;
  const int hc = tm.params->hp.hidden_channels;
  const long d = hc / heads;

  const int k = t.matmul(x_src, tm.p(prefix + ".Wk"));
  const int q = t.matmul(x_dst, tm.p(prefix + ".Wq"));
  const int v = t.matmul(x_src, tm.p(prefix + ".Wv"));

  std::vector<int> head_outs;
  for (int head = 0; head < heads; ++head) {
    const int kh = t.slice_cols(k, head * d, d);
    const int qh = t.slice_cols(q, head * d, d);
    const int vh = t.slice_cols(v, head * d, d);
    const int score = t.scale(
        t.rows_dot(t.gather_rows(qh, edges.dst), t.gather_rows(kh, edges.src)),
        1.0 / std::sqrt(static_cast<double>(d)));
    int alpha = t.segment_softmax(score, edges.dst, n_dst);
    if (!edges.weight.empty()) alpha = t.scale_rows(alpha, edges.weight);
    const int msg = t.mul_colvec(t.gather_rows(vh, edges.src), alpha);
    head_outs.push_back(t.scatter_add_rows(msg, edges.dst, n_dst));
  }
  return head_outs.size() == 1 ? head_outs[0] : t.concat_cols(head_outs);
}

// Full pipeline to pre-sigmoid logits (one per region node).
int forward_logits(TapeModel& tm, const InputGraph& g) {
  Tape& t = *tm.tape;
  const GraphSchema schema = GraphSchema::of(g);
  if (schema != tm.params->schema)
    throw std::invalid_argument("forward: graph schema does not match model schema");
  const int n = g.num_regions();

  int r = t.relu(t.add_rowvec(t.matmul(t.input(g.region_x), tm.p("embed.region.W")),
                              tm.p("embed.region.b")));
  int a = t.relu(t.add_rowvec(t.matmul(t.input(g.anchor_x), tm.p("embed.anchor.W")),
                              tm.p("embed.anchor.b")));
  int m = -1;
  if (schema.has_master)
    m = t.relu(t.add_rowvec(t.matmul(t.input(g.master_x), tm.p("embed.master.W")),
                            tm.p("embed.master.b")));

  const ConvEdges conv_edges = build_conv_edges(g);
  for (int i = 0; i < tm.params->hp.first_layers; ++i)
    r = conv_layer(tm, r, conv_edges, "fl" + std::to_string(i), n);

  for (int i = 0; i < tm.params->hp.hgt_layers; ++i) {
    const std::string p = "hgt" + std::to_string(i);
    int agg_r = hgt_relation(tm, p + ".rr", r, r, g.region_adj, n);
    agg_r = t.add(agg_r, hgt_relation(tm, p + ".ar", a, r, g.anchor_edges, n));
    if (schema.has_prob_edges)
      agg_r = t.add(agg_r, hgt_relation(tm, p + ".pr", r, r, g.prob_edges, n));
    if (schema.has_master)
      agg_r = t.add(agg_r, hgt_relation(tm, p + ".mr", m, r, g.master_region, n));

    const int r_new = t.relu(
        t.add(t.add_rowvec(t.matmul(agg_r, tm.p(p + ".region.Wo")), tm.p(p + ".region.bo")), r));
    if (schema.has_master) {
      const int agg_a = hgt_relation(tm, p + ".ma", m, a, g.master_anchor, 1);
      a = t.relu(
          t.add(t.add_rowvec(t.matmul(agg_a, tm.p(p + ".anchor.Wo")), tm.p(p + ".anchor.bo")), a));
    }
    r = r_new;
  }

  for (int i = 0; i < tm.params->hp.last_layers; ++i)
    r = conv_layer(tm, r, conv_edges, "ll" + std::to_string(i), n);

  return t.add_rowvec(t.matmul(r, tm.p("head.W")), tm.p("head.b"));
}

TapeModel make_tape_model(Tape& tape, const ModelParams& m) {
  TapeModel tm{&tape, &m, {}};
  tm.param_ids.reserve(m.values.size());
  for (const auto& v : m.values) tm.param_ids.push_back(tape.input(v, true));
  return tm;
}

void check_finite(const Eigen::VectorXd& v, const std::string& what) {
  for (long i = 0; i < v.size(); ++i)
    if (!std::isfinite(v(i))) throw std::runtime_error("non-finite " + what);
}

}  // namespace

Eigen::VectorXd forward(const ModelParams& m, const InputGraph& g) {
  Tape tape;
  TapeModel tm = make_tape_model(tape, m);
  const int logits = forward_logits(tm, g);
  const int probs = tape.sigmoid(logits);
  Eigen::VectorXd out = tape.value(probs).col(0);
  check_finite(out, "activation in forward output");
  return out;
}

std::pair<double, std::vector<Mat>> loss_and_gradients(const ModelParams& m, const InputGraph& g,
                                                       const Eigen::VectorXd& target, double wd) {
  if (target.size() != g.num_regions())
    throw std::invalid_argument("target length must equal region count");
  Tape tape;
  TapeModel tm = make_tape_model(tape, m);
  const int logits = forward_logits(tm, g);
  const int loss = tape.bce_with_logits(logits, target);
  tape.backward(loss);

  double total = tape.value(loss)(0, 0);
  std::vector<Mat> grads;
  grads.reserve(m.values.size());
  for (size_t i = 0; i < m.values.size(); ++i) {
    Mat gm = tape.grad(tm.param_ids[i]);
    if (wd > 0.0) {
      gm += wd * m.values[i];
      total += 0.5 * wd * m.values[i].squaredNorm();
    }
    grads.push_back(std::move(gm));
  }
  if (!std::isfinite(total)) throw std::runtime_error("non-finite loss");
  return {total, std::move(grads)};
}

int predict_region(const ModelParams& m, const InputGraph& g) {
  const Eigen::VectorXd probs = forward(m, g);
  int best = g.event_region_ids.front();
  for (int rid : g.event_region_ids)
    if (probs(rid) > probs(best)) best = rid;
  return best;
}

namespace {

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Mat> m1, m2;
  long step = 0;

  explicit Adam(const ModelParams& p, double lr_) : lr(lr_) {
    for (const auto& v : p.values) {
      m1.push_back(Mat::Zero(v.rows(), v.cols()));
      m2.push_back(Mat::Zero(v.rows(), v.cols()));
    }
  }

  void update(ModelParams& p, std::vector<Mat>& grads, double max_norm, double wd) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
      const double s = max_norm / norm;
      for (auto& g : grads) g *= s;
    }
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (size_t i = 0; i < grads.size(); ++i) {
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * grads[i];
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * grads[i].cwiseProduct(grads[i]);
      const Mat mhat = m1[i] / bc1;
      const Mat vhat = m2[i] / bc2;
      p.values[i] -=
          lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix() + (lr * wd) * p.values[i];
    }
  }
};

double dataset_accuracy(const ModelParams& m, const std::vector<TrainSample>& samples,
                        const std::vector<size_t>& idx) {
  if (idx.empty()) return 0.0;
  int correct = 0;
  for (size_t i : idx)
    correct += predict_region(m, samples[i].graph) == samples[i].target_region ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

double dataset_loss(const ModelParams& m, const std::vector<TrainSample>& samples,
                    const std::vector<size_t>& idx) {
  if (idx.empty()) return 0.0;
  double total = 0.0;
  for (size_t i : idx) {
    Eigen::VectorXd tgt = Eigen::VectorXd::Zero(samples[i].graph.num_regions());
    tgt(samples[i].target_region) = 1.0;
    total += loss_and_gradients(m, samples[i].graph, tgt, 0.0).first;
  }
  return total / static_cast<double>(idx.size());
}

}  // namespace

TrainRun train(const std::vector<TrainSample>& dataset, const Hyperparams& hp,
               const TrainOptions& opts, bool allow_extended_domain) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  hp.validate(allow_extended_domain);

  // Stratified train/validation split by event region.
  Rng split_rng(derive_seed(opts.seed, {0x73706c69ULL}));
  std::map<int, std::vector<size_t>> by_region;
  for (size_t i = 0; i < dataset.size(); ++i) by_region[dataset[i].target_region].push_back(i);
  std::vector<size_t> train_idx, val_idx;
  for (auto& [region, idx] : by_region) {
    for (size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[split_rng.below(i)]);
    size_t n_val = static_cast<size_t>(std::floor(opts.val_fraction * static_cast<double>(idx.size())));
    if (n_val == 0 && idx.size() > 1 && opts.val_fraction > 0.0) n_val = 1;
    for (size_t i = 0; i < idx.size(); ++i)
      (i < n_val ? val_idx : train_idx).push_back(idx[i]);
  }
  if (val_idx.empty()) val_idx = train_idx;  // tiny datasets validate in-sample

  TrainRun run;
  run.seed = opts.seed;
  ModelParams model = init_model(hp, GraphSchema::of(dataset.front().graph), opts.seed,
                                 allow_extended_domain);
  model.graph_schema_hash = dataset.front().graph.schema_hash;
  Adam adam(model, hp.learning_rate);

  run.best = model;
  run.best_val_accuracy = dataset_accuracy(model, dataset, val_idx);
  run.best_val_loss = dataset_loss(model, dataset, val_idx);
  run.best_epoch = 0;

  Rng order_rng(derive_seed(opts.seed, {0x6f726465ULL}));
  int since_best = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<size_t> order = train_idx;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[order_rng.below(i)]);

    double epoch_loss = 0.0;
    for (size_t i : order) {
      const auto& s = dataset[i];
      Eigen::VectorXd tgt = Eigen::VectorXd::Zero(s.graph.num_regions());
      tgt(s.target_region) = 1.0;
      auto [loss, grads] = loss_and_gradients(model, s.graph, tgt, 0.0);
      epoch_loss += loss;
      adam.update(model, grads, hp.max_grad_norm, hp.weight_decay);
    }
    epoch_loss /= static_cast<double>(order.empty() ? 1 : order.size());
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("train: diverged (non-finite loss) at epoch " +
                               std::to_string(epoch));

    const double val_acc = dataset_accuracy(model, dataset, val_idx);
    run.train_loss.push_back(epoch_loss);
    run.val_accuracy.push_back(val_acc);

    if (val_acc > run.best_val_accuracy ||
        (val_acc == run.best_val_accuracy && run.best_epoch < 0)) {
      run.best = model;
      run.best_val_accuracy = val_acc;
      run.best_val_loss = dataset_loss(model, dataset, val_idx);
      run.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= opts.patience) {
      break;
    }
  }
  return run;
}

size_t SearchSpace::grid_size() const {
  return hidden_channels.size() * hgt_heads.size() * gat_heads.size() * hgt_layers.size() *
         first_layers.size() * last_layers.size() * conv_types.size();
}

std::pair<Hyperparams, std::vector<LeaderboardEntry>> grid_search(
    const std::vector<TrainSample>& dataset, const SearchSpace& space, int budget,
    const TrainOptions& opts, int jobs) {
  if (budget < 1) throw std::invalid_argument("grid_search: budget must be >= 1");
  const size_t total = space.grid_size();
  if (total == 0) throw std::invalid_argument("grid_search: empty search space");

  auto config_at = [&space](size_t flat) {
    Hyperparams hp;
    auto pick = [&flat](const auto& v) {
      auto x = v[flat % v.size()];
      flat /= v.size();
      return x;
    };
    hp.hidden_channels = pick(space.hidden_channels);
    hp.hgt_heads = pick(space.hgt_heads);
    hp.gat_heads = pick(space.gat_heads);
    hp.hgt_layers = pick(space.hgt_layers);
    hp.first_layers = pick(space.first_layers);
    hp.last_layers = pick(space.last_layers);
    hp.conv_type = pick(space.conv_types);
    return hp;
  };

  // Deterministic subsample of the discrete grid when over budget.
  std::vector<size_t> chosen;
  if (static_cast<size_t>(budget) >= total) {
    chosen.resize(total);
    std::iota(chosen.begin(), chosen.end(), 0);
  } else {
    std::vector<size_t> all(total);
    std::iota(all.begin(), all.end(), 0);
    Rng rng(derive_seed(opts.seed, {0x67726964ULL}));
    for (int i = 0; i < budget; ++i) {
      const size_t j = i + rng.below(all.size() - i);
      std::swap(all[i], all[j]);
      chosen.push_back(all[i]);
    }
  }

  std::vector<Hyperparams> configs;
  for (size_t i = 0; i < chosen.size(); ++i) {
    Hyperparams hp = config_at(chosen[i]);
    Rng rng(derive_seed(opts.seed, {0x636f6e66ULL, chosen[i]}));
    hp.learning_rate = std::exp(rng.uniform(std::log(space.lr_min), std::log(space.lr_max)));
    hp.weight_decay = std::exp(rng.uniform(std::log(space.wd_min), std::log(space.wd_max)));
    hp.max_grad_norm = rng.uniform(space.mn_min, space.mn_max);
    configs.push_back(hp);
  }

  std::vector<LeaderboardEntry> board(configs.size());
  auto run_one = [&](size_t i) {
    TrainRun r = train(dataset, configs[i], opts);
    board[i] = {configs[i], r.best_val_accuracy, r.best_val_loss};
  };
  if (jobs <= 1) {
    for (size_t i = 0; i < configs.size(); ++i) run_one(i);
  } else {
    std::vector<std::future<void>> pending;
    for (size_t i = 0; i < configs.size(); ++i) {
      pending.push_back(std::async(std::launch::async, run_one, i));
      if (pending.size() >= static_cast<size_t>(jobs)) {
        pending.front().get();
        pending.erase(pending.begin());
      }
    }
    for (auto& f : pending) f.get();
  }

  auto key = [](const Hyperparams& h) {
    return std::make_tuple(h.hidden_channels, h.hgt_heads, h.gat_heads, h.hgt_layers,
                           h.first_layers, h.last_layers, static_cast<int>(h.conv_type),
                           h.learning_rate, h.weight_decay, h.max_grad_norm);
  };
  std::stable_sort(board.begin(), board.end(),
                   [&key](const LeaderboardEntry& a, const LeaderboardEntry& b) {
                     if (a.val_accuracy != b.val_accuracy) return a.val_accuracy > b.val_accuracy;
                     if (a.val_loss != b.val_loss) return a.val_loss < b.val_loss;
                     return key(a.hp) < key(b.hp);
                   });
  return {board.front().hp, board};
}

namespace {

json hp_to_json(const Hyperparams& hp) {
  return {{"hidden_channels", hp.hidden_channels}, {"hgt_heads", hp.hgt_heads},
          {"gat_heads", hp.gat_heads},             {"hgt_layers", hp.hgt_layers},
          {"first_layers", hp.first_layers},       {"last_layers", hp.last_layers},
          {"conv_type", conv_type_to_string(hp.conv_type)},
          {"learning_rate", hp.learning_rate},     {"weight_decay", hp.weight_decay},
          {"max_grad_norm", hp.max_grad_norm}};
}

Hyperparams hp_from_json(const json& j) {
  Hyperparams hp;
  hp.hidden_channels = j.at("hidden_channels").get<int>();
  hp.hgt_heads = j.at("hgt_heads").get<int>();
  hp.gat_heads = j.at("gat_heads").get<int>();
  hp.hgt_layers = j.at("hgt_layers").get<int>();
  hp.first_layers = j.at("first_layers").get<int>();
  hp.last_layers = j.at("last_layers").get<int>();
  hp.conv_type = conv_type_from_string(j.at("conv_type").get<std::string>());
  hp.learning_rate = j.at("learning_rate").get<double>();
  hp.weight_decay = j.at("weight_decay").get<double>();
  hp.max_grad_norm = j.at("max_grad_norm").get<double>();
  return hp;
}

json stats_vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd stats_vec_from(const json& j) {
  Eigen::VectorXd v(static_cast<long>(j.size()));
  for (long i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace

std::string checkpoint_to_json(const ModelParams& m, const FeatureStats& stats) {
  json arrays = json::array();
  for (size_t i = 0; i < m.values.size(); ++i) {
    const auto& v = m.values[i];
    json data = json::array();
    for (long r = 0; r < v.rows(); ++r)
      for (long c = 0; c < v.cols(); ++c) data.push_back(v(r, c));
    arrays.push_back({{"name", m.names[i]}, {"rows", v.rows()}, {"cols", v.cols()},
                      {"data", std::move(data)}});
  }
  json j = {{"schema_version", 1},
            {"kind", "flowloc_checkpoint"},
            {"hyperparams", hp_to_json(m.hp)},
            {"schema", {{"has_master", m.schema.has_master},
                        {"has_prob_edges", m.schema.has_prob_edges}}},
            {"graph_schema_hash", m.graph_schema_hash},
            {"seed", m.seed},
            {"params", std::move(arrays)}};
  if (stats.fitted) {
    j["feature_stats"] = {{"region_mean", stats_vec(stats.region_mean)},
                          {"region_std", stats_vec(stats.region_std)},
                          {"anchor_mean", stats_vec(stats.anchor_mean)},
                          {"anchor_std", stats_vec(stats.anchor_std)},
                          {"master_mean", stats_vec(stats.master_mean)},
                          {"master_std", stats_vec(stats.master_std)}};
  }
  return j.dump() + "\n";
}

ModelParams checkpoint_from_json(const std::string& text, FeatureStats* stats_out) {
  json j = json::parse(text);
  if (j.value("kind", "") != "flowloc_checkpoint" || j.value("schema_version", 0) != 1)
    throw std::runtime_error("not a flowloc checkpoint file");
  ModelParams m;
  m.hp = hp_from_json(j.at("hyperparams"));
  m.schema.has_master = j.at("schema").at("has_master").get<bool>();
  m.schema.has_prob_edges = j.at("schema").at("has_prob_edges").get<bool>();
  m.graph_schema_hash = j.at("graph_schema_hash").get<uint64_t>();
  m.seed = j.at("seed").get<uint64_t>();
  for (const auto& ja : j.at("params")) {
    const long rows = ja.at("rows").get<long>();
    const long cols = ja.at("cols").get<long>();
    Mat v(rows, cols);
    const auto& data = ja.at("data");
    long k = 0;
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) v(r, c) = data.at(k++).get<double>();
    m.names.push_back(ja.at("name").get<std::string>());
    m.values.push_back(std::move(v));
  }
  if (stats_out != nullptr && j.contains("feature_stats")) {
    const auto& js = j["feature_stats"];
    stats_out->region_mean = stats_vec_from(js["region_mean"]);
    stats_out->region_std = stats_vec_from(js["region_std"]);
    stats_out->anchor_mean = stats_vec_from(js["anchor_mean"]);
    stats_out->anchor_std = stats_vec_from(js["anchor_std"]);
    stats_out->master_mean = stats_vec_from(js["master_mean"]);
    stats_out->master_std = stats_vec_from(js["master_std"]);
    stats_out->fitted = true;
  }
  return m;
}

void save_checkpoint(const ModelParams& m, const FeatureStats& stats, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << checkpoint_to_json(m, stats);
}

ModelParams load_checkpoint(const std::string& path, FeatureStats* stats_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str(), stats_out);
}

}  // namespace flowloc
