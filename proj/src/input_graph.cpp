#include "flowloc/input_graph.hpp"

#include <stdexcept>

#include "json.hpp"

namespace flowloc {

using nlohmann::json;

Eigen::VectorXd AnchorFeatures::flatten() const {
  Eigen::VectorXd v(kAnchorFeatureDim);
  if (sentinel) {
    v.setZero();
    return v;
  }
  v << gmm.components[0].mean, gmm.components[0].variance, gmm.components[0].weight,
      gmm.components[1].mean, gmm.components[1].variance, gmm.components[1].weight,
      avg_positive_bits;
  return v;
}

AnchorFeatures anchor_features(const RawDataset& raw, const EmSettings& settings) {
  AnchorFeatures f;
  const auto times = raw.positive_circulation_times();
  if (times.empty()) {
    f.sentinel = true;
    f.avg_positive_bits = 0.0;
    return f;
  }
  f.gmm = fit_gmm(times, settings);
  f.avg_positive_bits =
      static_cast<double>(times.size()) / static_cast<double>(raw.config.num_nanodevices);
  return f;
}

GraphDesign design_from_string(const std::string& s) {
  if (s == "baseline") return GraphDesign::Baseline;
  if (s == "a") return GraphDesign::A;
  if (s == "b") return GraphDesign::B;
  if (s == "c") return GraphDesign::C;
  throw std::invalid_argument("unknown graph design: " + s);
}

std::string design_to_string(GraphDesign d) {
  switch (d) {
    case GraphDesign::Baseline: return "baseline";
    case GraphDesign::A: return "a";
    case GraphDesign::B: return "b";
    case GraphDesign::C: return "c";
  }
  return "?";
}

Eigen::VectorXd InputGraph::target_vector() const {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(num_regions());
  if (target_region < 0 || target_region >= num_regions())
    throw std::logic_error("target_vector: graph has no training target");
  t(target_region) = 1.0;
  return t;
}

InputGraph build_input_graph(const VascularGraph& graph, const AnchorFeatures& feats,
                             const Profile& profile, GraphDesign design,
                             const std::optional<VisitProbabilities>& probs,
                             const ProbEdgeOptions& opts) {
  if (design_has_prob_edges(design) && !probs.has_value())
    throw std::invalid_argument("designs b/c require visit probabilities");
  profile.validate();

  InputGraph g;
  g.design = design;
  g.schema_hash = graph.schema_hash();
  g.event_region_ids = graph.event_region_ids();

  const int n = static_cast<int>(graph.size());
  g.region_x.resize(n, kRegionFeatureDim);
  g.region_x.setZero();
  for (const auto& node : graph.nodes()) {
    g.region_x(node.id, static_cast<int>(node.kind)) = 1.0;
    g.region_x(node.id, 6) = node.length;
    g.region_x(node.id, 7) = node.blood_speed;
  }

  g.anchor_x = feats.flatten().transpose();

  for (auto [a, b] : graph.edges()) {
    g.region_adj.add(a, b);
    g.region_adj.add(b, a);
  }

  for (int r = 0; r < n; ++r) g.anchor_edges.add(0, r);

  if (design_has_prob_edges(design)) {
    for (int h : graph.heart_ids()) {
      for (int r = 0; r < n; ++r) {
        bool is_heart = false;
        for (int h2 : graph.heart_ids()) is_heart = is_heart || r == h2;
        if (is_heart) continue;  // hearts link to all regions except themselves
        auto it = probs->prob.find(r);
        if (it == probs->prob.end())
          throw std::invalid_argument("visit probabilities missing region " + std::to_string(r));
        g.prob_edges.add(h, r, it->second);
        if (opts.undirected) g.prob_edges.add(r, h, it->second);
      }
    }
  }

  if (design_has_master(design)) {
    g.master_x.resize(1, kMasterFeatureDim);
    g.master_x << profile.weight_ratio, profile.height_ratio, profile.heart_rate,
        1.0 / profile.weight_ratio, 1.0 / profile.height_ratio, 1.0 / profile.heart_rate;
    for (int r = 0; r < n; ++r) g.master_region.add(0, r);
    g.master_anchor.add(0, 0);
  } else {
    g.master_x.resize(0, kMasterFeatureDim);
  }

  return g;
}

namespace {

void accumulate(const Eigen::MatrixXd& x, Eigen::VectorXd& sum, Eigen::VectorXd& sumsq,
                long& count) {
  if (x.rows() == 0) return;
  if (sum.size() == 0) {
    sum = Eigen::VectorXd::Zero(x.cols());
    sumsq = Eigen::VectorXd::Zero(x.cols());
  }
  sum += x.colwise().sum().transpose();
  sumsq += x.array().square().colwise().sum().matrix().transpose();
  count += x.rows();
}

void finish(Eigen::VectorXd& sum, Eigen::VectorXd& sumsq, long count, Eigen::VectorXd& mean,
            Eigen::VectorXd& stddev) {
  if (count == 0) return;
  mean = sum / static_cast<double>(count);
  Eigen::VectorXd var = sumsq / static_cast<double>(count) - mean.array().square().matrix();
  stddev = var.array().max(0.0).sqrt();
  for (int i = 0; i < stddev.size(); ++i)
    if (stddev(i) < 1e-12) stddev(i) = 1.0;
}

void standardize(Eigen::MatrixXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev,
                 int first_col) {
  for (long r = 0; r < x.rows(); ++r)
    for (int c = first_col; c < x.cols(); ++c)
      x(r, c) = (x(r, c) - mean(c - first_col)) / stddev(c - first_col);
}

}  // namespace

FeatureStats fit_feature_stats(const std::vector<InputGraph>& graphs) {
  FeatureStats st;
  Eigen::VectorXd rs, rq, as, aq, ms, mq;
  long rc = 0, ac = 0, mc = 0;
  for (const auto& g : graphs) {
    if (g.standardized) throw std::logic_error("fit_feature_stats on standardized graphs");
    accumulate(g.region_x.rightCols(2), rs, rq, rc);  // length, blood_speed columns
    accumulate(g.anchor_x, as, aq, ac);
    accumulate(g.master_x, ms, mq, mc);
  }
  finish(rs, rq, rc, st.region_mean, st.region_std);
  finish(as, aq, ac, st.anchor_mean, st.anchor_std);
  finish(ms, mq, mc, st.master_mean, st.master_std);
  st.fitted = rc > 0;
  return st;
}

void apply_feature_stats(InputGraph& g, const FeatureStats& stats) {
  if (!stats.fitted) throw std::logic_error("apply_feature_stats: stats not fitted");
  if (g.standardized) return;
  standardize(g.region_x, stats.region_mean, stats.region_std, 6);
  standardize(g.anchor_x, stats.anchor_mean, stats.anchor_std, 0);
  if (g.master_x.rows() > 0 && stats.master_mean.size() > 0)
    standardize(g.master_x, stats.master_mean, stats.master_std, 0);
  g.standardized = true;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int cols_hint) {
  const long rows = static_cast<long>(j.size());
  const long cols = rows > 0 ? static_cast<long>(j.at(0).size()) : cols_hint;
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

json edges_to_json(const EdgeList& e) {
  return {{"src", e.src}, {"dst", e.dst}, {"weight", e.weight}};
}

EdgeList edges_from_json(const json& j) {
  EdgeList e;
  e.src = j.at("src").get<std::vector<int>>();
  e.dst = j.at("dst").get<std::vector<int>>();
  e.weight = j.at("weight").get<std::vector<double>>();
  return e;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<long>(j.size()));
  for (long i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace

std::string input_graph_to_json(const InputGraph& g, const FeatureStats* stats) {
  json j = {{"schema_version", 1},
            {"kind", "flowloc_input_graph"},
            {"design", design_to_string(g.design)},
            {"schema_hash", g.schema_hash},
            {"region_x", matrix_to_json(g.region_x)},
            {"anchor_x", matrix_to_json(g.anchor_x)},
            {"master_x", matrix_to_json(g.master_x)},
            {"region_adj", edges_to_json(g.region_adj)},
            {"prob_edges", edges_to_json(g.prob_edges)},
            {"anchor_edges", edges_to_json(g.anchor_edges)},
            {"master_region", edges_to_json(g.master_region)},
            {"master_anchor", edges_to_json(g.master_anchor)},
            {"event_region_ids", g.event_region_ids},
            {"target_region", g.target_region},
            {"standardized", g.standardized}};
  if (stats != nullptr && stats->fitted) {
    j["stats"] = {{"region_mean", vector_to_json(stats->region_mean)},
                  {"region_std", vector_to_json(stats->region_std)},
                  {"anchor_mean", vector_to_json(stats->anchor_mean)},
                  {"anchor_std", vector_to_json(stats->anchor_std)},
                  {"master_mean", vector_to_json(stats->master_mean)},
                  {"master_std", vector_to_json(stats->master_std)}};
  }
  return j.dump() + "\n";
}

InputGraph input_graph_from_json(const std::string& text, FeatureStats* stats_out) {
  json j = json::parse(text);
  if (j.value("kind", "") != "flowloc_input_graph" || j.value("schema_version", 0) != 1)
    throw std::runtime_error("not a flowloc input graph file");
  InputGraph g;
  g.design = design_from_string(j.at("design").get<std::string>());
  g.schema_hash = j.at("schema_hash").get<uint64_t>();
  g.region_x = matrix_from_json(j.at("region_x"), kRegionFeatureDim);
  g.anchor_x = matrix_from_json(j.at("anchor_x"), kAnchorFeatureDim);
  g.master_x = matrix_from_json(j.at("master_x"), kMasterFeatureDim);
  g.region_adj = edges_from_json(j.at("region_adj"));
  g.prob_edges = edges_from_json(j.at("prob_edges"));
  g.anchor_edges = edges_from_json(j.at("anchor_edges"));
  g.master_region = edges_from_json(j.at("master_region"));
  g.master_anchor = edges_from_json(j.at("master_anchor"));
  g.event_region_ids = j.at("event_region_ids").get<std::vector<int>>();
  g.target_region = j.at("target_region").get<int>();
  g.standardized = j.at("standardized").get<bool>();
  if (stats_out != nullptr && j.contains("stats")) {
    stats_out->region_mean = vector_from_json(j["stats"]["region_mean"]);
    stats_out->region_std = vector_from_json(j["stats"]["region_std"]);
    stats_out->anchor_mean = vector_from_json(j["stats"]["anchor_mean"]);
    stats_out->anchor_std = vector_from_json(j["stats"]["anchor_std"]);
    stats_out->master_mean = vector_from_json(j["stats"]["master_mean"]);
    stats_out->master_std = vector_from_json(j["stats"]["master_std"]);
    stats_out->fitted = true;
  }
  return g;
}

}  // namespace flowloc
