// Python bindings for the flowloc core: vasculature loading, mobility
// simulation, profile rescaling, anchor featurization, GNN training, and
// evaluation metrics.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flowloc/eval.hpp"
#include "flowloc/gmm.hpp"
#include "flowloc/input_graph.hpp"
#include "flowloc/mobility.hpp"
#include "flowloc/model.hpp"
#include "flowloc/pipeline.hpp"
#include "flowloc/profiles.hpp"
#include "flowloc/vasculature.hpp"

namespace py = pybind11;
using namespace flowloc;

namespace {

Point3 to_point(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
std::array<double, 3> from_point(const Point3& p) { return {p.x, p.y, p.z}; }

// Checkpoint plus the feature statistics needed to apply it at inference.
struct TrainedModel {
  ModelParams params;
  FeatureStats stats;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;
};

}  // namespace

PYBIND11_MODULE(_flowloc, m) {
  m.doc() = "flow-guided nanodevice localization core";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ValidationError>(m, "ValidationError");

  py::class_<VascularGraph>(m, "VascularGraph")
      .def_static("load", &load_vasculature, py::arg("path"))
      .def_static("from_json", [](const std::string& text, bool strict) {
        return VascularGraph::from_json_text(text, strict);
      }, py::arg("text"), py::arg("strict_counts") = true)
      .def("__len__", &VascularGraph::size)
      .def("find_node", &VascularGraph::find_node, py::arg("name"))
      .def("node_name", [](const VascularGraph& g, int id) { return g.node(id).name; })
      .def("event_region_ids", &VascularGraph::event_region_ids)
      .def("heart_ids", &VascularGraph::heart_ids)
      .def("anchor_heart", &VascularGraph::anchor_heart)
      .def("region_centroid",
           [](const VascularGraph& g, int id) { return from_point(g.region_centroid(id)); })
      .def("schema_hash", &VascularGraph::schema_hash);

  py::class_<SimulationConfig>(m, "SimulationConfig")
      .def(py::init<>())
      .def_readwrite("num_nanodevices", &SimulationConfig::num_nanodevices)
      .def_readwrite("sim_time", &SimulationConfig::sim_time)
      .def_readwrite("sampling_rate", &SimulationConfig::sampling_rate)
      .def_readwrite("detection_threshold", &SimulationConfig::detection_threshold)
      .def_readwrite("report_success_prob", &SimulationConfig::report_success_prob)
      .def_readwrite("seed", &SimulationConfig::seed)
      .def_readwrite("keep_raw_positions", &SimulationConfig::keep_raw_positions);

  py::class_<RawDataset>(m, "RawDataset")
      .def("__len__", [](const RawDataset& d) { return d.records.size(); })
      .def("count_positive", &RawDataset::count_positive)
      .def("circulation_times",
           [](const RawDataset& d) {
             std::vector<double> out;
             for (const auto& r : d.records) out.push_back(r.circulation_time);
             return out;
           })
      .def("positive_circulation_times", &RawDataset::positive_circulation_times)
      .def("event_region", [](const RawDataset& d) { return d.event.region_id; })
      .def("to_jsonl", &dataset_to_jsonl)
      .def_static("from_jsonl", &dataset_from_jsonl, py::arg("text"));

  m.def("simulate",
        [](const VascularGraph& g, const SimulationConfig& cfg, int region_id,
           const std::array<double, 3>& location) {
          return simulate(g, cfg, EventSpec{region_id, to_point(location)});
        },
        py::arg("graph"), py::arg("config"), py::arg("region_id"), py::arg("location"));

  m.def("generate_benchmark", &generate_benchmark, py::arg("graph"), py::arg("config"),
        py::arg("events_per_region"));

  m.def("estimate_visit_probabilities",
        [](const VascularGraph& g, int n_walks, uint64_t seed) {
          return estimate_visit_probabilities(g, n_walks, seed).prob;
        },
        py::arg("graph"), py::arg("n_walks"), py::arg("seed"));

  py::class_<Profile>(m, "Profile")
      .def(py::init<>())
      .def_readwrite("name", &Profile::name)
      .def_readwrite("height_ratio", &Profile::height_ratio)
      .def_readwrite("weight_ratio", &Profile::weight_ratio)
      .def_readwrite("blood_speed_scale", &Profile::blood_speed_scale)
      .def_readwrite("heart_rate", &Profile::heart_rate);

  py::class_<ProfileSet>(m, "ProfileSet")
      .def_static("load", &load_profiles, py::arg("path"))
      .def("__len__", [](const ProfileSet& p) { return p.profiles.size(); })
      .def("names",
           [](const ProfileSet& p) {
             std::vector<std::string> out;
             for (const auto& pr : p.profiles) out.push_back(pr.name);
             return out;
           })
      .def("get", &ProfileSet::get, py::arg("name"), py::return_value_policy::copy);

  m.def("radius_scale", &radius_scale, py::arg("weight_ratio"), py::arg("height_ratio"));
  m.def("transform_dataset", &transform_dataset, py::arg("dataset"), py::arg("graph"),
        py::arg("profile"));

  m.def("fit_gmm",
        [](const std::vector<double>& xs) {
          const GmmParams p = fit_gmm(xs);
          py::list comps;
          for (const auto& c : p.components)
            comps.append(py::dict(py::arg("mean") = c.mean, py::arg("variance") = c.variance,
                                  py::arg("weight") = c.weight));
          return py::dict(py::arg("components") = comps,
                          py::arg("log_likelihood") = p.log_likelihood);
        },
        py::arg("values"));

  py::class_<EvalDataset>(m, "EvalDataset")
      .def_readonly("truth_region", &EvalDataset::truth_region)
      .def_property_readonly(
          "truth_location",
          [](const EvalDataset& d) { return from_point(d.truth_location); })
      .def("graph_json", [](const EvalDataset& d) { return input_graph_to_json(d.graph); });

  m.def("featurize",
        [](const VascularGraph& g, const RawDataset& ds, const Profile& profile,
           const std::string& design, const std::optional<std::map<int, double>>& probs,
           int dataset_id) {
          std::optional<VisitProbabilities> vp;
          if (probs) vp = VisitProbabilities{*probs};
          return featurize_dataset(g, ds, profile, design_from_string(design), vp, dataset_id);
        },
        py::arg("graph"), py::arg("dataset"), py::arg("profile"), py::arg("design"),
        py::arg("probs") = std::nullopt, py::arg("dataset_id") = -1);

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init<>())
      .def_readwrite("hidden_channels", &Hyperparams::hidden_channels)
      .def_readwrite("hgt_heads", &Hyperparams::hgt_heads)
      .def_readwrite("gat_heads", &Hyperparams::gat_heads)
      .def_readwrite("hgt_layers", &Hyperparams::hgt_layers)
      .def_readwrite("first_layers", &Hyperparams::first_layers)
      .def_readwrite("last_layers", &Hyperparams::last_layers)
      .def_property(
          "conv_type",
          [](const Hyperparams& h) { return conv_type_to_string(h.conv_type); },
          [](Hyperparams& h, const std::string& s) { h.conv_type = conv_type_from_string(s); })
      .def_readwrite("learning_rate", &Hyperparams::learning_rate)
      .def_readwrite("weight_decay", &Hyperparams::weight_decay)
      .def_readwrite("max_grad_norm", &Hyperparams::max_grad_norm)
      .def("validate", &Hyperparams::validate, py::arg("allow_extended_domain") = false);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_readonly("best_val_accuracy", &TrainedModel::best_val_accuracy)
      .def_readonly("best_epoch", &TrainedModel::best_epoch);

  m.def("train",
        [](const std::vector<EvalDataset>& datasets, const Hyperparams& hp, int epochs,
           int patience, uint64_t seed) {
          std::vector<EvalDataset> copy = datasets;
          std::vector<InputGraph> graphs;
          for (const auto& d : copy) graphs.push_back(d.graph);
          const FeatureStats stats = fit_feature_stats(graphs);
          for (auto& d : copy) apply_feature_stats(d.graph, stats);
          TrainOptions opts;
          opts.epochs = epochs;
          opts.patience = patience;
          opts.seed = seed;
          const TrainRun run = train(to_train_samples(copy), hp, opts, true);
          TrainedModel tm;
          tm.params = run.best;
          tm.stats = stats;
          tm.best_val_accuracy = run.best_val_accuracy;
          tm.best_epoch = run.best_epoch;
          return tm;
        },
        py::arg("datasets"), py::arg("hyperparams"), py::arg("epochs") = 300,
        py::arg("patience") = 30, py::arg("seed") = 0);

  m.def("predict_region",
        [](const TrainedModel& tm, const EvalDataset& d) {
          EvalDataset copy = d;
          apply_feature_stats(copy.graph, tm.stats);
          return predict_region(tm.params, copy.graph);
        },
        py::arg("model"), py::arg("dataset"));

  m.def("point_error",
        [](const VascularGraph& g, int predicted, const std::array<double, 3>& truth) {
          return point_error(g, predicted, to_point(truth));
        },
        py::arg("graph"), py::arg("predicted_region"), py::arg("truth_location"));

  m.def("checkpoint_to_json",
        [](const TrainedModel& tm) { return checkpoint_to_json(tm.params, tm.stats); },
        py::arg("model"));
  m.def("checkpoint_from_json",
        [](const std::string& text) {
          TrainedModel tm;
          tm.params = checkpoint_from_json(text, &tm.stats);
          return tm;
        },
        py::arg("text"));
}
