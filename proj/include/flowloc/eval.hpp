#pragma once

#include <map>
#include <string>
#include <vector>

#include "flowloc/input_graph.hpp"
#include "flowloc/model.hpp"
#include "flowloc/profiles.hpp"
#include "flowloc/vasculature.hpp"

namespace flowloc {

struct Prediction {
  int dataset_id = -1;
  std::string profile;
  GraphDesign design = GraphDesign::Baseline;
  int predicted_region = -1;
  int truth_region = -1;
  Point3 truth_location;
};

struct BoxStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

BoxStats box_stats(std::vector<double> values);  // linear-interpolation quantiles

using ConfusionMatrix = std::vector<std::vector<long>>;  // row = truth, col = predicted

double region_accuracy(const std::vector<Prediction>& preds);

/// Euclidean distance (cm) between the predicted region's centroid and the
/// true event location. A polyline-nearest-point variant is available for
/// the representative coordinate.
enum class PointRepr { Centroid, NearestOnPolyline };
double point_error(const VascularGraph& graph, int predicted_region, const Point3& truth_location,
                   PointRepr repr = PointRepr::Centroid);

/// Counts indexed by position within graph.event_region_ids() (25x25).
ConfusionMatrix confusion_matrix(const std::vector<Prediction>& preds,
                                 const std::vector<int>& event_region_ids);

long confusion_total(const ConfusionMatrix& m);
long confusion_trace(const ConfusionMatrix& m);

struct MetricsReport {
  std::string design;
  std::string profile;
  double region_accuracy = 0.0;
  std::map<int, std::vector<double>> point_errors_by_region;  // truth region id -> errors (cm)
  BoxStats point_error_stats;                                 // pooled
  ConfusionMatrix confusion;
};

MetricsReport make_report(const VascularGraph& graph, const std::vector<Prediction>& preds,
                          const std::string& design, const std::string& profile,
                          PointRepr repr = PointRepr::Centroid);

struct EvalCell {
  std::string design;
  std::string profile;
  std::vector<Prediction> predictions;
};

/// Full cross-product evaluation of checkpoints over per-profile datasets.
/// `datasets[profile]` carries (featurized graph, truth region, truth location).
struct EvalDataset {
  InputGraph graph;
  int truth_region = -1;
  Point3 truth_location;
  int dataset_id = -1;
};

std::vector<MetricsReport> benchmark(
    const VascularGraph& graph,
    const std::map<std::string, std::pair<ModelParams, FeatureStats>>& models_by_design,
    const std::map<std::string, std::vector<EvalDataset>>& datasets_by_profile,
    PointRepr repr = PointRepr::Centroid);

// Report writers (delimiter-separated tables + self-contained SVG figures).
std::string report_to_csv(const std::vector<MetricsReport>& reports);
std::string confusion_to_csv(const MetricsReport& report, const VascularGraph& graph);
std::string confusion_svg(const MetricsReport& report, const VascularGraph& graph);
std::string box_plot_svg(const MetricsReport& report, const VascularGraph& graph);
void write_report_files(const std::vector<MetricsReport>& reports, const VascularGraph& graph,
                        const std::string& out_dir);

}  // namespace flowloc
