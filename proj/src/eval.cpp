#include "flowloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flowloc {

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty sample");
  std::sort(values.begin(), values.end());
  auto quantile = [&values](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back()};
}

double region_accuracy(const std::vector<Prediction>& preds) {
  if (preds.empty()) throw std::invalid_argument("region_accuracy: empty predictions");
  long correct = 0;
  for (const auto& p : preds) correct += p.predicted_region == p.truth_region ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

namespace {

Point3 nearest_on_polyline(const Polyline& path, const Point3& q) {
  Point3 best = path.front();
  double best_d = distance(best, q);
  for (size_t i = 1; i < path.size(); ++i) {
    const Point3 a = path[i - 1];
    const Point3 d = path[i] - a;
    const double len2 = d.x * d.x + d.y * d.y + d.z * d.z;
    double t = 0.0;
    if (len2 > 0.0) {
      const Point3 aq = q - a;
      t = std::clamp((aq.x * d.x + aq.y * d.y + aq.z * d.z) / len2, 0.0, 1.0);
    }
    const Point3 cand = a + d * t;
    const double dd = distance(cand, q);
    if (dd < best_d) {
      best_d = dd;
      best = cand;
    }
  }
  return best;
}

}  // namespace

double point_error(const VascularGraph& graph, int predicted_region, const Point3& truth_location,
                   PointRepr repr) {
  const RegionNode& node = graph.node(predicted_region);
  const Point3 rep = repr == PointRepr::Centroid
                         ? graph.region_centroid(predicted_region)
                         : nearest_on_polyline(node.path, truth_location);
  return distance(rep, truth_location);
}

ConfusionMatrix confusion_matrix(const std::vector<Prediction>& preds,
                                 const std::vector<int>& event_region_ids) {
  if (preds.empty()) throw std::invalid_argument("confusion_matrix: empty predictions");
  std::map<int, size_t> index;
  for (size_t i = 0; i < event_region_ids.size(); ++i) index[event_region_ids[i]] = i;
  ConfusionMatrix m(event_region_ids.size(), std::vector<long>(event_region_ids.size(), 0));
  for (const auto& p : preds) {
    auto t = index.find(p.truth_region);
    auto q = index.find(p.predicted_region);
    if (t == index.end() || q == index.end())
      throw std::invalid_argument("prediction references a non-event region");
    ++m[t->second][q->second];
  }
  return m;
}

long confusion_total(const ConfusionMatrix& m) {
  long n = 0;
  for (const auto& row : m)
    for (long v : row) n += v;
  return n;
}

long confusion_trace(const ConfusionMatrix& m) {
  long n = 0;
  for (size_t i = 0; i < m.size(); ++i) n += m[i][i];
  return n;
}

MetricsReport make_report(const VascularGraph& graph, const std::vector<Prediction>& preds,
                          const std::string& design, const std::string& profile, PointRepr repr) {
  MetricsReport r;
  r.design = design;
  r.profile = profile;
  r.region_accuracy = region_accuracy(preds);
  std::vector<double> pooled;
  for (const auto& p : preds) {
    const double err = point_error(graph, p.predicted_region, p.truth_location, repr);
    r.point_errors_by_region[p.truth_region].push_back(err);
    pooled.push_back(err);
  }
  r.point_error_stats = box_stats(std::move(pooled));
  r.confusion = confusion_matrix(preds, graph.event_region_ids());
  return r;
}

std::vector<MetricsReport> benchmark(
    const VascularGraph& graph,
    const std::map<std::string, std::pair<ModelParams, FeatureStats>>& models_by_design,
    const std::map<std::string, std::vector<EvalDataset>>& datasets_by_profile, PointRepr repr) {
  if (datasets_by_profile.empty()) throw std::invalid_argument("benchmark: no datasets");
  if (models_by_design.empty()) throw std::invalid_argument("benchmark: no models");

  std::vector<MetricsReport> out;
  for (const auto& [design, model] : models_by_design) {
    for (const auto& [profile, datasets] : datasets_by_profile) {
      if (datasets.empty()) throw std::invalid_argument("benchmark: empty dataset list");
      std::vector<Prediction> preds;
      for (const auto& ds : datasets) {
        if (ds.graph.schema_hash != model.first.graph_schema_hash &&
            model.first.graph_schema_hash != 0)
          throw std::invalid_argument("benchmark: checkpoint/graph schema mismatch");
        Prediction p;
        p.dataset_id = ds.dataset_id;
        p.profile = profile;
        p.design = design_from_string(design);
        p.predicted_region = predict_region(model.first, ds.graph);
        p.truth_region = ds.truth_region;
        p.truth_location = ds.truth_location;
        preds.push_back(p);
      }
      out.push_back(make_report(graph, preds, design, profile, repr));
    }
  }
  return out;
}

std::string report_to_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << "design,profile,region_accuracy,point_err_min,point_err_q1,point_err_median,"
        "point_err_q3,point_err_max\n";
  for (const auto& r : reports) {
    os << r.design << ',' << r.profile << ',' << r.region_accuracy << ','
       << r.point_error_stats.min << ',' << r.point_error_stats.q1 << ','
       << r.point_error_stats.median << ',' << r.point_error_stats.q3 << ','
       << r.point_error_stats.max << '\n';
  }
  return os.str();
}

std::string confusion_to_csv(const MetricsReport& report, const VascularGraph& graph) {
  std::ostringstream os;
  os << "truth\\pred";
  for (int id : graph.event_region_ids()) os << ',' << graph.node(id).name;
  os << '\n';
  const auto& ids = graph.event_region_ids();
  for (size_t i = 0; i < report.confusion.size(); ++i) {
    os << graph.node(ids[i]).name;
    for (long v : report.confusion[i]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

namespace {

std::string svg_header(int w, int h) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\" font-family=\"sans-serif\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

}  // namespace

std::string confusion_svg(const MetricsReport& report, const VascularGraph& graph) {
  const auto& ids = graph.event_region_ids();
  const int n = static_cast<int>(ids.size());
  const int cell = 18, margin = 110, w = margin + n * cell + 20, h = margin + n * cell + 20;
  long peak = 1;
  for (const auto& row : report.confusion)
    for (long v : row) peak = std::max(peak, v);

  std::ostringstream os;
  os << svg_header(w, h);
  os << "<text x=\"10\" y=\"16\" font-size=\"12\">confusion " << report.design << " / "
     << report.profile << "</text>\n";
  for (int i = 0; i < n; ++i) {
    os << "<text x=\"" << margin - 4 << "\" y=\"" << margin + i * cell + cell - 5
       << "\" font-size=\"7\" text-anchor=\"end\">" << graph.node(ids[i]).name << "</text>\n";
    os << "<text x=\"" << margin + i * cell + cell / 2 << "\" y=\"" << margin - 4
       << "\" font-size=\"7\" text-anchor=\"start\" transform=\"rotate(-60 "
       << margin + i * cell + cell / 2 << ' ' << margin - 4 << ")\">" << graph.node(ids[i]).name
       << "</text>\n";
    for (int j = 0; j < n; ++j) {
      const double f = static_cast<double>(report.confusion[i][j]) / static_cast<double>(peak);
      const int shade = static_cast<int>(255.0 * (1.0 - f));
      os << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell << "\" width=\""
         << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade
         << ",255)\" stroke=\"#ddd\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string box_plot_svg(const MetricsReport& report, const VascularGraph& graph) {
  const auto& ids = graph.event_region_ids();
  const int n = static_cast<int>(ids.size());
  const int band = 22, margin_l = 110, margin_t = 30, plot_w = 420;
  const int w = margin_l + plot_w + 20, h = margin_t + n * band + 20;

  double peak = 1e-9;
  for (const auto& [rid, errs] : report.point_errors_by_region)
    for (double e : errs) peak = std::max(peak, e);
  auto x_of = [&](double v) { return margin_l + v / peak * plot_w; };

  std::ostringstream os;
  os << svg_header(w, h);
  os << "<text x=\"10\" y=\"16\" font-size=\"12\">point error (cm) " << report.design << " / "
     << report.profile << " (max " << peak << ")</text>\n";
  for (int i = 0; i < n; ++i) {
    const int y = margin_t + i * band;
    const int cy = y + band / 2;
    os << "<text x=\"" << margin_l - 4 << "\" y=\"" << cy + 3
       << "\" font-size=\"8\" text-anchor=\"end\">" << graph.node(ids[i]).name << "</text>\n";
    auto it = report.point_errors_by_region.find(ids[i]);
    if (it == report.point_errors_by_region.end() || it->second.empty()) continue;
    const BoxStats b = box_stats(it->second);
    os << "<line x1=\"" << x_of(b.min) << "\" y1=\"" << cy << "\" x2=\"" << x_of(b.max)
       << "\" y2=\"" << cy << "\" stroke=\"black\"/>\n";
    os << "<rect x=\"" << x_of(b.q1) << "\" y=\"" << y + 4 << "\" width=\""
       << std::max(1.0, x_of(b.q3) - x_of(b.q1)) << "\" height=\"" << band - 8
       << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << x_of(b.median) << "\" y1=\"" << y + 4 << "\" x2=\"" << x_of(b.median)
       << "\" y2=\"" << y + band - 4 << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_report_files(const std::vector<MetricsReport>& reports, const VascularGraph& graph,
                        const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "comparison.csv", std::ios::binary);
    f << report_to_csv(reports);
  }
  for (const auto& r : reports) {
    const std::string stem = r.design + "_" + r.profile;
    std::ofstream(fs::path(out_dir) / (stem + "_confusion.csv"), std::ios::binary)
        << confusion_to_csv(r, graph);
    std::ofstream(fs::path(out_dir) / (stem + "_confusion.svg"), std::ios::binary)
        << confusion_svg(r, graph);
    std::ofstream(fs::path(out_dir) / (stem + "_point_error.svg"), std::ios::binary)
        << box_plot_svg(r, graph);
  }
}

}  // namespace flowloc
