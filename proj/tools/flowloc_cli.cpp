// flowloc: command-line pipeline for flow-guided nanodevice localization.
//
// Subcommands cover the full pipeline: simulate raw report datasets over a
// vasculature graph, estimate visit probabilities, rescale datasets to
// patient profiles, featurize them into input graphs, train/tune the GNN,
// and evaluate/report localization metrics.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowloc/eval.hpp"
#include "flowloc/input_graph.hpp"
#include "flowloc/mobility.hpp"
#include "flowloc/model.hpp"
#include "flowloc/pipeline.hpp"
#include "flowloc/profiles.hpp"
#include "flowloc/vasculature.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flowloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct RunConfig {
  std::string vasculature = "data/vasculature.json";
  std::string profiles = "data/profiles.json";
  std::string out = "runs/default";
  uint64_t seed = 1;
  int jobs = 0;  // 0 = available cores
  std::string design = "baseline";
  std::string profile = "all";

  SimulationConfig sim;
  int events_per_region = 2;
  int prob_walks = 10000;
  bool prob_undirected = false;

  Hyperparams hp;
  TrainOptions train_opts;
  int tune_budget = 8;

  std::string config_text;  // verbatim config file + override summary, hashed
};

void apply_json(RunConfig& rc, const json& j) {
  rc.vasculature = j.value("vasculature", rc.vasculature);
  rc.profiles = j.value("profiles", rc.profiles);
  rc.out = j.value("out", rc.out);
  rc.seed = j.value("seed", rc.seed);
  rc.jobs = j.value("jobs", rc.jobs);
  rc.design = j.value("design", rc.design);
  rc.profile = j.value("profile", rc.profile);
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    rc.sim.num_nanodevices = s.value("num_nanodevices", rc.sim.num_nanodevices);
    rc.sim.sim_time = s.value("sim_time", rc.sim.sim_time);
    rc.sim.sampling_rate = s.value("sampling_rate", rc.sim.sampling_rate);
    rc.sim.detection_threshold = s.value("detection_threshold", rc.sim.detection_threshold);
    rc.sim.report_success_prob = s.value("report_success_prob", rc.sim.report_success_prob);
    rc.sim.keep_raw_positions = s.value("keep_raw_positions", rc.sim.keep_raw_positions);
    rc.events_per_region = s.value("events_per_region", rc.events_per_region);
  }
  if (j.contains("probs")) {
    rc.prob_walks = j.at("probs").value("n_walks", rc.prob_walks);
    rc.prob_undirected = j.at("probs").value("undirected", rc.prob_undirected);
  }
  if (j.contains("hyperparams")) {
    const json& h = j.at("hyperparams");
    rc.hp.hidden_channels = h.value("hidden_channels", rc.hp.hidden_channels);
    rc.hp.hgt_heads = h.value("hgt_heads", rc.hp.hgt_heads);
    rc.hp.gat_heads = h.value("gat_heads", rc.hp.gat_heads);
    rc.hp.hgt_layers = h.value("hgt_layers", rc.hp.hgt_layers);
    rc.hp.first_layers = h.value("first_layers", rc.hp.first_layers);
    rc.hp.last_layers = h.value("last_layers", rc.hp.last_layers);
    if (h.contains("conv_type")) rc.hp.conv_type = conv_type_from_string(h.at("conv_type"));
    rc.hp.learning_rate = h.value("learning_rate", rc.hp.learning_rate);
    rc.hp.weight_decay = h.value("weight_decay", rc.hp.weight_decay);
    rc.hp.max_grad_norm = h.value("max_grad_norm", rc.hp.max_grad_norm);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    rc.train_opts.epochs = t.value("epochs", rc.train_opts.epochs);
    rc.train_opts.patience = t.value("patience", rc.train_opts.patience);
    rc.train_opts.val_fraction = t.value("val_fraction", rc.train_opts.val_fraction);
  }
  if (j.contains("tune")) rc.tune_budget = j.at("tune").value("budget", rc.tune_budget);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int effective_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<std::string> sorted_files(const std::string& dir, const std::string& ext) {
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> selected_profiles(const RunConfig& rc) {
  const ProfileSet ps = profiles_from_json_text(read_text(rc.profiles));
  if (rc.profile == "all") {
    std::vector<std::string> names;
    for (const auto& p : ps.profiles) names.push_back(p.name);
    return names;
  }
  if (!ps.has(rc.profile))
    throw std::invalid_argument("unknown profile: " + rc.profile);
  return {rc.profile};
}

std::string pad3(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%03d", i);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& rc) {
  const VascularGraph graph = load_vasculature(rc.vasculature);
  SimulationConfig cfg = rc.sim;
  cfg.seed = rc.seed;
  const auto datasets = generate_benchmark(graph, cfg, rc.events_per_region);

  std::vector<std::pair<std::string, uint64_t>> outputs;
  for (size_t i = 0; i < datasets.size(); ++i) {
    const std::string rel = "raw/dataset_" + pad3(static_cast<int>(i)) + ".jsonl";
    const std::string text = dataset_to_jsonl(datasets[i]);
    write_text(rc.out + "/" + rel, text);
    outputs.emplace_back(rel, content_hash(text));
  }
  write_manifest(rc.out, "simulate", rc.config_text, rc.seed, outputs);
  std::cout << "simulate: wrote " << datasets.size() << " datasets to " << rc.out << "/raw\n";
  return kExitOk;
}

int cmd_probs(const RunConfig& rc) {
  const VascularGraph graph = load_vasculature(rc.vasculature);
  const VisitProbabilities probs = estimate_visit_probabilities(graph, rc.prob_walks, rc.seed);
  const std::string text = probabilities_to_json(probs);
  write_text(rc.out + "/probs.json", text);
  write_manifest(rc.out, "probs", rc.config_text, rc.seed, {{"probs.json", content_hash(text)}});
  std::cout << "probs: estimated visit probabilities for " << probs.prob.size() << " regions\n";
  return kExitOk;
}

int cmd_transform(const RunConfig& rc) {
  const VascularGraph graph = load_vasculature(rc.vasculature);
  const ProfileSet ps = profiles_from_json_text(read_text(rc.profiles));
  const auto raw_files = sorted_files(rc.out + "/raw", ".jsonl");
  if (raw_files.empty())
    throw std::runtime_error("no raw datasets under " + rc.out + "/raw (run simulate first)");

  std::vector<std::pair<std::string, uint64_t>> outputs;
  int written = 0;
  for (const std::string& name : selected_profiles(rc)) {
    const Profile& profile = ps.get(name);
    for (const std::string& file : raw_files) {
      const RawDataset raw = dataset_from_jsonl(read_text(file));
      const RawDataset scaled = transform_dataset(raw, graph, profile);
      const std::string rel =
          "transformed/" + name + "/" + fs::path(file).filename().string();
      const std::string text = dataset_to_jsonl(scaled);
      write_text(rc.out + "/" + rel, text);
      outputs.emplace_back(rel, content_hash(text));
      ++written;
    }
  }
  write_manifest(rc.out, "transform", rc.config_text, rc.seed, outputs);
  std::cout << "transform: wrote " << written << " profile datasets\n";
  return kExitOk;
}

std::optional<VisitProbabilities> load_probs_if_needed(const RunConfig& rc, GraphDesign design) {
  if (!design_has_prob_edges(design)) return std::nullopt;
  const std::string path = rc.out + "/probs.json";
  if (!fs::exists(path))
    throw std::runtime_error("design '" + design_to_string(design) + "' needs " + path +
                             " (run probs first)");
  return probabilities_from_json(read_text(path));
}

json eval_dataset_to_json(const EvalDataset& ed) {
  json j;
  j["graph"] = json::parse(input_graph_to_json(ed.graph));
  j["truth_region"] = ed.truth_region;
  j["truth_location"] = {ed.truth_location.x, ed.truth_location.y, ed.truth_location.z};
  j["dataset_id"] = ed.dataset_id;
  return j;
}

EvalDataset eval_dataset_from_json(const json& j) {
  EvalDataset ed;
  ed.graph = input_graph_from_json(j.at("graph").dump());
  ed.truth_region = j.at("truth_region").get<int>();
  const auto& loc = j.at("truth_location");
  ed.truth_location = {loc.at(0).get<double>(), loc.at(1).get<double>(), loc.at(2).get<double>()};
  ed.dataset_id = j.at("dataset_id").get<int>();
  return ed;
}

int cmd_featurize(const RunConfig& rc) {
  const VascularGraph graph = load_vasculature(rc.vasculature);
  const ProfileSet ps = profiles_from_json_text(read_text(rc.profiles));
  const GraphDesign design = design_from_string(rc.design);
  const auto probs = load_probs_if_needed(rc, design);

  std::vector<std::pair<std::string, uint64_t>> outputs;
  int written = 0;
  for (const std::string& name : selected_profiles(rc)) {
    const std::string src = rc.out + "/transformed/" + name;
    const auto files = sorted_files(src, ".jsonl");
    if (files.empty())
      throw std::runtime_error("no datasets under " + src + " (run transform first)");
    const Profile& profile = ps.get(name);
    for (const std::string& file : files) {
      const RawDataset ds = dataset_from_jsonl(read_text(file));
      const EvalDataset ed = featurize_dataset(graph, ds, profile, design, probs, written);
      const std::string rel = "features/" + rc.design + "/" + name + "/" +
                              fs::path(file).stem().string() + ".json";
      const std::string text = eval_dataset_to_json(ed).dump(2);
      write_text(rc.out + "/" + rel, text);
      outputs.emplace_back(rel, content_hash(text));
      ++written;
    }
  }
  write_manifest(rc.out, "featurize", rc.config_text, rc.seed, outputs);
  std::cout << "featurize: wrote " << written << " input graphs (design " << rc.design << ")\n";
  return kExitOk;
}

std::map<std::string, std::vector<EvalDataset>> load_features(const RunConfig& rc) {
  std::map<std::string, std::vector<EvalDataset>> by_profile;
  for (const std::string& name : selected_profiles(rc)) {
    const std::string dir = rc.out + "/features/" + rc.design + "/" + name;
    const auto files = sorted_files(dir, ".json");
    if (files.empty())
      throw std::runtime_error("no input graphs under " + dir + " (run featurize first)");
    for (const std::string& file : files)
      by_profile[name].push_back(eval_dataset_from_json(json::parse(read_text(file))));
  }
  return by_profile;
}

std::vector<EvalDataset> flatten(const std::map<std::string, std::vector<EvalDataset>>& m) {
  std::vector<EvalDataset> all;
  for (const auto& [name, v] : m) all.insert(all.end(), v.begin(), v.end());
  return all;
}

int cmd_train(const RunConfig& rc) {
  std::vector<EvalDataset> all = flatten(load_features(rc));
  std::vector<InputGraph> graphs;
  for (const auto& ed : all) graphs.push_back(ed.graph);
  const FeatureStats stats = fit_feature_stats(graphs);
  for (auto& ed : all) apply_feature_stats(ed.graph, stats);

  TrainOptions opts = rc.train_opts;
  opts.seed = rc.seed;
  const TrainRun run = train(to_train_samples(all), rc.hp, opts, /*allow_extended_domain=*/true);

  ModelParams best = run.best;
  best.graph_schema_hash = all.front().graph.schema_hash;
  const std::string rel = "checkpoints/" + rc.design + ".json";
  const std::string text = checkpoint_to_json(best, stats);
  write_text(rc.out + "/" + rel, text);

  std::ostringstream curve;
  curve << "epoch,train_loss,val_accuracy\n";
  for (size_t e = 0; e < run.train_loss.size(); ++e)
    curve << e << ',' << run.train_loss[e] << ',' << run.val_accuracy[e] << '\n';
  const std::string curve_rel = "checkpoints/" + rc.design + "_curve.csv";
  write_text(rc.out + "/" + curve_rel, curve.str());

  write_manifest(rc.out, "train", rc.config_text, rc.seed,
                 {{rel, content_hash(text)}, {curve_rel, content_hash(curve.str())}});
  std::cout << "train: design " << rc.design << " best val accuracy " << run.best_val_accuracy
            << " at epoch " << run.best_epoch << "\n";
  return kExitOk;
}

int cmd_tune(const RunConfig& rc) {
  std::vector<EvalDataset> all = flatten(load_features(rc));
  std::vector<InputGraph> graphs;
  for (const auto& ed : all) graphs.push_back(ed.graph);
  const FeatureStats stats = fit_feature_stats(graphs);
  for (auto& ed : all) apply_feature_stats(ed.graph, stats);

  TrainOptions opts = rc.train_opts;
  opts.seed = rc.seed;
  const SearchSpace space;
  const auto [best_hp, board] =
      grid_search(to_train_samples(all), space, rc.tune_budget, opts, effective_jobs(rc.jobs));

  std::ostringstream lb;
  lb << "rank,hidden_channels,hgt_heads,gat_heads,hgt_layers,first_layers,last_layers,"
        "conv_type,learning_rate,weight_decay,max_grad_norm,val_accuracy,val_loss\n";
  for (size_t i = 0; i < board.size(); ++i) {
    const auto& e = board[i];
    lb << i + 1 << ',' << e.hp.hidden_channels << ',' << e.hp.hgt_heads << ',' << e.hp.gat_heads
       << ',' << e.hp.hgt_layers << ',' << e.hp.first_layers << ',' << e.hp.last_layers << ','
       << conv_type_to_string(e.hp.conv_type) << ',' << e.hp.learning_rate << ','
       << e.hp.weight_decay << ',' << e.hp.max_grad_norm << ',' << e.val_accuracy << ','
       << e.val_loss << '\n';
  }
  write_text(rc.out + "/tune/leaderboard.csv", lb.str());

  json best_j = {{"hidden_channels", best_hp.hidden_channels},
                 {"hgt_heads", best_hp.hgt_heads},
                 {"gat_heads", best_hp.gat_heads},
                 {"hgt_layers", best_hp.hgt_layers},
                 {"first_layers", best_hp.first_layers},
                 {"last_layers", best_hp.last_layers},
                 {"conv_type", conv_type_to_string(best_hp.conv_type)},
                 {"learning_rate", best_hp.learning_rate},
                 {"weight_decay", best_hp.weight_decay},
                 {"max_grad_norm", best_hp.max_grad_norm}};
  const std::string best_text = best_j.dump(2);
  write_text(rc.out + "/tune/best.json", best_text);

  write_manifest(rc.out, "tune", rc.config_text, rc.seed,
                 {{"tune/leaderboard.csv", content_hash(lb.str())},
                  {"tune/best.json", content_hash(best_text)}});
  std::cout << "tune: evaluated " << board.size() << " configurations\n";
  return kExitOk;
}

std::vector<MetricsReport> run_benchmark(const RunConfig& rc, const VascularGraph& graph) {
  FeatureStats stats;
  const ModelParams model =
      load_checkpoint(rc.out + "/checkpoints/" + rc.design + ".json", &stats);
  auto by_profile = load_features(rc);
  for (auto& [name, v] : by_profile)
    for (auto& ed : v) apply_feature_stats(ed.graph, stats);
  std::map<std::string, std::pair<ModelParams, FeatureStats>> models;
  models[rc.design] = {model, stats};
  return benchmark(graph, models, by_profile);
}

int cmd_evaluate(const RunConfig& rc) {
  const VascularGraph graph = load_vasculature(rc.vasculature);
  const auto reports = run_benchmark(rc, graph);
  const std::string csv = report_to_csv(reports);
  write_text(rc.out + "/reports/comparison.csv", csv);
  write_manifest(rc.out, "evaluate", rc.config_text, rc.seed,
                 {{"reports/comparison.csv", content_hash(csv)}});
  for (const auto& r : reports)
    std::cout << "evaluate: design " << r.design << " profile " << r.profile
              << " region accuracy " << r.region_accuracy << "\n";
  return kExitOk;
}

int cmd_report(const RunConfig& rc) {
  const VascularGraph graph = load_vasculature(rc.vasculature);
  const auto reports = run_benchmark(rc, graph);
  const std::string dir = rc.out + "/reports";
  write_report_files(reports, graph, dir);
  std::vector<std::pair<std::string, uint64_t>> outputs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file())
      outputs.emplace_back("reports/" + e.path().filename().string(),
                           content_hash(read_text(e.path().string())));
  std::sort(outputs.begin(), outputs.end());
  write_manifest(rc.out, "report", rc.config_text, rc.seed, outputs);
  std::cout << "report: wrote " << outputs.size() << " report files to " << dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flow-guided nanodevice localization pipeline"};
  app.require_subcommand(1);

  std::string config_path, out, design, profile;
  uint64_t seed = 0;
  bool seed_set = false;
  int jobs = -1;

  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option_function<uint64_t>(
         "--seed", [&](uint64_t s) { seed = s; seed_set = true; }, "Base random seed");
  app.add_option("--jobs", jobs, "Worker concurrency (0 = available cores)");
  app.add_option("--design", design, "Graph design")
      ->check(CLI::IsMember({"baseline", "a", "b", "c"}));
  app.add_option("--profile", profile, "Profile name or 'all'");
  app.add_option("--out", out, "Output directory");

  for (const char* name :
       {"simulate", "probs", "transform", "featurize", "train", "tune", "evaluate", "report"})
    app.add_subcommand(name)->fallthrough();  // global flags may follow the subcommand

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunConfig rc;
  try {
    std::ostringstream cfg_text;
    if (!config_path.empty()) {
      const std::string text = read_text(config_path);
      apply_json(rc, json::parse(text));
      cfg_text << text;
    }
    // Flags take precedence over the file; record them for the config hash.
    if (seed_set) rc.seed = seed;
    if (jobs >= 0) rc.jobs = jobs;
    if (!design.empty()) rc.design = design;
    if (!profile.empty()) rc.profile = profile;
    if (!out.empty()) rc.out = out;
    cfg_text << "\n--seed=" << rc.seed << " --jobs=" << rc.jobs << " --design=" << rc.design
             << " --profile=" << rc.profile << " --out=" << rc.out;
    rc.config_text = cfg_text.str();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "simulate") return cmd_simulate(rc);
    if (cmd == "probs") return cmd_probs(rc);
    if (cmd == "transform") return cmd_transform(rc);
    if (cmd == "featurize") return cmd_featurize(rc);
    if (cmd == "train") return cmd_train(rc);
    if (cmd == "tune") return cmd_tune(rc);
    if (cmd == "evaluate") return cmd_evaluate(rc);
    if (cmd == "report") return cmd_report(rc);
    std::cerr << "unknown command: " << cmd << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    if (what.find("non-finite") != std::string::npos ||
        what.find("diverged") != std::string::npos) {
      std::cerr << "numeric failure: " << what << "\n";
      return kExitNumeric;
    }
    std::cerr << "data error: " << what << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
