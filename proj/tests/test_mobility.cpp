#include <Eigen/Dense>
#include <cmath>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "flowloc/mobility.hpp"

using namespace flowloc;
using flowloc::testing::fork_graph;
using flowloc::testing::reference_graph;
using flowloc::testing::single_cycle_graph;

namespace {

// Exact probability of visiting `target` before returning to the anchor
// heart, by first-step analysis (linear solve over the transition matrix).
double visit_probability_oracle(const VascularGraph& g, int target) {
  const int anchor = g.anchor_heart();
  if (target == anchor) return 1.0;
  const int n = static_cast<int>(g.size());
  // p[u] = P(hit target before returning to anchor | currently at u), with
  // p[target] = 1 and arrival at anchor absorbing with value 0.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int u = 0; u < n; ++u) {
    if (u == target) {
      b(u) = 1.0;
      continue;
    }
    const auto& next = g.neighbors_downstream(u);
    const double w = 1.0 / static_cast<double>(next.size());
    for (int v : next) {
      if (v == target)
        b(u) += w;
      else if (v != anchor)
        A(u, v) -= w;
    }
  }
  const Eigen::VectorXd p = A.fullPivLu().solve(b);
  // The walk starts at the anchor and takes its first step.
  double start = 0.0;
  const auto& first = g.neighbors_downstream(anchor);
  for (int v : first)
    start += (v == target ? 1.0 : (v == anchor ? 0.0 : p(v))) / static_cast<double>(first.size());
  return start;
}

}  // namespace

TEST_CASE("single-cycle graph: deterministic circulation times") {
  const VascularGraph g = single_cycle_graph();
  SimulationConfig cfg;
  cfg.num_nanodevices = 4;
  cfg.sim_time = 100.0;
  cfg.report_success_prob = 1.0;
  cfg.seed = 7;
  EventSpec ev{1, g.node(1).path.front()};

  const RawDataset ds = simulate(g, cfg, ev);
  REQUIRE(!ds.records.empty());
  const double loop_time = 30.0 / 10.0;  // total length / uniform speed
  for (const auto& r : ds.records)
    CHECK(r.circulation_time == doctest::Approx(loop_time).epsilon(1e-12));
}

TEST_CASE("report_success_prob = 0 yields no records") {
  const VascularGraph g = single_cycle_graph();
  SimulationConfig cfg;
  cfg.num_nanodevices = 4;
  cfg.sim_time = 50.0;
  cfg.report_success_prob = 0.0;
  EventSpec ev{1, g.node(1).path.front()};
  CHECK(simulate(g, cfg, ev).records.empty());
}

TEST_CASE("simulate is deterministic given the seed") {
  const VascularGraph g = reference_graph();
  SimulationConfig cfg;
  cfg.num_nanodevices = 8;
  cfg.sim_time = 120.0;
  cfg.seed = 42;
  EventSpec ev{g.find_node("liver"), g.region_centroid(g.find_node("liver"))};

  const std::string a = dataset_to_jsonl(simulate(g, cfg, ev));
  const std::string b = dataset_to_jsonl(simulate(g, cfg, ev));
  CHECK(a == b);
}

TEST_CASE("simulate validates inputs") {
  const VascularGraph g = single_cycle_graph();
  SimulationConfig cfg;
  EventSpec ev{1, g.node(1).path.front()};
  SUBCASE("unknown event region") {
    ev.region_id = 99;
    CHECK_THROWS_AS(simulate(g, cfg, ev), std::out_of_range);
  }
  SUBCASE("zero-duration simulation") {
    cfg.sim_time = 0.0;
    CHECK_THROWS_AS(simulate(g, cfg, ev), std::invalid_argument);
  }
}

TEST_CASE("timestamps strictly increase per nanodevice") {
  const VascularGraph g = reference_graph();
  SimulationConfig cfg;
  cfg.num_nanodevices = 8;
  cfg.sim_time = 150.0;
  cfg.seed = 3;
  EventSpec ev{g.find_node("head"), g.region_centroid(g.find_node("head"))};
  const RawDataset ds = simulate(g, cfg, ev);
  std::map<int, double> last;
  for (const auto& r : ds.records) {
    CHECK(r.circulation_time > 0.0);
    auto it = last.find(r.nanodevice_id);
    if (it != last.end()) CHECK(r.timestamp > it->second);
    last[r.nanodevice_id] = r.timestamp;
    for (size_t i = 1; i < r.raw_positions.size(); ++i)
      CHECK(r.raw_positions[i].time >= r.raw_positions[i - 1].time);
  }
}

TEST_CASE("circulation times follow the geometric loop mixture") {
  // With report success p, the number of loops between successful reports is
  // geometric; chi-square against p(1-p)^(k-1) at 1% significance.
  const VascularGraph g = single_cycle_graph();
  const double loop_time = 3.0;
  const double p = 0.6;

  int passes = 0;
  const int n_seeds = 10;
  for (int seed = 0; seed < n_seeds; ++seed) {
    SimulationConfig cfg;
    cfg.num_nanodevices = 32;
    cfg.sim_time = 400.0;
    cfg.report_success_prob = p;
    cfg.seed = 100 + static_cast<uint64_t>(seed);
    cfg.keep_raw_positions = false;
    EventSpec ev{1, g.node(1).path.front()};
    const RawDataset ds = simulate(g, cfg, ev);

    std::map<int, long> counts;  // loop count k -> observations
    long total = 0;
    for (const auto& r : ds.records) {
      const int k = static_cast<int>(std::lround(r.circulation_time / loop_time));
      CHECK(std::abs(r.circulation_time - k * loop_time) < 1e-9);
      ++counts[k];
      ++total;
    }
    // Bin k = 1..6 plus a tail bin.
    double chi2 = 0.0;
    double tail_expected = static_cast<double>(total);
    long tail_observed = total;
    for (int k = 1; k <= 6; ++k) {
      const double expect = total * p * std::pow(1.0 - p, k - 1);
      const long obs = counts.count(k) ? counts[k] : 0;
      chi2 += (obs - expect) * (obs - expect) / expect;
      tail_expected -= expect;
      tail_observed -= obs;
    }
    if (tail_expected > 5.0)
      chi2 += (tail_observed - tail_expected) * (tail_observed - tail_expected) / tail_expected;
    // 99th percentile of chi-square with 6 dof.
    if (chi2 < 16.81) ++passes;
  }
  CHECK(passes >= 8);
}

TEST_CASE("event-bit fraction matches the closed-form detection probability") {
  // Fork fixture: the event branch is visited with probability 1/2 per loop
  // and detection within the branch is certain at these speeds and sampling
  // rates. A report spanning k loops is positive unless all k loops missed
  // the branch, with k geometric in the report success probability.
  const VascularGraph g = fork_graph();
  const double p_report = 0.7;
  const double p_visit = visit_probability_oracle(g, 2);
  CHECK(p_visit == doctest::Approx(0.5).epsilon(1e-12));

  double p_bit = 0.0;
  for (int k = 1; k < 200; ++k)
    p_bit += p_report * std::pow(1.0 - p_report, k - 1) * (1.0 - std::pow(1.0 - p_visit, k));

  long positives = 0, total = 0;
  for (int seed = 0; seed < 10; ++seed) {
    SimulationConfig cfg;
    cfg.num_nanodevices = 16;
    cfg.sim_time = 600.0;
    cfg.report_success_prob = p_report;
    cfg.seed = 900 + static_cast<uint64_t>(seed);
    cfg.keep_raw_positions = false;
    EventSpec ev{2, point_at_arc(g.node(2).path, 2.5)};
    const RawDataset ds = simulate(g, cfg, ev);
    positives += ds.count_positive();
    total += static_cast<long>(ds.records.size());
  }
  const double frac = static_cast<double>(positives) / static_cast<double>(total);
  const double se = std::sqrt(p_bit * (1.0 - p_bit) / static_cast<double>(total));
  CHECK(std::abs(frac - p_bit) < 3.0 * se);
}

TEST_CASE("visit probabilities match the linear-solve oracle") {
  const VascularGraph g = fork_graph();
  for (int n_walks : {1000, 10000}) {
    const VisitProbabilities est = estimate_visit_probabilities(g, n_walks, 5);
    for (int target = 0; target < static_cast<int>(g.size()); ++target) {
      const double exact = visit_probability_oracle(g, target);
      const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) /
                                  static_cast<double>(n_walks));
      CHECK_MESSAGE(std::abs(est.prob.at(target) - exact) <= 3.0 * se + 1e-12, "region ", target,
                    " est ", est.prob.at(target), " exact ", exact);
    }
    // Mandatory regions are exactly 1.
    CHECK(est.prob.at(0) == 1.0);
    CHECK(est.prob.at(1) == 1.0);
    CHECK(est.prob.at(4) == 1.0);
  }
}

TEST_CASE("visit probabilities on the reference graph stay in range") {
  const VascularGraph g = reference_graph();
  const VisitProbabilities est = estimate_visit_probabilities(g, 2000, 11);
  for (auto [id, pr] : est.prob) {
    CHECK(pr >= 0.0);
    CHECK(pr <= 1.0);
  }
  for (int h : g.heart_ids()) CHECK(est.prob.at(h) == 1.0);
  CHECK(est.prob.at(g.find_node("aorta")) == 1.0);
}

TEST_CASE("estimate_visit_probabilities rejects zero walks") {
  CHECK_THROWS_AS(estimate_visit_probabilities(single_cycle_graph(), 0, 1),
                  std::invalid_argument);
}

TEST_CASE("generate_benchmark produces the full event grid") {
  const VascularGraph g = reference_graph();
  SimulationConfig cfg;
  cfg.num_nanodevices = 2;
  cfg.sim_time = 40.0;
  cfg.seed = 21;
  cfg.keep_raw_positions = false;

  const auto sets = generate_benchmark(g, cfg, 2);
  CHECK(sets.size() == 50);  // 25 regions x 2 event locations

  // Rerun is bit-identical.
  const auto again = generate_benchmark(g, cfg, 2);
  REQUIRE(again.size() == sets.size());
  for (size_t i = 0; i < sets.size(); ++i)
    CHECK(dataset_to_jsonl(sets[i]) == dataset_to_jsonl(again[i]));

  CHECK_THROWS_AS(generate_benchmark(g, cfg, 0), std::invalid_argument);
}

TEST_CASE("dataset round-trips through jsonl") {
  const VascularGraph g = single_cycle_graph();
  SimulationConfig cfg;
  cfg.num_nanodevices = 3;
  cfg.sim_time = 40.0;
  cfg.seed = 13;
  EventSpec ev{1, g.node(1).path.front()};
  const RawDataset ds = simulate(g, cfg, ev);
  const std::string text = dataset_to_jsonl(ds);
  CHECK(dataset_to_jsonl(dataset_from_jsonl(text)) == text);
}
