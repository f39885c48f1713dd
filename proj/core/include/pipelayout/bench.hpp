#ifndef PIPELAYOUT_BENCH_HPP_
#define PIPELAYOUT_BENCH_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pipelayout/observe.hpp"
#include "pipelayout/planner.hpp"
#include "pipelayout/policy.hpp"
#include "pipelayout/scene.hpp"

namespace pipelayout {

// Per-layout quality numbers, in cells (multiply by 0.1 for meters).
struct Metrics {
  int length_cells = 0;
  int elbows = 0;
  double install_distance_cells = 0.0;  // mean over cells after the start
  double layout_time_s = 0.0;
  bool success = false;
  bool cells_unique = true;
};

// Validates the path against the scene first (InvalidPath on violation).
Metrics path_metrics(const Scene& scene, const Path& path);

// Greedy rollout of a trained policy; empty when the policy traps itself or
// runs out of steps. The constraint set only labels the produced path and
// prices its reported cost.
std::optional<Path> route_drl(const Scene& scene, const PolicyNet& net,
                              const ConstraintSet& cs,
                              const FeatureMask& mask = {});

struct BenchConfig {
  int scenes = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> algos = {"dijkstra", "astar"};
  std::vector<ConstraintSet> constraint_sets = {
      ConstraintSet::length_only(), ConstraintSet::length_elbow(),
      ConstraintSet::all()};
  // Checkpoint per constraint-set label ("1", "1,2", "1,2,3"); required for
  // every set when "drl" is among the algorithms.
  std::map<std::string, std::string> drl_models;
  SceneConfig scene_config;
  FeatureMask feature_mask;  // layout the checkpoints must match
};

struct ReportRow {
  std::string algo;
  ConstraintSet constraints;
  int n = 0;
  int failures = 0;
  double success_rate = 0.0;
  double mean_length = 0.0;   // over successful layouts
  double mean_elbows = 0.0;   // over successful layouts
  double mean_install = 0.0;  // over successful layouts
  double mean_time_s = 0.0;   // over all layouts
  double p95_time_s = 0.0;    // over all layouts, nearest-rank
  double mean_expanded_nodes = 0.0;  // planners; 0 for drl
  double mean_cost = 0.0;     // over successful layouts (not in the CSV)
};

struct Report {
  int scenes = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> scene_seeds;
  std::vector<ReportRow> rows;
};

// Runs every (algorithm, constraint set) pair over the same N seeded
// scenes. Wall time is measured around each full layout call; for drl that
// includes observation extraction. Missing checkpoints raise ConfigError and
// wrong-layout checkpoints LayoutMismatch, both before any scene is
// generated.
Report run_benchmark(const BenchConfig& config);

std::string report_csv(const Report& report);
std::string report_table(const Report& report);

// Deterministic renderings of a layout.
std::string render_svg(const Scene& scene, const std::vector<Cell>& path);
std::string render_ascii(const Scene& scene, const std::vector<Cell>& path);

}  // namespace pipelayout

#endif  // PIPELAYOUT_BENCH_HPP_
