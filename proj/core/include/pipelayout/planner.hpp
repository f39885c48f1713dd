#ifndef PIPELAYOUT_PLANNER_HPP_
#define PIPELAYOUT_PLANNER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pipelayout/cell.hpp"
#include "pipelayout/scene.hpp"

namespace pipelayout {

// Which cost terms the search prices. Length (0.5 per step) is always on;
// the labels 1/2/3 map to length/elbow/install.
struct ConstraintSet {
  bool elbow = false;
  bool install = false;

  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;

  static ConstraintSet length_only() { return {}; }
  static ConstraintSet length_elbow() { return {true, false}; }
  static ConstraintSet all() { return {true, true}; }

  // "1", "1,2", "1,2,3" (also accepts "1,3"). Throws ParseError otherwise.
  static ConstraintSet parse(std::string_view text);
  static ConstraintSet from_indices(const std::vector<int>& indices);
  std::vector<int> indices() const;
  std::string label() const;
};

struct Path {
  std::string algorithm;  // "dijkstra" | "astar" | "drl"
  ConstraintSet constraints;
  std::vector<Cell> cells;  // start first, end last
  double cost = 0.0;
  std::int64_t expanded_nodes = 0;
};

// NoPath is a result, not an error: path is empty, expansions still counted.
struct PlanResult {
  std::optional<Path> path;
  std::int64_t expanded_nodes = 0;
};

// Cost of one move in real units: 0.5 step, +5 per priced elbow, +0.15 per
// cell of the destination's min axis clearance when install is priced.
// The searches run on the same costs scaled by 100 into exact integers.
double edge_cost(const Scene& scene, const ConstraintSet& cs,
                 std::optional<Dir> in_dir, const Cell& to_cell, Dir move_dir);

// Admissible and consistent for every constraint set: elbow/install terms
// only add to the 0.5-per-step floor.
double heuristic(const Cell& cell, const Cell& goal);

PlanResult plan_dijkstra(const Scene& scene, const ConstraintSet& cs);
PlanResult plan_astar(const Scene& scene, const ConstraintSet& cs);

// Total cost of a concrete cell path under cs, same terms as edge_cost.
double path_cost(const Scene& scene, const ConstraintSet& cs,
                 const std::vector<Cell>& cells);

bool cells_unique(const std::vector<Cell>& cells);

// Throws InvalidPath unless cells run start to end over unblocked
// 6-neighbor moves.
void validate_path(const Path& path, const Scene& scene);

std::string serialize_path(const Path& path);
Path parse_path(std::string_view text);

}  // namespace pipelayout

#endif  // PIPELAYOUT_PLANNER_HPP_
