#include "pipelayout/planner.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "json.hpp"
#include "pipelayout/errors.hpp"

namespace pipelayout {

ConstraintSet ConstraintSet::parse(std::string_view text) {
  std::vector<int> indices;
  std::string token;
  auto flush = [&] {
    if (token.empty()) throw ParseError("empty constraint index in '" + std::string(text) + "'");
    if (token != "1" && token != "2" && token != "3") {
      throw ParseError("constraint index must be 1, 2 or 3, got '" + token + "'");
    }
    indices.push_back(token[0] - '0');
    token.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else if (c != ' ') {
      token += c;
    }
  }
  flush();
  return from_indices(indices);
}

ConstraintSet ConstraintSet::from_indices(const std::vector<int>& indices) {
  ConstraintSet cs;
  bool has_length = false;
  for (int i : indices) {
    switch (i) {
      case 1: has_length = true; break;
      case 2: cs.elbow = true; break;
      case 3: cs.install = true; break;
      default:
        throw ParseError("constraint index must be 1, 2 or 3, got " + std::to_string(i));
    }
  }
  if (!has_length) throw ParseError("constraint set must contain 1 (length)");
  return cs;
}

std::vector<int> ConstraintSet::indices() const {
  std::vector<int> out{1};
  if (elbow) out.push_back(2);
  if (install) out.push_back(3);
  return out;
}

std::string ConstraintSet::label() const {
  std::string out = "1";
  if (elbow) out += ",2";
  if (install) out += ",3";
  return out;
}

namespace {

// Integer centi-unit costs. All path costs are exact integers internally;
// the public cost is the integer divided by 100.
constexpr std::int64_t kStepC = 50;
constexpr std::int64_t kElbowC = 500;
constexpr std::int64_t kInstallC = 15;

constexpr int kNoneDir = kNumDirs;         // start state: no incoming direction
constexpr int kStatesPerCell = kNumDirs + 1;

struct QueueEntry {
  std::int64_t key;   // g (Dijkstra) or g + h (A*), centi-units
  std::int64_t node;  // cell_index * 7 + dir, so ties order by (cell, dir)
  std::int64_t g;

  bool operator>(const QueueEntry& o) const {
    if (key != o.key) return key > o.key;
    return node > o.node;
  }
};

PlanResult plan(const Scene& scene, const ConstraintSet& cs, bool use_astar,
                const char* algorithm) {
  OccupancyGrid grid(scene);
  PlanResult result;
  if (grid.blocked(scene.start) || grid.blocked(scene.end)) return result;

  std::optional<ClearanceField> clearance;
  if (cs.install) clearance.emplace(grid);

  const std::int64_t n_states = scene.cell_count() * kStatesPerCell;
  std::vector<std::int64_t> dist(n_states, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> parent(n_states, -1);

  auto h = [&](const Cell& c) -> std::int64_t {
    return use_astar ? kStepC * manhattan(c, scene.end) : 0;
  };

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  const std::int64_t start_node =
      scene.cell_index(scene.start) * kStatesPerCell + kNoneDir;
  dist[start_node] = 0;
  open.push({h(scene.start), start_node, 0});

  std::int64_t goal_node = -1;
  while (!open.empty()) {
    QueueEntry top = open.top();
    open.pop();
    if (top.g != dist[top.node]) continue;  // stale entry
    ++result.expanded_nodes;

    const Cell cell{static_cast<int>(top.node / kStatesPerCell % scene.dims.x),
                    static_cast<int>(top.node / kStatesPerCell / scene.dims.x % scene.dims.y),
                    static_cast<int>(top.node / kStatesPerCell / scene.dims.x / scene.dims.y)};
    if (cell == scene.end) {
      goal_node = top.node;
      break;
    }
    const int in_dir = static_cast<int>(top.node % kStatesPerCell);

    for (int d = 0; d < kNumDirs; ++d) {
      Cell next = cell + kDirOffsets[d];
      if (grid.blocked(next)) continue;
      std::int64_t cost = kStepC;
      if (cs.elbow && in_dir != kNoneDir && in_dir != d) cost += kElbowC;
      if (cs.install) cost += kInstallC * clearance->min_clearance(next);
      std::int64_t next_node = scene.cell_index(next) * kStatesPerCell + d;
      std::int64_t g = top.g + cost;
      if (g < dist[next_node]) {
        dist[next_node] = g;
        parent[next_node] = top.node;
        open.push({g + h(next), next_node, g});
      }
    }
  }

  if (goal_node < 0) return result;

  Path path;
  path.algorithm = algorithm;
  path.constraints = cs;
  path.cost = static_cast<double>(dist[goal_node]) / 100.0;
  path.expanded_nodes = result.expanded_nodes;
  for (std::int64_t node = goal_node; node >= 0; node = parent[node]) {
    std::int64_t ci = node / kStatesPerCell;
    int x = static_cast<int>(ci % scene.dims.x);
    int y = static_cast<int>(ci / scene.dims.x % scene.dims.y);
    int z = static_cast<int>(ci / scene.dims.x / scene.dims.y);
    path.cells.push_back({x, y, z});
  }
  std::reverse(path.cells.begin(), path.cells.end());
  result.path = std::move(path);
  return result;
}

}  // namespace

double edge_cost(const Scene& scene, const ConstraintSet& cs,
                 std::optional<Dir> in_dir, const Cell& to_cell, Dir move_dir) {
  double cost = 0.5;
  if (cs.elbow && in_dir.has_value() && *in_dir != move_dir) cost += 5.0;
  if (cs.install) cost += 0.15 * min_free_distance(scene, to_cell);
  return cost;
}

double heuristic(const Cell& cell, const Cell& goal) {
  return 0.5 * manhattan(cell, goal);
}

PlanResult plan_dijkstra(const Scene& scene, const ConstraintSet& cs) {
  return plan(scene, cs, false, "dijkstra");
}

PlanResult plan_astar(const Scene& scene, const ConstraintSet& cs) {
  return plan(scene, cs, true, "astar");
}

double path_cost(const Scene& scene, const ConstraintSet& cs,
                 const std::vector<Cell>& cells) {
  std::int64_t total = 0;
  OccupancyGrid grid(scene);
  std::optional<Dir> in_dir;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    auto dir = move_direction(cells[i - 1], cells[i]);
    if (!dir) throw InvalidPath("cells " + std::to_string(i - 1) + " and " +
                                std::to_string(i) + " are not 6-neighbors");
    total += kStepC;
    if (cs.elbow && in_dir.has_value() && *in_dir != *dir) total += kElbowC;
    if (cs.install) total += kInstallC * grid.min_free_distance(cells[i]);
    in_dir = *dir;
  }
  return static_cast<double>(total) / 100.0;
}

bool cells_unique(const std::vector<Cell>& cells) {
  std::vector<Cell> sorted = cells;
  std::sort(sorted.begin(), sorted.end(), [](const Cell& a, const Cell& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.z < b.z;
  });
  return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

void validate_path(const Path& path, const Scene& scene) {
  if (path.cells.empty()) throw InvalidPath("path has no cells");
  if (!(path.cells.front() == scene.start)) {
    throw InvalidPath("path does not begin at scene start");
  }
  if (!(path.cells.back() == scene.end)) {
    throw InvalidPath("path does not end at scene end");
  }
  for (std::size_t i = 0; i < path.cells.size(); ++i) {
    if (is_blocked(scene, path.cells[i])) {
      throw InvalidPath("path cell " + std::to_string(i) + " at " +
                        to_string(path.cells[i]) + " is blocked");
    }
    if (i > 0 && !move_direction(path.cells[i - 1], path.cells[i])) {
      throw InvalidPath("cells " + std::to_string(i - 1) + " and " +
                        std::to_string(i) + " are not 6-neighbors");
    }
  }
}

using ordered_json = nlohmann::ordered_json;

std::string serialize_path(const Path& path) {
  ordered_json j;
  j["version"] = 1;
  j["algorithm"] = path.algorithm;
  j["constraints"] = path.constraints.indices();
  ordered_json cells = ordered_json::array();
  for (const Cell& c : path.cells) cells.push_back({c.x, c.y, c.z});
  j["cells"] = std::move(cells);
  j["cost"] = path.cost;
  j["expanded_nodes"] = path.expanded_nodes;
  return j.dump();
}

Path parse_path(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("path file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("path file root must be an object");
  auto require = [&](const char* field) -> const ordered_json& {
    auto it = j.find(field);
    if (it == j.end()) throw ParseError(std::string("missing field: ") + field);
    return *it;
  };
  const auto& version = require("version");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ParseError("field 'version' must be 1");
  }
  Path p;
  const auto& algorithm = require("algorithm");
  if (!algorithm.is_string()) throw ParseError("field 'algorithm' must be a string");
  p.algorithm = algorithm.get<std::string>();
  if (p.algorithm != "dijkstra" && p.algorithm != "astar" && p.algorithm != "drl") {
    throw ParseError("field 'algorithm' must be dijkstra|astar|drl");
  }
  const auto& constraints = require("constraints");
  if (!constraints.is_array()) throw ParseError("field 'constraints' must be an array");
  std::vector<int> indices;
  for (const auto& c : constraints) {
    if (!c.is_number_integer()) throw ParseError("field 'constraints' must hold integers");
    indices.push_back(c.get<int>());
  }
  p.constraints = ConstraintSet::from_indices(indices);
  const auto& cells = require("cells");
  if (!cells.is_array()) throw ParseError("field 'cells' must be an array");
  for (const auto& c : cells) {
    if (!c.is_array() || c.size() != 3 || !c[0].is_number_integer() ||
        !c[1].is_number_integer() || !c[2].is_number_integer()) {
      throw ParseError("field 'cells' must hold [x,y,z] integer triples");
    }
    p.cells.push_back({c[0].get<int>(), c[1].get<int>(), c[2].get<int>()});
  }
  if (p.cells.empty()) throw ParseError("field 'cells' must not be empty");
  const auto& cost = require("cost");
  if (!cost.is_number()) throw ParseError("field 'cost' must be a number");
  p.cost = cost.get<double>();
  const auto& expanded = require("expanded_nodes");
  if (!expanded.is_number_integer()) {
    throw ParseError("field 'expanded_nodes' must be an integer");
  }
  p.expanded_nodes = expanded.get<std::int64_t>();
  return p;
}

}  // namespace pipelayout
