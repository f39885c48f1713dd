#include "pipelayout/scene.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "json.hpp"
#include "pipelayout/errors.hpp"
#include "pipelayout/rng.hpp"

namespace pipelayout {

const char* obstacle_kind_name(ObstacleKind k) {
  switch (k) {
    case ObstacleKind::Column: return "column";
    case ObstacleKind::MainBeam: return "main_beam";
    case ObstacleKind::SecondaryBeam: return "secondary_beam";
  }
  return "?";
}

int ObstacleBox::cross_section_area() const {
  int e[3] = {max.x - min.x, max.y - min.y, max.z - min.z};
  std::sort(e, e + 3);
  return e[0] * e[1];
}

bool is_blocked(const Scene& scene, const Cell& c) {
  if (!scene.in_bounds(c)) return true;
  for (const auto& box : scene.obstacles) {
    if (box.contains(c)) return true;
  }
  return false;
}

int free_distance(const Scene& scene, const Cell& c, Dir dir) {
  Cell step = dir_offset(dir);
  int n = 0;
  Cell probe = c + step;
  while (!is_blocked(scene, probe)) {
    ++n;
    probe = probe + step;
  }
  return n;
}

int min_free_distance(const Scene& scene, const Cell& c) {
  int best = std::numeric_limits<int>::max();
  for (int d = 0; d < kNumDirs; ++d) {
    best = std::min(best, free_distance(scene, c, static_cast<Dir>(d)));
    if (best == 0) break;
  }
  return best;
}

bool is_solvable(const Scene& scene) {
  if (!scene.in_bounds(scene.start) || !scene.in_bounds(scene.end)) return false;
  OccupancyGrid grid(scene);
  if (grid.blocked(scene.start) || grid.blocked(scene.end)) return false;
  std::vector<std::uint8_t> seen(scene.cell_count(), 0);
  std::deque<Cell> frontier;
  frontier.push_back(scene.start);
  seen[scene.cell_index(scene.start)] = 1;
  while (!frontier.empty()) {
    Cell c = frontier.front();
    frontier.pop_front();
    if (c == scene.end) return true;
    for (int d = 0; d < kNumDirs; ++d) {
      Cell n = c + kDirOffsets[d];
      if (grid.blocked(n)) continue;
      auto idx = scene.cell_index(n);
      if (seen[idx]) continue;
      seen[idx] = 1;
      frontier.push_back(n);
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Generation

SceneConfig SceneConfig::desk(Cell dims) {
  SceneConfig cfg;
  cfg.min_dims = dims;
  cfg.max_dims = dims;
  cfg.column_size_min = 2;
  cfg.column_size_max = 3;
  cfg.extra_columns_min = 0;
  cfg.extra_columns_max = 3;
  cfg.main_spans_min = 1;
  cfg.main_spans_max = 2;
  cfg.main_depth_min = 2;
  cfg.main_depth_max = 3;
  cfg.main_width_min = 2;
  cfg.main_width_max = 2;
  cfg.secondary_spans_min = 2;
  cfg.secondary_spans_max = 4;
  return cfg;
}

SceneConfig SceneConfig::fixed(Cell dims) {
  SceneConfig cfg;
  cfg.min_dims = dims;
  cfg.max_dims = dims;
  return cfg;
}

namespace {

// Free cells lying on one of the four vertical walls.
std::vector<Cell> free_wall_cells(const Scene& scene, const OccupancyGrid& grid,
                                  int wall) {
  std::vector<Cell> out;
  const Cell& d = scene.dims;
  auto push_free = [&](Cell c) {
    if (!grid.blocked(c)) out.push_back(c);
  };
  switch (wall) {
    case 0:  // x = 0
      for (int y = 0; y < d.y; ++y)
        for (int z = 0; z < d.z; ++z) push_free({0, y, z});
      break;
    case 1:  // x = Lx-1
      for (int y = 0; y < d.y; ++y)
        for (int z = 0; z < d.z; ++z) push_free({d.x - 1, y, z});
      break;
    case 2:  // y = 0
      for (int x = 0; x < d.x; ++x)
        for (int z = 0; z < d.z; ++z) push_free({x, 0, z});
      break;
    default:  // y = Ly-1
      for (int x = 0; x < d.x; ++x)
        for (int z = 0; z < d.z; ++z) push_free({x, d.y - 1, z});
      break;
  }
  return out;
}

// One attempt at drawing a scene. Returns false if the draw is rejected
// (no free wall cells or unreachable end).
bool draw_scene(std::uint64_t seed, const SceneConfig& cfg, RngStream& rng,
                Scene& out) {
  Scene s;
  s.seed = seed;
  s.dims = {rng.range_int(cfg.min_dims.x, cfg.max_dims.x),
            rng.range_int(cfg.min_dims.y, cfg.max_dims.y),
            rng.range_int(cfg.min_dims.z, cfg.max_dims.z)};
  const Cell& d = s.dims;

  // Four corner columns, full height. Sizes clamp so boxes always fit the
  // footprint, whatever the config asked for.
  auto column_size = [&]() {
    int size = rng.range_int(cfg.column_size_min, cfg.column_size_max);
    return std::min({size, d.x, d.y});
  };
  auto add_column = [&](int x0, int y0, int size) {
    s.obstacles.push_back({ObstacleKind::Column,
                           {x0, y0, 0},
                           {x0 + size, y0 + size, d.z}});
  };
  for (int corner = 0; corner < 4; ++corner) {
    int size = column_size();
    int x0 = (corner & 1) ? d.x - size : 0;
    int y0 = (corner & 2) ? d.y - size : 0;
    add_column(x0, y0, size);
  }

  // Extra wall-attached columns.
  int extra = rng.range_int(cfg.extra_columns_min, cfg.extra_columns_max);
  for (int i = 0; i < extra; ++i) {
    int size = column_size();
    int wall = rng.range_int(0, 3);
    int x0, y0;
    if (wall < 2) {
      x0 = wall == 0 ? 0 : d.x - size;
      y0 = rng.range_int(0, d.y - size);
    } else {
      x0 = rng.range_int(0, d.x - size);
      y0 = wall == 2 ? 0 : d.y - size;
    }
    add_column(x0, y0, size);
  }

  // Ceiling beams. The perimeter ring shares one cross-section draw.
  int min_main_dim = std::numeric_limits<int>::max();
  auto add_main = [&](Cell lo, Cell hi, int width, int depth) {
    s.obstacles.push_back({ObstacleKind::MainBeam, lo, hi});
    min_main_dim = std::min(min_main_dim, std::min(width, depth));
  };
  auto main_section = [&](int& width, int& depth) {
    width = rng.range_int(cfg.main_width_min, cfg.main_width_max);
    depth = rng.range_int(cfg.main_depth_min, cfg.main_depth_max);
    width = std::min({width, d.x, d.y});
    depth = std::min(depth, d.z - 1);
  };
  if (cfg.perimeter_ring) {
    int width, depth;
    main_section(width, depth);
    int zlo = d.z - depth;
    add_main({0, 0, zlo}, {d.x, width, d.z}, width, depth);
    add_main({0, d.y - width, zlo}, {d.x, d.y, d.z}, width, depth);
    add_main({0, 0, zlo}, {width, d.y, d.z}, width, depth);
    add_main({d.x - width, 0, zlo}, {d.x, d.y, d.z}, width, depth);
  }

  // Interior main spans run along one axis; secondaries run perpendicular.
  bool spans_along_x = rng.range_int(0, 1) == 1;
  int n_spans = rng.range_int(cfg.main_spans_min, cfg.main_spans_max);
  for (int i = 0; i < n_spans; ++i) {
    int width, depth;
    main_section(width, depth);
    int zlo = d.z - depth;
    if (spans_along_x) {
      int y0 = rng.range_int(0, d.y - width);
      add_main({0, y0, zlo}, {d.x, y0 + width, d.z}, width, depth);
    } else {
      int x0 = rng.range_int(0, d.x - width);
      add_main({x0, 0, zlo}, {x0 + width, d.y, d.z}, width, depth);
    }
  }

  // Secondary beams: every dimension strictly below the smallest main-beam
  // dimension, which forces the cross-section hierarchy.
  int sec_max = min_main_dim - 1;
  if (sec_max >= 1) {
    int n_sec = rng.range_int(cfg.secondary_spans_min, cfg.secondary_spans_max);
    for (int i = 0; i < n_sec; ++i) {
      int width = rng.range_int(1, sec_max);
      int depth = rng.range_int(1, sec_max);
      int zlo = d.z - depth;
      if (spans_along_x) {
        int x0 = rng.range_int(0, d.x - width);
        s.obstacles.push_back({ObstacleKind::SecondaryBeam,
                               {x0, 0, zlo},
                               {x0 + width, d.y, d.z}});
      } else {
        int y0 = rng.range_int(0, d.y - width);
        s.obstacles.push_back({ObstacleKind::SecondaryBeam,
                               {0, y0, zlo},
                               {d.x, y0 + width, d.z}});
      }
    }
  }

  // Start and end on two distinct vertical walls, uniform over free cells.
  OccupancyGrid grid(s);
  int wall_a = rng.range_int(0, 3);
  int wall_b = rng.range_int(0, 2);
  if (wall_b >= wall_a) ++wall_b;
  auto cells_a = free_wall_cells(s, grid, wall_a);
  auto cells_b = free_wall_cells(s, grid, wall_b);
  if (cells_a.empty() || cells_b.empty()) return false;
  s.start = cells_a[rng.bounded(cells_a.size())];
  s.end = cells_b[rng.bounded(cells_b.size())];
  if (s.start == s.end) return false;

  if (!is_solvable(s)) return false;
  out = std::move(s);
  return true;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
  if (cfg.min_dims.x < 5 || cfg.min_dims.y < 5 || cfg.min_dims.z < 5) {
    throw ConfigError("scene dims must be at least 5 cells per axis");
  }
  if (cfg.max_dims.x < cfg.min_dims.x || cfg.max_dims.y < cfg.min_dims.y ||
      cfg.max_dims.z < cfg.min_dims.z) {
    throw ConfigError("scene max_dims below min_dims");
  }
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    RngStream rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    Scene s;
    if (draw_scene(seed, cfg, rng, s)) {
      validate_scene(s);
      return s;
    }
  }
  throw GenerationExhausted("no solvable scene after 100 attempts, seed " +
                            std::to_string(seed));
}

void validate_scene(const Scene& s) {
  auto fail = [](const std::string& what) { throw ValidationError(what); };
  if (s.dims.x < 1 || s.dims.y < 1 || s.dims.z < 1) fail("non-positive dims");
  for (const auto& b : s.obstacles) {
    if (!(b.min.x < b.max.x && b.min.y < b.max.y && b.min.z < b.max.z)) {
      fail("obstacle box not min<max componentwise");
    }
    if (b.min.x < 0 || b.min.y < 0 || b.min.z < 0 || b.max.x > s.dims.x ||
        b.max.y > s.dims.y || b.max.z > s.dims.z) {
      fail("obstacle box outside scene bounds");
    }
  }
  int min_main = std::numeric_limits<int>::max();
  int max_sec = 0;
  for (const auto& b : s.obstacles) {
    if (b.kind == ObstacleKind::MainBeam) {
      min_main = std::min(min_main, b.cross_section_area());
    } else if (b.kind == ObstacleKind::SecondaryBeam) {
      max_sec = std::max(max_sec, b.cross_section_area());
    }
  }
  if (max_sec > 0 && min_main != std::numeric_limits<int>::max() &&
      min_main <= max_sec) {
    fail("main beam cross-section does not exceed secondary beam");
  }
  if (s.start == s.end) fail("start equals end");
  if (!s.in_bounds(s.start) || !s.in_bounds(s.end)) fail("start/end out of bounds");
  if (is_blocked(s, s.start)) fail("start inside an obstacle");
  if (is_blocked(s, s.end)) fail("end inside an obstacle");
  auto wall_adjacent = [&](const Cell& c) {
    for (int d = 0; d < kNumDirs; ++d) {
      if (!s.in_bounds(c + kDirOffsets[d])) return true;
    }
    return false;
  };
  if (!wall_adjacent(s.start)) fail("start not wall-adjacent");
  if (!wall_adjacent(s.end)) fail("end not wall-adjacent");
}

// ---------------------------------------------------------------------------
// Serialization

using ordered_json = nlohmann::ordered_json;

std::string serialize_scene(const Scene& s) {
  ordered_json j;
  j["version"] = 1;
  j["seed"] = s.seed;
  j["dims"] = {s.dims.x, s.dims.y, s.dims.z};
  j["cell_size_m"] = s.cell_size_m;
  j["start"] = {s.start.x, s.start.y, s.start.z};
  j["end"] = {s.end.x, s.end.y, s.end.z};
  ordered_json boxes = ordered_json::array();
  for (const auto& b : s.obstacles) {
    ordered_json box;
    box["kind"] = obstacle_kind_name(b.kind);
    box["min"] = {b.min.x, b.min.y, b.min.z};
    box["max"] = {b.max.x, b.max.y, b.max.z};
    boxes.push_back(std::move(box));
  }
  j["obstacles"] = std::move(boxes);
  return j.dump();
}

namespace {

Cell parse_cell(const ordered_json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number_integer() ||
      !j[1].is_number_integer() || !j[2].is_number_integer()) {
    throw ParseError("field '" + field + "' must be an [x,y,z] integer triple");
  }
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

const ordered_json& require(const ordered_json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw ParseError(std::string("missing field: ") + field);
  return *it;
}

}  // namespace

Scene parse_scene(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scene file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("scene file root must be an object");
  const auto& version = require(j, "version");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ParseError("field 'version' must be 1");
  }
  Scene s;
  const auto& seed = require(j, "seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ParseError("field 'seed' must be an unsigned integer");
  }
  s.seed = seed.get<std::uint64_t>();
  s.dims = parse_cell(require(j, "dims"), "dims");
  const auto& cell_size = require(j, "cell_size_m");
  if (!cell_size.is_number()) throw ParseError("field 'cell_size_m' must be a number");
  s.cell_size_m = cell_size.get<double>();
  s.start = parse_cell(require(j, "start"), "start");
  s.end = parse_cell(require(j, "end"), "end");
  const auto& boxes = require(j, "obstacles");
  if (!boxes.is_array()) throw ParseError("field 'obstacles' must be an array");
  for (const auto& box : boxes) {
    if (!box.is_object()) throw ParseError("obstacle entries must be objects");
    ObstacleBox b;
    const auto& kind = require(box, "kind");
    if (!kind.is_string()) throw ParseError("field 'kind' must be a string");
    std::string k = kind.get<std::string>();
    if (k == "column") {
      b.kind = ObstacleKind::Column;
    } else if (k == "main_beam") {
      b.kind = ObstacleKind::MainBeam;
    } else if (k == "secondary_beam") {
      b.kind = ObstacleKind::SecondaryBeam;
    } else {
      throw ParseError("field 'kind' must be column|main_beam|secondary_beam");
    }
    b.min = parse_cell(require(box, "min"), "min");
    b.max = parse_cell(require(box, "max"), "max");
    s.obstacles.push_back(b);
  }
  validate_scene(s);
  return s;
}

// ---------------------------------------------------------------------------
// Fast query structures

OccupancyGrid::OccupancyGrid(const Scene& scene)
    : dims_(scene.dims), cells_(scene.cell_count(), 0) {
  for (const auto& box : scene.obstacles) {
    for (int z = box.min.z; z < box.max.z; ++z) {
      for (int y = box.min.y; y < box.max.y; ++y) {
        for (int x = box.min.x; x < box.max.x; ++x) {
          cells_[index({x, y, z})] = 1;
        }
      }
    }
  }
}

int OccupancyGrid::free_distance(const Cell& c, Dir dir) const {
  Cell step = dir_offset(dir);
  int n = 0;
  Cell probe = c + step;
  while (!blocked(probe)) {
    ++n;
    probe = probe + step;
  }
  return n;
}

int OccupancyGrid::min_free_distance(const Cell& c) const {
  int best = std::numeric_limits<int>::max();
  for (int d = 0; d < kNumDirs; ++d) {
    best = std::min(best, free_distance(c, static_cast<Dir>(d)));
    if (best == 0) break;
  }
  return best;
}

ClearanceField::ClearanceField(const OccupancyGrid& grid)
    : dims_(grid.dims()), min_clear_(std::int64_t(dims_.x) * dims_.y * dims_.z,
                                     std::numeric_limits<std::int32_t>::max()) {
  // Per-direction distance via a sweep opposite to the ray direction, then
  // fold the six directions into the min.
  std::vector<std::int32_t> dist(min_clear_.size());
  for (int d = 0; d < kNumDirs; ++d) {
    Dir dir = static_cast<Dir>(d);
    Cell step = dir_offset(dir);
    // Iterate so the ray target is already computed: walk against `step`.
    int x0 = step.x > 0 ? dims_.x - 1 : 0, x1 = step.x > 0 ? -1 : dims_.x;
    int y0 = step.y > 0 ? dims_.y - 1 : 0, y1 = step.y > 0 ? -1 : dims_.y;
    int z0 = step.z > 0 ? dims_.z - 1 : 0, z1 = step.z > 0 ? -1 : dims_.z;
    int dx = step.x > 0 ? -1 : 1, dy = step.y > 0 ? -1 : 1,
        dz = step.z > 0 ? -1 : 1;
    for (int z = z0; z != z1; z += dz) {
      for (int y = y0; y != y1; y += dy) {
        for (int x = x0; x != x1; x += dx) {
          Cell c{x, y, z};
          Cell n = c + step;
          std::int32_t v;
          if (grid.blocked(n)) {
            v = 0;
          } else {
            v = dist[index(n)] + 1;
          }
          dist[index(c)] = v;
          auto& m = min_clear_[index(c)];
          m = std::min(m, v);
        }
      }
    }
  }
}

}  // namespace pipelayout
