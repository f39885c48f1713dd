#ifndef PIPELAYOUT_SCENE_HPP_
#define PIPELAYOUT_SCENE_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pipelayout/cell.hpp"

namespace pipelayout {

enum class ObstacleKind { Column, MainBeam, SecondaryBeam };

const char* obstacle_kind_name(ObstacleKind k);

// Axis-aligned box, min inclusive, max exclusive.
struct ObstacleBox {
  ObstacleKind kind = ObstacleKind::Column;
  Cell min;
  Cell max;

  friend bool operator==(const ObstacleBox&, const ObstacleBox&) = default;

  bool contains(const Cell& c) const {
    return c.x >= min.x && c.x < max.x && c.y >= min.y && c.y < max.y &&
           c.z >= min.z && c.z < max.z;
  }

  // Product of the two smallest extents. For a beam this is the slice
  // perpendicular to its span.
  int cross_section_area() const;
};

// Knobs for the procedural generator. The defaults are the full-size room
// recipe; desk() scales the obstacle sizes down for small grids.
struct SceneConfig {
  Cell min_dims{50, 50, 28};
  Cell max_dims{100, 100, 40};

  int extra_columns_min = 0, extra_columns_max = 4;
  int column_size_min = 4, column_size_max = 8;

  bool perimeter_ring = true;
  int main_spans_min = 1, main_spans_max = 3;
  int main_depth_min = 5, main_depth_max = 8;  // z extent below the ceiling
  int main_width_min = 3, main_width_max = 5;

  int secondary_spans_min = 2, secondary_spans_max = 6;

  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;

  // Fixed dimensions (min == max) with obstacle sizes scaled for small
  // grids; used by desk-scale training and tests.
  static SceneConfig desk(Cell dims);

  // Fixed dimensions, full-size recipe.
  static SceneConfig fixed(Cell dims);
};

// Rasterized building volume. Immutable after construction; walls are
// implicit at the boundary, never stored.
struct Scene {
  Cell dims;
  double cell_size_m = 0.1;
  std::uint64_t seed = 0;
  Cell start;
  Cell end;
  std::vector<ObstacleBox> obstacles;

  friend bool operator==(const Scene&, const Scene&) = default;

  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.x < dims.x && c.y >= 0 && c.y < dims.y && c.z >= 0 &&
           c.z < dims.z;
  }
  std::int64_t cell_count() const {
    return std::int64_t(dims.x) * dims.y * dims.z;
  }
  std::int64_t cell_index(const Cell& c) const {
    return c.x + std::int64_t(dims.x) * (c.y + std::int64_t(dims.y) * c.z);
  }
  int max_dim() const { return std::max(dims.x, std::max(dims.y, dims.z)); }
};

// True iff the cell is out of bounds (implicit wall) or inside any obstacle.
bool is_blocked(const Scene& scene, const Cell& c);

// True iff a 6-connected path of free cells links start to end.
bool is_solvable(const Scene& scene);

// Number of consecutive free cells strictly beyond `c` along `dir` before
// the first blocked cell. 0 if the adjacent cell is blocked.
int free_distance(const Scene& scene, const Cell& c, Dir dir);

// Smallest of the six axis free distances.
int min_free_distance(const Scene& scene, const Cell& c);

// Draws a scene from the config. Identical (seed, config) yields a
// byte-identical serialization. Unsolvable draws redraw on seed-derived
// substreams, bounded at 100 attempts (GenerationExhausted beyond that).
Scene generate_scene(std::uint64_t seed, const SceneConfig& config = {});

// Throws ValidationError if a structural invariant fails: positive dims,
// boxes half-open and inside bounds, beam cross-section hierarchy, start/end
// distinct, free, in bounds and wall-adjacent.
void validate_scene(const Scene& scene);

// Canonical UTF-8 JSON with fixed key order.
std::string serialize_scene(const Scene& scene);

// Inverse of serialize_scene; also accepts semantically equal JSON with
// different spacing. Throws ParseError naming the offending field, then
// validates structurally.
Scene parse_scene(std::string_view text);

// Flat occupancy bitmap for O(1) blocked queries on hot paths. Agrees with
// is_blocked everywhere (including out of bounds).
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(const Scene& scene);

  bool blocked(const Cell& c) const {
    if (c.x < 0 || c.x >= dims_.x || c.y < 0 || c.y >= dims_.y || c.z < 0 ||
        c.z >= dims_.z) {
      return true;
    }
    return cells_[index(c)] != 0;
  }
  int free_distance(const Cell& c, Dir dir) const;
  int min_free_distance(const Cell& c) const;
  const Cell& dims() const { return dims_; }

 private:
  std::int64_t index(const Cell& c) const {
    return c.x + std::int64_t(dims_.x) * (c.y + std::int64_t(dims_.y) * c.z);
  }
  Cell dims_;
  std::vector<std::uint8_t> cells_;
};

// Per-cell minimum axis clearance, precomputed with six directional sweeps.
// Worth it when every relaxation of a big search queries clearance.
class ClearanceField {
 public:
  ClearanceField() = default;
  explicit ClearanceField(const OccupancyGrid& grid);

  // Only meaningful for free cells.
  int min_clearance(const Cell& c) const { return min_clear_[index(c)]; }

 private:
  std::int64_t index(const Cell& c) const {
    return c.x + std::int64_t(dims_.x) * (c.y + std::int64_t(dims_.y) * c.z);
  }
  Cell dims_;
  std::vector<std::int32_t> min_clear_;
};

}  // namespace pipelayout

#endif  // PIPELAYOUT_SCENE_HPP_
