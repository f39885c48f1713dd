#include "pipelayout/observe.hpp"

#include <algorithm>
#include <sstream>

namespace pipelayout {

namespace {

constexpr std::array<Cell, kAngleSize> make_angle_dirs() {
  std::array<Cell, kAngleSize> dirs{};
  int n = 0;
  // Face diagonals: exactly one zero component, lexicographic.
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz)
        if ((dx == 0) + (dy == 0) + (dz == 0) == 1) dirs[n++] = {dx, dy, dz};
  // Space diagonals: no zero component, lexicographic.
  for (int dx = -1; dx <= 1; dx += 2)
    for (int dy = -1; dy <= 1; dy += 2)
      for (int dz = -1; dz <= 1; dz += 2) dirs[n++] = {dx, dy, dz};
  return dirs;
}

// Shared block geometry, parameterized over the blocked probe so the
// reference functions and the grid-backed encoder cannot drift apart.
template <class BlockedFn>
void fill_cube_edge(const BlockedFn& blocked, const Cell& cur, const Cell& end,
                    double* out) {
  Cell lo{std::min(cur.x, end.x), std::min(cur.y, end.y), std::min(cur.z, end.z)};
  Cell hi{std::max(cur.x, end.x), std::max(cur.y, end.y), std::max(cur.z, end.z)};
  int n = 0;
  auto edge = [&](Cell from, int axis, int to) {
    int len = to - (axis == 0 ? from.x : axis == 1 ? from.y : from.z) + 1;
    int hit = 0;
    Cell c = from;
    for (int i = 0; i < len; ++i) {
      if (blocked(c)) ++hit;
      (axis == 0 ? c.x : axis == 1 ? c.y : c.z) += 1;
    }
    out[n++] = static_cast<double>(hit) / len;
  };
  // 4 x-parallel, 4 y-parallel, 4 z-parallel, each sorted by min corner.
  edge({lo.x, lo.y, lo.z}, 0, hi.x);
  edge({lo.x, lo.y, hi.z}, 0, hi.x);
  edge({lo.x, hi.y, lo.z}, 0, hi.x);
  edge({lo.x, hi.y, hi.z}, 0, hi.x);
  edge({lo.x, lo.y, lo.z}, 1, hi.y);
  edge({lo.x, lo.y, hi.z}, 1, hi.y);
  edge({hi.x, lo.y, lo.z}, 1, hi.y);
  edge({hi.x, lo.y, hi.z}, 1, hi.y);
  edge({lo.x, lo.y, lo.z}, 2, hi.z);
  edge({lo.x, hi.y, lo.z}, 2, hi.z);
  edge({hi.x, lo.y, lo.z}, 2, hi.z);
  edge({hi.x, hi.y, lo.z}, 2, hi.z);
}

template <class BlockedFn>
void fill_angle(const BlockedFn& blocked, const Cell& cur, int max_dim,
                double* out) {
  for (int i = 0; i < kAngleSize; ++i) {
    Cell step = kAngleRayDirs[i];
    int free_steps = 0;
    Cell probe = cur + step;
    while (!blocked(probe)) {
      ++free_steps;
      probe = probe + step;
    }
    out[i] = std::min(1.0, static_cast<double>(free_steps) / max_dim);
  }
}

template <class BlockedFn>
void fill_cross(const BlockedFn& blocked, const Cell& cur, double* out) {
  int n = 0;
  for (int d = 0; d < kNumDirs; ++d) {
    Cell step = kDirOffsets[d];
    for (int k = 1; k <= 3; ++k) {
      out[n++] = blocked(cur + step * k) ? 1.0 : 0.0;
    }
  }
}

template <class BlockedFn>
void fill_distance(const BlockedFn& blocked, const Cell& cur, int max_dim,
                   double* out) {
  for (int d = 0; d < kNumDirs; ++d) {
    Cell step = kDirOffsets[d];
    int n = 0;
    Cell probe = cur + step;
    while (!blocked(probe)) {
      ++n;
      probe = probe + step;
    }
    out[d] = std::min(1.0, static_cast<double>(n) / max_dim);
  }
}

void fill_relative(const Cell& dims, const Cell& end, const Cell& cur,
                   double* out) {
  out[0] = static_cast<double>(end.x - cur.x) / dims.x;
  out[1] = static_cast<double>(end.y - cur.y) / dims.y;
  out[2] = static_cast<double>(end.z - cur.z) / dims.z;
}

void fill_direction(std::optional<Dir> prev_dir, double* out) {
  std::fill(out, out + kDirectionSize, 0.0);
  out[prev_dir ? static_cast<int>(*prev_dir) + 1 : 0] = 1.0;
}

template <class BlockedFn>
void fill_observation(const BlockedFn& blocked, const Cell& dims,
                      const Cell& end, int max_dim, const Cell& cur,
                      std::optional<Dir> prev_dir, const FeatureMask& mask,
                      Observation& out) {
  if (mask.relative) {
    std::fill_n(out.data() + kRelativeOffset, kRelativeSize, 0.0);
  } else {
    fill_relative(dims, end, cur, out.data() + kRelativeOffset);
  }
  if (mask.direction) {
    std::fill_n(out.data() + kDirectionOffset, kDirectionSize, 0.0);
  } else {
    fill_direction(prev_dir, out.data() + kDirectionOffset);
  }
  if (mask.cube_edge) {
    std::fill_n(out.data() + kCubeEdgeOffset, kCubeEdgeSize, 0.0);
  } else {
    fill_cube_edge(blocked, cur, end, out.data() + kCubeEdgeOffset);
  }
  if (mask.angle) {
    std::fill_n(out.data() + kAngleOffset, kAngleSize, 0.0);
  } else {
    fill_angle(blocked, cur, max_dim, out.data() + kAngleOffset);
  }
  if (mask.cross) {
    std::fill_n(out.data() + kCrossOffset, kCrossSize, 0.0);
  } else {
    fill_cross(blocked, cur, out.data() + kCrossOffset);
  }
  if (mask.distance) {
    std::fill_n(out.data() + kDistanceOffset, kDistanceSize, 0.0);
  } else {
    fill_distance(blocked, cur, max_dim, out.data() + kDistanceOffset);
  }
}

struct SceneBlocked {
  const Scene& scene;
  bool operator()(const Cell& c) const { return is_blocked(scene, c); }
};

}  // namespace

const std::array<Cell, kAngleSize> kAngleRayDirs = make_angle_dirs();

std::string observation_layout_descriptor(const FeatureMask& mask) {
  std::ostringstream s;
  s << "pipelayout-observation-v1;"
    << "relative@" << kRelativeOffset << "x" << kRelativeSize << ";"
    << "direction@" << kDirectionOffset << "x" << kDirectionSize << ";"
    << "cube_edge@" << kCubeEdgeOffset << "x" << kCubeEdgeSize << ";"
    << "angle@" << kAngleOffset << "x" << kAngleSize << ";"
    << "cross@" << kCrossOffset << "x" << kCrossSize << ";"
    << "distance@" << kDistanceOffset << "x" << kDistanceSize << ";rays=";
  for (const Cell& d : kAngleRayDirs) s << d.x << "," << d.y << "," << d.z << ";";
  s << "mask=" << mask.relative << mask.direction << mask.cube_edge
    << mask.angle << mask.cross << mask.distance;
  return std::move(s).str();
}

std::uint64_t observation_layout_hash(const FeatureMask& mask) {
  std::string desc = observation_layout_descriptor(mask);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : desc) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::array<double, kRelativeSize> relative_coordinate(const Scene& scene,
                                                      const Cell& cur) {
  std::array<double, kRelativeSize> out;
  fill_relative(scene.dims, scene.end, cur, out.data());
  return out;
}

std::array<double, kDirectionSize> direction_onehot(std::optional<Dir> prev_dir) {
  std::array<double, kDirectionSize> out;
  fill_direction(prev_dir, out.data());
  return out;
}

std::array<double, kCubeEdgeSize> cube_edge_occupancy(const Scene& scene,
                                                      const Cell& cur) {
  std::array<double, kCubeEdgeSize> out;
  fill_cube_edge(SceneBlocked{scene}, cur, scene.end, out.data());
  return out;
}

std::array<double, kAngleSize> angle_rays(const Scene& scene, const Cell& cur) {
  std::array<double, kAngleSize> out;
  fill_angle(SceneBlocked{scene}, cur, scene.max_dim(), out.data());
  return out;
}

std::array<double, kCrossSize> cross_occupancy(const Scene& scene,
                                               const Cell& cur) {
  std::array<double, kCrossSize> out;
  fill_cross(SceneBlocked{scene}, cur, out.data());
  return out;
}

std::array<double, kDistanceSize> distance_six(const Scene& scene,
                                               const Cell& cur) {
  std::array<double, kDistanceSize> out;
  fill_distance(SceneBlocked{scene}, cur, scene.max_dim(), out.data());
  return out;
}

Observation observe(const Scene& scene, const Cell& cur,
                    std::optional<Dir> prev_dir, const FeatureMask& mask) {
  Observation out;
  fill_observation(SceneBlocked{scene}, scene.dims, scene.end, scene.max_dim(),
                   cur, prev_dir, mask, out);
  return out;
}

ObservationEncoder::ObservationEncoder(const Scene& scene, FeatureMask mask)
    : grid_(scene),
      dims_(scene.dims),
      end_(scene.end),
      max_dim_(scene.max_dim()),
      mask_(mask) {}

void ObservationEncoder::encode(const Cell& cur, std::optional<Dir> prev_dir,
                                Observation& out) const {
  auto blocked = [this](const Cell& c) { return grid_.blocked(c); };
  fill_observation(blocked, dims_, end_, max_dim_, cur, prev_dir, mask_, out);
}

}  // namespace pipelayout
