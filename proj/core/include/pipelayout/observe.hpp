#ifndef PIPELAYOUT_OBSERVE_HPP_
#define PIPELAYOUT_OBSERVE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "pipelayout/cell.hpp"
#include "pipelayout/scene.hpp"

namespace pipelayout {

// Frozen feature layout. Offsets are part of the checkpoint contract via
// observation_layout_hash; changing any of them invalidates old checkpoints.
inline constexpr int kRelativeOffset = 0;
inline constexpr int kRelativeSize = 3;
inline constexpr int kDirectionOffset = 3;
inline constexpr int kDirectionSize = 7;
inline constexpr int kCubeEdgeOffset = 10;
inline constexpr int kCubeEdgeSize = 12;
inline constexpr int kAngleOffset = 22;
inline constexpr int kAngleSize = 20;
inline constexpr int kCrossOffset = 42;
inline constexpr int kCrossSize = 18;
inline constexpr int kDistanceOffset = 60;
inline constexpr int kDistanceSize = 6;
inline constexpr int kObservationSize = 66;

using Observation = std::array<double, kObservationSize>;

// The 20 diagonal ray directions: 12 face diagonals then 8 space diagonals,
// each group ordered lexicographically by (dx,dy,dz).
extern const std::array<Cell, kAngleSize> kAngleRayDirs;

// Blocks to zero-fill (vector length never changes). Used for ablations.
struct FeatureMask {
  bool relative = false;
  bool direction = false;
  bool cube_edge = false;
  bool angle = false;
  bool cross = false;
  bool distance = false;

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;

  bool any() const {
    return relative || direction || cube_edge || angle || cross || distance;
  }
  static FeatureMask angle_only() {
    FeatureMask m;
    m.angle = true;
    return m;
  }
};

// Canonical descriptor of the layout (block names, offsets, sizes, ray
// table, mask) and its FNV-1a 64-bit hash. The hash is embedded in
// checkpoints so a network is never fed a vector it was not trained on.
std::string observation_layout_descriptor(const FeatureMask& mask);
std::uint64_t observation_layout_hash(const FeatureMask& mask);

// Per-block reference encoders. Straight loops over is_blocked; the
// ObservationEncoder below matches them bit for bit on every scene.
std::array<double, kRelativeSize> relative_coordinate(const Scene& scene, const Cell& cur);
std::array<double, kDirectionSize> direction_onehot(std::optional<Dir> prev_dir);
std::array<double, kCubeEdgeSize> cube_edge_occupancy(const Scene& scene, const Cell& cur);
std::array<double, kAngleSize> angle_rays(const Scene& scene, const Cell& cur);
std::array<double, kCrossSize> cross_occupancy(const Scene& scene, const Cell& cur);
std::array<double, kDistanceSize> distance_six(const Scene& scene, const Cell& cur);

Observation observe(const Scene& scene, const Cell& cur,
                    std::optional<Dir> prev_dir,
                    const FeatureMask& mask = {});

// Grid-backed encoder for hot paths; amortizes the occupancy rasterization
// across an episode.
class ObservationEncoder {
 public:
  ObservationEncoder(const Scene& scene, FeatureMask mask = {});

  void encode(const Cell& cur, std::optional<Dir> prev_dir, Observation& out) const;
  Observation encode(const Cell& cur, std::optional<Dir> prev_dir) const {
    Observation out;
    encode(cur, prev_dir, out);
    return out;
  }

  const OccupancyGrid& grid() const { return grid_; }
  const FeatureMask& mask() const { return mask_; }

 private:
  OccupancyGrid grid_;
  Cell dims_;
  Cell end_;
  int max_dim_;
  FeatureMask mask_;
};

}  // namespace pipelayout

#endif  // PIPELAYOUT_OBSERVE_HPP_
