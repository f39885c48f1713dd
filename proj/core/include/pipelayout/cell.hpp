#ifndef PIPELAYOUT_CELL_HPP_
#define PIPELAYOUT_CELL_HPP_

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>

namespace pipelayout {

// Integer grid coordinate. One cell is a 10 cm cube.
struct Cell {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const Cell&, const Cell&) = default;

  Cell operator+(const Cell& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Cell operator-(const Cell& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Cell operator*(int k) const { return {x * k, y * k, z * k}; }
};

// The six axis moves, indexed 0..5. This ordering is frozen: it is the
// action index of the environment and the post-`none` ordering of the
// observation's direction one-hot.
enum class Dir : int { PosX = 0, NegX = 1, PosY = 2, NegY = 3, PosZ = 4, NegZ = 5 };

inline constexpr int kNumDirs = 6;

inline constexpr std::array<Cell, kNumDirs> kDirOffsets = {{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1},
}};

inline Cell dir_offset(Dir d) { return kDirOffsets[static_cast<int>(d)]; }

inline Dir opposite(Dir d) {
  int i = static_cast<int>(d);
  return static_cast<Dir>(i ^ 1);
}

inline const char* dir_name(Dir d) {
  static constexpr const char* names[] = {"+x", "-x", "+y", "-y", "+z", "-z"};
  return names[static_cast<int>(d)];
}

// Direction of a unit axis move, if it is one.
inline std::optional<Dir> move_direction(const Cell& from, const Cell& to) {
  Cell d = to - from;
  for (int i = 0; i < kNumDirs; ++i) {
    if (d == kDirOffsets[i]) return static_cast<Dir>(i);
  }
  return std::nullopt;
}

inline int manhattan(const Cell& a, const Cell& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z);
}

inline std::string to_string(const Cell& c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + "," +
         std::to_string(c.z) + ")";
}

}  // namespace pipelayout

template <>
struct std::hash<pipelayout::Cell> {
  std::size_t operator()(const pipelayout::Cell& c) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(c.x);
    h = h * 0x9E3779B97F4A7C15ull + static_cast<std::uint32_t>(c.y);
    h = h * 0x9E3779B97F4A7C15ull + static_cast<std::uint32_t>(c.z);
    return static_cast<std::size_t>(h ^ (h >> 31));
  }
};

#endif  // PIPELAYOUT_CELL_HPP_
