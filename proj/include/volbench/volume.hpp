#pragma once
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace volbench {

// World direction an index axis points along, snapped to the dominant
// component of the file's spatial transform. world_axis: 0 = left/right,
// 1 = posterior/anterior, 2 = inferior/superior; sign +1 toward R/A/S.
struct AxisCode {
  int world_axis = 0;
  int sign = 1;
};

using Orientation = std::array<AxisCode, 3>;

// 3D scalar grid in (i, j, k) axis order with i fastest, voxel values
// already slope/intercept scaled. spacing is mm per voxel.
struct Volume {
  std::array<int, 3> dims{};
  std::array<double, 3> spacing{};
  std::vector<double> data;
  std::optional<Orientation> orientation;

  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) +
           std::size_t(dims[0]) * (std::size_t(j) + std::size_t(dims[1]) * std::size_t(k));
  }
  double at(int i, int j, int k) const { return data[index(i, j, k)]; }
};

// Binary occupancy grid aligned with a Volume.
struct MaskVolume {
  std::array<int, 3> dims{};
  std::array<double, 3> spacing{};
  std::vector<std::uint8_t> bits;
  std::optional<Orientation> orientation;

  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) +
           std::size_t(dims[0]) * (std::size_t(j) + std::size_t(dims[1]) * std::size_t(k));
  }
  bool at(int i, int j, int k) const { return bits[index(i, j, k)] != 0; }
};

}  // namespace volbench
