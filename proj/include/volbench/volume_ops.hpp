#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "volbench/point_cloud.hpp"
#include "volbench/volume.hpp"

namespace volbench {

// Slicing planes. Sagittal is deliberately absent: sagittal views are
// excluded from the protocol and parse_plane rejects them.
enum class Plane { coronal, axial };

Plane parse_plane(const std::string& name);
const char* plane_name(Plane plane);

// Masked 2D cross-section. pixels is row-major (height rows of width),
// zero outside the mask.
struct Slice2D {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;
  Plane plane = Plane::axial;
  int slice_index = 0;

  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

// 6-connected erosion; out-of-bounds neighbors count as background, so
// border voxels never survive. Exposed for property tests.
MaskVolume erode6(const MaskVolume& mask);

// One point per boundary voxel (mask AND NOT erode6(mask)), scaled by
// voxel spacing, in lexicographic (i,j,k) order. Throws on an empty mask.
PointCloud surface_points(const MaskVolume& mask);

// Index axis a plane slices along: the axis aligned with superior-inferior
// for axial, anterior-posterior for coronal. Without orientation metadata
// assumes RAS-like layout (axis 2 axial, axis 1 coronal) and warns once per
// call on stderr.
int resolve_plane_axis(const MaskVolume& mask, Plane plane);

// Scan slice at floor(dims[axis]/2) masked by the mask slice. Throws when
// scan and mask dims differ or the mask is empty at the midpoint
// ("structure absent at midpoint", which the harness records as a skip).
Slice2D midpoint_masked_slice(const Volume& scan, const MaskVolume& mask, Plane plane);

// 8-bit grayscale PNG. In-mask intensities are min-max normalized to
// [1, 255] (uniform slices map to 255); background stays 0.
void export_slice(const Slice2D& slice, const std::filesystem::path& path);

// ASCII PLY, x/y/z as 32-bit floats.
void write_point_cloud_ply(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace volbench
