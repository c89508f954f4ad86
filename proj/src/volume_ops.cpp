#include "volbench/volume_ops.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "volbench/png_io.hpp"

namespace volbench {

Plane parse_plane(const std::string& name) {
  if (name == "coronal") return Plane::coronal;
  if (name == "axial") return Plane::axial;
  if (name == "sagittal")
    throw std::runtime_error("sagittal views are excluded; choose coronal or axial");
  throw std::runtime_error("unknown plane '" + name + "' (expected coronal or axial)");
}

const char* plane_name(Plane plane) {
  return plane == Plane::coronal ? "coronal" : "axial";
}

MaskVolume erode6(const MaskVolume& mask) {
  MaskVolume out;
  out.dims = mask.dims;
  out.spacing = mask.spacing;
  out.orientation = mask.orientation;
  out.bits.assign(mask.bits.size(), 0);

  const int ni = mask.dims[0], nj = mask.dims[1], nk = mask.dims[2];
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < nj; ++j)
      for (int i = 0; i < ni; ++i) {
        if (!mask.at(i, j, k)) continue;
        // Border voxels fail immediately: a missing neighbor is background.
        if (i == 0 || i == ni - 1 || j == 0 || j == nj - 1 || k == 0 || k == nk - 1)
          continue;
        if (mask.at(i - 1, j, k) && mask.at(i + 1, j, k) && mask.at(i, j - 1, k) &&
            mask.at(i, j + 1, k) && mask.at(i, j, k - 1) && mask.at(i, j, k + 1))
          out.bits[out.index(i, j, k)] = 1;
      }
  return out;
}

PointCloud surface_points(const MaskVolume& mask) {
  bool any = false;
  for (std::uint8_t b : mask.bits)
    if (b) {
      any = true;
      break;
    }
  if (!any) throw std::runtime_error("empty mask");

  const MaskVolume eroded = erode6(mask);
  PointCloud cloud;
  cloud.frame = Frame::physical;
  // Lexicographic (i,j,k): i outermost so (0,0,0) < (0,0,1) < (0,1,0) < (1,0,0).
  for (int i = 0; i < mask.dims[0]; ++i)
    for (int j = 0; j < mask.dims[1]; ++j)
      for (int k = 0; k < mask.dims[2]; ++k)
        if (mask.at(i, j, k) && !eroded.at(i, j, k))
          cloud.points.emplace_back(i * mask.spacing[0], j * mask.spacing[1],
                                    k * mask.spacing[2]);
  return cloud;
}

int resolve_plane_axis(const MaskVolume& mask, Plane plane) {
  // Axial slices stack along superior-inferior (world axis 2); coronal along
  // anterior-posterior (world axis 1).
  const int wanted_world = plane == Plane::axial ? 2 : 1;
  if (mask.orientation) {
    for (int axis = 0; axis < 3; ++axis)
      if ((*mask.orientation)[axis].world_axis == wanted_world) return axis;
    throw std::runtime_error(std::string("cannot resolve ") + plane_name(plane) +
                             " plane to a volume axis");
  }
  std::cerr << "warning: no orientation metadata; assuming RAS-like axis order for "
            << plane_name(plane) << " slicing\n";
  return plane == Plane::axial ? 2 : 1;
}

Slice2D midpoint_masked_slice(const Volume& scan, const MaskVolume& mask, Plane plane) {
  if (scan.dims != mask.dims)
    throw std::runtime_error("scan and mask dimensions differ");

  const int axis = resolve_plane_axis(mask, plane);
  const int mid = mask.dims[axis] / 2;

  // Remaining axes in increasing index order: rows follow the first, columns
  // the second.
  int row_axis = -1, col_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (a == axis) continue;
    (row_axis < 0 ? row_axis : col_axis) = a;
  }

  Slice2D slice;
  slice.plane = plane;
  slice.slice_index = mid;
  slice.height = std::size_t(mask.dims[row_axis]);
  slice.width = std::size_t(mask.dims[col_axis]);
  slice.pixels.assign(slice.height * slice.width, 0.0);

  bool any = false;
  int idx[3];
  idx[axis] = mid;
  for (int r = 0; r < mask.dims[row_axis]; ++r) {
    idx[row_axis] = r;
    for (int c = 0; c < mask.dims[col_axis]; ++c) {
      idx[col_axis] = c;
      if (mask.at(idx[0], idx[1], idx[2])) {
        slice.pixels[std::size_t(r) * slice.width + c] = scan.at(idx[0], idx[1], idx[2]);
        any = true;
      }
    }
  }
  if (!any) throw std::runtime_error("structure absent at midpoint");
  return slice;
}

void export_slice(const Slice2D& slice, const std::filesystem::path& path) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double v : slice.pixels)
    if (v != 0.0) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      any = true;
    }
  if (!any) throw std::runtime_error("slice has no in-mask pixels");

  std::vector<std::uint8_t> gray(slice.pixels.size(), 0);
  const double span = hi - lo;
  for (std::size_t p = 0; p < slice.pixels.size(); ++p) {
    const double v = slice.pixels[p];
    if (v == 0.0) continue;
    // min == max degenerates to the top of the range; otherwise [1, 255] so
    // in-mask pixels never collide with the 0 background.
    gray[p] = span <= 0.0 ? 255
                          : std::uint8_t(std::lround(1.0 + 254.0 * (v - lo) / span));
  }
  write_gray8_png(path, slice.width, slice.height, gray);
}

namespace {

void append_float(std::string& out, float v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

void write_point_cloud_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  std::string body;
  body.reserve(cloud.size() * 32 + 256);
  body += "ply\nformat ascii 1.0\nelement vertex ";
  body += std::to_string(cloud.size());
  body +=
      "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const Vec3& p : cloud.points) {
    append_float(body, float(p.x()));
    body += ' ';
    append_float(body, float(p.y()));
    body += ' ';
    append_float(body, float(p.z()));
    body += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(body.data(), std::streamsize(body.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace volbench
