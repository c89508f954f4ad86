#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "volbench/point_cloud.hpp"

namespace volbench {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

using MeshOrCloud = std::variant<TriangleMesh, PointCloud>;

// Wavefront OBJ (ascii) or PLY (ascii / binary little-endian), chosen by
// extension. Files with faces load as meshes; vertex-only files load as
// point clouds. Texture/normal/material records are parsed and ignored.
MeshOrCloud load_mesh(const std::filesystem::path& path);

// n points drawn i.i.d. proportional to triangle area, uniform barycentric
// within each triangle. Deterministic under fixed seed. Throws when the
// total surface area is zero.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

// Vertex extraction, the alternative to surface sampling.
PointCloud mesh_vertices(const TriangleMesh& mesh);

}  // namespace volbench
