// Generates the bundled synthetic phantom: two scan/mask NIfTI pairs plus
// exact / half-resolution / planar-flattened prediction meshes and a
// manifest. Self-contained on purpose (its own NIfTI and mesh writers) so
// fixtures are not produced by the code under test.

#include <zlib.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;
using Vec3 = std::array<double, 3>;

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

// --- NIfTI-1 writer ------------------------------------------------------

void put_i16(unsigned char* p, std::int16_t v) {
  p[0] = (unsigned char)(v & 0xff);
  p[1] = (unsigned char)((v >> 8) & 0xff);
}

void put_f32(unsigned char* p, float v) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) p[b] = (unsigned char)((bits >> (8 * b)) & 0xff);
}

// datatype 2 = uint8, 16 = float32
void write_nifti(const fs::path& path, const std::array<int, 3>& dims,
                 const std::array<double, 3>& spacing, int datatype,
                 const std::vector<double>& values) {
  unsigned char hdr[352] = {};
  put_i16(hdr + 0, 348);  // sizeof_hdr (low half; high half stays 0)
  put_i16(hdr + 40, 3);   // dim[0]
  for (int a = 0; a < 3; ++a) put_i16(hdr + 42 + 2 * a, (std::int16_t)dims[a]);
  for (int a = 3; a < 7; ++a) put_i16(hdr + 42 + 2 * a, 1);
  put_i16(hdr + 70, (std::int16_t)datatype);
  put_i16(hdr + 72, datatype == 2 ? 8 : 32);  // bitpix
  put_f32(hdr + 76, 1.0f);                    // pixdim[0] (qfac)
  for (int a = 0; a < 3; ++a) put_f32(hdr + 80 + 4 * a, (float)spacing[a]);
  put_f32(hdr + 108, 352.0f);  // vox_offset
  put_f32(hdr + 112, 1.0f);    // scl_slope
  put_f32(hdr + 116, 0.0f);    // scl_inter
  put_i16(hdr + 254, 1);       // sform_code: scanner-aligned RAS
  put_f32(hdr + 280, (float)spacing[0]);  // srow_x
  put_f32(hdr + 300, (float)spacing[1]);  // srow_y
  put_f32(hdr + 320, (float)spacing[2]);  // srow_z
  std::memcpy(hdr + 344, "n+1\0", 4);
  // bytes 348..351: extender, all zero

  std::vector<unsigned char> body;
  body.reserve(values.size() * (datatype == 2 ? 1 : 4));
  for (double v : values) {
    if (datatype == 2) {
      body.push_back((unsigned char)(v));
    } else {
      unsigned char b[4];
      put_f32(b, (float)v);
      body.insert(body.end(), b, b + 4);
    }
  }

  gzFile f = gzopen(path.string().c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  if (gzwrite(f, hdr, 352) != 352 ||
      gzwrite(f, body.data(), (unsigned)body.size()) != (int)body.size()) {
    gzclose(f);
    throw std::runtime_error("short write to " + path.string());
  }
  gzclose(f);
}

// --- mesh builders -------------------------------------------------------

Mesh uv_sphere(const Vec3& center, double radius, int segments, int rings) {
  Mesh mesh;
  mesh.vertices.push_back({center[0], center[1], center[2] + radius});  // north pole
  for (int r = 1; r < rings; ++r) {
    const double phi = M_PI * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double theta = 2.0 * M_PI * s / segments;
      mesh.vertices.push_back({center[0] + radius * std::sin(phi) * std::cos(theta),
                               center[1] + radius * std::sin(phi) * std::sin(theta),
                               center[2] + radius * std::cos(phi)});
    }
  }
  mesh.vertices.push_back({center[0], center[1], center[2] - radius});  // south pole

  const auto ring_vertex = [&](int r, int s) {
    return std::uint32_t(1 + (r - 1) * segments + (s % segments));
  };
  for (int s = 0; s < segments; ++s)
    mesh.triangles.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  for (int r = 1; r < rings - 1; ++r)
    for (int s = 0; s < segments; ++s) {
      const std::uint32_t a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const std::uint32_t c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      mesh.triangles.push_back({a, c, d});
      mesh.triangles.push_back({a, d, b});
    }
  const std::uint32_t south = std::uint32_t(mesh.vertices.size() - 1);
  for (int s = 0; s < segments; ++s)
    mesh.triangles.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
  return mesh;
}

Mesh box_mesh(const Vec3& lo, const Vec3& hi) {
  Mesh mesh;
  for (int c = 0; c < 8; ++c)
    mesh.vertices.push_back({c & 1 ? hi[0] : lo[0], c & 2 ? hi[1] : lo[1],
                             c & 4 ? hi[2] : lo[2]});
  const std::array<std::array<std::uint32_t, 4>, 6> faces = {{
      {0, 2, 3, 1},  // z = lo
      {4, 5, 7, 6},  // z = hi
      {0, 1, 5, 4},  // y = lo
      {2, 6, 7, 3},  // y = hi
      {0, 4, 6, 2},  // x = lo
      {1, 3, 7, 5},  // x = hi
  }};
  for (const auto& q : faces) {
    mesh.triangles.push_back({q[0], q[1], q[2]});
    mesh.triangles.push_back({q[0], q[2], q[3]});
  }
  return mesh;
}

Mesh scaled_about_centroid(Mesh mesh, const Vec3& factors) {
  Vec3 centroid{0, 0, 0};
  for (const Vec3& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) centroid[a] += v[a];
  for (int a = 0; a < 3; ++a) centroid[a] /= double(mesh.vertices.size());
  for (Vec3& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) v[a] = centroid[a] + (v[a] - centroid[a]) * factors[a];
  return mesh;
}

// --- mesh writers --------------------------------------------------------

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_obj(const Mesh& mesh, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "# synthetic phantom prediction\n";
  for (const Vec3& v : mesh.vertices)
    out << "v " << fmt(v[0]) << ' ' << fmt(v[1]) << ' ' << fmt(v[2]) << '\n';
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_ply_ascii(const Mesh& mesh, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nelement face "
      << mesh.triangles.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const Vec3& v : mesh.vertices)
    out << fmt(float(v[0])) << ' ' << fmt(float(v[1])) << ' ' << fmt(float(v[2])) << '\n';
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_ply_binary(const Mesh& mesh, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << mesh.vertices.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nelement face "
      << mesh.triangles.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const Vec3& v : mesh.vertices) {
    unsigned char b[12];
    for (int a = 0; a < 3; ++a) put_f32(b + 4 * a, (float)v[a]);
    out.write((const char*)b, 12);
  }
  for (const auto& t : mesh.triangles) {
    unsigned char b[13];
    b[0] = 3;
    for (int a = 0; a < 3; ++a) {
      const std::uint32_t idx = t[a];
      for (int byte = 0; byte < 4; ++byte)
        b[1 + 4 * a + byte] = (unsigned char)((idx >> (8 * byte)) & 0xff);
    }
    out.write((const char*)b, 13);
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// --- volumes -------------------------------------------------------------

std::size_t flat(const std::array<int, 3>& dims, int i, int j, int k) {
  return std::size_t(i) +
         std::size_t(dims[0]) * (std::size_t(j) + std::size_t(dims[1]) * std::size_t(k));
}

std::vector<double> smooth_scan(const std::array<int, 3>& dims) {
  std::vector<double> scan(std::size_t(dims[0]) * dims[1] * dims[2]);
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i)
        scan[flat(dims, i, j, k)] =
            200.0 + 50.0 * std::sin(0.31 * i) + 40.0 * std::cos(0.22 * j) +
            30.0 * std::sin(0.26 * k + 1.0);
  return scan;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_phantom <output-dir>\n";
    return 2;
  }
  const fs::path out_dir = argv[1];
  fs::create_directories(out_dir);

  try {
    // Sphere sample: anisotropic spacing, labeled mask (sphere = 2 plus a
    // decoy cube = 1 that label selection must ignore).
    {
      const std::array<int, 3> dims{40, 44, 36};
      const std::array<double, 3> sp{1.0, 0.8, 1.25};
      const Vec3 center{(dims[0] - 1) * sp[0] / 2, (dims[1] - 1) * sp[1] / 2,
                        (dims[2] - 1) * sp[2] / 2};
      const double radius = 12.0;

      std::vector<double> mask(std::size_t(dims[0]) * dims[1] * dims[2], 0.0);
      for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
          for (int i = 0; i < dims[0]; ++i) {
            const double dx = i * sp[0] - center[0];
            const double dy = j * sp[1] - center[1];
            const double dz = k * sp[2] - center[2];
            if (dx * dx + dy * dy + dz * dz <= radius * radius)
              mask[flat(dims, i, j, k)] = 2.0;
          }
      for (int k = 2; k < 6; ++k)
        for (int j = 2; j < 6; ++j)
          for (int i = 2; i < 6; ++i) mask[flat(dims, i, j, k)] = 1.0;

      write_nifti(out_dir / "sphere_mask.nii.gz", dims, sp, 2, mask);
      write_nifti(out_dir / "sphere_scan.nii.gz", dims, sp, 16, smooth_scan(dims));

      const Mesh exact = uv_sphere(center, radius, 48, 24);
      write_obj(exact, out_dir / "sphere_exact.obj");
      write_ply_binary(uv_sphere(center, radius, 10, 6), out_dir / "sphere_halfres.ply");
      // Depth collapse: flatten x to 2% of its extent.
      write_obj(scaled_about_centroid(exact, {0.02, 1.0, 1.0}),
                out_dir / "sphere_planar.obj");
    }

    // Box sample: unit spacing, plain 0/1 mask.
    {
      const std::array<int, 3> dims{32, 32, 32};
      const std::array<double, 3> sp{1.0, 1.0, 1.0};
      std::vector<double> mask(std::size_t(dims[0]) * dims[1] * dims[2], 0.0);
      for (int k = 8; k <= 23; ++k)
        for (int j = 8; j <= 23; ++j)
          for (int i = 8; i <= 23; ++i) mask[flat(dims, i, j, k)] = 1.0;

      write_nifti(out_dir / "box_mask.nii.gz", dims, sp, 2, mask);
      write_nifti(out_dir / "box_scan.nii.gz", dims, sp, 16, smooth_scan(dims));

      const Mesh exact = box_mesh({8, 8, 8}, {23, 23, 23});
      write_ply_ascii(exact, out_dir / "box_exact.ply");
      write_obj(scaled_about_centroid(exact, {0.95, 0.95, 0.95}),
                out_dir / "box_halfres.obj");
      write_obj(scaled_about_centroid(exact, {1.0, 0.02, 1.0}),
                out_dir / "box_planar.obj");
    }

    // Manifest. tau is widened to 0.1 because the phantom's voxel pitch in
    // normalized units (~0.07-0.13) dwarfs the default 0.01, and emd_cap is
    // lowered so reference assignment solvers stay fast on this fixture; the
    // defaults themselves are pinned by the config test, not by this fixture.
    nlohmann::json manifest;
    manifest["global_seed"] = 20240817;
    manifest["config"] = {{"tau", 0.1},
                          {"emd_cap", 128},
                          {"sample_points", 4096},
                          {"export_slices", true}};
    manifest["samples"] = nlohmann::json::array();
    manifest["samples"].push_back(
        {{"id", "sphere"},
         {"dataset", "phantom"},
         {"scan", "sphere_scan.nii.gz"},
         {"mask", "sphere_mask.nii.gz"},
         {"label", 2},
         {"plane", "coronal"},
         {"predictions",
          {{"exact", "sphere_exact.obj"},
           {"halfres", "sphere_halfres.ply"},
           {"planar", "sphere_planar.obj"}}}});
    manifest["samples"].push_back(
        {{"id", "box"},
         {"dataset", "phantom"},
         {"scan", "box_scan.nii.gz"},
         {"mask", "box_mask.nii.gz"},
         {"plane", "axial"},
         {"predictions",
          {{"exact", "box_exact.ply"},
           {"halfres", "box_halfres.obj"},
           {"planar", "box_planar.obj"}}}});

    std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
    mf << manifest.dump(2) << "\n";
    if (!mf) throw std::runtime_error("cannot write manifest.json");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "phantom written to " << out_dir.string() << "\n";
  return 0;
}
