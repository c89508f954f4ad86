#include "volbench/mesh_io.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "volbench/rng.hpp"

namespace volbench {
namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void check_finite(const Vec3& p, const std::filesystem::path& path, std::size_t line) {
  if (!p.allFinite()) fail(path, line, "non-finite vertex coordinate");
}

// --- OBJ ---------------------------------------------------------------

// One face corner: "i", "i/t", "i//n", "i/t/n". Only the vertex index matters.
std::uint32_t resolve_obj_index(const std::string& token, std::size_t num_vertices,
                                const std::filesystem::path& path, std::size_t line) {
  const std::string head = token.substr(0, token.find('/'));
  long idx = 0;
  try {
    idx = std::stol(head);
  } catch (const std::exception&) {
    fail(path, line, "malformed face index '" + token + "'");
  }
  // OBJ indices are 1-based; negative counts back from the end.
  const long resolved = idx > 0 ? idx - 1 : long(num_vertices) + idx;
  if (idx == 0 || resolved < 0 || resolved >= long(num_vertices))
    fail(path, line, "face index " + std::to_string(idx) + " out of range (file has " +
                         std::to_string(num_vertices) + " vertices)");
  return std::uint32_t(resolved);
}

MeshOrCloud load_obj(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  TriangleMesh mesh;
  std::string line_text;
  std::size_t line = 0;
  while (std::getline(in, line_text)) {
    ++line;
    std::istringstream ls(line_text);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) fail(path, line, "malformed vertex record");
      check_finite(p, path, line);
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::uint32_t> corners;
      std::string token;
      while (ls >> token)
        corners.push_back(resolve_obj_index(token, mesh.vertices.size(), path, line));
      if (corners.size() < 3) fail(path, line, "face with fewer than 3 vertices");
      // Fan triangulation from the first corner.
      for (std::size_t c = 1; c + 1 < corners.size(); ++c)
        mesh.triangles.push_back({corners[0], corners[c], corners[c + 1]});
    }
    // vt/vn/usemtl/mtllib/o/g/s and anything else: geometry-irrelevant.
  }
  if (mesh.triangles.empty()) {
    PointCloud cloud;
    cloud.points = std::move(mesh.vertices);
    return cloud;
  }
  return mesh;
}

// --- PLY ---------------------------------------------------------------

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

PlyType parse_ply_type(const std::string& name, const std::filesystem::path& path,
                       std::size_t line) {
  if (name == "char" || name == "int8") return PlyType::i8;
  if (name == "uchar" || name == "uint8") return PlyType::u8;
  if (name == "short" || name == "int16") return PlyType::i16;
  if (name == "ushort" || name == "uint16") return PlyType::u16;
  if (name == "int" || name == "int32") return PlyType::i32;
  if (name == "uint" || name == "uint32") return PlyType::u32;
  if (name == "float" || name == "float32") return PlyType::f32;
  if (name == "double" || name == "float64") return PlyType::f64;
  fail(path, line, "unknown PLY property type '" + name + "'");
}

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
  }
  return 0;
}

struct PlyProperty {
  bool is_list = false;
  PlyType count_type = PlyType::u8;
  PlyType value_type = PlyType::f32;
  std::string name;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

// Little-endian scalar decode from a raw byte cursor.
class BinaryCursor {
 public:
  BinaryCursor(const char* data, std::size_t size, const std::filesystem::path& path)
      : data_(data), size_(size), path_(path) {}

  double read(PlyType t) {
    const std::size_t n = ply_type_size(t);
    if (pos_ + n > size_)
      throw std::runtime_error(path_.string() + ": truncated binary PLY data");
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < n; ++b)
      bits |= std::uint64_t(std::uint8_t(data_[pos_ + b])) << (8 * b);
    pos_ += n;
    switch (t) {
      case PlyType::i8: return double(std::int8_t(bits));
      case PlyType::u8: return double(std::uint8_t(bits));
      case PlyType::i16: return double(std::int16_t(bits));
      case PlyType::u16: return double(std::uint16_t(bits));
      case PlyType::i32: return double(std::int32_t(bits));
      case PlyType::u32: return double(std::uint32_t(bits));
      case PlyType::f32: return double(std::bit_cast<float>(std::uint32_t(bits)));
      case PlyType::f64: return std::bit_cast<double>(bits);
    }
    return 0.0;
  }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  const std::filesystem::path& path_;
};

// Whitespace-token cursor for the ascii body.
class AsciiCursor {
 public:
  AsciiCursor(const char* data, std::size_t size, const std::filesystem::path& path)
      : in_(std::string(data, size)), path_(path) {}

  double read(PlyType) {
    double v;
    if (!(in_ >> v)) throw std::runtime_error(path_.string() + ": truncated ascii PLY data");
    return v;
  }

 private:
  std::istringstream in_;
  const std::filesystem::path& path_;
};

MeshOrCloud load_ply(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t cursor = 0;
  std::size_t line = 0;
  auto next_line = [&]() -> std::string {
    const std::size_t nl = bytes.find('\n', cursor);
    if (nl == std::string::npos) fail(path, line, "unterminated PLY header");
    std::string text = bytes.substr(cursor, nl - cursor);
    if (!text.empty() && text.back() == '\r') text.pop_back();
    cursor = nl + 1;
    ++line;
    return text;
  };

  if (next_line() != "ply") fail(path, line, "missing 'ply' magic");

  bool binary = false;
  bool saw_format = false;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::string text = next_line();
    std::istringstream ls(text);
    std::string tag;
    if (!(ls >> tag) || tag == "comment" || tag == "obj_info") continue;
    if (tag == "end_header") break;
    if (tag == "format") {
      std::string kind;
      ls >> kind;
      if (kind == "ascii") binary = false;
      else if (kind == "binary_little_endian") binary = true;
      else if (kind == "binary_big_endian")
        fail(path, line, "big-endian PLY is not supported");
      else fail(path, line, "unknown PLY format '" + kind + "'");
      saw_format = true;
    } else if (tag == "element") {
      PlyElement el;
      if (!(ls >> el.name >> el.count)) fail(path, line, "malformed element record");
      elements.push_back(std::move(el));
    } else if (tag == "property") {
      if (elements.empty()) fail(path, line, "property before any element");
      PlyProperty prop;
      std::string first;
      ls >> first;
      if (first == "list") {
        prop.is_list = true;
        std::string count_t, value_t;
        if (!(ls >> count_t >> value_t >> prop.name))
          fail(path, line, "malformed list property");
        prop.count_type = parse_ply_type(count_t, path, line);
        prop.value_type = parse_ply_type(value_t, path, line);
      } else {
        prop.value_type = parse_ply_type(first, path, line);
        if (!(ls >> prop.name)) fail(path, line, "malformed property record");
      }
      elements.back().props.push_back(std::move(prop));
    } else {
      fail(path, line, "unknown PLY header record '" + tag + "'");
    }
  }
  if (!saw_format) fail(path, line, "PLY header has no format record");

  TriangleMesh mesh;
  auto parse_body = [&](auto& body) {
    for (const PlyElement& el : elements) {
      const bool is_vertex = el.name == "vertex";
      const bool is_face = el.name == "face";
      int xi = -1, yi = -1, zi = -1, fi = -1;
      for (std::size_t p = 0; p < el.props.size(); ++p) {
        const PlyProperty& prop = el.props[p];
        if (is_vertex && !prop.is_list) {
          if (prop.name == "x") xi = int(p);
          else if (prop.name == "y") yi = int(p);
          else if (prop.name == "z") zi = int(p);
        }
        if (is_face && prop.is_list && fi < 0 &&
            (prop.name == "vertex_indices" || prop.name == "vertex_index"))
          fi = int(p);
      }
      if (is_vertex && (xi < 0 || yi < 0 || zi < 0))
        throw std::runtime_error(path.string() + ": vertex element lacks x/y/z");

      for (std::size_t e = 0; e < el.count; ++e) {
        Vec3 v = Vec3::Zero();
        for (std::size_t p = 0; p < el.props.size(); ++p) {
          const PlyProperty& prop = el.props[p];
          if (!prop.is_list) {
            const double value = body.read(prop.value_type);
            if (int(p) == xi) v.x() = value;
            else if (int(p) == yi) v.y() = value;
            else if (int(p) == zi) v.z() = value;
            continue;
          }
          const double count_raw = body.read(prop.count_type);
          const long count = std::lround(count_raw);
          if (count < 0) throw std::runtime_error(path.string() + ": negative list count");
          std::vector<std::uint32_t> indices;
          for (long c = 0; c < count; ++c) {
            const double value = body.read(prop.value_type);
            if (int(p) == fi) {
              const long idx = std::lround(value);
              if (idx < 0 || std::size_t(idx) >= mesh.vertices.size())
                throw std::runtime_error(path.string() + ": face index " +
                                         std::to_string(idx) + " out of range");
              indices.push_back(std::uint32_t(idx));
            }
          }
          if (int(p) == fi) {
            if (indices.size() < 3)
              throw std::runtime_error(path.string() + ": face with fewer than 3 vertices");
            for (std::size_t c = 1; c + 1 < indices.size(); ++c)
              mesh.triangles.push_back({indices[0], indices[c], indices[c + 1]});
          }
        }
        if (is_vertex) {
          check_finite(v, path, line);
          mesh.vertices.push_back(v);
        }
      }
    }
  };

  if (binary) {
    BinaryCursor body(bytes.data() + cursor, bytes.size() - cursor, path);
    parse_body(body);
  } else {
    AsciiCursor body(bytes.data() + cursor, bytes.size() - cursor, path);
    parse_body(body);
  }

  if (mesh.triangles.empty()) {
    PointCloud cloud;
    cloud.points = std::move(mesh.vertices);
    return cloud;
  }
  return mesh;
}

}  // namespace

MeshOrCloud load_mesh(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  if (ext == ".obj") return load_obj(path);
  if (ext == ".ply") return load_ply(path);
  throw std::runtime_error("unknown mesh extension '" + ext + "' for " + path.string() +
                           " (expected .obj or .ply)");
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw std::runtime_error("mesh has zero total surface area");

  PointCloud cloud;
  cloud.points.reserve(n);
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < n; ++s) {
    const double r = uniform01(rng) * total;
    std::size_t t = std::size_t(
        std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    if (t >= cumulative.size()) t = cumulative.size() - 1;
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    double u = uniform01(rng);
    double v = uniform01(rng);
    // Fold the unit square onto the barycentric triangle u + v <= 1.
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    cloud.points.emplace_back(a + u * (b - a) + v * (c - a));
  }
  return cloud;
}

PointCloud mesh_vertices(const TriangleMesh& mesh) {
  PointCloud cloud;
  cloud.points = mesh.vertices;
  return cloud;
}

}  // namespace volbench
