#include "volbench/nifti.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace volbench {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kNifti2HeaderSize = 540;

// NIfTI-1 datatype codes.
enum : std::int16_t {
  kDtUint8 = 2,
  kDtInt16 = 4,
  kDtInt32 = 8,
  kDtFloat32 = 16,
  kDtFloat64 = 64,
  kDtUint16 = 512,
};

struct GzFile {
  gzFile f = nullptr;
  explicit GzFile(const std::filesystem::path& path) {
    f = gzopen(path.string().c_str(), "rb");
  }
  ~GzFile() {
    if (f) gzclose(f);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  // Read exactly n bytes; returns false on EOF/short read.
  bool read(void* dst, std::size_t n) {
    auto* p = static_cast<unsigned char*>(dst);
    while (n > 0) {
      const unsigned chunk = n > (1u << 30) ? (1u << 30) : unsigned(n);
      const int got = gzread(f, p, chunk);
      if (got <= 0) return false;
      p += got;
      n -= std::size_t(got);
    }
    return true;
  }

  bool skip(std::size_t n) {
    unsigned char scratch[4096];
    while (n > 0) {
      const unsigned chunk = n > sizeof scratch ? sizeof scratch : unsigned(n);
      const int got = gzread(f, scratch, chunk);
      if (got <= 0) return false;
      n -= std::size_t(got);
    }
    return true;
  }
};

std::uint16_t bswap16(std::uint16_t v) { return std::uint16_t((v >> 8) | (v << 8)); }
std::uint32_t bswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}
std::uint64_t bswap64(std::uint64_t v) {
  return (std::uint64_t(bswap32(std::uint32_t(v))) << 32) | bswap32(std::uint32_t(v >> 32));
}

// Field accessors over the raw 348-byte header, swapping on demand.
struct HeaderView {
  const unsigned char* raw;
  bool swap;

  std::int16_t i16(int offset) const {
    std::uint16_t v;
    std::memcpy(&v, raw + offset, 2);
    if (swap) v = bswap16(v);
    return std::bit_cast<std::int16_t>(v);
  }
  std::int32_t i32(int offset) const {
    std::uint32_t v;
    std::memcpy(&v, raw + offset, 4);
    if (swap) v = bswap32(v);
    return std::bit_cast<std::int32_t>(v);
  }
  float f32(int offset) const {
    std::uint32_t v;
    std::memcpy(&v, raw + offset, 4);
    if (swap) v = bswap32(v);
    return std::bit_cast<float>(v);
  }
};

std::size_t dtype_size(std::int16_t code) {
  switch (code) {
    case kDtUint8: return 1;
    case kDtInt16: return 2;
    case kDtUint16: return 2;
    case kDtInt32: return 4;
    case kDtFloat32: return 4;
    case kDtFloat64: return 8;
    default:
      throw std::runtime_error("unsupported NIfTI datatype code " + std::to_string(code));
  }
}

double decode_value(const unsigned char* p, std::int16_t code, bool swap) {
  switch (code) {
    case kDtUint8:
      return double(*p);
    case kDtInt16: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      if (swap) v = bswap16(v);
      return double(std::bit_cast<std::int16_t>(v));
    }
    case kDtUint16: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      if (swap) v = bswap16(v);
      return double(v);
    }
    case kDtInt32: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      if (swap) v = bswap32(v);
      return double(std::bit_cast<std::int32_t>(v));
    }
    case kDtFloat32: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      if (swap) v = bswap32(v);
      return double(std::bit_cast<float>(v));
    }
    case kDtFloat64: {
      std::uint64_t v;
      std::memcpy(&v, p, 8);
      if (swap) v = bswap64(v);
      return std::bit_cast<double>(v);
    }
    default:
      return 0.0;  // unreachable, dtype_size already validated
  }
}

// Snap each column of a 3x3 direction matrix to its dominant world axis.
std::optional<Orientation> snap_orientation(const double m[3][3]) {
  Orientation out;
  for (int col = 0; col < 3; ++col) {
    int best_row = 0;
    double best = 0.0;
    for (int row = 0; row < 3; ++row) {
      const double mag = std::fabs(m[row][col]);
      if (mag > best) {
        best = mag;
        best_row = row;
      }
    }
    if (best == 0.0) return std::nullopt;  // degenerate column
    out[col].world_axis = best_row;
    out[col].sign = m[best_row][col] >= 0.0 ? 1 : -1;
  }
  return out;
}

std::optional<Orientation> derive_orientation(const HeaderView& h) {
  const std::int16_t sform_code = h.i16(254);
  if (sform_code > 0) {
    double m[3][3];
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col)
        m[row][col] = double(h.f32(280 + 16 * row + 4 * col));
    return snap_orientation(m);
  }
  const std::int16_t qform_code = h.i16(252);
  if (qform_code > 0) {
    const double b = double(h.f32(256));
    const double c = double(h.f32(260));
    const double d = double(h.f32(264));
    const double a2 = 1.0 - (b * b + c * c + d * d);
    const double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
    double qfac = double(h.f32(76));  // pixdim[0]
    if (qfac == 0.0) qfac = 1.0;
    double r[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * b * c - 2 * a * d, 2 * b * d + 2 * a * c},
        {2 * b * c + 2 * a * d, a * a + c * c - b * b - d * d, 2 * c * d - 2 * a * b},
        {2 * b * d - 2 * a * c, 2 * c * d + 2 * a * b, a * a + d * d - b * b - c * c}};
    for (int row = 0; row < 3; ++row) r[row][2] *= qfac;
    return snap_orientation(r);
  }
  return std::nullopt;
}

}  // namespace

Volume parse_nifti(const std::filesystem::path& path) {
  GzFile file(path);
  if (!file.f) throw std::runtime_error("cannot open " + path.string());

  unsigned char raw[kHeaderSize];
  if (!file.read(raw, kHeaderSize))
    throw std::runtime_error(path.string() + ": truncated header");

  std::uint32_t hdr_size;
  std::memcpy(&hdr_size, raw, 4);
  bool swap = false;
  if (hdr_size == kHeaderSize) {
    swap = false;
  } else if (bswap32(hdr_size) == kHeaderSize) {
    swap = true;
  } else if (hdr_size == kNifti2HeaderSize || bswap32(hdr_size) == kNifti2HeaderSize) {
    throw std::runtime_error(path.string() + ": NIfTI-2 is not supported");
  } else {
    throw std::runtime_error(path.string() + ": not a NIfTI-1 file");
  }

  const char* magic = reinterpret_cast<const char*>(raw + 344);
  if (std::memcmp(magic, "ni1", 4) == 0)
    throw std::runtime_error(path.string() + ": .hdr/.img NIfTI-1 pairs are not supported");
  if (std::memcmp(magic, "n+1", 4) != 0)
    throw std::runtime_error(path.string() + ": not a NIfTI-1 file");

  const HeaderView h{raw, swap};
  const std::int16_t ndim = h.i16(40);
  if (ndim < 3)
    throw std::runtime_error(path.string() + ": fewer than 3 dimensions");
  if (ndim > 7) throw std::runtime_error(path.string() + ": corrupt dimension count");

  Volume vol;
  for (int a = 0; a < 3; ++a) {
    const std::int16_t d = h.i16(40 + 2 * (a + 1));
    if (d < 1) throw std::runtime_error(path.string() + ": non-positive dimension");
    vol.dims[a] = d;
    const float px = h.f32(76 + 4 * (a + 1));
    vol.spacing[a] = px != 0.0f ? std::fabs(double(px)) : 1.0;
  }

  const std::int16_t dtype = h.i16(70);
  const std::size_t elem = dtype_size(dtype);
  const float slope_f = h.f32(112);
  const float inter_f = h.f32(116);
  const double slope = double(slope_f);
  const double inter = double(inter_f);
  const bool scale = slope_f != 0.0f && !(slope_f == 1.0f && inter_f == 0.0f);

  const double vox_offset = double(h.f32(108));
  const long skip = long(vox_offset) - kHeaderSize;
  if (skip < 0) throw std::runtime_error(path.string() + ": bad voxel offset");
  if (skip > 0 && !file.skip(std::size_t(skip)))
    throw std::runtime_error(path.string() + ": truncated before data section");

  const std::size_t count =
      std::size_t(vol.dims[0]) * std::size_t(vol.dims[1]) * std::size_t(vol.dims[2]);
  std::vector<unsigned char> bytes(count * elem);
  if (!file.read(bytes.data(), bytes.size()))
    throw std::runtime_error(path.string() + ": truncated data section");

  vol.data.resize(count);
  for (std::size_t v = 0; v < count; ++v) {
    const double x = decode_value(bytes.data() + v * elem, dtype, swap);
    vol.data[v] = scale ? x * slope + inter : x;
  }

  vol.orientation = derive_orientation(h);
  return vol;
}

namespace {

MaskVolume to_mask(const Volume& vol) {
  MaskVolume mask;
  mask.dims = vol.dims;
  mask.spacing = vol.spacing;
  mask.orientation = vol.orientation;
  mask.bits.assign(vol.data.size(), 0);
  return mask;
}

}  // namespace

MaskVolume mask_from_volume(const Volume& vol, double threshold) {
  MaskVolume mask = to_mask(vol);
  bool any = false;
  for (std::size_t i = 0; i < vol.data.size(); ++i) {
    if (vol.data[i] > threshold) {
      mask.bits[i] = 1;
      any = true;
    }
  }
  if (!any) throw std::runtime_error("empty segmentation mask");
  return mask;
}

MaskVolume mask_from_volume_label(const Volume& vol, int label) {
  MaskVolume mask = to_mask(vol);
  bool any = false;
  for (std::size_t i = 0; i < vol.data.size(); ++i) {
    if (std::llround(vol.data[i]) == label) {
      mask.bits[i] = 1;
      any = true;
    }
  }
  if (!any)
    throw std::runtime_error("empty segmentation mask (no voxel with label " +
                             std::to_string(label) + ")");
  return mask;
}

MaskVolume read_mask(const std::filesystem::path& path, double threshold) {
  return mask_from_volume(parse_nifti(path), threshold);
}

MaskVolume read_mask_label(const std::filesystem::path& path, int label) {
  return mask_from_volume_label(parse_nifti(path), label);
}

}  // namespace volbench
