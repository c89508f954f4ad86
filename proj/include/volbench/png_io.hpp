#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace volbench {

// 8-bit grayscale PNG, row-major pixels (height rows of width bytes).
// Writes are deterministic: same pixels, same bytes.
void write_gray8_png(const std::filesystem::path& path, std::size_t width,
                     std::size_t height, const std::vector<std::uint8_t>& pixels);

struct Gray8Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

Gray8Image read_gray8_png(const std::filesystem::path& path);

}  // namespace volbench
