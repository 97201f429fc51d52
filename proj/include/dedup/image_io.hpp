#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "dedup/image.hpp"

namespace dedup {

enum class ImageFormat { Png, Jpeg };

struct ImageInfo {
  ImageFormat format = ImageFormat::Png;
  std::size_t width = 0;
  std::size_t height = 0;
};

// True for .png, .jpg and .jpeg (any case).
bool has_image_extension(const std::filesystem::path& path);

// Reads only the file header. Returns nullopt if the file is not a PNG or
// JPEG with a parseable size.
std::optional<ImageInfo> probe_image(const std::filesystem::path& path);

// Full decode to 8-bit RGB; gray and palette images are expanded, alpha is
// dropped. Throws InvalidInput on unreadable or corrupt data.
RgbImage read_image(const std::filesystem::path& path);

// Lossless PNG. `fast` trades compression ratio for speed.
void write_png(const std::filesystem::path& path, const RgbImage& img, bool fast = true);

// Baseline JPEG (lossy); used for fixtures only.
void write_jpeg(const std::filesystem::path& path, const RgbImage& img, int quality = 95);

}  // namespace dedup
