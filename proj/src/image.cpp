#include "dedup/image.hpp"

#include <string>

#include "dedup/error.hpp"

namespace dedup {
namespace {

void check_extent(std::size_t width, std::size_t height, std::size_t count) {
  if (width == 0 || height == 0) {
    throw InvalidInput("image has zero extent");
  }
  if (count != width * height) {
    throw InvalidInput("pixel count " + std::to_string(count) + " does not match " +
                       std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

RgbImage::RgbImage(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), pixels_(width * height, fill) {
  check_extent(width, height, pixels_.size());
}

RgbImage::RgbImage(std::size_t width, std::size_t height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_extent(width, height, pixels_.size());
}

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), values_(width * height, fill) {
  check_extent(width, height, values_.size());
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_extent(width, height, values_.size());
}

}  // namespace dedup
