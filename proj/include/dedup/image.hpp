#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dedup {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, Rgb fill = {});
  RgbImage(std::size_t width, std::size_t height, std::vector<Rgb> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool empty() const { return pixels_.empty(); }
  bool square() const { return width_ == height_; }

  Rgb& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }
  const Rgb& at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }

  std::span<const Rgb> pixels() const { return pixels_; }
  std::span<Rgb> pixels() { return pixels_; }

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<Rgb> pixels_;
};

// Real-valued luminance raster, row-major, values in [0, 255].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  GrayImage(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool empty() const { return values_.empty(); }

  double& at(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }
  double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
};

}  // namespace dedup
