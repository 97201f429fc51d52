#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>

#include "dedup/image.hpp"

namespace dedup {

inline constexpr std::size_t kDctSize = 32;
inline constexpr std::size_t kLowFreqSize = 8;

// Square block of real coefficients indexed (u, v): u is the row (vertical)
// frequency, v the column (horizontal) frequency, (0, 0) is DC.
template <std::size_t N>
struct CoefficientBlock {
  static constexpr std::size_t kSize = N;
  std::array<double, N * N> values{};

  double& operator()(std::size_t u, std::size_t v) { return values[u * N + v]; }
  double operator()(std::size_t u, std::size_t v) const { return values[u * N + v]; }

  bool operator==(const CoefficientBlock&) const = default;
};

using DctBlock = CoefficientBlock<kDctSize>;
using LowFreqBlock = CoefficientBlock<kLowFreqSize>;

// 64-bit perceptual hash. Coefficient (u, v) of the 8x8 low-frequency block
// maps to bit 63 - (8u + v): row-major, DC in the most significant bit.
struct PerceptualHash {
  std::uint64_t bits = 0;

  static constexpr int bit_index(std::size_t u, std::size_t v) {
    return 63 - static_cast<int>(u * kLowFreqSize + v);
  }
  bool bit(std::size_t u, std::size_t v) const { return (bits >> bit_index(u, v)) & 1U; }

  // "0x" followed by 16 lowercase hex digits.
  std::string hex() const;
  static PerceptualHash from_hex(const std::string& text);

  auto operator<=>(const PerceptualHash&) const = default;
};

int hamming_distance(PerceptualHash a, PerceptualHash b);

// BT.601 luma, L = 0.299 R + 0.587 G + 0.114 B. Evaluated as
// (299 R + 587 G + 114 B) / 1000 so every pixel rounds exactly once.
GrayImage to_grayscale(const RgbImage& img);

// Area (box) resampling to 32x32. Each output cell averages the source
// region it covers, weighting partially covered pixels by coverage. Exactly
// equivariant under flips, and under transposes of square inputs.
GrayImage resize_to_32(const GrayImage& img);

// Orthonormal 2D DCT-II of a 32x32 image. Throws InvalidInput otherwise.
DctBlock dct2d(const GrayImage& img);

// Orthonormal inverse (DCT-III) of dct2d.
GrayImage inverse_dct2d(const DctBlock& block);

LowFreqBlock low_freq(const DctBlock& block);

// Bit (u, v) is set iff coefficient (u, v) is strictly greater than the mean
// of all 64 coefficients (DC included).
PerceptualHash threshold_hash(const LowFreqBlock& block);

// Low-frequency block of the image: low_freq(dct2d(resize_to_32(to_grayscale(img)))).
LowFreqBlock low_freq_block(const RgbImage& img);

PerceptualHash compute_phash(const RgbImage& img);

}  // namespace dedup
