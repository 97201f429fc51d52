#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dedup/image.hpp"
#include "dedup/phash.hpp"

namespace dedup {

// Symmetries of the square. The first six are the augmentation set used for
// duplicate detection by default; FlipDiag (transpose) and FlipAnti
// (anti-transpose) complete the dihedral group. Declaration order is the
// fixed ordering used in hash sets and in the cache file.
enum class Transform : std::uint8_t {
  Identity = 0,
  Rot90 = 1,  // clockwise
  Rot180 = 2,
  Rot270 = 3,
  FlipH = 4,  // mirror left-right
  FlipV = 5,  // mirror top-bottom
  FlipDiag = 6,
  FlipAnti = 7,
};

inline constexpr std::array<Transform, 8> kAllTransforms = {
    Transform::Identity, Transform::Rot90, Transform::Rot180,   Transform::Rot270,
    Transform::FlipH,    Transform::FlipV, Transform::FlipDiag, Transform::FlipAnti,
};

enum class AugmentMode : std::uint8_t {
  Paper6 = 6,
  Full8 = 8,
};

std::span<const Transform> transforms_for(AugmentMode mode);
bool in_mode(Transform t, AugmentMode mode);

std::string_view to_string(Transform t);
Transform transform_from_string(std::string_view name);
std::string_view to_string(AugmentMode mode);
AugmentMode augment_mode_from_string(std::string_view name);

// Composition t after s: compose(t, s) applied to an image equals applying s
// first and then t.
Transform compose(Transform t, Transform s);
Transform inverse(Transform t);

// Lossless pixel permutation. Rot90, Rot270, FlipDiag and FlipAnti require a
// square image and throw UnsupportedInput otherwise.
RgbImage apply_transform(const RgbImage& img, Transform t);

// The low-frequency DCT block of apply_transform(img, t), derived from the
// block of img by sign flips and transposition.
LowFreqBlock transform_block(const LowFreqBlock& block, Transform t);

// Hash of apply_transform(img, t) computed from img's low-frequency block
// without touching pixels.
PerceptualHash transform_hash_fast(const LowFreqBlock& block, Transform t);

struct AugmentedHashSet {
  std::string id;
  // One entry per transform of the mode, in kAllTransforms order.
  std::vector<std::pair<Transform, PerceptualHash>> hashes;

  PerceptualHash identity() const;
  std::optional<PerceptualHash> find(Transform t) const;
  bool contains(PerceptualHash h) const;
  AugmentMode mode() const;

  bool operator==(const AugmentedHashSet&) const = default;
};

// Pixel path: one compute_phash per transform. Requires a square image.
AugmentedHashSet augmented_hash_set(const RgbImage& img, AugmentMode mode, std::string id = {});

// Same result via transform_hash_fast; one resize and DCT instead of one per
// transform.
AugmentedHashSet augmented_hash_set_fast(const RgbImage& img, AugmentMode mode,
                                         std::string id = {});

// Compares the fast path against the pixel path on built-in probe images for
// every transform. Returns the number of mismatching (probe, transform) pairs.
std::size_t fast_path_mismatches();

// True iff fast_path_mismatches() was zero. Evaluated once per process.
bool fast_path_enabled();

// Dispatches to the fast path when it is enabled, else the pixel path.
AugmentedHashSet hash_image(const RgbImage& img, AugmentMode mode, std::string id = {});

}  // namespace dedup
