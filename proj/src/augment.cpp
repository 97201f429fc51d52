#include "dedup/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dedup/error.hpp"

namespace dedup {
namespace {

// Every element of D4 written as: optionally transpose, then optionally
// mirror rows (top-bottom) and columns (left-right) of the result.
struct Geometry {
  bool transpose;
  bool flip_rows;
  bool flip_cols;
};

constexpr Geometry geometry(Transform t) {
  switch (t) {
    case Transform::Identity: return {false, false, false};
    case Transform::Rot90: return {true, false, true};
    case Transform::Rot180: return {false, true, true};
    case Transform::Rot270: return {true, true, false};
    case Transform::FlipH: return {false, false, true};
    case Transform::FlipV: return {false, true, false};
    case Transform::FlipDiag: return {true, false, false};
    case Transform::FlipAnti: return {true, true, true};
  }
  return {false, false, false};
}

constexpr std::array<std::string_view, 8> kNames = {
    "identity", "rot90", "rot180", "rot270", "flip_h", "flip_v", "flip_diag", "flip_anti",
};

using CompositionTable = std::array<std::array<Transform, 8>, 8>;

// Derived from the pixel action on a 3x3 image with distinct labels.
CompositionTable build_composition_table() {
  RgbImage probe(3, 3);
  for (std::uint8_t i = 0; i < 9; ++i) {
    probe.at(i / 3, i % 3) = Rgb{i, 0, 0};
  }
  CompositionTable table{};
  for (Transform t : kAllTransforms) {
    for (Transform s : kAllTransforms) {
      const RgbImage both = apply_transform(apply_transform(probe, s), t);
      const auto match = std::find_if(kAllTransforms.begin(), kAllTransforms.end(),
                                      [&](Transform c) { return apply_transform(probe, c) == both; });
      table[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = *match;
    }
  }
  return table;
}

// Smooth multi-frequency pattern plus a little per-pixel jitter.
RgbImage probe_image(std::uint64_t seed, std::size_t size) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<std::array<Wave, 6>, 3> waves{};
  for (auto& channel : waves) {
    for (auto& w : channel) {
      w = {unit(rng) * 4.0, unit(rng) * 4.0, unit(rng) * 2.0 * std::numbers::pi,
           20.0 + unit(rng) * 30.0};
    }
  }
  RgbImage img(size, size);
  const double scale = 1.0 / static_cast<double>(size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      std::array<std::uint8_t, 3> rgb{};
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double value = 128.0 + (unit(rng) - 0.5) * 16.0;
        for (const Wave& w : waves[ch]) {
          value += w.amp * std::sin(2.0 * std::numbers::pi *
                                        (w.fx * static_cast<double>(c) + w.fy * static_cast<double>(r)) *
                                        scale +
                                    w.phase);
        }
        rgb[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
      }
      img.at(r, c) = {rgb[0], rgb[1], rgb[2]};
    }
  }
  return img;
}

void require_square(const RgbImage& img, std::string_view what) {
  if (!img.square()) {
    throw UnsupportedInput(std::string(what) + " requires a square image, got " +
                           std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
}

}  // namespace

std::span<const Transform> transforms_for(AugmentMode mode) {
  return std::span<const Transform>(kAllTransforms).first(static_cast<std::size_t>(mode));
}

bool in_mode(Transform t, AugmentMode mode) {
  return static_cast<std::size_t>(t) < static_cast<std::size_t>(mode);
}

std::string_view to_string(Transform t) {
  return kNames[static_cast<std::size_t>(t)];
}

Transform transform_from_string(std::string_view name) {
  for (Transform t : kAllTransforms) {
    if (to_string(t) == name) {
      return t;
    }
  }
  throw InvalidInput("unknown transform '" + std::string(name) + "'");
}

std::string_view to_string(AugmentMode mode) {
  return mode == AugmentMode::Paper6 ? "paper6" : "full8";
}

AugmentMode augment_mode_from_string(std::string_view name) {
  if (name == "paper6") return AugmentMode::Paper6;
  if (name == "full8") return AugmentMode::Full8;
  throw InvalidInput("unknown augmentation mode '" + std::string(name) + "'");
}

Transform compose(Transform t, Transform s) {
  static const CompositionTable table = build_composition_table();
  return table[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
}

Transform inverse(Transform t) {
  for (Transform s : kAllTransforms) {
    if (compose(s, t) == Transform::Identity) {
      return s;
    }
  }
  throw InvariantViolation("transform without inverse");
}

RgbImage apply_transform(const RgbImage& img, Transform t) {
  if (img.empty()) {
    throw InvalidInput("cannot transform an empty image");
  }
  const Geometry g = geometry(t);
  if (g.transpose) {
    require_square(img, to_string(t));
  }
  const std::size_t H = img.height();
  const std::size_t W = img.width();
  RgbImage out(W, H);
  for (std::size_t r = 0; r < H; ++r) {
    const std::size_t rr = g.flip_rows ? H - 1 - r : r;
    for (std::size_t c = 0; c < W; ++c) {
      const std::size_t cc = g.flip_cols ? W - 1 - c : c;
      out.at(r, c) = g.transpose ? img.at(cc, rr) : img.at(rr, cc);
    }
  }
  return out;
}

LowFreqBlock transform_block(const LowFreqBlock& block, Transform t) {
  const Geometry g = geometry(t);
  LowFreqBlock out;
  for (std::size_t u = 0; u < kLowFreqSize; ++u) {
    for (std::size_t v = 0; v < kLowFreqSize; ++v) {
      // Mirroring an axis multiplies its odd frequencies by -1.
      const bool negate = ((g.flip_rows && u % 2 == 1) != (g.flip_cols && v % 2 == 1));
      const double value = g.transpose ? block(v, u) : block(u, v);
      out(u, v) = negate ? -value : value;
    }
  }
  return out;
}

PerceptualHash transform_hash_fast(const LowFreqBlock& block, Transform t) {
  return threshold_hash(transform_block(block, t));
}

PerceptualHash AugmentedHashSet::identity() const {
  if (hashes.empty() || hashes.front().first != Transform::Identity) {
    throw InvalidState("hash set for '" + id + "' has no identity entry");
  }
  return hashes.front().second;
}

std::optional<PerceptualHash> AugmentedHashSet::find(Transform t) const {
  for (const auto& [transform, hash] : hashes) {
    if (transform == t) {
      return hash;
    }
  }
  return std::nullopt;
}

bool AugmentedHashSet::contains(PerceptualHash h) const {
  return std::any_of(hashes.begin(), hashes.end(), [h](const auto& entry) { return entry.second == h; });
}

AugmentMode AugmentedHashSet::mode() const {
  return hashes.size() == 8 ? AugmentMode::Full8 : AugmentMode::Paper6;
}

AugmentedHashSet augmented_hash_set(const RgbImage& img, AugmentMode mode, std::string id) {
  require_square(img, "augmented hashing");
  AugmentedHashSet set{std::move(id), {}};
  for (Transform t : transforms_for(mode)) {
    set.hashes.emplace_back(t, compute_phash(apply_transform(img, t)));
  }
  return set;
}

AugmentedHashSet augmented_hash_set_fast(const RgbImage& img, AugmentMode mode, std::string id) {
  require_square(img, "augmented hashing");
  const LowFreqBlock block = low_freq_block(img);
  AugmentedHashSet set{std::move(id), {}};
  for (Transform t : transforms_for(mode)) {
    set.hashes.emplace_back(t, transform_hash_fast(block, t));
  }
  return set;
}

std::size_t fast_path_mismatches() {
  constexpr std::array<std::size_t, 8> kSizes = {300, 300, 257, 100, 64, 37, 32, 7};
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < kSizes.size(); ++i) {
    const RgbImage img = probe_image(0x9e3779b97f4a7c15ULL + i, kSizes[i]);
    const AugmentedHashSet pixel = augmented_hash_set(img, AugmentMode::Full8);
    const AugmentedHashSet fast = augmented_hash_set_fast(img, AugmentMode::Full8);
    for (std::size_t k = 0; k < pixel.hashes.size(); ++k) {
      if (pixel.hashes[k] != fast.hashes[k]) {
        ++mismatches;
      }
    }
  }
  return mismatches;
}

bool fast_path_enabled() {
  static const bool enabled = fast_path_mismatches() == 0;
  return enabled;
}

AugmentedHashSet hash_image(const RgbImage& img, AugmentMode mode, std::string id) {
  return fast_path_enabled() ? augmented_hash_set_fast(img, mode, std::move(id))
                             : augmented_hash_set(img, mode, std::move(id));
}

}  // namespace dedup
