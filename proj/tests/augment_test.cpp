#include "dedup/augment.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "dedup/error.hpp"
#include "test_support.hpp"

namespace dedup {
namespace {

using testing::smooth_image;

RgbImage labeled(std::size_t w, std::size_t h) {
  RgbImage img(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      img.at(r, c) = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(c), 0};
  return img;
}

TEST(ApplyTransform, IdentityIsBitwiseCopy) {
  std::mt19937_64 rng(1);
  const RgbImage img = testing::noise_image(rng, 13, 9);
  EXPECT_EQ(apply_transform(img, Transform::Identity), img);
}

TEST(ApplyTransform, Rot90IsClockwise) {
  const Rgb a{1, 0, 0}, b{2, 0, 0}, c{3, 0, 0}, d{4, 0, 0};
  RgbImage img(2, 2);
  img.at(0, 0) = a;
  img.at(0, 1) = b;
  img.at(1, 0) = c;
  img.at(1, 1) = d;
  const RgbImage out = apply_transform(img, Transform::Rot90);
  EXPECT_EQ(out.at(0, 0), c);
  EXPECT_EQ(out.at(0, 1), a);
  EXPECT_EQ(out.at(1, 0), d);
  EXPECT_EQ(out.at(1, 1), b);
}

TEST(ApplyTransform, FlipsOnSmallImage) {
  const RgbImage img = labeled(3, 2);
  const RgbImage h = apply_transform(img, Transform::FlipH);
  const RgbImage v = apply_transform(img, Transform::FlipV);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(h.at(r, c), img.at(r, 2 - c));
      EXPECT_EQ(v.at(r, c), img.at(1 - r, c));
    }
  }
  const RgbImage t = apply_transform(labeled(4, 4), Transform::FlipDiag);
  const RgbImage a = apply_transform(labeled(4, 4), Transform::FlipAnti);
  EXPECT_EQ(t.at(1, 3), labeled(4, 4).at(3, 1));
  EXPECT_EQ(a.at(0, 1), labeled(4, 4).at(2, 3));
}

TEST(ApplyTransform, FourQuarterTurnsRestore) {
  std::mt19937_64 rng(2);
  const RgbImage img = testing::noise_image(rng, 300, 300);
  RgbImage x = img;
  for (int i = 0; i < 4; ++i) x = apply_transform(x, Transform::Rot90);
  EXPECT_EQ(x, img);
}

TEST(ApplyTransform, InverseRestores) {
  std::mt19937_64 rng(3);
  const RgbImage img = testing::noise_image(rng, 17, 17);
  for (Transform t : kAllTransforms) {
    EXPECT_EQ(apply_transform(apply_transform(img, t), inverse(t)), img) << to_string(t);
  }
  EXPECT_EQ(inverse(Transform::Rot90), Transform::Rot270);
  EXPECT_EQ(inverse(Transform::FlipH), Transform::FlipH);
}

TEST(ApplyTransform, NonSquareRotationUnsupported) {
  const RgbImage img = labeled(4, 3);
  EXPECT_THROW(apply_transform(img, Transform::Rot90), UnsupportedInput);
  EXPECT_THROW(apply_transform(img, Transform::Rot270), UnsupportedInput);
  EXPECT_THROW(apply_transform(img, Transform::FlipDiag), UnsupportedInput);
  EXPECT_NO_THROW(apply_transform(img, Transform::FlipH));
  EXPECT_NO_THROW(apply_transform(img, Transform::FlipV));
  EXPECT_NO_THROW(apply_transform(img, Transform::Rot180));
}

TEST(Group, CompositionMatchesPixelAction) {
  std::mt19937_64 rng(4);
  const RgbImage img = testing::noise_image(rng, 9, 9);
  for (Transform s : kAllTransforms) {
    for (Transform t : kAllTransforms) {
      ASSERT_EQ(apply_transform(apply_transform(img, s), t), apply_transform(img, compose(t, s)))
          << to_string(t) << " after " << to_string(s);
    }
  }
}

TEST(Group, DihedralLaws) {
  EXPECT_EQ(compose(Transform::Rot90, Transform::Rot270), Transform::Identity);
  EXPECT_EQ(compose(Transform::FlipH, Transform::FlipH), Transform::Identity);
  EXPECT_EQ(compose(Transform::Rot90, Transform::Rot90), Transform::Rot180);
  EXPECT_EQ(compose(Transform::FlipV, Transform::FlipH), Transform::Rot180);
  // Closure: the Cayley table is a Latin square.
  for (Transform t : kAllTransforms) {
    std::set<Transform> row;
    for (Transform s : kAllTransforms) row.insert(compose(t, s));
    EXPECT_EQ(row.size(), 8u);
  }
}

TEST(Group, SixElementSubsetIsNotClosed) {
  // A horizontal flip after a quarter turn is a diagonal reflection, which
  // the six-element augmentation set does not contain.
  const Transform diag = compose(Transform::FlipH, Transform::Rot90);
  EXPECT_FALSE(in_mode(diag, AugmentMode::Paper6));
  EXPECT_TRUE(in_mode(diag, AugmentMode::Full8));
  std::size_t outside = 0;
  for (Transform s : transforms_for(AugmentMode::Paper6))
    for (Transform t : transforms_for(AugmentMode::Paper6))
      if (!in_mode(compose(t, s), AugmentMode::Paper6)) ++outside;
  EXPECT_GT(outside, 0u);
}

TEST(Names, RoundTrip) {
  for (Transform t : kAllTransforms) EXPECT_EQ(transform_from_string(to_string(t)), t);
  EXPECT_EQ(augment_mode_from_string("paper6"), AugmentMode::Paper6);
  EXPECT_EQ(augment_mode_from_string("full8"), AugmentMode::Full8);
  EXPECT_THROW(augment_mode_from_string("full9"), InvalidInput);
  EXPECT_THROW(transform_from_string("rot45"), InvalidInput);
}

TEST(AugmentedSet, ConstantImage) {
  const RgbImage img(300, 300, Rgb{77, 77, 77});
  const AugmentedHashSet set = augmented_hash_set(img, AugmentMode::Paper6, "c");
  ASSERT_EQ(set.hashes.size(), 6u);
  for (const auto& [t, h] : set.hashes) EXPECT_EQ(h.bits, 0x8000000000000000ULL) << to_string(t);
  for (Transform t : kAllTransforms) {
    EXPECT_EQ(transform_hash_fast(low_freq_block(img), t).bits, 0x8000000000000000ULL);
  }
}

TEST(AugmentedSet, OrderAndSize) {
  std::mt19937_64 rng(6);
  const RgbImage img = smooth_image(rng, 64, 64);
  const AugmentedHashSet six = augmented_hash_set(img, AugmentMode::Paper6, "x");
  const AugmentedHashSet eight = augmented_hash_set(img, AugmentMode::Full8, "x");
  ASSERT_EQ(six.hashes.size(), 6u);
  ASSERT_EQ(eight.hashes.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(eight.hashes[i].first, kAllTransforms[i]);
  EXPECT_EQ(six.identity(), compute_phash(img));
  EXPECT_EQ(six.mode(), AugmentMode::Paper6);
  EXPECT_EQ(eight.mode(), AugmentMode::Full8);
  EXPECT_FALSE(six.find(Transform::FlipDiag).has_value());
  EXPECT_THROW(augmented_hash_set(labeled(5, 4), AugmentMode::Paper6), UnsupportedInput);
}

TEST(AugmentedSet, RotatedCopyFoundInSet) {
  std::mt19937_64 rng(8);
  const RgbImage a = smooth_image(rng, 300, 300);
  const RgbImage b = apply_transform(a, Transform::Rot90);
  const AugmentedHashSet set_a = augmented_hash_set(a, AugmentMode::Paper6);
  EXPECT_TRUE(set_a.contains(compute_phash(b)));
  EXPECT_EQ(*set_a.find(Transform::Rot90), compute_phash(b));
}

TEST(AugmentedSet, MatchesPerTransformPixelPath) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const RgbImage img = smooth_image(rng, 100 + trial * 13, 100 + trial * 13);
    const AugmentedHashSet set = augmented_hash_set(img, AugmentMode::Full8);
    for (const auto& [t, h] : set.hashes) {
      ASSERT_EQ(h.bits, testing::reference_phash(apply_transform(img, t))) << to_string(t);
    }
  }
}

TEST(FastPath, IdentityUnchanged) {
  std::mt19937_64 rng(10);
  const RgbImage img = smooth_image(rng, 300, 300);
  EXPECT_EQ(transform_hash_fast(low_freq_block(img), Transform::Identity), compute_phash(img));
}

TEST(FastPath, BlockMatchesPixelPathExactly) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {300, 301, 64, 45, 32, 3}) {
    const RgbImage img = smooth_image(rng, n, n);
    const LowFreqBlock block = low_freq_block(img);
    for (Transform t : kAllTransforms) {
      ASSERT_EQ(transform_block(block, t), low_freq_block(apply_transform(img, t)))
          << n << " " << to_string(t);
    }
  }
}

TEST(FastPath, SelfTestPasses) {
  EXPECT_EQ(fast_path_mismatches(), 0u);
  EXPECT_TRUE(fast_path_enabled());
}

TEST(FastPath, HashImageMatchesPixelPath) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const RgbImage img = smooth_image(rng, 120, 120);
    EXPECT_EQ(hash_image(img, AugmentMode::Full8, "i"), augmented_hash_set(img, AugmentMode::Full8, "i"));
  }
}

}  // namespace
}  // namespace dedup
