#include "dedup/synth.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include "dedup/coco.hpp"
#include "dedup/image_io.hpp"
#include "test_support.hpp"

namespace dedup {
namespace {

using testing::TempDir;

CorpusSpec small_spec(const TempDir& dir) {
  CorpusSpec spec;
  spec.seed = 5;
  spec.base_count = 40;
  spec.size = 64;
  spec.exact_dups = 10;
  spec.aug_dups = 15;
  spec.leaks = 8;
  spec.train_dir = dir / "train";
  spec.val_dir = dir / "val";
  spec.train_ann = dir / "train.json";
  spec.val_ann = dir / "val.json";
  return spec;
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[std::filesystem::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

TEST(Synth, BasesOnlyHasNoClusters) {
  TempDir dir("synth");
  CorpusSpec spec = small_spec(dir);
  spec.exact_dups = spec.aug_dups = spec.leaks = 0;
  spec.base_count = 100;
  const GroundTruth truth = generate(spec);
  EXPECT_EQ(truth.files.size(), 100u);
  const ExpectedOutcome e = expected_outcome(truth, AugmentMode::Paper6);
  EXPECT_TRUE(e.train_clusters.empty());
  EXPECT_TRUE(e.val_clusters.empty());
  EXPECT_EQ(e.train_unique + e.val_unique, 100u);
}

TEST(Synth, TenExactCopiesMakeClusterOfEleven) {
  TempDir dir("synth");
  CorpusSpec spec = small_spec(dir);
  spec.base_count = 1;
  spec.val_fraction = 0;
  spec.exact_dups = 10;
  spec.aug_dups = spec.leaks = 0;
  const GroundTruth truth = generate(spec);
  const ExpectedOutcome e = expected_outcome(truth, AugmentMode::Paper6);
  ASSERT_EQ(e.train_clusters.size(), 1u);
  EXPECT_EQ(e.train_clusters[0].size(), 11u);
  // Byte copies.
  const auto files = snapshot(spec.train_dir);
  for (const auto& [name, bytes] : files) EXPECT_EQ(bytes, files.begin()->second);
}

TEST(Synth, RegenerationIsByteIdentical) {
  TempDir a("synth"), b("synth");
  const GroundTruth ta = generate(small_spec(a));
  CorpusSpec sb = small_spec(b);
  sb.workers = 3;
  const GroundTruth tb = generate(sb);
  EXPECT_EQ(ground_truth_json(ta), ground_truth_json(tb));
  EXPECT_EQ(snapshot(a.path()), snapshot(b.path()));
}

TEST(Synth, FilesMatchLabels) {
  TempDir dir("synth");
  const CorpusSpec spec = small_spec(dir);
  const GroundTruth truth = generate(spec);
  EXPECT_EQ(truth.files.size(), 40u + 10 + 15 + 8);
  EXPECT_EQ(truth.leaks.size(), 8u);
  std::map<std::size_t, RgbImage> bases;
  for (const FileLabel& f : truth.files) {
    if (f.kind == FileKind::Base) bases.emplace(f.base, read_image((f.split == "train" ? spec.train_dir : spec.val_dir) / f.id));
  }
  ASSERT_EQ(bases.size(), 40u);
  std::map<Transform, int> aug_counts;
  for (const FileLabel& f : truth.files) {
    const RgbImage img = read_image((f.split == "train" ? spec.train_dir : spec.val_dir) / f.id);
    EXPECT_EQ(img, apply_transform(bases.at(f.base), f.transform)) << f.id;
    if (f.kind == FileKind::AugDup) ++aug_counts[f.transform];
  }
  EXPECT_EQ(aug_counts.size(), 5u);
  for (const auto& [t, n] : aug_counts) EXPECT_EQ(n, 3);
}

TEST(Synth, BaseOrbitsAreDisjoint) {
  TempDir dir("synth");
  CorpusSpec spec = small_spec(dir);
  spec.exact_dups = spec.aug_dups = spec.leaks = 0;
  spec.base_count = 150;
  const GroundTruth truth = generate(spec);
  std::set<std::uint64_t> all;
  for (const FileLabel& f : truth.files) {
    const auto set = hash_image(read_image((f.split == "train" ? spec.train_dir : spec.val_dir) / f.id), AugmentMode::Full8);
    for (const auto& [t, h] : set.hashes) EXPECT_TRUE(all.insert(h.bits).second);
  }
}

TEST(Synth, AnnotationsAreValidCoco) {
  TempDir dir("synth");
  const CorpusSpec spec = small_spec(dir);
  const GroundTruth truth = generate(spec);
  Warnings w;
  const CocoDataset train = read_coco(*spec.train_ann, w);
  const CocoDataset val = read_coco(*spec.val_ann, w);
  EXPECT_TRUE(w.empty());
  EXPECT_EQ(train.images.size() + val.images.size(), truth.files.size());
  EXPECT_TRUE(integrity_violations(train).empty());
  EXPECT_FALSE(train.annotations.empty());
}

TEST(Synth, RejectsImpossibleSpecs) {
  TempDir dir("synth");
  CorpusSpec spec = small_spec(dir);
  spec.leaks = 100;
  EXPECT_THROW(generate(spec), InvalidInput);
  spec = small_spec(dir);
  spec.size = 8;
  EXPECT_THROW(generate(spec), InvalidInput);
}

TEST(Synth, ExpectedOutcomeOnHandBuiltLabels) {
  // Base 0 in train as identity, FlipH and FlipDiag; base 1 in val, leaked
  // into train as Rot90.
  GroundTruth t;
  t.files = {{"a", "train", 0, Transform::Identity, FileKind::Base},
             {"b", "train", 0, Transform::FlipH, FileKind::AugDup},
             {"c", "train", 0, Transform::FlipDiag, FileKind::AugDup},
             {"d", "train", 1, Transform::Rot90, FileKind::Leak},
             {"e", "val", 1, Transform::Identity, FileKind::Base}};
  const ExpectedOutcome p6 = expected_outcome(t, AugmentMode::Paper6);
  // c is not a paper6 image of a, but it is a quarter turn of b, so all
  // three end up in one cluster.
  ASSERT_EQ(p6.train_clusters.size(), 1u);
  EXPECT_EQ(p6.train_clusters[0], (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(p6.train_unique, 2u);
  EXPECT_EQ(p6.removed, (std::vector<std::pair<std::string, std::string>>{{"d", "e"}}));
  EXPECT_EQ(p6.leakage[0].matched, 0u);  // exact Val -> Train
  EXPECT_EQ(p6.leakage[2].matched, 1u);  // augmented
  EXPECT_EQ(p6.leakage[3].haystack_total, 24u);
}

}  // namespace
}  // namespace dedup
