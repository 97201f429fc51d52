#include "dedup/coco.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace dedup {
namespace {

using testing::TempDir;

const char* kMinimal = R"({
  "images": [{"id": 7, "file_name": "000000041307.jpg", "width": 300, "height": 300}],
  "annotations": [{"id": 1, "image_id": 7, "category_id": 100,
                   "segmentation": [[1, 1, 10, 1, 10, 10]], "bbox": [1, 1, 9, 9], "area": 40.5, "iscrowd": 0}],
  "categories": [{"id": 100, "name": "building", "supercategory": "building"}]
})";

// 50 images named f<i>.png carrying i % 4 annotations each.
CocoDataset synthetic(std::size_t n = 50) {
  CocoDataset ds;
  ds.categories.push_back({100, "building", "building"});
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<std::int64_t>(i) * 3 + 11;
    ds.images.push_back({id, "f" + std::to_string(i) + ".png", 300, 300});
    for (std::size_t k = 0; k < i % 4; ++k) {
      const double x = static_cast<double>(k * 10);
      ds.annotations.push_back({static_cast<std::int64_t>(ds.annotations.size()) + 500, id, 100,
                                {{x, 0, x + 5, 0, x + 5, 5, x, 5}}, {x, 0, 5, 5}, 25.0, 0});
    }
  }
  return ds;
}

TEST(Coco, ReadsMinimalFile) {
  Warnings w;
  const CocoDataset ds = parse_coco(kMinimal, w);
  EXPECT_TRUE(w.empty());
  ASSERT_EQ(ds.images.size(), 1u);
  ASSERT_EQ(ds.annotations.size(), 1u);
  ASSERT_EQ(ds.categories.size(), 1u);
  EXPECT_EQ(ds.images[0].file_name, "000000041307.jpg");
  EXPECT_EQ(ds.annotations[0].segmentation[0].size(), 6u);
  EXPECT_DOUBLE_EQ(ds.annotations[0].area, 40.5);
}

TEST(Coco, DanglingAnnotationDroppedWithWarning) {
  Warnings w;
  const CocoDataset ds = parse_coco(R"({"images": [{"id": 1, "file_name": "a.png"}],
    "annotations": [{"id": 1, "image_id": 1}, {"id": 2, "image_id": 99}], "categories": []})",
                                    w);
  EXPECT_EQ(ds.annotations.size(), 1u);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].message.find("99"), std::string::npos);
}

TEST(Coco, InvalidRecordsDropped) {
  Warnings w;
  const CocoDataset ds = parse_coco(R"({"images": [{"id": 1, "file_name": "a.png"}, {"id": 1, "file_name": "b.png"}],
    "annotations": [{"id": 1, "image_id": 1, "segmentation": [[1, 2, 3, 4]]},
                    {"id": 2, "image_id": 1, "segmentation": [[1, 2, 3, 4, 5, 6, 7]]},
                    {"id": 3, "image_id": 1, "bbox": [0, 0, -1, 2]},
                    {"id": 4, "image_id": 1, "bbox": [0, 0, 1, 2]}],
    "categories": [{"id": 1}]})",
                                    w);
  EXPECT_EQ(ds.images.size(), 1u);
  ASSERT_EQ(ds.annotations.size(), 1u);
  EXPECT_EQ(ds.annotations[0].id, 4);
  EXPECT_TRUE(ds.categories.empty());
  EXPECT_EQ(w.size(), 5u);
}

TEST(Coco, MalformedJsonIsFatal) {
  Warnings w;
  EXPECT_THROW(parse_coco("{\"images\": [", w), InvalidInput);
  EXPECT_THROW(parse_coco("[]", w), InvalidInput);
  EXPECT_THROW(parse_coco(R"({"images": [], "annotations": []})", w), InvalidInput);
  TempDir dir("coco");
  EXPECT_THROW(read_coco(dir / "missing.json", w), InvalidInput);
}

TEST(Coco, RoundTripIsStructurallyEqual) {
  TempDir dir("coco");
  Warnings w;
  const CocoDataset ds = parse_coco(kMinimal, w);
  write_coco(ds, dir / "a.json");
  EXPECT_EQ(read_coco(dir / "a.json", w), ds);
  const CocoDataset big = synthetic();
  write_coco(big, dir / "b.json");
  EXPECT_EQ(read_coco(dir / "b.json", w), big);
  EXPECT_TRUE(w.empty());
}

TEST(Coco, OutputIsByteIdenticalAndOrdered) {
  const CocoDataset ds = synthetic(5);
  const std::string a = to_json_text(ds);
  EXPECT_EQ(a, to_json_text(ds));
  EXPECT_EQ(a.rfind("{\"images\":[{\"id\":11,\"file_name\":\"f0.png\",\"width\":300,\"height\":300}", 0), 0u);
  EXPECT_EQ(a.back(), '\n');
}

TEST(Coco, EmptyDatasetWritesSkeleton) {
  EXPECT_EQ(to_json_text(CocoDataset{}), "{\"images\":[],\"annotations\":[],\"categories\":[]}\n");
  Warnings w;
  EXPECT_EQ(parse_coco(to_json_text(CocoDataset{}), w), CocoDataset{});
}

TEST(Coco, FilterKeepAllIsIdentity) {
  const CocoDataset ds = synthetic();
  std::set<std::string> all;
  for (const auto& img : ds.images) all.insert(img.file_name);
  Warnings w;
  EXPECT_EQ(filter_coco(ds, all, w), ds);
  EXPECT_TRUE(w.empty());
}

TEST(Coco, FilterKeepNoneKeepsCategories) {
  const CocoDataset ds = synthetic();
  Warnings w;
  const CocoDataset out = filter_coco(ds, {}, w);
  EXPECT_TRUE(out.images.empty());
  EXPECT_TRUE(out.annotations.empty());
  EXPECT_EQ(out.categories, ds.categories);
}

TEST(Coco, FilterHalfMatchesCountingOracle) {
  const CocoDataset ds = synthetic();
  std::mt19937_64 rng(5);
  std::set<std::string> kept;
  std::size_t expected = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    if (rng() & 1) {
      kept.insert("f" + std::to_string(i) + ".png");
      expected += i % 4;
    }
  }
  Warnings w;
  const CocoDataset out = filter_coco(ds, kept, w);
  EXPECT_EQ(out.images.size(), kept.size());
  EXPECT_EQ(out.annotations.size(), expected);
  // Conservation: kept plus dropped annotations equals the input.
  EXPECT_EQ(ds.annotations.size(), out.annotations.size() + (ds.annotations.size() - expected));
  EXPECT_TRUE(integrity_violations(out).empty());
  for (const auto& img : out.images) EXPECT_EQ((img.id - 11) % 3, 0);  // ids preserved
}

TEST(Coco, FilterUnknownNameWarns) {
  Warnings w;
  const CocoDataset out = filter_coco(synthetic(3), {"f1.png", "ghost.png"}, w);
  EXPECT_EQ(out.images.size(), 1u);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].subject, "ghost.png");
}

TEST(Coco, DenseRemapRenumbers) {
  Warnings w;
  const CocoDataset out = filter_coco(synthetic(10), {"f3.png", "f7.png"}, w, true);
  ASSERT_EQ(out.images.size(), 2u);
  EXPECT_EQ(out.images[0].id, 1);
  EXPECT_EQ(out.images[1].id, 2);
  for (std::size_t k = 0; k < out.annotations.size(); ++k) EXPECT_EQ(out.annotations[k].id, static_cast<std::int64_t>(k) + 1);
  EXPECT_TRUE(integrity_violations(out).empty());
}

TEST(Coco, MergeRenumbersAndChecksCategories) {
  const CocoDataset a = synthetic(4), b = synthetic(6);
  const CocoDataset parts[] = {a, b};
  const CocoDataset m = merge_coco(parts);
  EXPECT_EQ(m.images.size(), 10u);
  EXPECT_EQ(m.annotations.size(), a.annotations.size() + b.annotations.size());
  EXPECT_EQ(m.categories.size(), 1u);
  EXPECT_TRUE(integrity_violations(m).empty());

  CocoDataset c = synthetic(1);
  c.categories[0].name = "road";
  const CocoDataset clash[] = {a, c};
  EXPECT_THROW(merge_coco(clash), InvalidInput);
}

TEST(Coco, IntegrityScanFindsViolations) {
  CocoDataset ds = synthetic(4);
  ds.annotations.push_back({999, 12345, 100, {{0, 0, 1, 1}}, {0, 0, -1, 1}, 0, 0});
  EXPECT_EQ(integrity_violations(ds).size(), 3u);
}

}  // namespace
}  // namespace dedup
