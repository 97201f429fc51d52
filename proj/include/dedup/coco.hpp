#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dedup/error.hpp"

namespace dedup {

struct CocoImage {
  std::int64_t id = 0;
  std::string file_name;
  std::int64_t width = 0;
  std::int64_t height = 0;

  bool operator==(const CocoImage&) const = default;
};

struct CocoAnnotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  // Flat x0, y0, x1, y1, ... coordinate lists, one per polygon.
  std::vector<std::vector<double>> segmentation;
  std::array<double, 4> bbox{};  // x, y, w, h
  double area = 0.0;
  int iscrowd = 0;

  bool operator==(const CocoAnnotation&) const = default;
};

struct CocoCategory {
  std::int64_t id = 0;
  std::string name;
  std::string supercategory;

  bool operator==(const CocoCategory&) const = default;
};

// The subset of MS-COCO used for polygon annotations. Fields outside this
// schema are not preserved.
struct CocoDataset {
  std::vector<CocoImage> images;
  std::vector<CocoAnnotation> annotations;
  std::vector<CocoCategory> categories;

  bool operator==(const CocoDataset&) const = default;
};

// Malformed JSON or a missing top-level array is fatal (InvalidInput).
// Records violating the schema invariants (dangling image_id, polygons with
// odd or fewer than 6 coordinates, negative bbox extent, repeated image id)
// are dropped with a warning each.
CocoDataset read_coco(const std::filesystem::path& path, Warnings& warnings);
CocoDataset parse_coco(const std::string& json_text, Warnings& warnings, const std::string& source = "<memory>");

// Keeps images whose file_name is in `kept`, and their annotations.
// Categories are untouched. Ids are preserved unless dense_remap, which
// renumbers images and annotations from 1 in their existing order. Names in
// `kept` that match no image produce a warning.
CocoDataset filter_coco(const CocoDataset& ds, const std::set<std::string>& kept, Warnings& warnings,
                        bool dense_remap = false);

// Concatenates datasets, renumbering image and annotation ids from 1.
// Categories are merged by id; the same id with different names throws
// InvalidInput.
CocoDataset merge_coco(std::span<const CocoDataset> parts);

// Fixed key order, compact, newline-terminated.
std::string to_json_text(const CocoDataset& ds);
void write_coco(const CocoDataset& ds, const std::filesystem::path& path);

// Referential-integrity and schema scan; one message per violation.
std::vector<std::string> integrity_violations(const CocoDataset& ds);

}  // namespace dedup
