#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dedup/augment.hpp"
#include "dedup/pipeline.hpp"

namespace dedup {

struct CorpusSpec {
  std::uint64_t seed = 0;
  std::size_t base_count = 100;
  std::size_t size = 300;  // images are size x size
  // Byte copies of random train bases.
  std::size_t exact_dups = 0;
  // Pixel-exact transforms of random train bases, cycling Rot90, Rot180,
  // Rot270, FlipH, FlipV.
  std::size_t aug_dups = 0;
  // Copies of distinct val bases planted in train, cycling Identity and the
  // five transforms above.
  std::size_t leaks = 0;
  double val_fraction = 0.2;  // share of bases that live in val
  std::filesystem::path train_dir;
  std::filesystem::path val_dir;
  std::optional<std::filesystem::path> train_ann;
  std::optional<std::filesystem::path> val_ann;
  unsigned workers = 0;
};

enum class FileKind { Base, ExactDup, AugDup, Leak };

struct FileLabel {
  std::string id;
  std::string split;
  std::size_t base = 0;
  Transform transform = Transform::Identity;  // file = apply_transform(base, transform)
  FileKind kind = FileKind::Base;
};

struct GroundTruth {
  std::uint64_t seed = 0;
  std::size_t size = 0;
  std::vector<FileLabel> files;                         // sorted by (split, id)
  std::vector<std::pair<std::string, std::string>> leaks;  // (val id, train id)
};

// What the pipeline must report on a generated corpus, derived from the
// labels alone. Base orbits are pairwise disjoint and free, so two files share
// a hash exactly when they come from the same base through the same group
// element; everything follows from the composition table.
struct ExpectedOutcome {
  std::vector<std::vector<std::string>> train_clusters;  // multi-member only, sorted
  std::vector<std::vector<std::string>> val_clusters;
  std::size_t train_total = 0;
  std::size_t val_total = 0;
  std::size_t train_unique = 0;
  std::size_t val_unique = 0;
  std::vector<std::pair<std::string, std::string>> removed;  // (train id, smallest val id)
  std::vector<LeakageReport> leakage;                        // same rows as leakage_table()
};

// Writes the corpus and returns its labels. Deterministic in the spec: the
// same spec produces byte-identical files. A base whose eight dihedral
// hashes are not all distinct, or that shares one with an earlier base, is
// redrawn; after 32 failed draws generation throws InvariantViolation.
GroundTruth generate(const CorpusSpec& spec);

ExpectedOutcome expected_outcome(const GroundTruth& truth, AugmentMode mode);

// Ground truth plus the expected outcome for both modes.
std::string ground_truth_json(const GroundTruth& truth);

// Smooth random colour field with fine noise; deterministic in (seed, index).
RgbImage textured_image(std::size_t size, std::uint64_t seed, std::uint64_t index);

}  // namespace dedup
