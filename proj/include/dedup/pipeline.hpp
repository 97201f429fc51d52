#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dedup/augment.hpp"
#include "dedup/error.hpp"
#include "dedup/hash_index.hpp"

namespace dedup {

struct ImageRecord {
  std::string id;            // file name within its split directory
  std::string source_split;  // split the file was ingested from
  std::filesystem::path path;
  std::uint64_t byte_size = 0;
  std::optional<AugmentedHashSet> hashes;

  bool operator==(const ImageRecord&) const = default;
};

struct SplitManifest {
  std::string split;
  std::vector<ImageRecord> records;  // sorted by (source_split, id)
  Warnings warnings;

  bool hashed() const;
  std::size_t size() const { return records.size(); }
  const ImageRecord* find(const std::string& id) const;
};

// Lists the PNG/JPEG files directly inside `dir`, sorted by file name. Files
// with an image extension whose header cannot be parsed are left out with a
// warning. When an annotation file is given, images without an annotation
// entry (and entries without a file) are reported as warnings.
// Throws InvalidInput if `dir` is not a directory.
SplitManifest ingest(const std::filesystem::path& dir, std::string split,
                     const std::optional<std::filesystem::path>& annotations = std::nullopt);

struct HashOptions {
  AugmentMode mode = AugmentMode::Paper6;
  // Cache file for this split; nullopt disables caching.
  std::optional<std::filesystem::path> cache;
  // Key cache hits on the SHA-256 of the file instead of its byte size.
  bool strict_cache = false;
  unsigned workers = 0;  // 0: one per hardware thread
};

struct HashStats {
  std::size_t computed = 0;
  std::size_t cache_hits = 0;
  std::size_t failed = 0;  // dropped with a warning
};

// Fills every record's hash set. Work is spread over the worker pool, and
// results are merged in record order, so the output does not depend on the
// worker count. Images that fail to decode or are not square are dropped
// with a warning. The cache, if configured, is rewritten to hold exactly the
// surviving records.
SplitManifest hash_split(SplitManifest manifest, const HashOptions& options, HashStats* stats = nullptr);

enum class MatchMode {
  // Identity hashes on both sides.
  Exact,
  // Haystack identity hashes against every augmented needle hash.
  Augmented,
  // Every augmented haystack hash is a separate item, matched against every
  // augmented needle hash.
  AugmentedBoth,
};

std::string_view to_string(MatchMode mode);
MatchMode match_mode_from_string(std::string_view name);

struct LeakageReport {
  std::string needles;
  std::string haystack;
  std::size_t haystack_total = 0;
  std::size_t matched = 0;  // distinct haystack items with at least one match
  double percent = 0.0;     // matched / haystack_total * 100

  bool operator==(const LeakageReport&) const = default;
};

// Counts haystack images found among the needles. Throws InvalidState if
// either manifest is unhashed.
LeakageReport detect_leakage(const SplitManifest& needles, const SplitManifest& haystack, MatchMode mode,
                             std::string needles_name = {}, std::string haystack_name = {});

// The standard comparison rows, in order:
//   Val -> Train (exact), Train -> Val (exact),
//   Augmented Val -> Train (augmented),
//   Augmented Val -> Augmented Train (augmented-both),
// and, when both unique splits are given, Unique Val -> Unique Train
// (augmented).
std::vector<LeakageReport> leakage_table(const SplitManifest& train, const SplitManifest& val,
                                         const SplitManifest* unique_train = nullptr,
                                         const SplitManifest* unique_val = nullptr);

struct DedupResult {
  SplitManifest unique;
  std::vector<DuplicateCluster> clusters;
};

// Keeps singletons and the retained member of every duplicate cluster.
DedupResult dedup_split(const SplitManifest& manifest, bool strict = false);

struct LeakRemoval {
  SplitManifest train;
  // (removed train id, smallest val id it collides with)
  std::vector<std::pair<std::string, std::string>> removed;
};

// Drops every train image that collides with a val image in either
// direction: its identity hash is one of the val image's augmented hashes,
// or the reverse. Val is left untouched.
LeakRemoval remove_leakage(const SplitManifest& train, const SplitManifest& val);

// Number of (train, val) pairs that still collide as remove_leakage defines it.
std::size_t cross_split_collisions(const SplitManifest& train, const SplitManifest& val);

struct ResplitResult {
  SplitManifest train;
  SplitManifest val;
  double ratio = 0.9;
  std::uint64_t seed = 0;
};

// Pools both splits, orders the pool by (source split, id), permutes it
// with seeded_permutation(seed), and assigns the first ceil(ratio * n)
// images to train. Throws InvalidInput unless 0 < ratio < 1.
ResplitResult merge_resplit(const SplitManifest& train, const SplitManifest& val, double ratio, std::uint64_t seed);

// Fisher-Yates shuffle of [0, n) driven by std::mt19937_64(seed), drawing
// each bound with rejection sampling. Both are fully specified, so the
// permutation is identical on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

struct AuditEntry {
  std::string id;
  std::string disposition;  // "retained", "duplicate-of:<id>" or "leaked"

  bool operator==(const AuditEntry&) const = default;
};

// Fate of every image of `original`: retained, duplicate of its cluster's
// retained member, or removed as a leak. Sorted by id. Throws
// InvariantViolation if some image is unaccounted for or listed twice.
std::vector<AuditEntry> audit_log(const SplitManifest& original, const std::vector<DuplicateCluster>& clusters,
                                  const std::vector<std::pair<std::string, std::string>>& leaked = {});

}  // namespace dedup
