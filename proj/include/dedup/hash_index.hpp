#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dedup/augment.hpp"
#include "dedup/phash.hpp"

namespace dedup {

// Identity of an image across splits. Ids are unique within a split only.
struct ImageKey {
  std::string split;
  std::string id;

  std::string str() const { return split.empty() ? id : split + "/" + id; }
  auto operator<=>(const ImageKey&) const = default;
};

struct IndexEntry {
  PerceptualHash hash;
  std::uint32_t image = 0;  // position in HashIndex::images()
  Transform transform = Transform::Identity;

  auto operator<=>(const IndexEntry&) const = default;
};

struct HammingMatch {
  ImageKey key;
  int distance = 0;

  bool operator==(const HammingMatch&) const = default;
};

// Hash -> (image, transform) multimap over augmented hash sets. Entries are
// sorted by hash, then image key, then transform. Immutable once built, so
// concurrent queries are safe.
class HashIndex {
 public:
  HashIndex() = default;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const IndexEntry> entries() const { return entries_; }
  // Sorted ascending.
  const std::vector<ImageKey>& images() const { return images_; }
  const ImageKey& key(std::uint32_t image) const { return images_[image]; }

  // All entries carrying exactly this hash.
  std::span<const IndexEntry> bucket(PerceptualHash hash) const;

  // Number of distinct hashes shared by two or more entries; with
  // identity_only, counts only buckets holding two or more identity entries.
  std::size_t multi_occupancy_buckets(bool identity_only = false) const;

 private:
  friend class HashIndexBuilder;
  friend std::vector<HammingMatch> hamming_query(const HashIndex&, PerceptualHash, int);

  static constexpr std::size_t kBands = 4;
  static constexpr std::size_t kBandValues = 1 << 16;

  // Multi-index tables over identity hashes: images whose band-b value is x
  // are bands_[b].images[offsets[x] .. offsets[x + 1]).
  struct BandTable {
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> images;
  };

  std::vector<ImageKey> images_;
  std::vector<IndexEntry> entries_;
  std::vector<PerceptualHash> identity_;  // per image
  std::array<BandTable, kBands> bands_;
};

// Collects hash sets, possibly from several producers, and builds an index
// whose content does not depend on insertion order.
class HashIndexBuilder {
 public:
  void add(std::string split, const AugmentedHashSet& set);
  void merge(HashIndexBuilder&& other);
  // Throws InvalidInput on a repeated (split, id).
  HashIndex build() &&;

 private:
  struct Pending {
    ImageKey key;
    std::vector<std::pair<Transform, PerceptualHash>> hashes;
  };
  std::vector<Pending> pending_;
};

HashIndex build_index(std::span<const AugmentedHashSet> sets, const std::string& split = {});

// Two images share a hash: `witness` applied to `a` produces `hash`, which
// equals the `other` entry of `b` (Identity unless strict matching admitted a
// match between two augmented entries).
struct CollisionEdge {
  ImageKey a;
  ImageKey b;
  Transform witness = Transform::Identity;
  Transform other = Transform::Identity;
  PerceptualHash hash;

  bool operator==(const CollisionEdge&) const = default;
};

// One edge per unordered image pair sharing a bucket. By default at least one
// side of the match must be an identity hash; `strict` also admits matches
// between two augmented hashes. Sorted by (a, b) after orienting each pair.
std::vector<CollisionEdge> exact_collisions(const HashIndex& index, bool strict = false);

struct DuplicateCluster {
  std::size_t id = 0;
  std::vector<ImageKey> members;  // sorted
  ImageKey retained;              // smallest member

  bool operator==(const DuplicateCluster&) const = default;
};

// Connected components of the collision graph over all_ids. Singletons are
// not reported. Cluster ids follow the order of the retained member.
// Throws InvalidInput if an edge names an id not in all_ids.
std::vector<DuplicateCluster> cluster(std::span<const CollisionEdge> edges, std::span<const ImageKey> all_ids);

// cluster(exact_collisions(index, strict), index.images()) without
// materialising per-pair edges; linear in the index size.
std::vector<DuplicateCluster> cluster_index(const HashIndex& index, bool strict = false);

inline constexpr int kMaxHammingRadius = 8;

// Images whose identity hash is within `radius` bits of `probe`, ordered by
// (distance, key). Multi-index search: the 64 bits are split into four
// 16-bit bands and a match within radius r must agree with the probe to
// within floor(r / 4) bits on at least one band, so only those band
// neighbourhoods are probed. Throws InvalidInput unless 0 <= radius <= 8.
std::vector<HammingMatch> hamming_query(const HashIndex& index, PerceptualHash probe, int radius);

}  // namespace dedup
