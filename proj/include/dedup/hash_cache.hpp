#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dedup/augment.hpp"
#include "dedup/error.hpp"
#include "dedup/phash.hpp"

namespace dedup {

// On-disk layout, all integers little-endian:
//
//   magic        8 bytes  "PHCACHE1"
//   version      u32      1, or 2 when records carry a content digest
//   mode         u8       6 (paper6) or 8 (full8)
//   count        u64
//   count records:
//     id_len     u16
//     id         id_len bytes, UTF-8
//     byte_size  u64
//     digest     32 bytes SHA-256 of the file (version 2 only)
//     hashes     mode x u64, in Transform order
inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr std::uint32_t kCacheVersionDigest = 2;

using Sha256 = std::array<std::uint8_t, 32>;

struct CacheRecord {
  std::string id;
  std::uint64_t byte_size = 0;
  std::optional<Sha256> digest;
  std::vector<PerceptualHash> hashes;

  bool operator==(const CacheRecord&) const = default;
};

struct HashCache {
  std::uint32_t version = kCacheVersion;
  AugmentMode mode = AugmentMode::Paper6;
  std::vector<CacheRecord> records;

  bool operator==(const HashCache&) const = default;
};

// Missing file: nullopt, silently. Unreadable, truncated, wrong magic or an
// unknown version: nullopt plus a warning; the caller rebuilds the cache.
std::optional<HashCache> read_hash_cache(const std::filesystem::path& path, Warnings& warnings);

// Writes to a sibling temporary file and renames it into place.
void write_hash_cache(const std::filesystem::path& path, const HashCache& cache);

Sha256 file_sha256(const std::filesystem::path& path);

}  // namespace dedup
