#include "dedup/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "dedup/coco.hpp"
#include "dedup/hash_cache.hpp"
#include "dedup/image_io.hpp"
#include "dedup/parallel.hpp"

namespace dedup {
namespace {

struct HashKeyHash {
  std::size_t operator()(PerceptualHash h) const { return std::hash<std::uint64_t>{}(h.bits); }
};

template <typename V>
using HashMap = std::unordered_map<PerceptualHash, V, HashKeyHash>;
using HashSet = std::unordered_set<PerceptualHash, HashKeyHash>;

void require_hashed(const SplitManifest& m) {
  if (!m.hashed()) {
    throw InvalidState("split '" + m.split + "' has not been hashed");
  }
}

bool record_less(const ImageRecord& a, const ImageRecord& b) {
  return std::tie(a.source_split, a.id) < std::tie(b.source_split, b.id);
}

ImageKey key_of(const ImageRecord& r) { return {r.source_split, r.id}; }

// Smallest id per hash.
void note_min(HashMap<std::string>& map, PerceptualHash h, const std::string& id) {
  auto [it, inserted] = map.try_emplace(h, id);
  if (!inserted && id < it->second) it->second = id;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t range) {
  // Reject the low 2^64 mod range values so the remainder is uniform.
  const std::uint64_t threshold = (0 - range) % range;
  while (true) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % range;
  }
}

}  // namespace

bool SplitManifest::hashed() const {
  return std::all_of(records.begin(), records.end(), [](const ImageRecord& r) { return r.hashes.has_value(); });
}

const ImageRecord* SplitManifest::find(const std::string& id) const {
  for (const ImageRecord& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

SplitManifest ingest(const std::filesystem::path& dir, std::string split,
                     const std::optional<std::filesystem::path>& annotations) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw InvalidInput("image directory '" + dir.string() + "' does not exist");
  }
  SplitManifest manifest;
  manifest.split = std::move(split);
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !has_image_extension(entry.path())) continue;
    if (!probe_image(entry.path())) {
      manifest.warnings.push_back({entry.path().string(), "not a decodable PNG/JPEG; skipped"});
      continue;
    }
    manifest.records.push_back(
        {entry.path().filename().string(), manifest.split, entry.path(), entry.file_size(), std::nullopt});
  }
  std::sort(manifest.records.begin(), manifest.records.end(), record_less);

  if (annotations) {
    const CocoDataset coco = read_coco(*annotations, manifest.warnings);
    std::set<std::string> annotated;
    for (const CocoImage& img : coco.images) annotated.insert(img.file_name);
    std::set<std::string> on_disk;
    for (const ImageRecord& r : manifest.records) {
      on_disk.insert(r.id);
      if (!annotated.contains(r.id)) {
        manifest.warnings.push_back({r.path.string(), "no entry in " + annotations->string()});
      }
    }
    for (const std::string& name : annotated) {
      if (!on_disk.contains(name)) {
        manifest.warnings.push_back({name, "annotated image not found in " + dir.string()});
      }
    }
  }
  return manifest;
}

SplitManifest hash_split(SplitManifest manifest, const HashOptions& options, HashStats* stats) {
  std::map<std::string, CacheRecord> cached;
  if (options.cache) {
    if (auto cache = read_hash_cache(*options.cache, manifest.warnings)) {
      if (cache->mode != options.mode) {
        manifest.warnings.push_back({options.cache->string(), "hash cache ignored: built for mode " +
                                                                   std::string(to_string(cache->mode))});
      } else if (options.strict_cache && cache->version != kCacheVersionDigest) {
        manifest.warnings.push_back({options.cache->string(), "hash cache ignored: no content digests"});
      } else {
        for (CacheRecord& rec : cache->records) cached.emplace(rec.id, std::move(rec));
      }
    }
  }

  struct Outcome {
    std::optional<AugmentedHashSet> set;
    std::optional<Sha256> digest;
    bool hit = false;
    std::string error;
  };
  std::vector<Outcome> outcomes(manifest.records.size());
  const auto transforms = transforms_for(options.mode);

  parallel_for(manifest.records.size(), options.workers, [&](std::size_t i) {
    const ImageRecord& rec = manifest.records[i];
    Outcome& out = outcomes[i];
    try {
      if (options.strict_cache) out.digest = file_sha256(rec.path);
      const auto it = cached.find(rec.id);
      if (it != cached.end() && it->second.byte_size == rec.byte_size &&
          (!options.strict_cache || it->second.digest == out.digest)) {
        AugmentedHashSet set{rec.id, {}};
        for (std::size_t k = 0; k < transforms.size(); ++k) set.hashes.emplace_back(transforms[k], it->second.hashes[k]);
        out.set = std::move(set);
        out.hit = true;
        return;
      }
      out.set = hash_image(read_image(rec.path), options.mode, rec.id);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  HashStats local;
  std::vector<ImageRecord> kept;
  kept.reserve(manifest.records.size());
  HashCache cache_out;
  cache_out.mode = options.mode;
  cache_out.version = options.strict_cache ? kCacheVersionDigest : kCacheVersion;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    ImageRecord& rec = manifest.records[i];
    Outcome& out = outcomes[i];
    if (!out.set) {
      ++local.failed;
      manifest.warnings.push_back({rec.path.string(), out.error + "; skipped"});
      continue;
    }
    ++(out.hit ? local.cache_hits : local.computed);
    CacheRecord cr{rec.id, rec.byte_size, out.digest, {}};
    for (const auto& [t, h] : out.set->hashes) cr.hashes.push_back(h);
    cache_out.records.push_back(std::move(cr));
    rec.hashes = std::move(out.set);
    kept.push_back(std::move(rec));
  }
  manifest.records = std::move(kept);
  if (options.cache) write_hash_cache(*options.cache, cache_out);
  if (stats) *stats = local;
  return manifest;
}

std::string_view to_string(MatchMode mode) {
  switch (mode) {
    case MatchMode::Exact: return "exact";
    case MatchMode::Augmented: return "augmented";
    case MatchMode::AugmentedBoth: return "augmented-both";
  }
  return "exact";
}

MatchMode match_mode_from_string(std::string_view name) {
  if (name == "exact") return MatchMode::Exact;
  if (name == "augmented") return MatchMode::Augmented;
  if (name == "augmented-both") return MatchMode::AugmentedBoth;
  throw InvalidInput("unknown match mode '" + std::string(name) + "'");
}

LeakageReport detect_leakage(const SplitManifest& needles, const SplitManifest& haystack, MatchMode mode,
                             std::string needles_name, std::string haystack_name) {
  require_hashed(needles);
  require_hashed(haystack);
  HashSet needle_hashes;
  for (const ImageRecord& r : needles.records) {
    if (mode == MatchMode::Exact) {
      needle_hashes.insert(r.hashes->identity());
    } else {
      for (const auto& [t, h] : r.hashes->hashes) needle_hashes.insert(h);
    }
  }
  LeakageReport report;
  report.needles = needles_name.empty() ? needles.split : std::move(needles_name);
  report.haystack = haystack_name.empty() ? haystack.split : std::move(haystack_name);
  for (const ImageRecord& r : haystack.records) {
    if (mode == MatchMode::AugmentedBoth) {
      for (const auto& [t, h] : r.hashes->hashes) {
        ++report.haystack_total;
        if (needle_hashes.contains(h)) ++report.matched;
      }
    } else {
      ++report.haystack_total;
      if (needle_hashes.contains(r.hashes->identity())) ++report.matched;
    }
  }
  report.percent = report.haystack_total == 0
                       ? 0.0
                       : static_cast<double>(report.matched) * 100.0 / static_cast<double>(report.haystack_total);
  return report;
}

std::vector<LeakageReport> leakage_table(const SplitManifest& train, const SplitManifest& val,
                                         const SplitManifest* unique_train, const SplitManifest* unique_val) {
  std::vector<LeakageReport> rows;
  rows.push_back(detect_leakage(val, train, MatchMode::Exact, "Val", "Train"));
  rows.push_back(detect_leakage(train, val, MatchMode::Exact, "Train", "Val"));
  rows.push_back(detect_leakage(val, train, MatchMode::Augmented, "Augmented Val", "Train"));
  rows.push_back(detect_leakage(val, train, MatchMode::AugmentedBoth, "Augmented Val", "Augmented Train"));
  if (unique_train && unique_val) {
    rows.push_back(detect_leakage(*unique_val, *unique_train, MatchMode::Augmented, "Unique Val", "Unique Train"));
  }
  return rows;
}

DedupResult dedup_split(const SplitManifest& manifest, bool strict) {
  require_hashed(manifest);
  HashIndexBuilder builder;
  for (const ImageRecord& r : manifest.records) builder.add(r.source_split, *r.hashes);
  DedupResult result;
  result.clusters = cluster_index(std::move(builder).build(), strict);

  std::set<ImageKey> dropped;
  for (const DuplicateCluster& c : result.clusters) {
    for (const ImageKey& m : c.members) {
      if (m != c.retained) dropped.insert(m);
    }
  }
  result.unique.split = manifest.split;
  for (const ImageRecord& r : manifest.records) {
    if (!dropped.contains(key_of(r))) result.unique.records.push_back(r);
  }
  return result;
}

LeakRemoval remove_leakage(const SplitManifest& train, const SplitManifest& val) {
  require_hashed(train);
  require_hashed(val);
  HashMap<std::string> val_any;       // any val hash -> smallest val id
  HashMap<std::string> val_identity;  // val identity hash -> smallest val id
  for (const ImageRecord& r : val.records) {
    note_min(val_identity, r.hashes->identity(), r.id);
    for (const auto& [t, h] : r.hashes->hashes) note_min(val_any, h, r.id);
  }
  LeakRemoval result;
  result.train.split = train.split;
  for (const ImageRecord& r : train.records) {
    std::optional<std::string> witness;
    auto consider = [&](const HashMap<std::string>& map, PerceptualHash h) {
      if (const auto it = map.find(h); it != map.end() && (!witness || it->second < *witness)) witness = it->second;
    };
    consider(val_any, r.hashes->identity());
    for (const auto& [t, h] : r.hashes->hashes) consider(val_identity, h);
    if (witness) {
      result.removed.emplace_back(r.id, *witness);
    } else {
      result.train.records.push_back(r);
    }
  }
  return result;
}

std::size_t cross_split_collisions(const SplitManifest& train, const SplitManifest& val) {
  require_hashed(train);
  require_hashed(val);
  HashMap<std::vector<std::size_t>> val_any, val_identity;
  for (std::size_t j = 0; j < val.records.size(); ++j) {
    const auto& set = *val.records[j].hashes;
    val_identity[set.identity()].push_back(j);
    for (const auto& [t, h] : set.hashes) val_any[h].push_back(j);
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < train.records.size(); ++i) {
    const auto& set = *train.records[i].hashes;
    if (const auto it = val_any.find(set.identity()); it != val_any.end()) {
      for (std::size_t j : it->second) pairs.emplace(i, j);
    }
    for (const auto& [t, h] : set.hashes) {
      if (const auto it = val_identity.find(h); it != val_identity.end()) {
        for (std::size_t j : it->second) pairs.emplace(i, j);
      }
    }
  }
  return pairs.size();
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

ResplitResult merge_resplit(const SplitManifest& train, const SplitManifest& val, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidInput("split ratio must lie strictly between 0 and 1, got " + std::to_string(ratio));
  }
  std::vector<ImageRecord> pool;
  pool.reserve(train.records.size() + val.records.size());
  pool.insert(pool.end(), train.records.begin(), train.records.end());
  pool.insert(pool.end(), val.records.begin(), val.records.end());
  std::sort(pool.begin(), pool.end(), record_less);
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (key_of(pool[i]) == key_of(pool[i - 1])) {
      throw InvalidInput("image '" + key_of(pool[i]).str() + "' appears in both inputs");
    }
  }

  const std::size_t n = pool.size();
  // The epsilon absorbs products like 0.9 * 100 = 90.00000000000001.
  const auto n_train = std::min(n, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9)));
  const std::vector<std::size_t> perm = seeded_permutation(n, seed);

  ResplitResult result;
  result.ratio = ratio;
  result.seed = seed;
  result.train.split = "train";
  result.val.split = "val";
  for (std::size_t k = 0; k < n; ++k) {
    (k < n_train ? result.train : result.val).records.push_back(pool[perm[k]]);
  }
  std::sort(result.train.records.begin(), result.train.records.end(), record_less);
  std::sort(result.val.records.begin(), result.val.records.end(), record_less);
  return result;
}

std::vector<AuditEntry> audit_log(const SplitManifest& original, const std::vector<DuplicateCluster>& clusters,
                                  const std::vector<std::pair<std::string, std::string>>& leaked) {
  std::map<std::string, std::string> fate;
  for (const ImageRecord& r : original.records) {
    if (!fate.emplace(r.id, "retained").second) {
      throw InvariantViolation("image '" + r.id + "' listed twice in split '" + original.split + "'");
    }
  }
  for (const DuplicateCluster& c : clusters) {
    for (const ImageKey& m : c.members) {
      const auto it = fate.find(m.id);
      if (it == fate.end()) throw InvariantViolation("cluster member '" + m.id + "' not in split");
      if (m != c.retained) it->second = "duplicate-of:" + c.retained.id;
    }
  }
  for (const auto& [train_id, val_id] : leaked) {
    const auto it = fate.find(train_id);
    if (it == fate.end() || it->second != "retained") {
      throw InvariantViolation("leaked image '" + train_id + "' was not a retained image");
    }
    it->second = "leaked";
  }
  std::vector<AuditEntry> entries;
  entries.reserve(fate.size());
  for (auto& [id, disposition] : fate) entries.push_back({id, std::move(disposition)});
  return entries;
}

}  // namespace dedup
