#include "dedup/hash_index.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "dedup/error.hpp"
#include "dedup/union_find.hpp"

namespace dedup {
namespace {

std::uint16_t band_value(PerceptualHash h, std::size_t band) {
  return static_cast<std::uint16_t>(h.bits >> (16 * band));
}

// Every 16-bit value within `radius` bits of `center`.
void band_neighbourhood(std::uint16_t center, int radius, std::vector<std::uint16_t>& out) {
  out.clear();
  out.push_back(center);
  if (radius >= 1) {
    for (int i = 0; i < 16; ++i) {
      out.push_back(static_cast<std::uint16_t>(center ^ (1u << i)));
    }
  }
  if (radius >= 2) {
    for (int i = 0; i < 16; ++i) {
      for (int j = i + 1; j < 16; ++j) {
        out.push_back(static_cast<std::uint16_t>(center ^ (1u << i) ^ (1u << j)));
      }
    }
  }
}

// Groups of equal-hash entries, in index order.
template <typename Fn>
void for_each_bucket(std::span<const IndexEntry> entries, Fn&& fn) {
  std::size_t begin = 0;
  while (begin < entries.size()) {
    std::size_t end = begin + 1;
    while (end < entries.size() && entries[end].hash == entries[begin].hash) ++end;
    fn(entries.subspan(begin, end - begin));
    begin = end;
  }
}

std::vector<DuplicateCluster> components(UnionFind& sets, std::span<const ImageKey> keys) {
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (sets.set_size(i) > 1) by_root[sets.find(i)].push_back(i);
  }
  std::vector<DuplicateCluster> clusters;
  clusters.reserve(by_root.size());
  for (auto& [root, members] : by_root) {
    DuplicateCluster c;
    for (std::size_t m : members) c.members.push_back(keys[m]);
    std::sort(c.members.begin(), c.members.end());
    c.retained = c.members.front();
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const DuplicateCluster& x, const DuplicateCluster& y) { return x.retained < y.retained; });
  for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i].id = i;
  return clusters;
}

}  // namespace

std::span<const IndexEntry> HashIndex::bucket(PerceptualHash hash) const {
  const auto lo = std::lower_bound(entries_.begin(), entries_.end(), hash,
                                   [](const IndexEntry& e, PerceptualHash h) { return e.hash < h; });
  auto hi = lo;
  while (hi != entries_.end() && hi->hash == hash) ++hi;
  return {lo, hi};
}

std::size_t HashIndex::multi_occupancy_buckets(bool identity_only) const {
  std::size_t count = 0;
  for_each_bucket(entries_, [&](std::span<const IndexEntry> bucket) {
    const auto n = identity_only ? std::count_if(bucket.begin(), bucket.end(),
                                                 [](const IndexEntry& e) {
                                                   return e.transform == Transform::Identity;
                                                 })
                                 : static_cast<std::ptrdiff_t>(bucket.size());
    if (n > 1) ++count;
  });
  return count;
}

void HashIndexBuilder::add(std::string split, const AugmentedHashSet& set) {
  if (set.hashes.empty() || set.hashes.front().first != Transform::Identity) {
    throw InvalidInput("hash set for '" + set.id + "' lacks an identity hash");
  }
  pending_.push_back({ImageKey{std::move(split), set.id}, set.hashes});
}

void HashIndexBuilder::merge(HashIndexBuilder&& other) {
  pending_.insert(pending_.end(), std::make_move_iterator(other.pending_.begin()),
                  std::make_move_iterator(other.pending_.end()));
  other.pending_.clear();
}

HashIndex HashIndexBuilder::build() && {
  std::sort(pending_.begin(), pending_.end(),
            [](const Pending& x, const Pending& y) { return x.key < y.key; });
  for (std::size_t i = 1; i < pending_.size(); ++i) {
    if (pending_[i].key == pending_[i - 1].key) {
      throw InvalidInput("duplicate image id '" + pending_[i].key.str() + "'");
    }
  }

  HashIndex index;
  index.images_.reserve(pending_.size());
  index.identity_.reserve(pending_.size());
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    const auto image = static_cast<std::uint32_t>(i);
    for (const auto& [t, h] : pending_[i].hashes) {
      index.entries_.push_back({h, image, t});
    }
    index.identity_.push_back(pending_[i].hashes.front().second);
    index.images_.push_back(std::move(pending_[i].key));
  }
  pending_.clear();
  std::sort(index.entries_.begin(), index.entries_.end());

  // Counting sort per band keeps images ascending within each slot.
  for (std::size_t b = 0; b < HashIndex::kBands; ++b) {
    auto& table = index.bands_[b];
    table.offsets.assign(HashIndex::kBandValues + 1, 0);
    for (PerceptualHash h : index.identity_) ++table.offsets[band_value(h, b) + 1];
    for (std::size_t x = 0; x < HashIndex::kBandValues; ++x) table.offsets[x + 1] += table.offsets[x];
    table.images.resize(index.identity_.size());
    std::vector<std::uint32_t> cursor(table.offsets.begin(), table.offsets.end() - 1);
    for (std::uint32_t i = 0; i < index.identity_.size(); ++i) {
      table.images[cursor[band_value(index.identity_[i], b)]++] = i;
    }
  }
  return index;
}

HashIndex build_index(std::span<const AugmentedHashSet> sets, const std::string& split) {
  HashIndexBuilder builder;
  for (const auto& set : sets) builder.add(split, set);
  return std::move(builder).build();
}

std::vector<CollisionEdge> exact_collisions(const HashIndex& index, bool strict) {
  // Best (witness, other) per unordered pair; ties broken by hash.
  struct Candidate {
    std::uint32_t a, b;
    Transform witness, other;
    PerceptualHash hash;
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, Candidate> best;

  for_each_bucket(index.entries(), [&](std::span<const IndexEntry> bucket) {
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      for (std::size_t j = i + 1; j < bucket.size(); ++j) {
        IndexEntry x = bucket[i];
        IndexEntry y = bucket[j];
        if (x.image == y.image) continue;
        const bool x_id = x.transform == Transform::Identity;
        const bool y_id = y.transform == Transform::Identity;
        if (!strict && !x_id && !y_id) continue;
        // Orient so that b holds the identity entry when there is exactly
        // one; otherwise a is the smaller image.
        if ((x_id && !y_id) || (x_id == y_id && y.image < x.image)) std::swap(x, y);
        const Candidate c{x.image, y.image, x.transform, y.transform, x.hash};
        const auto pair = std::minmax(x.image, y.image);
        auto [it, inserted] = best.try_emplace({pair.first, pair.second}, c);
        if (!inserted) {
          const auto rank = [](const Candidate& k) {
            return std::tuple(k.witness == Transform::Identity ? 0 : 1, k.other, k.witness, k.hash, k.a);
          };
          if (rank(c) < rank(it->second)) it->second = c;
        }
      }
    }
  });

  std::vector<CollisionEdge> edges;
  edges.reserve(best.size());
  for (const auto& [pair, c] : best) {
    edges.push_back({index.key(c.a), index.key(c.b), c.witness, c.other, c.hash});
  }
  std::sort(edges.begin(), edges.end(), [](const CollisionEdge& x, const CollisionEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return edges;
}

std::vector<DuplicateCluster> cluster(std::span<const CollisionEdge> edges, std::span<const ImageKey> all_ids) {
  std::vector<ImageKey> keys(all_ids.begin(), all_ids.end());
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw InvalidInput("duplicate id in cluster input");
  }
  const auto position = [&](const ImageKey& k) {
    const auto it = std::lower_bound(keys.begin(), keys.end(), k);
    if (it == keys.end() || *it != k) {
      throw InvalidInput("collision edge references unknown image '" + k.str() + "'");
    }
    return static_cast<std::size_t>(it - keys.begin());
  };
  UnionFind sets(keys.size());
  for (const CollisionEdge& e : edges) {
    sets.unite(position(e.a), position(e.b));
  }
  return components(sets, keys);
}

std::vector<DuplicateCluster> cluster_index(const HashIndex& index, bool strict) {
  UnionFind sets(index.images().size());
  for_each_bucket(index.entries(), [&](std::span<const IndexEntry> bucket) {
    // Every admissible edge in a bucket touches an identity entry unless
    // strict, so the bucket collapses to one component iff it has one.
    const bool any_identity = std::any_of(bucket.begin(), bucket.end(), [](const IndexEntry& e) {
      return e.transform == Transform::Identity;
    });
    if (!strict && !any_identity) return;
    for (const IndexEntry& e : bucket) sets.unite(bucket.front().image, e.image);
  });
  return components(sets, index.images());
}

std::vector<HammingMatch> hamming_query(const HashIndex& index, PerceptualHash probe, int radius) {
  if (radius < 0 || radius > kMaxHammingRadius) {
    throw InvalidInput("hamming radius must be in [0, " + std::to_string(kMaxHammingRadius) + "], got " +
                       std::to_string(radius));
  }
  std::vector<std::uint32_t> candidates;
  std::vector<std::uint16_t> probes;
  const int band_radius = radius / static_cast<int>(HashIndex::kBands);
  for (std::size_t b = 0; b < HashIndex::kBands; ++b) {
    const auto& table = index.bands_[b];
    if (table.offsets.empty()) break;
    band_neighbourhood(band_value(probe, b), band_radius, probes);
    for (std::uint16_t value : probes) {
      for (std::uint32_t k = table.offsets[value]; k < table.offsets[value + 1]; ++k) {
        candidates.push_back(table.images[k]);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<HammingMatch> matches;
  for (std::uint32_t image : candidates) {
    const int d = hamming_distance(index.identity_[image], probe);
    if (d <= radius) matches.push_back({index.key(image), d});
  }
  std::sort(matches.begin(), matches.end(), [](const HammingMatch& x, const HammingMatch& y) {
    return std::tie(x.distance, x.key) < std::tie(y.distance, y.key);
  });
  return matches;
}

}  // namespace dedup
