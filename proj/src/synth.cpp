#include "dedup/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "dedup/coco.hpp"
#include "dedup/image_io.hpp"
#include "dedup/parallel.hpp"

namespace dedup {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kMaxDraws = 32;
constexpr std::array<Transform, 5> kPlantedAug = {Transform::Rot90, Transform::Rot180, Transform::Rot270,
                                                  Transform::FlipH, Transform::FlipV};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(tag * 0x100000001b3ULL + index)));
}

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
  while (true) {
    const std::uint64_t x = rng();
    if (x >= threshold) return static_cast<std::size_t>(x % n);
  }
}

const char* kind_name(FileKind k) {
  switch (k) {
    case FileKind::Base: return "base";
    case FileKind::ExactDup: return "exact_dup";
    case FileKind::AugDup: return "aug_dup";
    case FileKind::Leak: return "leak";
  }
  return "base";
}

// Synthetic building footprints: 0 to 3 axis-aligned rectangles per image.
std::vector<CocoAnnotation> footprints(std::uint64_t seed, std::size_t file_index, std::size_t size) {
  auto rng = stream(seed, 3, file_index);
  std::vector<CocoAnnotation> out(below(rng, 4));
  for (CocoAnnotation& a : out) {
    const double w = 5.0 + static_cast<double>(below(rng, 16));
    const double h = 5.0 + static_cast<double>(below(rng, 16));
    const double x = static_cast<double>(below(rng, size - 20));
    const double y = static_cast<double>(below(rng, size - 20));
    a.category_id = 100;
    a.segmentation = {{x, y, x + w, y, x + w, y + h, x, y + h}};
    a.bbox = {x, y, w, h};
    a.area = w * h;
  }
  return out;
}

struct Planned {
  FileLabel label;
  std::size_t source = 0;  // index of the base file for byte copies
};

}  // namespace

RgbImage textured_image(std::size_t size, std::uint64_t seed, std::uint64_t index) {
  constexpr std::size_t kKnots = 8;
  auto rng = stream(seed, 1, index);
  int knots[3][kKnots][kKnots];
  for (auto& channel : knots) {
    for (auto& row : channel) {
      for (int& v : row) v = static_cast<int>(rng() >> 56);
    }
  }
  std::vector<Rgb> px(size * size);
  const double step = static_cast<double>(size - 1) / static_cast<double>(kKnots - 1);
  for (std::size_t r = 0; r < size; ++r) {
    const double fy = static_cast<double>(r) / step;
    const auto y0 = std::min<std::size_t>(static_cast<std::size_t>(fy), kKnots - 2);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t c = 0; c < size; ++c) {
      const double fx = static_cast<double>(c) / step;
      const auto x0 = std::min<std::size_t>(static_cast<std::size_t>(fx), kKnots - 2);
      const double tx = fx - static_cast<double>(x0);
      int rgb[3];
      std::uint64_t bits = rng();
      for (int k = 0; k < 3; ++k) {
        const double top = knots[k][y0][x0] * (1 - tx) + knots[k][y0][x0 + 1] * tx;
        const double bottom = knots[k][y0 + 1][x0] * (1 - tx) + knots[k][y0 + 1][x0 + 1] * tx;
        const int noise = static_cast<int>(bits & 3) - 2;
        bits >>= 2;
        rgb[k] = std::clamp(static_cast<int>(top * (1 - ty) + bottom * ty + 0.5) + noise, 0, 255);
      }
      px[r * size + c] = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                          static_cast<std::uint8_t>(rgb[2])};
    }
  }
  return RgbImage(size, size, std::move(px));
}

GroundTruth generate(const CorpusSpec& spec) {
  if (spec.size < 32) throw InvalidInput("synthetic image size must be at least 32");
  if (!(spec.val_fraction >= 0.0 && spec.val_fraction < 1.0)) {
    throw InvalidInput("val fraction must lie in [0, 1)");
  }
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(spec.base_count)));
  const std::size_t n_train = spec.base_count - n_val;
  if ((spec.exact_dups > 0 || spec.aug_dups > 0) && n_train == 0) {
    throw InvalidInput("duplicates need at least one train base");
  }
  if (spec.leaks > n_val) {
    throw InvalidInput("cannot plant " + std::to_string(spec.leaks) + " leaks from " + std::to_string(n_val) +
                       " val bases");
  }

  // Draw bases; a draw is accepted only if its dihedral orbit is free and
  // disjoint from every earlier base.
  std::vector<RgbImage> bases(spec.base_count, RgbImage(1, 1));
  std::vector<int> draw(spec.base_count, 0);
  auto draw_index = [&](std::size_t b) { return static_cast<std::uint64_t>(b) * kMaxDraws + draw[b]; };
  std::vector<AugmentedHashSet> orbits(spec.base_count);
  parallel_for(spec.base_count, spec.workers, [&](std::size_t b) {
    bases[b] = textured_image(spec.size, spec.seed, draw_index(b));
    orbits[b] = hash_image(bases[b], AugmentMode::Full8);
  });
  std::unordered_set<std::uint64_t> taken;
  for (std::size_t b = 0; b < spec.base_count; ++b) {
    while (true) {
      std::set<std::uint64_t> mine;
      for (const auto& [t, h] : orbits[b].hashes) mine.insert(h.bits);
      const bool ok = mine.size() == 8 &&
                      std::none_of(mine.begin(), mine.end(), [&](std::uint64_t h) { return taken.contains(h); });
      if (ok) {
        taken.insert(mine.begin(), mine.end());
        break;
      }
      if (++draw[b] == kMaxDraws) {
        throw InvariantViolation("could not draw a collision-free base image after " + std::to_string(kMaxDraws) +
                                 " attempts");
      }
      bases[b] = textured_image(spec.size, spec.seed, draw_index(b));
      orbits[b] = hash_image(bases[b], AugmentMode::Full8);
    }
  }

  // Plan every file. Bases [0, n_train) live in train, the rest in val.
  std::vector<Planned> plan;
  for (std::size_t b = 0; b < spec.base_count; ++b) {
    plan.push_back({{"", b < n_train ? "train" : "val", b, Transform::Identity, FileKind::Base}, b});
  }
  auto rng = stream(spec.seed, 2, 0);
  for (std::size_t k = 0; k < spec.exact_dups; ++k) {
    const std::size_t b = below(rng, n_train);
    plan.push_back({{"", "train", b, Transform::Identity, FileKind::ExactDup}, b});
  }
  for (std::size_t k = 0; k < spec.aug_dups; ++k) {
    const std::size_t b = below(rng, n_train);
    plan.push_back({{"", "train", b, kPlantedAug[k % kPlantedAug.size()], FileKind::AugDup}, b});
  }
  std::vector<std::size_t> val_bases(n_val);
  for (std::size_t k = 0; k < n_val; ++k) val_bases[k] = n_train + k;
  for (std::size_t k = n_val; k > 1; --k) std::swap(val_bases[k - 1], val_bases[below(rng, k)]);
  for (std::size_t k = 0; k < spec.leaks; ++k) {
    const Transform t = k % 6 == 0 ? Transform::Identity : kPlantedAug[k % 6 - 1];
    plan.push_back({{"", "train", val_bases[k], t, FileKind::Leak}, val_bases[k]});
  }

  // Names come from a seeded permutation so that retention by smallest id
  // does not simply pick the base.
  const std::vector<std::size_t> names = seeded_permutation(plan.size(), splitmix64(spec.seed ^ 0x6e616d6573ULL));
  for (std::size_t i = 0; i < plan.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%06zu.png", names[i]);
    plan[i].label.id = buf;
  }

  for (const auto& dir : {spec.train_dir, spec.val_dir}) std::filesystem::create_directories(dir);
  auto path_of = [&](const Planned& p) { return (p.label.split == "train" ? spec.train_dir : spec.val_dir) / p.label.id; };
  // Bases first so that exact duplicates can be copied byte for byte.
  parallel_for(spec.base_count, spec.workers, [&](std::size_t i) { write_png(path_of(plan[i]), bases[i]); });
  parallel_for(plan.size() - spec.base_count, spec.workers, [&](std::size_t k) {
    const Planned& p = plan[spec.base_count + k];
    if (p.label.transform == Transform::Identity) {
      std::filesystem::copy_file(path_of(plan[p.source]), path_of(p),
                                 std::filesystem::copy_options::overwrite_existing);
    } else {
      write_png(path_of(p), apply_transform(bases[p.label.base], p.label.transform));
    }
  });

  GroundTruth truth;
  truth.seed = spec.seed;
  truth.size = spec.size;
  for (const Planned& p : plan) {
    truth.files.push_back(p.label);
    if (p.label.kind == FileKind::Leak) truth.leaks.emplace_back(plan[p.source].label.id, p.label.id);
  }
  std::sort(truth.files.begin(), truth.files.end(),
            [](const FileLabel& a, const FileLabel& b) { return std::tie(a.split, a.id) < std::tie(b.split, b.id); });
  std::sort(truth.leaks.begin(), truth.leaks.end());

  const std::pair<const char*, const std::optional<std::filesystem::path>*> ann_targets[] = {
      {"train", &spec.train_ann}, {"val", &spec.val_ann}};
  for (const auto& [split, target] : ann_targets) {
    if (!*target) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (plan[i].label.split == split) members.push_back(i);
    }
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return plan[a].label.id < plan[b].label.id; });
    CocoDataset ds;
    ds.categories.push_back({100, "building", "building"});
    for (std::size_t i : members) {
      const auto image_id = static_cast<std::int64_t>(ds.images.size()) + 1;
      ds.images.push_back({image_id, plan[i].label.id, static_cast<std::int64_t>(spec.size),
                           static_cast<std::int64_t>(spec.size)});
      for (CocoAnnotation& a : footprints(spec.seed, i, spec.size)) {
        a.id = static_cast<std::int64_t>(ds.annotations.size()) + 1;
        a.image_id = image_id;
        ds.annotations.push_back(std::move(a));
      }
    }
    write_coco(ds, **target);
  }
  return truth;
}

ExpectedOutcome expected_outcome(const GroundTruth& truth, AugmentMode mode) {
  using Token = std::pair<std::size_t, Transform>;  // (base, group element)
  const auto modes = transforms_for(mode);
  auto orbit = [&](const FileLabel& f) {
    std::set<Token> out;
    for (Transform s : modes) out.emplace(f.base, compose(s, f.transform));
    return out;
  };
  auto linked = [&](const FileLabel& a, const FileLabel& b) {
    return orbit(a).contains({b.base, b.transform}) || orbit(b).contains({a.base, a.transform});
  };

  std::vector<FileLabel> train, val;
  for (const FileLabel& f : truth.files) (f.split == "train" ? train : val).push_back(f);

  // Connected components by flood fill over the link relation.
  auto components = [&](const std::vector<FileLabel>& files, std::vector<std::vector<std::string>>& clusters) {
    std::map<std::size_t, std::vector<std::size_t>> by_base;
    for (std::size_t i = 0; i < files.size(); ++i) by_base[files[i].base].push_back(i);
    std::vector<int> seen(files.size(), 0);
    std::vector<FileLabel> unique;
    for (std::size_t i = 0; i < files.size(); ++i) {
      if (seen[i]) continue;
      std::vector<std::size_t> group{i}, todo{i};
      seen[i] = 1;
      while (!todo.empty()) {
        const std::size_t a = todo.back();
        todo.pop_back();
        for (std::size_t b : by_base[files[a].base]) {
          if (!seen[b] && linked(files[a], files[b])) {
            seen[b] = 1;
            group.push_back(b);
            todo.push_back(b);
          }
        }
      }
      std::vector<std::string> ids;
      for (std::size_t k : group) ids.push_back(files[k].id);
      std::sort(ids.begin(), ids.end());
      for (std::size_t k : group) {
        if (files[k].id == ids.front()) unique.push_back(files[k]);
      }
      if (ids.size() > 1) clusters.push_back(std::move(ids));
    }
    std::sort(clusters.begin(), clusters.end());
    return unique;
  };

  ExpectedOutcome out;
  out.train_total = train.size();
  out.val_total = val.size();
  const std::vector<FileLabel> train_unique = components(train, out.train_clusters);
  const std::vector<FileLabel> val_unique = components(val, out.val_clusters);
  out.train_unique = train_unique.size();
  out.val_unique = val_unique.size();

  std::multimap<std::size_t, const FileLabel*> val_by_base;
  for (const FileLabel& v : val_unique) val_by_base.emplace(v.base, &v);
  for (const FileLabel& t : train_unique) {
    std::optional<std::string> witness;
    for (auto [it, end] = val_by_base.equal_range(t.base); it != end; ++it) {
      const FileLabel& v = *it->second;
      if (linked(t, v) && (!witness || v.id < *witness)) witness = v.id;
    }
    if (witness) out.removed.emplace_back(t.id, *witness);
  }
  std::sort(out.removed.begin(), out.removed.end());

  auto identity_set = [](const std::vector<FileLabel>& files) {
    std::set<Token> s;
    for (const FileLabel& f : files) s.emplace(f.base, f.transform);
    return s;
  };
  auto augmented_set = [&](const std::vector<FileLabel>& files) {
    std::set<Token> s;
    for (const FileLabel& f : files) s.merge(orbit(f));
    return s;
  };
  auto row = [](std::string needles, std::string haystack, std::size_t total, std::size_t matched) {
    const double pct = total == 0 ? 0.0 : static_cast<double>(matched) * 100.0 / static_cast<double>(total);
    return LeakageReport{std::move(needles), std::move(haystack), total, matched, pct};
  };
  auto count_in = [](const std::vector<FileLabel>& files, const std::set<Token>& needles) {
    return static_cast<std::size_t>(std::count_if(files.begin(), files.end(), [&](const FileLabel& f) {
      return needles.contains({f.base, f.transform});
    }));
  };

  const auto val_identity = identity_set(val);
  const auto val_augmented = augmented_set(val);
  out.leakage.push_back(row("Val", "Train", train.size(), count_in(train, val_identity)));
  out.leakage.push_back(row("Train", "Val", val.size(), count_in(val, identity_set(train))));
  out.leakage.push_back(row("Augmented Val", "Train", train.size(), count_in(train, val_augmented)));
  std::size_t both = 0;
  for (const FileLabel& f : train) {
    for (const Token& item : orbit(f)) both += val_augmented.contains(item) ? 1 : 0;
  }
  out.leakage.push_back(row("Augmented Val", "Augmented Train", train.size() * modes.size(), both));
  out.leakage.push_back(
      row("Unique Val", "Unique Train", train_unique.size(), count_in(train_unique, augmented_set(val_unique))));
  return out;
}

std::string ground_truth_json(const GroundTruth& truth) {
  ordered_json doc;
  doc["seed"] = truth.seed;
  doc["size"] = truth.size;
  ordered_json files = ordered_json::array();
  std::map<std::pair<std::string, std::size_t>, std::vector<const FileLabel*>> groups;
  for (const FileLabel& f : truth.files) {
    files.push_back({{"id", f.id},
                     {"split", f.split},
                     {"base", f.base},
                     {"transform", std::string(to_string(f.transform))},
                     {"kind", kind_name(f.kind)}});
    groups[{f.split, f.base}].push_back(&f);
  }
  doc["files"] = std::move(files);

  ordered_json planted = ordered_json::array();
  for (const auto& [key, members] : groups) {
    if (members.size() < 2) continue;
    ordered_json m = ordered_json::array();
    for (const FileLabel* f : members) m.push_back({{"id", f->id}, {"transform", std::string(to_string(f->transform))}});
    planted.push_back({{"split", key.first}, {"base", key.second}, {"members", std::move(m)}});
  }
  doc["clusters"] = std::move(planted);
  ordered_json leaks = ordered_json::array();
  for (const auto& [val_id, train_id] : truth.leaks) leaks.push_back({{"val", val_id}, {"train", train_id}});
  doc["leaks"] = std::move(leaks);

  ordered_json expected;
  for (AugmentMode mode : {AugmentMode::Paper6, AugmentMode::Full8}) {
    const ExpectedOutcome e = expected_outcome(truth, mode);
    ordered_json j;
    j["train_total"] = e.train_total;
    j["val_total"] = e.val_total;
    j["train_unique"] = e.train_unique;
    j["val_unique"] = e.val_unique;
    j["train_clusters"] = e.train_clusters;
    j["val_clusters"] = e.val_clusters;
    ordered_json removed = ordered_json::array();
    for (const auto& [t, v] : e.removed) removed.push_back({{"train", t}, {"val", v}});
    j["leaks_removed"] = std::move(removed);
    ordered_json rows = ordered_json::array();
    for (const LeakageReport& r : e.leakage) {
      rows.push_back({{"needles", r.needles},
                      {"haystack", r.haystack},
                      {"haystack_total", r.haystack_total},
                      {"matched", r.matched}});
    }
    j["leakage"] = std::move(rows);
    expected[std::string(to_string(mode))] = std::move(j);
  }
  doc["expected"] = std::move(expected);
  return doc.dump(2) + "\n";
}

}  // namespace dedup
