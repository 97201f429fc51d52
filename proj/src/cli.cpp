#include "dedup/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "dedup/coco.hpp"
#include "dedup/pipeline.hpp"
#include "dedup/report.hpp"
#include "dedup/synth.hpp"

namespace dedup {
namespace {

namespace fs = std::filesystem;

void print_warnings(const Warnings& warnings) {
  for (const Warning& w : warnings) std::cerr << "warning: " << w.subject << ": " << w.message << "\n";
}

bool wants(const RunConfig& config, const std::string& format) {
  return std::find(config.formats.begin(), config.formats.end(), format) != config.formats.end();
}

HashOptions hash_options(const RunConfig& config, const std::string& split) {
  HashOptions opts;
  opts.mode = config.mode;
  if (config.cache) opts.cache = *config.cache / (split + ".phcache");
  opts.strict_cache = config.strict_cache;
  opts.workers = config.workers;
  return opts;
}

SplitManifest load_split(const RunConfig& config, const std::string& split, const fs::path& dir,
                         const std::optional<fs::path>& ann, HashStats* stats = nullptr) {
  SplitManifest m = ingest(dir, split, ann);
  m = hash_split(std::move(m), hash_options(config, split), stats);
  print_warnings(m.warnings);
  m.warnings.clear();
  return m;
}

void write_leakage(const RunConfig& config, const std::vector<LeakageReport>& rows) {
  if (wants(config, "json")) write_text(config.out / "leakage.json", leakage_json(rows));
  if (wants(config, "csv")) write_text(config.out / "leakage.csv", leakage_csv(rows));
}

std::set<std::string> ids_from(const SplitManifest& m, const std::string& source_split) {
  std::set<std::string> ids;
  for (const ImageRecord& r : m.records) {
    if (r.source_split == source_split) ids.insert(r.id);
  }
  return ids;
}

// Annotations for a final split, gathered from whichever source files exist.
void write_split_annotations(const SplitManifest& final_split, const std::optional<CocoDataset>& train_coco,
                             const std::optional<CocoDataset>& val_coco, const fs::path& path) {
  Warnings warnings;
  std::vector<CocoDataset> parts;
  if (train_coco) parts.push_back(filter_coco(*train_coco, ids_from(final_split, "train"), warnings));
  if (val_coco) parts.push_back(filter_coco(*val_coco, ids_from(final_split, "val"), warnings));
  print_warnings(warnings);
  const CocoDataset merged = merge_coco(parts);
  if (auto problems = integrity_violations(merged); !problems.empty()) {
    throw InvariantViolation("filtered annotations for " + path.string() + ": " + problems.front());
  }
  write_coco(merged, path);
}

struct SplitOutcome {
  SplitManifest hashed;
  DedupResult dedup;
};

void write_dedup_reports(const RunConfig& config, const std::string& split, const SplitOutcome& s,
                         const std::vector<std::pair<std::string, std::string>>& leaked = {}) {
  write_text(config.out / (split + "_clusters.json"),
             clusters_json(s.dedup.clusters, s.hashed.size(), s.dedup.unique.size()));
  write_text(config.out / (split + "_audit.csv"), audit_csv(audit_log(s.hashed, s.dedup.clusters, leaked)));
}

std::optional<CocoDataset> maybe_coco(const std::optional<fs::path>& path) {
  if (!path) return std::nullopt;
  Warnings warnings;
  CocoDataset ds = read_coco(*path, warnings);
  print_warnings(warnings);
  return ds;
}

}  // namespace

void validate(const RunConfig& config) {
  static const std::set<std::string> commands = {"hash", "dedup", "leakage", "resplit", "synth"};
  if (!commands.contains(config.command)) throw InvalidInput("unknown command '" + config.command + "'");
  for (const std::string& f : config.formats) {
    if (f != "json" && f != "csv") throw InvalidInput("unknown report format '" + f + "'");
  }
  static const std::set<std::string> matches = {"exact", "augmented", "augmented-both", "table"};
  if (!matches.contains(config.match)) throw InvalidInput("unknown match mode '" + config.match + "'");
  if (!(config.ratio > 0.0 && config.ratio < 1.0)) throw InvalidInput("--ratio must lie strictly between 0 and 1");
  auto need_dir = [](const std::optional<fs::path>& dir, const char* flag) {
    if (!dir) throw InvalidInput(std::string(flag) + " is required");
    if (!fs::is_directory(*dir)) throw InvalidInput(std::string(flag) + " '" + dir->string() + "' is not a directory");
  };
  auto need_file = [](const std::optional<fs::path>& file, const char* flag) {
    if (file && !fs::is_regular_file(*file)) {
      throw InvalidInput(std::string(flag) + " '" + file->string() + "' does not exist");
    }
  };
  if (config.command == "synth") {
    if (!(config.val_fraction >= 0.0 && config.val_fraction < 1.0)) {
      throw InvalidInput("--val-fraction must lie in [0, 1)");
    }
    return;
  }
  need_file(config.train_ann, "--train-ann");
  need_file(config.val_ann, "--val-ann");
  if (config.command == "hash" || config.command == "dedup") {
    if (!config.train_dir && !config.val_dir) throw InvalidInput("--train-dir or --val-dir is required");
    if (config.train_dir) need_dir(config.train_dir, "--train-dir");
    if (config.val_dir) need_dir(config.val_dir, "--val-dir");
    return;
  }
  need_dir(config.train_dir, "--train-dir");
  need_dir(config.val_dir, "--val-dir");
}

int cmd_hash(const RunConfig& config) {
  const std::pair<const char*, const std::optional<fs::path>*> splits[] = {{"train", &config.train_dir},
                                                                          {"val", &config.val_dir}};
  for (const auto& [split, dir] : splits) {
    if (!*dir) continue;
    const auto start = std::chrono::steady_clock::now();
    HashStats stats;
    const SplitManifest m = load_split(config, split, **dir, std::nullopt, &stats);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::size_t total = stats.computed + stats.cache_hits;
    std::printf("%s: %zu images hashed (%zu computed, %zu cache hits, %.1f%%), %zu failed, %.3f s\n", split, m.size(),
                stats.computed, stats.cache_hits, total ? 100.0 * static_cast<double>(stats.cache_hits) / total : 0.0,
                stats.failed, secs);
  }
  return kExitOk;
}

int cmd_dedup(const RunConfig& config) {
  const std::pair<const char*, const std::optional<fs::path>*> splits[] = {{"train", &config.train_dir},
                                                                          {"val", &config.val_dir}};
  for (const auto& [split, dir] : splits) {
    if (!*dir) continue;
    const auto& ann = std::string(split) == "train" ? config.train_ann : config.val_ann;
    SplitOutcome s;
    s.hashed = load_split(config, split, **dir, ann);
    s.dedup = dedup_split(s.hashed);
    write_dedup_reports(config, split, s);
    write_text(config.out / (std::string(split) + "_unique.csv"), manifest_csv(s.dedup.unique));
    if (auto coco = maybe_coco(ann)) {
      Warnings warnings;
      std::set<std::string> kept;
      for (const ImageRecord& r : s.dedup.unique.records) kept.insert(r.id);
      write_coco(filter_coco(*coco, kept, warnings), config.out / (std::string(split) + "_unique.json"));
      print_warnings(warnings);
    }
    std::printf("%s: %zu images, %zu unique, %zu duplicate clusters\n", split, s.hashed.size(),
                s.dedup.unique.size(), s.dedup.clusters.size());
  }
  return kExitOk;
}

int cmd_leakage(const RunConfig& config) {
  const SplitManifest train = load_split(config, "train", *config.train_dir, config.train_ann);
  const SplitManifest val = load_split(config, "val", *config.val_dir, config.val_ann);
  std::vector<LeakageReport> rows;
  if (config.match == "table") {
    const DedupResult train_unique = dedup_split(train);
    const DedupResult val_unique = dedup_split(val);
    rows = leakage_table(train, val, &train_unique.unique, &val_unique.unique);
  } else {
    const MatchMode mode = match_mode_from_string(config.match);
    rows.push_back(detect_leakage(val, train, mode, "Val", "Train"));
    rows.push_back(detect_leakage(train, val, mode, "Train", "Val"));
  }
  write_leakage(config, rows);
  for (const LeakageReport& r : rows) {
    std::printf("%s -> %s: %zu of %zu (%.2f%%)\n", r.needles.c_str(), r.haystack.c_str(), r.matched,
                r.haystack_total, r.percent);
  }
  return kExitOk;
}

int cmd_resplit(const RunConfig& config) {
  SplitOutcome train, val;
  train.hashed = load_split(config, "train", *config.train_dir, config.train_ann);
  val.hashed = load_split(config, "val", *config.val_dir, config.val_ann);
  train.dedup = dedup_split(train.hashed);
  val.dedup = dedup_split(val.hashed);

  std::vector<LeakageReport> rows = leakage_table(train.hashed, val.hashed, &train.dedup.unique, &val.dedup.unique);
  write_leakage(config, rows);

  const LeakRemoval removal = remove_leakage(train.dedup.unique, val.dedup.unique);
  write_dedup_reports(config, "train", train, removal.removed);
  write_dedup_reports(config, "val", val);

  const ResplitResult split = merge_resplit(removal.train, val.dedup.unique, config.ratio, config.seed);
  if (const std::size_t left = cross_split_collisions(split.train, split.val); left != 0) {
    throw InvariantViolation(std::to_string(left) + " train/val collisions survived the resplit");
  }
  write_text(config.out / "train.csv", manifest_csv(split.train));
  write_text(config.out / "val.csv", manifest_csv(split.val));

  const auto train_coco = maybe_coco(config.train_ann);
  const auto val_coco = maybe_coco(config.val_ann);
  if (train_coco || val_coco) {
    write_split_annotations(split.train, train_coco, val_coco, config.out / "train.json");
    write_split_annotations(split.val, train_coco, val_coco, config.out / "val.json");
  }

  nlohmann::ordered_json summary;
  summary["mode"] = std::string(to_string(config.mode));
  summary["seed"] = config.seed;
  summary["ratio"] = config.ratio;
  summary["train_input"] = train.hashed.size();
  summary["val_input"] = val.hashed.size();
  summary["train_unique"] = train.dedup.unique.size();
  summary["val_unique"] = val.dedup.unique.size();
  summary["train_clusters"] = train.dedup.clusters.size();
  summary["val_clusters"] = val.dedup.clusters.size();
  summary["leaks_removed"] = removal.removed.size();
  summary["merged"] = split.train.size() + split.val.size();
  summary["final_train"] = split.train.size();
  summary["final_val"] = split.val.size();
  write_text(config.out / "summary.json", summary.dump(2) + "\n");

  std::printf("train %zu -> %zu unique, val %zu -> %zu unique, %zu leaks removed; resplit %zu/%zu\n",
              train.hashed.size(), train.dedup.unique.size(), val.hashed.size(), val.dedup.unique.size(),
              removal.removed.size(), split.train.size(), split.val.size());
  return kExitOk;
}

int cmd_synth(const RunConfig& config) {
  CorpusSpec spec;
  spec.seed = config.seed;
  spec.base_count = config.bases;
  spec.size = config.size;
  spec.exact_dups = config.exact_dups;
  spec.aug_dups = config.aug_dups;
  spec.leaks = config.leaks;
  spec.val_fraction = config.val_fraction;
  spec.train_dir = config.out / "train";
  spec.val_dir = config.out / "val";
  spec.train_ann = config.out / "train.json";
  spec.val_ann = config.out / "val.json";
  spec.workers = config.workers;
  const GroundTruth truth = generate(spec);
  write_text(config.out / "ground_truth.json", ground_truth_json(truth));
  std::printf("wrote %zu images to %s\n", truth.files.size(), config.out.string().c_str());
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  RunConfig config;
  if (const char* env = std::getenv("DEDUP_SCAN_CACHE"); env && *env) config.cache = fs::path(env);

  CLI::App app{"Finds exact and augmented duplicate images within and across dataset splits."};
  app.require_subcommand(1);
  std::string mode_name = std::string(to_string(config.mode));

  auto common = [&](CLI::App* sub) {
    sub->add_option("--mode", mode_name, "augmentation set")->check(CLI::IsMember({"paper6", "full8"}));
    sub->add_option("--workers", config.workers, "worker threads, 0 for one per CPU");
    sub->add_option("--out", config.out, "output directory")->capture_default_str();
  };
  auto inputs = [&](CLI::App* sub) {
    sub->add_option("--train-dir", config.train_dir, "train image directory");
    sub->add_option("--val-dir", config.val_dir, "validation image directory");
    sub->add_option("--train-ann", config.train_ann, "train COCO annotations");
    sub->add_option("--val-ann", config.val_ann, "validation COCO annotations");
    sub->add_option("--cache", config.cache, "hash cache directory (default: $DEDUP_SCAN_CACHE)");
    sub->add_flag("--strict-cache", config.strict_cache, "key cache hits on file SHA-256");
    sub->add_option("--format", config.formats, "report formats")->delimiter(',')->capture_default_str();
  };

  CLI::App* hash = app.add_subcommand("hash", "hash image directories into the cache");
  CLI::App* dedup = app.add_subcommand("dedup", "find duplicate clusters within each split");
  CLI::App* leakage = app.add_subcommand("leakage", "measure train/val leakage");
  CLI::App* resplit = app.add_subcommand("resplit", "dedup, remove leaks, merge and resplit");
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
  for (CLI::App* sub : {hash, dedup, leakage, resplit, synth}) common(sub);
  for (CLI::App* sub : {hash, dedup, leakage, resplit}) inputs(sub);
  leakage->add_option("--match", config.match, "exact, augmented, augmented-both or table")->capture_default_str();
  resplit->add_option("--seed", config.seed, "shuffle seed")->capture_default_str();
  resplit->add_option("--ratio", config.ratio, "train share of the merged set")->capture_default_str();
  synth->add_option("--seed", config.seed, "generator seed")->capture_default_str();
  synth->add_option("--bases", config.bases, "distinct base images")->capture_default_str();
  synth->add_option("--size", config.size, "image side in pixels")->capture_default_str();
  synth->add_option("--exact-dups", config.exact_dups, "byte copies planted in train");
  synth->add_option("--aug-dups", config.aug_dups, "transformed copies planted in train");
  synth->add_option("--leaks", config.leaks, "val images copied into train");
  synth->add_option("--val-fraction", config.val_fraction, "share of bases in val")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    config.command = app.get_subcommands().front()->get_name();
    config.mode = augment_mode_from_string(mode_name);
    validate(config);
    if (config.command == "hash") return cmd_hash(config);
    if (config.command == "dedup") return cmd_dedup(config);
    if (config.command == "leakage") return cmd_leakage(config);
    if (config.command == "resplit") return cmd_resplit(config);
    return cmd_synth(config);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace dedup
