#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dedup/augment.hpp"

namespace dedup {

struct RunConfig {
  std::string command;  // hash, dedup, leakage, resplit or synth
  std::optional<std::filesystem::path> train_dir;
  std::optional<std::filesystem::path> val_dir;
  std::optional<std::filesystem::path> train_ann;
  std::optional<std::filesystem::path> val_ann;
  AugmentMode mode = AugmentMode::Paper6;
  std::string match = "table";  // exact, augmented, augmented-both or table
  // Directory holding one <split>.phcache per split.
  std::optional<std::filesystem::path> cache;
  bool strict_cache = false;
  std::filesystem::path out = "dedup-out";
  unsigned workers = 0;
  std::uint64_t seed = 0;
  double ratio = 0.9;
  std::vector<std::string> formats = {"json", "csv"};

  // synth only
  std::size_t bases = 100;
  std::size_t size = 300;
  std::size_t exact_dups = 0;
  std::size_t aug_dups = 0;
  std::size_t leaks = 0;
  double val_fraction = 0.2;
};

// Exit codes: 0 success, 1 bad input, 2 internal invariant violation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInternal = 2;

// Throws InvalidInput describing the first problem.
void validate(const RunConfig& config);

int cmd_hash(const RunConfig& config);
int cmd_dedup(const RunConfig& config);
int cmd_leakage(const RunConfig& config);
int cmd_resplit(const RunConfig& config);
int cmd_synth(const RunConfig& config);

// Parses argv, runs the subcommand and maps exceptions to exit codes.
int run_cli(int argc, char** argv);

}  // namespace dedup
