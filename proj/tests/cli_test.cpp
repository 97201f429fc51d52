#include "dedup/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <random>

#include <json.hpp>

#include "dedup/image_io.hpp"
#include "dedup/synth.hpp"
#include "test_support.hpp"

namespace dedup {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "dedup-scan");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_images(const fs::path& dir, std::size_t n, std::uint64_t seed) {
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) write_png(dir / ("i" + std::to_string(i) + ".png"), testing::smooth_image(rng, 40, 40));
}

TEST(Cli, HelpAndUsageErrors) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"--help"}), kExitOk);
  ::testing::internal::GetCapturedStdout();
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({}), kExitInput);
  EXPECT_EQ(run({"dedup", "--bogus"}), kExitInput);
  EXPECT_EQ(run({"dedup", "--train-dir", "/nonexistent/dir"}), kExitInput);
  EXPECT_EQ(run({"dedup", "--mode", "full7", "--train-dir", "."}), kExitInput);
  EXPECT_EQ(run({"leakage", "--train-dir", "."}), kExitInput);
  ::testing::internal::GetCapturedStderr();
}

TEST(Cli, ValidateRejectsBadConfigs) {
  TempDir dir("cli");
  RunConfig c;
  c.command = "resplit";
  c.train_dir = c.val_dir = dir.path();
  EXPECT_NO_THROW(validate(c));
  c.ratio = 1.0;
  EXPECT_THROW(validate(c), InvalidInput);
  c.ratio = 0.9;
  c.formats = {"xml"};
  EXPECT_THROW(validate(c), InvalidInput);
  c.formats = {"csv"};
  c.train_ann = dir / "missing.json";
  EXPECT_THROW(validate(c), InvalidInput);
}

TEST(Cli, LeakageAgainstItselfIsHundredPercent) {
  TempDir dir("cli");
  write_images(dir / "imgs", 5, 1);
  const std::string imgs = (dir / "imgs").string();
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"leakage", "--train-dir", imgs, "--val-dir", imgs, "--match", "exact", "--out",
                 (dir / "out").string(), "--format", "csv"}),
            kExitOk);
  ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(slurp(dir / "out" / "leakage.csv"),
            "Needles Set,Haystack Set,Total number of images in haystack,Number of needles in haystack,"
            "Data Leakage %\nVal,Train,5,5,100.00\nTrain,Val,5,5,100.00\n");
  EXPECT_FALSE(fs::exists(dir / "out" / "leakage.json"));
}

TEST(Cli, SecondHashRunIsAllCacheHits) {
  TempDir dir("cli");
  write_images(dir / "imgs", 4, 2);
  const std::vector<std::string> args = {"hash", "--train-dir", (dir / "imgs").string(), "--cache",
                                         (dir / "cache").string()};
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run(args), kExitOk);
  const std::string first = ::testing::internal::GetCapturedStdout();
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run(args), kExitOk);
  const std::string second = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(first.find("4 computed, 0 cache hits"), std::string::npos) << first;
  EXPECT_NE(second.find("0 computed, 4 cache hits, 100.0%"), std::string::npos) << second;
  EXPECT_TRUE(fs::exists(dir / "cache" / "train.phcache"));
}

TEST(Cli, CacheDefaultsToEnvironment) {
  TempDir dir("cli");
  write_images(dir / "imgs", 2, 3);
  ::setenv("DEDUP_SCAN_CACHE", (dir / "envcache").string().c_str(), 1);
  ::testing::internal::CaptureStdout();
  const int rc = run({"hash", "--val-dir", (dir / "imgs").string()});
  ::testing::internal::GetCapturedStdout();
  ::unsetenv("DEDUP_SCAN_CACHE");
  EXPECT_EQ(rc, kExitOk);
  EXPECT_TRUE(fs::exists(dir / "envcache" / "val.phcache"));
}

TEST(Cli, DedupWritesReports) {
  TempDir dir("cli");
  write_images(dir / "imgs", 3, 4);
  fs::copy_file(dir / "imgs" / "i0.png", dir / "imgs" / "z.png");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"dedup", "--train-dir", (dir / "imgs").string(), "--out", (dir / "out").string()}), kExitOk);
  ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(slurp(dir / "out" / "train_audit.csv"),
            "image_id,disposition\ni0.png,retained\ni1.png,retained\ni2.png,retained\nz.png,duplicate-of:i0.png\n");
  const auto clusters = nlohmann::json::parse(slurp(dir / "out" / "train_clusters.json"));
  EXPECT_EQ(clusters["unique"], 3);
}

struct SynthCorpus {
  TempDir dir{"cli"};
  GroundTruth truth;

  SynthCorpus() {
    CorpusSpec spec;
    spec.seed = 11;
    spec.base_count = 60;
    spec.size = 64;
    spec.exact_dups = 12;
    spec.aug_dups = 18;
    spec.leaks = 9;
    spec.train_dir = dir / "train";
    spec.val_dir = dir / "val";
    spec.train_ann = dir / "train.json";
    spec.val_ann = dir / "val.json";
    truth = generate(spec);
  }

  std::vector<std::string> resplit_args(const std::string& out, const std::string& workers) const {
    return {"resplit",   "--train-dir", (dir / "train").string(), "--val-dir", (dir / "val").string(),
            "--train-ann", (dir / "train.json").string(), "--val-ann", (dir / "val.json").string(),
            "--out",     (dir / out).string(), "--workers", workers, "--seed", "3"};
  }
};

TEST(Cli, ResplitMatchesGroundTruth) {
  SynthCorpus c;
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run(c.resplit_args("out", "2")), kExitOk);
  ::testing::internal::GetCapturedStdout();
  const ExpectedOutcome e = expected_outcome(c.truth, AugmentMode::Paper6);
  const auto summary = nlohmann::json::parse(slurp(c.dir / "out" / "summary.json"));
  EXPECT_EQ(summary["train_unique"], e.train_unique);
  EXPECT_EQ(summary["val_unique"], e.val_unique);
  EXPECT_EQ(summary["leaks_removed"], e.removed.size());
  EXPECT_EQ(summary["final_train"].get<std::size_t>() + summary["final_val"].get<std::size_t>(),
            e.train_unique + e.val_unique - e.removed.size());

  std::vector<std::vector<std::string>> clusters;
  const auto report = nlohmann::json::parse(slurp(c.dir / "out" / "train_clusters.json"));
  for (const auto& cl : report["clusters"]) {
    clusters.push_back(cl["members"].get<std::vector<std::string>>());
  }
  std::sort(clusters.begin(), clusters.end());
  EXPECT_EQ(clusters, e.train_clusters);

  const auto leakage = nlohmann::json::parse(slurp(c.dir / "out" / "leakage.json"));
  ASSERT_EQ(leakage.size(), e.leakage.size());
  for (std::size_t i = 0; i < e.leakage.size(); ++i) {
    EXPECT_EQ(leakage[i]["matched"], e.leakage[i].matched) << i;
    EXPECT_EQ(leakage[i]["haystack_total"], e.leakage[i].haystack_total) << i;
  }
  EXPECT_TRUE(fs::exists(c.dir / "out" / "train.json"));
}

TEST(Cli, ReportsIdenticalAcrossWorkerCounts) {
  SynthCorpus c;
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run(c.resplit_args("w1", "1")), kExitOk);
  ASSERT_EQ(run(c.resplit_args("w8", "8")), kExitOk);
  ::testing::internal::GetCapturedStdout();
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(c.dir / "w1")) {
    EXPECT_EQ(slurp(e.path()), slurp(c.dir / "w8" / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 10u);
}

TEST(Cli, SynthCommandWritesCorpus) {
  TempDir dir("cli");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"synth", "--out", dir.path().string(), "--bases", "10", "--size", "48", "--exact-dups", "2",
                 "--leaks", "1", "--seed", "9"}),
            kExitOk);
  ::testing::internal::GetCapturedStdout();
  const auto gt = nlohmann::json::parse(slurp(dir / "ground_truth.json"));
  EXPECT_EQ(gt["files"].size(), 13u);
  EXPECT_EQ(gt["leaks"].size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "train.json"));
}

}  // namespace
}  // namespace dedup
