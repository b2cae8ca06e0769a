#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dare/dataio.hpp"
#include "dare_tools/cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result dare_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dare::tools::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dare_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Small image dataset plus an archive trained on it, shared by tests.
class ImageArchive : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = scratch("image_archive");
    ASSERT_EQ(dare_run({"synth", "--mode", "image", "--classes", "2", "--per-class", "12", "--seed", "3", "--out",
                        (root_ / "data").string()})
                  .code,
              0);
    const Result r = dare_run({"train", "--mode", "image", "--data", (root_ / "data" / "manifest.csv").string(),
                               "--topology", "mini2", "--hidden", "16", "--epochs", "30", "--seed", "1", "--out",
                               (root_ / "archive").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static fs::path root_;
};
fs::path ImageArchive::root_;

}  // namespace

TEST(CliSynth, WritesDatasetAndRunManifest) {
  const fs::path dir = scratch("synth");
  const Result r = dare_run({"synth", "--classes", "20", "--per-class", "50", "--mode", "fmv", "--dim", "16",
                             "--seed", "7", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(dare::read_dfmv(dir / "features.dfmv").size(), 1000u);
  const auto manifest = nlohmann::json::parse(slurp(dir / "run_manifest.json"));
  EXPECT_EQ(manifest["command"], "synth");
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_TRUE(manifest.contains("tool_version"));
  EXPECT_TRUE(manifest.contains("started_at"));
  EXPECT_EQ(manifest["outputs"].size(), 1u);
}

TEST(CliSynth, MissingOutIsUsageError) {
  const Result r = dare_run({"synth", "--classes", "4"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--out"), std::string::npos);
  EXPECT_EQ(dare_run({}).code, 2);
  EXPECT_EQ(dare_run({"frobnicate"}).code, 2);
  EXPECT_EQ(dare_run({"synth", "--out", "x", "--mode", "video"}).code, 2);
}

TEST(CliSynth, HelpExitsZero) {
  const Result r = dare_run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("Exit codes"), std::string::npos);
}

TEST(CliSynth, SameFlagsSameBytes) {
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(dare_run({"synth", "--mode", "fmv", "--seed", "5", "--out", dir.string()}).code, 0);
    ASSERT_EQ(dare_run({"synth", "--mode", "image", "--classes", "3", "--per-class", "2", "--seed", "5", "--out",
                        (dir / "img").string()})
                  .code,
              0);
  }
  EXPECT_EQ(slurp(a / "features.dfmv"), slurp(b / "features.dfmv"));
  EXPECT_EQ(slurp(a / "img" / "images" / "000004_L.ppm"), slurp(b / "img" / "images" / "000004_L.ppm"));
}

TEST(CliTrain, Dare20ArchiveAndDeterminism) {
  const fs::path dir = scratch("train");
  ASSERT_EQ(dare_run({"synth", "--per-class", "8", "--out", (dir / "data").string()}).code, 0);
  const std::string data = (dir / "data" / "features.dfmv").string();
  auto train = [&](const std::string& out, const std::string& jobs) {
    return dare_run({"train", "--data", data, "--hidden", "32", "--epochs", "5", "--seed", "4", "--jobs", jobs,
                     "--out", (dir / out).string()});
  };
  const Result r = train("a", "1");
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t node_files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a" / "nodes")) node_files += e.path().extension() == ".dare";
  EXPECT_EQ(node_files, 11u);
  for (const char* f : {"topology.json", "tree.json", "manifest.json", "loss_history.csv", "run_manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["train"]["learning_rate"], 0.001);
  EXPECT_EQ(lines(slurp(dir / "a" / "loss_history.csv")).size(), 1u + 11 * 5);

  ASSERT_EQ(train("b", "3").code, 0);
  for (const char* f : {"tree.json", "loss_history.csv", "manifest.json", "nodes/node_0.dare", "nodes/node_7.dare"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(CliTrain, UncoveredLabelExitsThree) {
  const fs::path dir = scratch("uncovered");
  ASSERT_EQ(dare_run({"synth", "--classes", "4", "--per-class", "3", "--out", dir.string()}).code, 0);
  const Result r = dare_run({"train", "--data", (dir / "features.dfmv").string(), "--topology", "mini2", "--hidden",
                             "8", "--epochs", "1", "--out", (dir / "archive").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("UncoveredLabel"), std::string::npos);
  EXPECT_EQ(dare_run({"train", "--data", (dir / "missing.dfmv").string(), "--out", "x"}).code, 2);
}

TEST(CliEval, StubOnBalancedFourClasses) {
  const fs::path dir = scratch("eval_stub");
  ASSERT_EQ(dare_run({"synth", "--classes", "4", "--per-class", "10", "--out", dir.string()}).code, 0);
  const Result r = dare_run({"eval", "--data", (dir / "features.dfmv").string(), "--stub-class", "0", "--out",
                             (dir / "eval").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("CCR 25.00"), std::string::npos);
  const auto rows = lines(slurp(dir / "eval" / "metrics.csv"));
  EXPECT_EQ(rows.size(), 1u + 4 + 1);
  EXPECT_EQ(rows.back().rfind("summary,", 0), 0u);
  EXPECT_EQ(lines(slurp(dir / "eval" / "box_stats.csv")).size(), 3u);
  const Result k = dare_run({"eval", "--data", (dir / "features.dfmv").string(), "--stub-class", "0", "--kfold", "2",
                             "--out", (dir / "eval_k").string()});
  ASSERT_EQ(k.code, 0) << k.err;
  EXPECT_NE(k.out.find("CCR 25.00"), std::string::npos);
}

TEST(CliEval, ModeConflictsAreUsageErrors) {
  const fs::path dir = scratch("eval_usage");
  ASSERT_EQ(dare_run({"synth", "--classes", "2", "--per-class", "3", "--out", dir.string()}).code, 0);
  const std::string data = (dir / "features.dfmv").string();
  EXPECT_EQ(dare_run({"eval", "--data", data, "--out", (dir / "e").string()}).code, 2);
  EXPECT_EQ(dare_run({"eval", "--data", data, "--archive", dir.string(), "--kfold", "2", "--out", (dir / "e").string()}).code, 2);
}

TEST(CliEval, KfoldOnSeparableData) {
  const fs::path dir = scratch("eval_kfold");
  ASSERT_EQ(dare_run({"synth", "--out", dir.string()}).code, 0);
  const Result r = dare_run({"eval", "--data", (dir / "features.dfmv").string(), "--kfold", "5", "--hidden", "64,64",
                             "--seed", "7", "--out", (dir / "eval").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto first = lines(r.out).front();
  ASSERT_EQ(first.rfind("CCR ", 0), 0u);
  EXPECT_GE(std::stod(first.substr(4)), 95.0);
  EXPECT_EQ(lines(slurp(dir / "eval" / "metrics.csv")).size(), 22u);
  EXPECT_EQ(lines(slurp(dir / "eval" / "folds.csv")).size(), 6u);
}

TEST_F(ImageArchive, PredictReturnsGeneratingLabel) {
  const auto manifest = dare::load_manifest(root_ / "data" / "manifest.csv");
  for (std::size_t i : {0u, 5u, 13u, 20u}) {
    const auto& s = manifest.samples[i];
    const Result r = dare_run({"predict", "--left", s.left.string(), "--right", s.right.string(), "--archive",
                               (root_ / "archive").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto fields = lines(r.out).front();
    EXPECT_EQ(fields.substr(0, fields.find('\t')), std::string(dare::taxonomy()[s.label]));
    EXPECT_NE(fields.find("\tRootNet\t"), std::string::npos);
  }
}

TEST_F(ImageArchive, PredictResizesOtherSizes) {
  const auto pairs = dare::synth_images({2, 1, 48, 0.05, 3});
  const fs::path dir = scratch("resized");
  fs::create_directories(dir);
  dare::encode_ppm(pairs[0].left, dir / "l.ppm");
  dare::encode_ppm(pairs[0].right, dir / "r.ppm");
  const Result r = dare_run({"predict", "--left", (dir / "l.ppm").string(), "--right", (dir / "r.ppm").string(),
                             "--archive", (root_ / "archive").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "run_manifest.json"));
}

TEST_F(ImageArchive, PredictMissingRightIsUsageError) {
  const auto manifest = dare::load_manifest(root_ / "data" / "manifest.csv");
  const Result r = dare_run({"predict", "--left", manifest.samples[0].left.string(), "--right",
                             (root_ / "nope.ppm").string(), "--archive", (root_ / "archive").string()});
  EXPECT_EQ(r.code, 2);
}

TEST_F(ImageArchive, HoldoutEvalOnImages) {
  const Result r = dare_run({"eval", "--data", (root_ / "data" / "manifest.csv").string(), "--archive",
                             (root_ / "archive").string(), "--out", (root_ / "eval").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("CCR 100.00"), std::string::npos);
}

TEST_F(ImageArchive, BenchReportsStages) {
  const Result r = dare_run({"bench", "--archive", (root_ / "archive").string(), "--data",
                             (root_ / "data" / "manifest.csv").string(), "--reps", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* stage : {"decode", "resize", "extract", "route", "total"}) {
    bool found = false;
    for (const auto& l : lines(r.out)) {
      if (l.rfind(std::string(stage) + ",", 0) != 0) continue;
      found = true;
      const auto a = l.find(','), b = l.rfind(',');
      EXPECT_LE(std::stod(l.substr(a + 1, b - a - 1)), std::stod(l.substr(b + 1)));
    }
    EXPECT_TRUE(found) << stage;
  }
  EXPECT_TRUE(r.err.empty());
  const Result one = dare_run({"bench", "--archive", (root_ / "archive").string(), "--data",
                               (root_ / "data" / "manifest.csv").string(), "--reps", "1"});
  EXPECT_EQ(one.code, 0);
  EXPECT_NE(one.err.find("degenerate"), std::string::npos);
}
