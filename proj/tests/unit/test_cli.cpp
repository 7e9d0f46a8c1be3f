#include "escgnn/cli.hpp"
#include "escgnn/io.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "escgnn");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return escgnn::cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("escgnn_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenDataIsDeterministic) {
  ASSERT_EQ(run({"gen-data", "--task", "diameter", "--n-graphs", "10", "--n-points", "24", "--seed", "4",
                 "--out", path("a")}),
            0);
  ASSERT_EQ(run({"gen-data", "--task", "diameter", "--n-graphs", "10", "--n-points", "24", "--seed", "4",
                 "--out", path("b")}),
            0);
  const auto manifest = read_json(path("a/manifest.json"));
  EXPECT_EQ(manifest["N"], 10);
  ASSERT_EQ(manifest["records"].size(), 10u);
  for (const auto& e : manifest["records"]) {
    const std::string file = e["file"];
    const auto a = escgnn::io::read_bytes(path("a/" + file));
    EXPECT_EQ(a, escgnn::io::read_bytes(path("b/" + file)));
    EXPECT_EQ(escgnn::io::hex64(escgnn::io::fnv1a64(a)), e["fnv1a64"]);
  }
  EXPECT_EQ(escgnn::io::read_bytes(path("a/manifest.json")), escgnn::io::read_bytes(path("b/manifest.json")));
}

TEST_F(Cli, TrainEvalRotation) {
  ASSERT_EQ(run({"gen-data", "--n-graphs", "20", "--n-points", "24", "--seed", "1", "--out", path("d")}), 0);
  ASSERT_EQ(run({"precompute", "--data", path("d"), "--scales", "dyadic", "--J", "2"}), 0);
  for (const std::string mode : {"equivariant", "ablated"}) {
    ASSERT_EQ(run({"train", "--data", path("d"), "--mode", mode, "--task", "diameter", "--epochs-max", "4",
                   "--out", path(mode + ".bin"), "--metrics", path(mode + ".csv"), "--summary",
                   path(mode + ".json")}),
              0);
    std::ifstream csv(path(mode + ".csv"));
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "fold,epoch,split,mse,lr,wall_seconds,is_best");
    ASSERT_EQ(run({"eval", "--data", path("d"), "--model", path(mode + ".bin"), "--rotate-test", "on",
                   "--summary", path(mode + "_on.json")}),
              0);
    ASSERT_EQ(run({"eval", "--data", path("d"), "--model", path(mode + ".bin"), "--rotate-test", "off",
                   "--summary", path(mode + "_off.json")}),
              0);
    const double on = read_json(path(mode + "_on.json"))["test_mse"];
    const double off = read_json(path(mode + "_off.json"))["test_mse"];
    const double val = read_json(path(mode + "_on.json"))["val_mse"];
    EXPECT_DOUBLE_EQ(val, read_json(path(mode + ".json"))["best_val_mse"].get<double>());
    if (mode == "equivariant") {
      EXPECT_LE(std::abs(on - off), 1e-6 * off);
    } else {
      EXPECT_GT(std::abs(on - off), 1e-3 * off);
    }
  }
}

TEST_F(Cli, VerifyWritesPassingReport) {
  ASSERT_EQ(run({"verify", "--seed", "7", "--report", path("r.json")}), 0);
  const auto report = read_json(path("r.json"));
  EXPECT_TRUE(report["all_passed"].get<bool>());
  EXPECT_GE(report["checks"].size(), 10u);
}

TEST_F(Cli, VerifyWithoutCanonicalizationFails) {
  EXPECT_EQ(run({"verify", "--seed", "7", "--no-sign-canonicalization", "--report", path("r.json")}), 1);
  EXPECT_FALSE(read_json(path("r.json"))["all_passed"].get<bool>());
}

TEST_F(Cli, ErrorsExitNonzero) {
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"train", "--data", path("missing"), "--out", path("m.bin")}), 2);
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(err.rfind("error: IoError: ", 0), 0u) << err;
  EXPECT_NE(run({"no-such-command"}), 0);
  EXPECT_NE(run({"gen-data", "--task", "spiral", "--out", path("x")}), 0);
}
