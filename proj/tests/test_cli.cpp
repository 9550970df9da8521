#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = BAYESPROJ_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bayesproj_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("project --in x --out y --bogus"), 1);
  EXPECT_EQ(run("project --in x --out " + path("o") + " --mode fancy"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, EmptyInputYieldsNoFrames) {
  std::ofstream(path("empty.tsv")).flush();
  ASSERT_EQ(run("project --in " + path("empty.tsv") + " --out " + path("out")), 0);
  const auto manifest = nlohmann::json::parse(slurp(path("out/run.json")));
  EXPECT_TRUE(manifest.at("steps").empty());
  EXPECT_EQ(slurp(path("out/pairs.tsv")), "t\ti\tj\tw\tx\talpha\tbeta\tmean_pi\texpected_w\n");
}

TEST_F(Cli, MissingAndMalformedInput) {
  EXPECT_EQ(run("project --in " + path("absent.tsv") + " --out " + path("out")), 3);
  std::ofstream(path("bad.tsv")) << "1\ta\n";
  EXPECT_EQ(run("project --in " + path("bad.tsv") + " --out " + path("out")), 2);
}

TEST_F(Cli, GenerateIsByteDeterministic) {
  const std::string base = "generate --seeds builtin --steps 50 --rng-seed 7 --changepoint 20:builtin --out ";
  ASSERT_EQ(run(base + path("a.tsv")), 0);
  ASSERT_EQ(run(base + path("b.tsv")), 0);
  EXPECT_FALSE(slurp(path("a.tsv")).empty());
  EXPECT_EQ(slurp(path("a.tsv")), slurp(path("b.tsv")));
}

TEST_F(Cli, ProjectAndInspect) {
  ASSERT_EQ(run("generate --seeds builtin --steps 20 --rng-seed 3 --out " + path("s.tsv")), 0);
  for (const std::string mode : {"cumulative", "mixed:0.9", "bank"}) {
    const std::string out = path("run_" + mode.substr(0, 4));
    ASSERT_EQ(run("project --in " + path("s.tsv") + " --mode " + mode + " --out " + out), 0) << mode;
    ASSERT_EQ(run("inspect --in " + out + " --pair 1,2"), 0) << mode;
    EXPECT_EQ(run("inspect --in " + out + " --pair 1,9"), 2);
  }
  EXPECT_TRUE(fs::exists(path("run_bank/scores.tsv")));
  ASSERT_EQ(run("project --in " + path("s.tsv") + " --dense --out " + path("dense")), 0);
  EXPECT_TRUE(fs::exists(path("dense/dense/pi_20.tsv")));
  // Thread count does not change the output.
  ASSERT_EQ(run("project --in " + path("s.tsv") + " --threads 3 --out " + path("t3")), 0);
  EXPECT_EQ(slurp(path("t3/pairs.tsv")), slurp(path("run_cumu/pairs.tsv")));
}

TEST_F(Cli, ReproduceStationaryPair) {
  ASSERT_EQ(run("reproduce --experiment fig2 --out " + path("fig2")), 0);
  const auto summary = nlohmann::json::parse(slurp(path("fig2/summary.json")));
  const double v = summary.at("mean_final_pi").get<double>();
  EXPECT_GE(v, 0.644);
  EXPECT_LE(v, 0.704);
  EXPECT_EQ(run("reproduce --experiment fig9 --out " + path("x")), 1);
}

}  // namespace
