#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("gtbp_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string("GTBP_WORKERS=1 \"") + GTBP_CLI + "\" " + args + " >" +
                            (dir_ / "stdout.txt").string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = read(err);
    return r;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

const char* kConfig = R"(
scenario:
  preset: scenario1
filter:
  particles: 150
methods: [bp]
runs: 1
steps: 10
seed: 3
record_timings: false
)";

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

TEST_F(Cli, PresetPrintsConfig) {
  const auto r = run("preset --name scenario1");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(read(dir_ / "stdout.txt").find("scenario1"), std::string::npos);
  EXPECT_EQ(run("preset --name nope").code, 2);
}

TEST_F(Cli, MissingOptionIsUsageError) {
  EXPECT_EQ(run("run --out x").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("bench --sweep m").code, 2);
}

TEST_F(Cli, BadConfigNamesField) {
  const auto cfg = write("bad.yaml", "scenario: {preset: scenario1}\nfilter: {particlez: 10}\nmethods: [bp]\n");
  const auto r = run("run --config " + cfg.string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("filter.particlez"), std::string::npos) << r.err;
  const auto missing = run("run --config " + (dir_ / "absent.yaml").string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(missing.code, 2);
}

TEST_F(Cli, RunIsReproducible) {
  const auto cfg = write("ok.yaml", kConfig);
  ASSERT_EQ(run("run --config " + cfg.string() + " --out " + (dir_ / "a").string()).code, 0);
  ASSERT_EQ(run("run --config " + cfg.string() + " --out " + (dir_ / "b").string()).code, 0);
  const std::string a = read(dir_ / "a" / "metrics.csv");
  EXPECT_EQ(a, read(dir_ / "b" / "metrics.csv"));
  EXPECT_EQ(read(dir_ / "a" / "tracks.jsonl"), read(dir_ / "b" / "tracks.jsonl"));
  EXPECT_EQ(count_lines(a), 11);
  EXPECT_EQ(count_lines(read(dir_ / "a" / "tracks.jsonl")), 10);
  ASSERT_EQ(run("run --config " + cfg.string() + " --out " + (dir_ / "c").string() + " --seed 4").code, 0);
  EXPECT_NE(a, read(dir_ / "c" / "metrics.csv"));
}

TEST_F(Cli, BenchWritesCsv) {
  const auto out = dir_ / "bench";
  const auto r = run("bench --sweep m --values 1,2 --steps 2 --warmup 2 --particles 100 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read(out / "bench.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "sweep,value,run,mean_step_ms,predict_ms,assoc_ms,update_ms,resample_ms,mean_tracks,mean_measurements");
  EXPECT_EQ(count_lines(csv), 3);
  EXPECT_EQ(count_lines(read(out / "bench_fit.csv")), 3);
  EXPECT_EQ(run("bench --sweep m --values 1,x --out " + out.string()).code, 2);
  EXPECT_EQ(run("bench --sweep speed --values 1,2 --out " + out.string()).code, 2);
}

}  // namespace
