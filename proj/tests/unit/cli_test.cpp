#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#ifdef PHONONSIM_EXE

namespace fs = std::filesystem;

namespace {

const std::string kConfigDir = PHONON_CONFIG_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("phononsim-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

int run(const std::string& args) {
  const std::string cmd = std::string(PHONONSIM_EXE) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config(const char* name) { return kConfigDir + "/" + name + ".yaml"; }

}  // namespace

TEST(Cli, ZeroTrialsIsValidationError) {
  TempDir out;
  EXPECT_EQ(run("simulate --config " + config("time_bin") + " --trials 0 --out " + out.path.string()), 2);
}

TEST(Cli, EmptySweepIsValidationError) {
  TempDir out;
  EXPECT_EQ(run("sweep --config " + config("time_bin") + " --var write_energy --values '' --out " + out.path.string()), 2);
}

TEST(Cli, UnknownSweepVariable) {
  TempDir out;
  EXPECT_EQ(run("sweep --config " + config("time_bin") + " --var phi_x --values 0.1 --out " + out.path.string()), 2);
}

TEST(Cli, MissingConfigFile) {
  TempDir out;
  EXPECT_EQ(run("simulate --config /nonexistent.yaml --out " + out.path.string()), 2);
}

TEST(Cli, UnknownFlag) { EXPECT_EQ(run("simulate --no-such-flag"), 2); }

TEST(Cli, ResultsIndependentOfWorkers) {
  TempDir a, b;
  const std::string base = "simulate --config " + config("time_bin") + " --trials 200000 --seed 7 --out ";
  ASSERT_EQ(run(base + a.path.string() + " --workers 1"), 0);
  ASSERT_EQ(run(base + b.path.string() + " --workers 3"), 0);
  const auto ra = slurp(a.path / "results.json");
  ASSERT_FALSE(ra.empty());
  EXPECT_EQ(ra, slurp(b.path / "results.json"));
}

TEST(Cli, ManifestListsEveryFile) {
  TempDir out;
  ASSERT_EQ(run("simulate --config " + config("double_cross") + " --exact --out " + out.path.string()), 0);
  const auto manifest = nlohmann::json::parse(slurp(out.path / "manifest.json"));
  EXPECT_EQ(manifest["exit_code"], 0);
  EXPECT_FALSE(manifest["config_digest"].get<std::string>().empty());
  std::set<std::string> listed;
  for (const auto& a : manifest["artifacts"]) {
    listed.insert(a["path"].get<std::string>());
    EXPECT_EQ(a["bytes"].get<std::size_t>(), fs::file_size(out.path / a["path"].get<std::string>()));
  }
  for (const auto& entry : fs::directory_iterator(out.path)) {
    const auto name = entry.path().filename().string();
    if (name != "manifest.json") EXPECT_TRUE(listed.count(name)) << name;
  }
  EXPECT_TRUE(listed.count("results.json"));
  EXPECT_TRUE(listed.count("config.yaml"));
}

TEST(Cli, OracleFlipFails) {
  TempDir good, bad;
  EXPECT_EQ(run("oracle-check --circuits 3 --tolerance 1 --out " + good.path.string()), 0);
  EXPECT_EQ(run("oracle-check --circuits 3 --tolerance 1 --flip-read-phase --out " + bad.path.string()), 3);
  const auto manifest = nlohmann::json::parse(slurp(bad.path / "manifest.json"));
  EXPECT_EQ(manifest["exit_code"], 3);
}

TEST(Cli, RateBudget) {
  TempDir out;
  EXPECT_EQ(run("rate-budget --config " + config("bell") + " --out " + out.path.string()), 0);
  EXPECT_TRUE(fs::exists(out.path / "results.json"));
}

#endif
