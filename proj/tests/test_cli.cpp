#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "artifacts.hpp"
#include "commands.hpp"
#include "config.hpp"

using namespace gclab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gclab_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(GCLAB_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, DefaultsAreEchoed) {
  const ScenarioConfig c = parse_config(Json::object());
  EXPECT_EQ(c.resolution, 128);
  EXPECT_EQ(c.region.type, "admissible");
  EXPECT_DOUBLE_EQ(c.region.epsilon0, 0.05);
  EXPECT_EQ(c.experiment.ensemble, 64);
  EXPECT_EQ(c.experiment.ensemble_seed, 20240607u);
  EXPECT_EQ(c.echo["region"]["epsilon"], 0.1);
  EXPECT_EQ(c.echo["solver"]["cfl"], 0.5);
}

TEST(Config, UnknownKeyNamesPath) {
  try {
    parse_config(Json::parse(R"({"region": {"epsilom": 0.1}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "region.epsilom");
  }
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_THROW(parse_config(Json::parse(R"({"resolution": "high"})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"resolution": 4})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"region": {"epsilon": 0.1, "epsilon0": 0.2}})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"solver": {"cfl": 0.9}})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"region": {"preset": "omega9"}})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"region": {"type": "mask"}})")), ConfigError);
}

TEST(Config, OverridesApply) {
  RunOptions opt;
  opt.preset = "omega3";
  opt.resolution = 64;
  Json doc = resolve_document(opt);
  EXPECT_EQ(doc["region"]["type"], "preset");
  EXPECT_EQ(doc["region"]["preset"], "omega3");
  EXPECT_EQ(doc["resolution"], 64);
  RunOptions eps;
  eps.epsilon = 0.2;
  const ScenarioConfig c = parse_config(resolve_document(eps));
  EXPECT_DOUBLE_EQ(c.region.epsilon, 0.2);
  EXPECT_DOUBLE_EQ(c.region.epsilon0, 0.1);
}

TEST(Artifacts, Sha256KnownVector) {
  EXPECT_EQ(sha256_bytes("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Artifacts, CsvFormatting) {
  CsvWriter w({"a", "b"});
  w.row({0.1, 2.0});
  w.row_text({"x,y", "say \"hi\""});
  EXPECT_EQ(w.str(), "a,b\r\n0.10000000000000001,2\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
  EXPECT_THROW(w.row({1.0}), std::logic_error);
}

TEST(Cli, RegionRunWritesManifest) {
  const fs::path out = scratch("region");
  EXPECT_EQ(run_binary("region --epsilon 0.1 --epsilon0 0.05 --out " + out.string()), 0);
  const Json m = read_manifest(out / "manifest.json");
  EXPECT_EQ(m["subcommand"], "region");
  EXPECT_EQ(m["version"], kVersion);
  EXPECT_TRUE(m["pass"].get<bool>());
  for (const auto& f : m["files"]) {
    EXPECT_EQ(sha256_file(out / f["path"].get<std::string>()), f["sha256"].get<std::string>());
  }
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("codes");
  fs::create_directories(out);
  EXPECT_EQ(run_binary("gcc --preset omega3 --resolution 64 --out " + (out / "gcc").string()), 1);
  std::ofstream(out / "bad.json") << R"({"regoin": {}})";
  EXPECT_EQ(run_binary("region --config " + (out / "bad.json").string() + " --out " + (out / "bad").string()), 2);
  std::ofstream(out / "broken.json") << "{";
  EXPECT_EQ(run_binary("region --config " + (out / "broken.json").string() + " --out " + (out / "b").string()), 2);
  EXPECT_EQ(run_binary("region --epsilon 0.01 --resolution 32 --out " + (out / "tiny").string()), 2);
  EXPECT_EQ(run_binary("nosuch"), 2);
}

TEST(Cli, RerunIsByteIdentical) {
  const fs::path out = scratch("rerun");
  ASSERT_EQ(run_binary("simulate --preset omega2 --resolution 32 --out " + out.string()), 0);
  EXPECT_EQ(run_binary("rerun --manifest " + (out / "manifest.json").string() + " --out " + (out / "again").string()),
            0);
  EXPECT_EQ(slurp(out / "energy.csv"), slurp(out / "again" / "energy.csv"));
}

TEST(Cli, RenderAndReport) {
  const fs::path out = scratch("render");
  ASSERT_EQ(run_binary("gcc --preset omega1 --resolution 32 --out " + (out / "gcc").string()), 0);
  const std::string before = slurp(out / "gcc" / "rays.svg");
  fs::remove(out / "gcc" / "rays.svg");
  EXPECT_EQ(run_binary("render --manifest " + (out / "gcc" / "manifest.json").string()), 0);
  EXPECT_EQ(slurp(out / "gcc" / "rays.svg"), before);
  EXPECT_EQ(run_binary("report --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "summary.txt"));
  fs::remove(out / "gcc" / "ray_paths.csv");
  EXPECT_EQ(run_binary("render --manifest " + (out / "gcc" / "manifest.json").string()), 2);
}

TEST(Cli, RenderAdmissibleRays) {
  const fs::path out = scratch("render_adm");
  ASSERT_EQ(run_binary("gcc --epsilon 0.2 --resolution 64 --out " + out.string()), 0);
  EXPECT_EQ(run_binary("render --what rays --manifest " + (out / "manifest.json").string()), 0);
}
