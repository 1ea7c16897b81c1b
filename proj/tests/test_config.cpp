#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "paraspec/config.hpp"
#include "paraspec/errors.hpp"

using namespace paraspec;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(PARASPEC_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const char* kMinimalSkew =
    "[run]\nscenario = skew\nseed = 3\n"
    "[system]\ny = 0.25\nb = 1\neta = 0.1*cos(1)\nk = 1\n";

void expect_field_error(const std::string& text, const std::string& field) {
  try {
    parse_config(text);
    FAIL("accepted: " << text);
  } catch (const ConfigError& e) {
    CHECK_MESSAGE(std::string(e.what()).find(field) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("shipped configs load, validate and round-trip") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".ini") continue;
    ++count;
    CAPTURE(entry.path().string());
    const ExperimentConfig c = load_config(entry.path());
    validate_config(c);
    const std::string text = to_ini(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(to_ini(back) == text);
    CHECK(config_hash(back) == config_hash(c));
    (void)build_system(c, 0);
  }
  CHECK(count >= 7);
}

TEST_CASE("hash is FNV-1a of the canonical text without output_dir") {
  ExperimentConfig c = parse_config(kMinimalSkew);
  const std::string h = config_hash(c);
  CHECK(h.size() == 16);
  CHECK(h == fnv1a(to_ini(c)));
  c.output_dir = "/tmp/somewhere";
  CHECK(config_hash(c) == h);
  CHECK(to_ini(c).find("output_dir = /tmp/somewhere") != std::string::npos);
  c.seed = 4;
  CHECK(config_hash(c) != h);
}

TEST_CASE("equivalent spellings share a hash") {
  const ExperimentConfig a = parse_config(kMinimalSkew);
  const ExperimentConfig b = parse_config(
      "[run]\nscenario = skew\nseed = 3\n"
      "[system]\ny = 0.250\nb = 1\neta = 0.05*exp(1); 0.05*exp(-1)\nk = 1\n");
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("golden rotation number") {
  const ExperimentConfig c = load_config(kConfigs / "furstenberg.ini");
  CHECK(c.map.y == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("malformed configs name the offending field") {
  const std::string base = kMinimalSkew;
  expect_field_error("[run]\nscenario = nope\nseed = 1\n", "run.scenario");
  expect_field_error(base + "[correlation]\nN = -3\n", "correlation.N");
  expect_field_error(base + "[correlation]\nN = many\n", "correlation.N");
  expect_field_error(base + "[correlation]\nbogus = 1\n", "correlation.bogus");
  expect_field_error(base + "[nonsense]\nx = 1\n", "nonsense");
  expect_field_error(base + "[conditions]\nt_min = 1\nt_max = 50\n", "conditions.t_max");
  expect_field_error(base + "[spectrum]\nwindow = boxcar\n", "spectrum.window");
  expect_field_error(base + "[spectrum]\nbochner_m = 1000\n", "spectrum.bochner_m");
  expect_field_error("[run]\nscenario = skew\nseed = 3\n[system]\ny = 0.25\nb = 0\neta = 0\nk = 1\n", "system");
  expect_field_error("[run]\nscenario = flow_timechange\nseed = 3\n[system]\nepsilon = 0.1\nbase = nope\n",
                     "system.base");
  expect_field_error("[run]\nscenario = flow_timechange\nseed = 3\n[correlation]\nn_samples = 8\n",
                     "correlation.n_samples");
  expect_field_error(base + "[tolerances]\node = 1e-9\n", "tolerances");
}

TEST_CASE("missing config file is a MissingArtifact") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), MissingArtifact);
}

TEST_CASE("Furstenberg rows and perturbations for d = 3") {
  const ExperimentConfig c = load_config(kConfigs / "furstenberg3.ini");
  CHECK(c.map.d == 3);
  REQUIRE(c.map.b.size() == 2);
  CHECK(c.map.b[0].size() == 1);
  CHECK(c.map.b[1].size() == 2);
  REQUIRE(c.map.h.size() == 2);
  const auto sys = std::get<FurstenbergSpec>(build_system(c, 0));
  CHECK(sys.b[1][0] == c.map.b[0][0]);
  CHECK(sys.b[2][1] == c.map.b[1][1]);
  CHECK(sys.h[1].dim() == 2);
}
