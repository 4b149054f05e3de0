#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rendersynth/config.hpp"
#include "rendersynth/io.hpp"

using namespace rendersynth;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rendersynth_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Imaged random_image(Index n, Rng& rng) {
  Imaged x(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("png round trip stays within half a quantization step") {
  TempDir tmp;
  Rng rng(1);
  const Imaged x = random_image(32, rng);
  const std::string path = (tmp.path / "img.png").string();
  write_png(path, x);
  const Imaged back = read_png(path);
  REQUIRE(back.rows() == 32);
  REQUIRE(back.cols() == 32);
  CHECK((back - x).abs().maxCoeff() <= 1.0 / 255.0 + 1e-12);
}

TEST_CASE("png clamps out-of-range values") {
  TempDir tmp;
  Imaged x(2, 2);
  x << -3.0, -1.0, 1.0, 3.0;
  const std::string path = (tmp.path / "clamp.png").string();
  write_png(path, x);
  const Imaged back = read_png(path);
  CHECK(back(0, 0) == -1.0);
  CHECK(back(1, 1) == 1.0);
}

TEST_CASE("f32 round trip is exact at float precision") {
  TempDir tmp;
  Rng rng(2);
  const Imaged x = random_image(16, rng);
  const std::string path = (tmp.path / "img.f32").string();
  write_f32(path, x);
  const Imaged back = read_f32(path);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) CHECK(back(i, j) == static_cast<double>(static_cast<float>(x(i, j))));
  CHECK_THROWS(read_f32((tmp.path / "missing.f32").string()));
}

TEST_CASE("manifest round trip preserves every field") {
  TempDir tmp;
  std::vector<ManifestRecord> records;
  Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    ManifestRecord r;
    r.path = "images/" + std::to_string(i);
    r.label = sample_label(rng, 64);
    r.provenance = "hm_3d";
    r.seed = Rng::derive_seed(7, static_cast<std::uint64_t>(i));
    records.push_back(r);
  }
  const std::string path = (tmp.path / "manifest.jsonl").string();
  write_manifest(path, records);
  const auto back = read_manifest(path);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].path == records[i].path);
    CHECK(back[i].label.bits == records[i].label.bits);
    CHECK(back[i].label.center_x == records[i].label.center_x);
    CHECK(back[i].label.yaw == records[i].label.yaw);
    CHECK(back[i].label.pitch == records[i].label.pitch);
    CHECK(back[i].label.roll == records[i].label.roll);
    CHECK(back[i].label.scale == records[i].label.scale);
    CHECK(back[i].provenance == records[i].provenance);
    CHECK(back[i].seed == records[i].seed);
  }
}

TEST_CASE("config parser handles sections, comments, and rejects malformed input") {
  const auto cfg = KeyValueConfig::parse_string(
      "version = 1  # comment\n[blur]\nsigma_min = 0.5\nsigma_max = 2\n[stages]\nblur = true\n");
  CHECK(cfg.get_int("version") == 1);
  CHECK(cfg.get_double("blur.sigma_min") == 0.5);
  CHECK(cfg.get_bool("stages.blur"));
  CHECK_THROWS(KeyValueConfig::parse_string("novalue\n"));
  CHECK_THROWS(KeyValueConfig::parse_string("a = 1\na = 2\n"));
  CHECK_THROWS((void)KeyValueConfig::parse_string("a = x\n").get_double("a"));
}

TEST_CASE("handmade config loads defaults and rejects unknown keys") {
  TempDir tmp;
  const std::string path = (tmp.path / "handmade.toml").string();
  {
    std::ofstream out(path);
    out << default_handmade_config_text();
  }
  const HandmadeConfig hm = load_handmade_config(path);
  const HandmadeConfig defaults;
  CHECK(hm.blur_sigma_max == defaults.blur_sigma_max);
  CHECK(hm.light_scale_center_min == defaults.light_scale_center_min);
  CHECK(hm.spotlight_amp_max == defaults.spotlight_amp_max);

  {
    std::ofstream out(path, std::ios::app);
    out << "\n[mystery]\nknob = 3\n";
  }
  CHECK_THROWS_WITH_AS(load_handmade_config(path), "config: unknown key mystery.knob",
                       std::invalid_argument);
}
