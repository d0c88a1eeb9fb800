#include <doctest.h>

#include "ocvl/config.hpp"
#include "support/test_support.hpp"

using namespace ocvl;

TEST_CASE("defaults round-trip through JSON") {
  const RunConfig cfg;
  const nlohmann::json j = to_json(cfg);
  for (const char* section : {"train", "model", "backbone", "paths", "scene", "bench"}) CHECK(j.contains(section));
  CHECK(to_json(run_config_from_json(j)) == j);
  CHECK(to_json(run_config_from_json(nlohmann::json::object())) == j);
}

TEST_CASE("a config file is layered over the defaults, then overrides in order") {
  testing::TempDir dir("cfg");
  testing::write_text(dir / "c.json", R"({"train": {"steps": 7}, "model": {"decoder": "broadcast"}})");
  const std::vector<std::string> overrides = {"train.steps=9", "model.use_global=false", "paths.out_dir=elsewhere",
                                              "train.steps=11", "scene.variant=e"};
  const RunConfig cfg = load_run_config(dir / "c.json", overrides);
  CHECK(cfg.train.steps == 11);
  CHECK(cfg.train.model.decoder == DecoderKind::broadcast);
  CHECK_FALSE(cfg.train.model.flags.use_global);
  CHECK(cfg.paths.out_dir == "elsewhere");
  CHECK(cfg.scene.variant == "e");
  CHECK(cfg.train.batch_size == RunConfig{}.train.batch_size);
}

TEST_CASE("unknown keys and wrong types are rejected") {
  testing::TempDir dir("strict");
  testing::write_text(dir / "unknown.json", R"({"train": {"stepz": 7}})");
  CHECK_THROWS_AS(load_run_config(dir / "unknown.json"), ConfigError);
  testing::write_text(dir / "section.json", R"({"optimizer": {}})");
  CHECK_THROWS_AS(load_run_config(dir / "section.json"), ConfigError);
  testing::write_text(dir / "type.json", R"({"model": {"slots": -3}})");
  CHECK_THROWS_AS(load_run_config(dir / "type.json"), ConfigError);
  testing::write_text(dir / "enum.json", R"({"model": {"decoder": "mlp"}})");
  CHECK_THROWS_AS(load_run_config(dir / "enum.json"), ConfigError);
  testing::write_text(dir / "syntax.json", "{\"train\": ");
  CHECK_THROWS_AS(load_run_config(dir / "syntax.json"), ConfigError);
  testing::write_text(dir / "array.json", "[1, 2]");
  CHECK_THROWS_AS(load_run_config(dir / "array.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir / "absent.json"), IoError);
  testing::write_text(dir / "variant.json", R"({"scene": {"variant": "z"}})");
  CHECK_THROWS(load_run_config(dir / "variant.json"));
}

TEST_CASE("override syntax") {
  nlohmann::json doc = to_json(RunConfig{});
  apply_override(doc, "train.lr=0.5");
  CHECK(doc["train"]["lr"] == 0.5);
  apply_override(doc, "paths.train_data=data/train");
  CHECK(doc["paths"]["train_data"] == "data/train");
  apply_override(doc, "backbone.frozen=true");
  CHECK(doc["backbone"]["frozen"] == true);
  CHECK_THROWS_AS(apply_override(doc, "train.lr"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "train.nope=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "nope.lr=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "train..lr=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "train.lr.x=3"), ConfigError);
  const std::vector<std::string> bad = {"model.slots=many"};
  CHECK_THROWS_AS(load_run_config(std::nullopt, bad), ConfigError);
}

TEST_CASE("inconsistent model settings fail validation") {
  TrainConfig cfg;
  cfg.validate();
  TrainConfig zero = cfg;
  zero.model.slots = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
  TrainConfig clip = cfg;
  clip.clip_len = 0;
  CHECK_THROWS_AS(clip.validate(), ConfigError);
  TrainConfig stub = cfg;
  stub.kind = ModelKind::mask_oracle;
  CHECK_THROWS_AS(stub.validate(), ConfigError);
  stub.steps = 0;
  CHECK_NOTHROW(stub.validate());
}

TEST_CASE("generate_videos is deterministic and seeds each video separately") {
  SceneDefaults scene;
  scene.frames = 3;
  scene.height = 16;
  scene.width = 16;
  scene.objects = 2;
  const auto a = generate_videos(scene, 4, 7);
  const auto b = generate_videos(scene, 4, 7);
  const auto c = generate_videos(scene, 4, 8);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i].rgb == b[i].rgb);
    CHECK(a[i].boxes == b[i].boxes);
    CHECK(a[i].geometry.frames == 3);
  }
  CHECK(a[0].rgb != a[1].rgb);
  CHECK(a[0].rgb != c[0].rgb);
  const auto one = generate_videos(scene, 2, 7);
  CHECK(one[1].rgb == a[1].rgb);
  CHECK(generate_videos(scene, 0, 7).empty());
}
