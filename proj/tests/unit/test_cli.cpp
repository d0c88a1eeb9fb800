#include <doctest.h>

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "ocvl/cli.hpp"
#include "ocvl/config.hpp"
#include "ocvl/viz.hpp"
#include "support/test_support.hpp"

using namespace ocvl;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ocvl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(int(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> gen_args(const std::filesystem::path& out, const std::string& variant, int videos,
                                  int seed) {
  return {"gen-data", "--variant", variant, "--videos", std::to_string(videos), "--out", out.string(),
          "--seed", std::to_string(seed), "--frames", "4", "--size", "16x16", "--objects", "2"};
}

// Small model overrides shared by the train invocations below.
std::vector<std::string> tiny_train(const std::filesystem::path& out, int steps) {
  return {"train",
          "--override", "train.steps=" + std::to_string(steps),
          "--override", "train.batch_size=2",
          "--override", "train.clip_len=2",
          "--override", "train.warmup_steps=1",
          "--override", "model.slots=3",
          "--override", "model.dim=8",
          "--override", "model.box_hidden=8",
          "--override", "model.mlp_hidden=8",
          "--override", "model.fourier_freqs=2",
          "--override", "backbone.patch=4",
          "--override", "backbone.dim=8",
          "--override", "scene.train_videos=2",
          "--override", "scene.val_videos=2",
          "--override", "scene.frames=4",
          "--override", "scene.height=16",
          "--override", "scene.width=16",
          "--override", "scene.k_max=3",
          "--override", "scene.objects=2",
          "--override", "paths.out_dir=" + out.string()};
}

std::pair<std::uint32_t, std::uint32_t> png_size(const std::vector<std::uint8_t>& bytes) {
  REQUIRE(bytes.size() > 24);
  auto be = [&](std::size_t o) {
    return std::uint32_t(bytes[o]) << 24 | std::uint32_t(bytes[o + 1]) << 16 | std::uint32_t(bytes[o + 2]) << 8 |
           bytes[o + 3];
  };
  return {be(16), be(20)};
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("gen-data is deterministic per seed") {
  testing::TempDir dir("gen");
  REQUIRE(cli(gen_args(dir / "a1", "a", 3, 1)).code == kExitOk);
  REQUIRE(cli(gen_args(dir / "a2", "a", 3, 1)).code == kExitOk);
  REQUIRE(cli(gen_args(dir / "b", "a", 3, 2)).code == kExitOk);
  CHECK(testing::directory_digest(dir / "a1") == testing::directory_digest(dir / "a2"));
  CHECK(testing::directory_digest(dir / "a1") != testing::directory_digest(dir / "b"));
  const Split split = read_split(dir / "a1");
  CHECK(split.videos.size() == 3);
  CHECK(split.manifest.variant == "a");
  CHECK(split.videos[0].geometry.height == 16);
  CHECK(split.videos[0].geometry.frames == 4);
}

TEST_CASE("gen-data with zero videos writes an empty manifest") {
  testing::TempDir dir("empty");
  REQUIRE(cli(gen_args(dir / "z", "c", 0, 1)).code == kExitOk);
  const Split split = read_split(dir / "z");
  CHECK(split.videos.empty());
  CHECK(split.manifest.videos.empty());
}

TEST_CASE("variant e pans the background") {
  testing::TempDir dir("pan");
  REQUIRE(cli(gen_args(dir / "e", "e", 2, 3)).code == kExitOk);
  const Split split = read_split(dir / "e");
  for (const SceneSummary& s : split.manifest.scenes) CHECK((s.pan_x != 0.0 || s.pan_y != 0.0));
  const VideoClip& v = split.videos[0];
  REQUIRE(v.flow.has_value());
  bool moving_background = false;
  for (std::size_t p = 0; p < v.pixels(); ++p)
    if (v.masks[p] == 0 && ((*v.flow)[2 * p] != 0.0f || (*v.flow)[2 * p + 1] != 0.0f)) moving_background = true;
  CHECK(moving_background);
}

TEST_CASE("gen-data can attach backbone features") {
  testing::TempDir dir("feat");
  auto args = gen_args(dir / "f", "a", 1, 1);
  for (const char* a : {"--with-features", "--feature-dim", "6", "--patch", "4"}) args.push_back(a);
  REQUIRE(cli(args).code == kExitOk);
  const Split split = read_split(dir / "f");
  REQUIRE(split.videos[0].features.has_value());
  REQUIRE(split.videos[0].global_embeds.has_value());
  args.back() = "5";
  CHECK(cli(args).code == kExitUsage);
}

TEST_CASE("train with zero steps writes the initial checkpoint and an empty metrics log") {
  testing::TempDir dir("train0");
  const Run r = cli(tiny_train(dir / "run", 0));
  REQUIRE(r.code == kExitOk);
  CHECK(std::filesystem::exists(dir / "run" / "checkpoint.ock"));
  CHECK(std::filesystem::exists(dir / "run" / "config.json"));
  CHECK(count_lines(dir / "run" / "metrics.jsonl") == 0);
  const Checkpoint ck = load_checkpoint(dir / "run" / "checkpoint.ock");
  CHECK(ck.step == 0);
  CHECK(ck.params == init_checkpoint(ck.train_config()).params);
}

TEST_CASE("train, eval and viz on a tiny run") {
  testing::TempDir dir("pipeline");
  REQUIRE(cli(tiny_train(dir / "run", 3)).code == kExitOk);
  CHECK(count_lines(dir / "run" / "metrics.jsonl") == 3);
  const auto eval_json = nlohmann::json::parse(testing::read_text(dir / "run" / "eval.json"));
  CHECK(eval_json.at("a").contains("ari_fg"));

  REQUIRE(cli(gen_args(dir / "data", "a", 2, 5)).code == kExitOk);
  const auto ck = (dir / "run" / "checkpoint.ock").string();
  const Run ev = cli({"eval", "--checkpoint", ck, "--data", (dir / "data").string(), "--out",
                      (dir / "eval.json").string(), "--config", (dir / "run" / "config.json").string()});
  REQUIRE(ev.code == kExitOk);
  const auto j = nlohmann::json::parse(testing::read_text(dir / "eval.json"));
  CHECK(j.at("a").at("per_video").at("ari_fg").size() == 2);

  testing::write_text(dir / "other.json", R"({"train": {"lr": 0.5}})");
  const std::vector<std::string> mismatch = {"eval", "--checkpoint", ck, "--data", (dir / "data").string(),
                                             "--out", (dir / "e2.json").string(), "--config",
                                             (dir / "other.json").string()};
  CHECK(cli(mismatch).code == kExitUsage);
  auto forced = mismatch;
  forced.push_back("--force");
  CHECK(cli(forced).code == kExitOk);

  const std::vector<std::string> viz = {"viz", "--checkpoint", ck, "--data", (dir / "data").string(), "--out",
                                        (dir / "viz1").string(), "--dump-attention", "--frames", "2"};
  REQUIRE(cli(viz).code == kExitOk);
  auto viz2 = viz;
  viz2[6] = (dir / "viz2").string();
  REQUIRE(cli(viz2).code == kExitOk);
  CHECK(testing::directory_digest(dir / "viz1") == testing::directory_digest(dir / "viz2"));
  const auto panel = testing::read_bytes(dir / "viz1" / "video_000000_panel.png");
  CHECK(png_size(panel) == std::pair<std::uint32_t, std::uint32_t>{2 * 16, 4 * 16});
  const auto attn = testing::read_bytes(dir / "viz1" / "video_000000_attention.png");
  CHECK(png_size(attn) == std::pair<std::uint32_t, std::uint32_t>{2 * 16, 3 * 16});
}

TEST_CASE("feature-target panels have three rows and one slot paints a flat mask") {
  const VideoClip clip = testing::tiny_clip(3, 2, 8, 3, 2);
  std::vector<FrameDecoding> frames(2);
  for (auto& f : frames) {
    f.height = 2;
    f.width = 2;
    f.logits = Matrix(4, 1, 0.3);
    f.weights = Matrix(4, 1, 1.0);
  }
  const Image features = render_panel(clip, frames, TargetKind::features, 8);
  CHECK(features.height == 3 * 8);
  CHECK(features.width == 2 * 8);
  CHECK(panel_rows(TargetKind::rgb) == 4);
  CHECK(panel_rows(TargetKind::flow) == 4);
  Image img = render_panel(clip, frames, TargetKind::features, 8);
  const std::uint8_t* first = img.pixel(2 * 8, 0);
  for (std::size_t i = 2 * 8; i < 3 * 8; ++i)
    for (std::size_t j = 0; j < img.width; ++j)
      for (int c = 0; c < 3; ++c) CHECK(img.pixel(i, j)[c] == first[c]);
  const auto& palette = label_palette();
  CHECK(std::equal(first, first + 3, palette[0].begin()));
  CHECK(encode_png(img) == encode_png(img));
}

TEST_CASE("the mask-oracle stub evaluates to ARI-FG 1") {
  testing::TempDir dir("stub");
  auto args = tiny_train(dir / "run", 0);
  for (const char* a : {"--override", "model.kind=mask_oracle", "--override", "scene.val_videos=0"}) args.push_back(a);
  REQUIRE(cli(args).code == kExitOk);
  REQUIRE(cli(gen_args(dir / "data", "e", 3, 9)).code == kExitOk);
  const Run ev = cli({"eval", "--checkpoint", (dir / "run" / "checkpoint.ock").string(), "--data",
                      (dir / "data").string(), "--out", (dir / "eval.json").string()});
  REQUIRE(ev.code == kExitOk);
  const auto j = nlohmann::json::parse(testing::read_text(dir / "eval.json"));
  CHECK(j.at("e").at("ari_fg").get<double>() == 1.0);
}

TEST_CASE("bench reports pass counts") {
  testing::TempDir dir("bench");
  const Run r = cli({"bench", "--override", "bench.slots=11", "--override", "bench.height=16", "--override",
                     "bench.width=16", "--override", "bench.repeats=1", "--out", (dir / "b.json").string()});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(testing::read_text(dir / "b.json"));
  CHECK(j.at("pass_counts").at("attentional") == 1);
  CHECK(j.at("pass_counts").at("broadcast") == 11);
  CHECK(r.out.find("pass_counts attentional 1 broadcast 11") != std::string::npos);
}

TEST_CASE("exit codes") {
  testing::TempDir dir("codes");
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"gen-data", "--out", (dir / "x").string(), "--bogus"}).code == kExitUsage);
  CHECK(cli({"gen-data", "--out", (dir / "x").string(), "--size", "16by16"}).code == kExitUsage);
  CHECK(cli({"gen-data", "--out", (dir / "x").string(), "--variant", "q"}).code == kExitUsage);
  CHECK(cli({"train", "--override", "model.nope=1"}).code == kExitUsage);
  CHECK(cli({"train", "--config", (dir / "missing.json").string()}).code == kExitIo);
  CHECK(cli({"eval", "--checkpoint", (dir / "missing.ock").string(), "--data", (dir / "none").string()}).code ==
        kExitIo);
  testing::write_text(dir / "junk.ock", "not a checkpoint");
  CHECK(cli({"eval", "--checkpoint", (dir / "junk.ock").string(), "--data", (dir / "none").string()}).code ==
        kExitIo);
  auto blow_up = tiny_train(dir / "nan", 3);
  for (const char* a : {"--override", "train.lr=1e300", "--override", "train.grad_clip_norm=1e300"})
    blow_up.push_back(a);
  const Run r = cli(blow_up);
  CHECK(r.code == kExitNumeric);
  CHECK(r.err.find("step") != std::string::npos);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("help lists every flag with its default and the README documents them") {
  const std::string readme = testing::read_text(OCVL_README);
  for (const char* sub : {"gen-data", "train", "eval", "bench", "viz"}) {
    const Run r = cli({sub, "--help"});
    REQUIRE(r.code == kExitOk);
    std::istringstream lines(r.out);
    std::size_t flags = 0;
    for (std::string line; std::getline(lines, line);) {
      std::smatch m;
      if (!std::regex_search(line, m, std::regex(R"(^\s+(--[a-z-]+))")) || m[1] == "--help") continue;
      ++flags;
      INFO(sub << ": " << line);
      CHECK((line.find('[') != std::string::npos || line.find("(default") != std::string::npos ||
             line.find("REQUIRED") != std::string::npos));
      CHECK(readme.find("`" + m[1].str()) != std::string::npos);
    }
    CHECK(flags > 0);
    CHECK(readme.find(std::string("ocvl ") + sub) != std::string::npos);
  }
  const nlohmann::json defaults = to_json(RunConfig{});
  for (const auto& [section, body] : defaults.items())
    for (const auto& [key, value] : body.items()) {
      INFO(section << "." << key);
      CHECK(readme.find("`" + section + "." + key + "`") != std::string::npos);
    }
}
