#include "ocvl/cli.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "ocvl/config.hpp"
#include "ocvl/train_loop.hpp"
#include "ocvl/viz.hpp"

namespace ocvl {
namespace {

namespace fs = std::filesystem;

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  std::size_t h = 0, w = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    std::size_t used = 0;
    h = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("trailing");
    w = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("--size must look like HxW, got '" + text + "'");
  }
  if (h == 0 || w == 0) throw ConfigError("--size dimensions must be positive");
  return {h, w};
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

std::string video_name(std::size_t i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "video_%06zu_%s.png", i, suffix);
  return buf;
}

// ---- gen-data ----------------------------------------------------------------

struct GenDataArgs {
  std::string variant = "a";
  std::size_t videos = 10;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t frames = 24;
  std::string size = "64x64";
  int objects = -1;
  int k_max = -1;
  bool with_features = false;
  std::size_t feature_dim = 64;
  std::size_t patch = 8;
};

void cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  const Variant variant = parse_variant(a.variant);
  const auto [h, w] = parse_size(a.size);
  SceneDefaults scene;
  scene.variant = a.variant;
  scene.frames = a.frames;
  scene.height = h;
  scene.width = w;
  scene.k_max = a.k_max < 0 ? default_geometry(variant).k_max : static_cast<std::size_t>(a.k_max);
  scene.objects = a.objects;
  if (a.frames == 0) throw ConfigError("--frames must be positive");
  if (scene.k_max < 2 || scene.k_max > 255) throw ConfigError("--k-max must be in [2, 255]");

  std::vector<SceneSpec> scenes;
  for (std::size_t i = 0; i < a.videos; ++i) {
    scenes.push_back(sample_scene(variant, mix_seed(a.seed, i), scene.geometry(), a.objects));
  }
  std::vector<VideoClip> videos = generate_videos(scene, a.videos, a.seed);
  if (a.with_features) {
    BackboneConfig bb;
    bb.provider = BackboneProvider::frozen_random_proj;
    bb.dim = a.feature_dim;
    bb.patch = a.patch;
    if (h % a.patch != 0 || w % a.patch != 0) throw ConfigError("--patch must divide the frame size");
    ParamStore params;
    Rng rng(mix_seed(a.seed, 0x66656174ULL));
    init_backbone_params(bb, params, rng);
    for (VideoClip& v : videos) attach_backbone_features(v, bb, params);
  }
  write_split(a.out, videos, a.variant, a.seed, scenes);
  out << "wrote " << videos.size() << " videos (variant " << a.variant << ") to " << a.out << "\n";
}

// ---- train -------------------------------------------------------------------

struct ConfigArgs {
  std::string config;
  std::vector<std::string> overrides;

  RunConfig load() const {
    std::optional<fs::path> path;
    if (!config.empty()) path = config;
    return load_run_config(path, overrides);
  }
};

struct Dataset {
  std::vector<VideoClip> videos;
  std::string variant;
  double flow_max = 1.0;
};

Dataset load_or_generate(const std::string& dir, const SceneDefaults& scene, std::size_t count,
                         std::uint64_t seed) {
  Dataset d;
  if (!dir.empty()) {
    Split split = read_split(dir);
    d.videos = std::move(split.videos);
    d.variant = split.manifest.variant;
    d.flow_max = split.manifest.flow_max;
  } else {
    d.videos = generate_videos(scene, count, seed);
    d.variant = scene.variant;
    d.flow_max = flow_max_abs(d.videos);
  }
  if (!(d.flow_max > 0.0)) d.flow_max = 1.0;
  return d;
}

void cmd_train(const ConfigArgs& a, std::ostream& out) {
  const RunConfig cfg = a.load();
  cfg.train.validate();
  const fs::path dir = cfg.paths.out_dir;
  ensure_dir(dir);
  write_json(to_json(cfg), dir / "config.json");

  std::vector<VideoClip> clips;
  double flow_max = 1.0;
  if (cfg.train.steps > 0) {
    Dataset train_set = load_or_generate(cfg.paths.train_data, cfg.scene, cfg.scene.train_videos,
                                         mix_seed(cfg.scene.seed, 0));
    flow_max = train_set.flow_max;
    for (const VideoClip& v : train_set.videos) {
      for (VideoClip& c : split_into_clips(v, static_cast<long long>(cfg.train.clip_len))) {
        clips.push_back(std::move(c));
      }
    }
    out << "training on " << clips.size() << " clips from " << train_set.videos.size() << " videos\n";
  }

  TrainOptions opts;
  opts.metrics_path = dir / "metrics.jsonl";
  opts.checkpoint_dir = dir;
  opts.flow_max = flow_max;
  const std::size_t every = std::max<std::size_t>(1, cfg.train.steps / 20);
  opts.on_step = [&](const StepRecord& r) {
    if ((r.step + 1) % every == 0 || r.step + 1 == cfg.train.steps) {
      out << "step " << r.step + 1 << "/" << cfg.train.steps << " loss " << r.loss << " lr " << r.lr
          << "\n";
      out.flush();
    }
  };
  const Checkpoint ck = train(cfg.train, clips, opts);
  out << "checkpoint " << (dir / "checkpoint.ock").string() << " (step " << ck.step << ")\n";

  const bool have_val = !cfg.paths.val_data.empty() || cfg.scene.val_videos > 0;
  if (have_val) {
    Dataset val = load_or_generate(cfg.paths.val_data, cfg.scene, cfg.scene.val_videos,
                                   mix_seed(cfg.scene.seed, 1));
    if (!val.videos.empty()) {
      const EvalReport report = evaluate(*make_segmenter(ck, val.flow_max), val.videos, val.variant);
      nlohmann::json j;
      j[report.variant] = report.to_json();
      write_json(j, dir / "eval.json");
      out << "val variant " << report.variant << ": ari_fg " << report.ari_fg << " ari " << report.ari
          << "\n";
    }
  }
}

// ---- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::vector<std::string> data;
  std::string out = "eval.json";
  std::string config;
  bool force = false;
};

Checkpoint load_for_eval(const std::string& path, const std::string& config, bool force) {
  if (config.empty()) return load_checkpoint(path, nullptr, force);
  const RunConfig cfg = load_run_config(fs::path(config));
  const nlohmann::json expected = to_json(cfg.train);
  return load_checkpoint(path, &expected, force);
}

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ck = load_for_eval(a.checkpoint, a.config, a.force);
  std::map<std::string, std::vector<VideoClip>> by_variant;
  double flow_max = 0.0;
  for (const std::string& dir : a.data) {
    Split split = read_split(dir);
    flow_max = std::max(flow_max, split.manifest.flow_max);
    auto& bucket = by_variant[split.manifest.variant];
    for (VideoClip& v : split.videos) bucket.push_back(std::move(v));
  }
  const auto segmenter = make_segmenter(ck, flow_max > 0.0 ? flow_max : 1.0);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [variant, videos] : by_variant) {
    if (videos.empty()) {
      out << "variant " << variant << ": no videos\n";
      continue;
    }
    const EvalReport report = evaluate(*segmenter, videos, variant);
    j[variant] = report.to_json();
    out << "variant " << variant << ": ari_fg " << report.ari_fg << " ari " << report.ari << " ("
        << videos.size() << " videos)\n";
  }
  write_json(j, a.out);
}

// ---- bench -------------------------------------------------------------------

struct BenchArgs {
  ConfigArgs config;
  std::string out = "bench.json";
};

void cmd_bench(const BenchArgs& a, std::ostream& out) {
  const RunConfig cfg = a.config.load();
  const BenchReport report = bench_decoders(cfg.bench);
  write_json(report.to_json(), a.out);
  out << "pass_counts attentional " << report.attentional.passes << " broadcast "
      << report.broadcast.passes << "\n"
      << "peak_activation_bytes attentional " << report.attentional.peak_activation_bytes
      << " broadcast " << report.broadcast.peak_activation_bytes << " ratio " << report.memory_ratio
      << "\n"
      << "wall_seconds attentional " << report.attentional.wall_seconds << " broadcast "
      << report.broadcast.wall_seconds << " ratio " << report.time_ratio << "\n";
}

// ---- viz ---------------------------------------------------------------------

struct VizArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  bool dump_attention = false;
  std::size_t videos = 4;
  std::size_t frames = 8;
  bool force = false;
};

void cmd_viz(const VizArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint, nullptr, a.force);
  const TrainConfig cfg = ck.train_config();
  Split split = read_split(a.data);
  const double flow_max = split.manifest.flow_max > 0.0 ? split.manifest.flow_max : 1.0;
  const auto segmenter = make_segmenter(ck, flow_max);
  ensure_dir(a.out);
  const std::size_t n = std::min(a.videos, split.videos.size());
  for (std::size_t i = 0; i < n; ++i) {
    const VideoClip& video = split.videos[i];
    const std::vector<FrameDecoding> frames = segmenter->decode_video(video);
    if (frames.empty()) throw ArgumentError("video is shorter than one clip");
    write_png(render_panel(video, frames, cfg.model.target, a.frames), fs::path(a.out) / video_name(i, "panel"));
    if (a.dump_attention) {
      write_png(render_attention(frames, video.geometry.height, video.geometry.width, a.frames),
                fs::path(a.out) / video_name(i, "attention"));
    }
  }
  out << "wrote " << n << " panel(s) to " << a.out << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Object-centric video learning with an attentional slot decoder", "ocvl"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic sprite-video split");
  gen_cmd->add_option("--variant", gen.variant, "Scene family: a, c or e")
      ->check(CLI::IsMember({"a", "c", "e"}));
  gen_cmd->add_option("--videos", gen.videos, "Number of videos");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Root seed; video i uses a seed derived from (seed, i)");
  gen_cmd->add_option("--frames", gen.frames, "Frames per video");
  gen_cmd->add_option("--size", gen.size, "Frame size HxW");
  gen_cmd->add_option("--objects", gen.objects, "Objects per video (-1: variant default)");
  gen_cmd->add_option("--k-max", gen.k_max, "Mask id capacity including background (-1: variant default)");
  gen_cmd->add_flag("--with-features", gen.with_features,
                    "Store frozen random-projection features (FEAT, GEMB sections) (default: off)");
  gen_cmd->add_option("--feature-dim", gen.feature_dim, "Feature width for --with-features");
  gen_cmd->add_option("--patch", gen.patch, "Patch size for --with-features");

  ConfigArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes checkpoint, metrics and eval");
  train_cmd->add_option("--config", train_args.config, "JSON run config (default: none, built-in defaults)");
  train_cmd->add_option("--override", train_args.overrides, "Dotted config override key=value (repeatable)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate ARI and ARI-FG of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval.data, "Split directory (repeatable)")->required();
  eval_cmd->add_option("--out", eval.out, "Output JSON");
  eval_cmd->add_option("--config", eval.config, "Refuse the checkpoint unless it matches this config (default: none)");
  eval_cmd->add_flag("--force", eval.force, "Load despite a config hash mismatch (default: off)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Compare attentional and broadcast decoder cost");
  bench_cmd->add_option("--config", bench.config.config, "JSON run config, bench section (default: none)");
  bench_cmd->add_option("--override", bench.config.overrides, "Dotted config override key=value (repeatable)");
  bench_cmd->add_option("--out", bench.out, "Output JSON report");

  VizArgs viz;
  auto* viz_cmd = app.add_subcommand("viz", "Render panels of input, reconstruction and masks");
  viz_cmd->add_option("--checkpoint", viz.checkpoint, "Checkpoint file")->required();
  viz_cmd->add_option("--data", viz.data, "Split directory")->required();
  viz_cmd->add_option("--out", viz.out, "Output directory")->required();
  viz_cmd->add_flag("--dump-attention", viz.dump_attention, "Also write per-slot attention heatmaps (default: off)");
  viz_cmd->add_option("--videos", viz.videos, "Number of videos to render");
  viz_cmd->add_option("--frames", viz.frames, "Frames per panel");
  viz_cmd->add_flag("--force", viz.force, "Load despite a config hash mismatch (default: off)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) cmd_gen_data(gen, out);
    if (*train_cmd) cmd_train(train_args, out);
    if (*eval_cmd) cmd_eval(eval, out);
    if (*bench_cmd) cmd_bench(bench, out);
    if (*viz_cmd) cmd_viz(viz, out);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace ocvl
