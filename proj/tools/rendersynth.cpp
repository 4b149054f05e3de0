#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rendersynth/adversarial.hpp"
#include "rendersynth/config.hpp"
#include "rendersynth/dataset.hpp"
#include "rendersynth/eval.hpp"
#include "rendersynth/gradcheck.hpp"
#include "rendersynth/io.hpp"

namespace fs = std::filesystem;
using namespace rendersynth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitToleranceFailure = 2;

std::string sample_stem(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "images/%06llu", static_cast<unsigned long long>(index));
  return buf;
}

void write_samples(const fs::path& out_dir, const std::vector<DatasetSample>& samples,
                   const std::string& provenance, const std::string& format) {
  fs::create_directories(out_dir / "images");
  std::vector<ManifestRecord> records;
  records.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const std::string stem = sample_stem(i);
    if (format == "png" || format == "both")
      write_png((out_dir / (stem + ".png")).string(), samples[i].image);
    if (format == "f32" || format == "both")
      write_f32((out_dir / (stem + ".f32")).string(), samples[i].image);
    ManifestRecord record;
    record.path = stem;
    record.label = samples[i].label;
    record.provenance = provenance;
    record.seed = samples[i].seed;
    records.push_back(std::move(record));
  }
  write_manifest((out_dir / "manifest.jsonl").string(), records);
}

Imaged load_sample_image(const fs::path& dir, const std::string& stem) {
  const fs::path f32 = dir / (stem + ".f32");
  if (fs::exists(f32)) return read_f32(f32.string());
  const fs::path png = dir / (stem + ".png");
  if (fs::exists(png)) return read_png(png.string());
  throw std::runtime_error("no image file for sample " + stem + " under " + dir.string());
}

LabeledDataset load_dataset(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.jsonl";
  if (!fs::exists(manifest)) throw std::runtime_error("missing dataset: " + manifest.string());
  LabeledDataset data;
  for (const auto& record : read_manifest(manifest.string())) {
    data.samples.push_back({load_sample_image(dir, record.path), record.label});
    data.provenance = record.provenance;
  }
  return data;
}

LabelDistribution narrow_pose() {
  LabelDistribution d;
  d.yaw_min = -0.1;
  d.yaw_max = 0.1;
  d.tilt_sigma = 0.1;
  d.center_jitter = 1.0;
  d.scale_min = 0.95;
  d.scale_max = 1.05;
  return d;
}

struct RenderArgs {
  int n = 10;
  std::uint64_t seed = 1;
  int resolution = 64;
  std::string out;
  std::string format = "both";
  std::string pose = "default";
};

int cmd_render(const RenderArgs& args) {
  DatasetOptions options;
  options.variant = "hm_3d";
  options.count = args.n;
  options.seed = args.seed;
  options.resolution = args.resolution;
  if (args.pose == "narrow") options.labels = narrow_pose();
  // clean renders only: disable every handmade stage
  options.handmade.blur = options.handmade.lighting = options.handmade.background = false;
  options.handmade.noise = options.handmade.spotlights = false;

  const auto samples = generate_dataset(options, nullptr, worker_count());
  write_samples(args.out, samples, "clean", args.format);
  std::printf("wrote %d samples to %s\n", args.n, args.out.c_str());
  return kExitOk;
}

struct DatasetArgs {
  std::string variant = "hm_3d";
  int n = 1000;
  std::uint64_t seed = 1;
  int resolution = 64;
  std::string out;
  std::string checkpoint;
  std::string handmade_config;
  std::string format = "both";
  std::string pose = "default";
};

int cmd_dataset(const DatasetArgs& args) {
  DatasetOptions options;
  options.variant = args.variant;
  options.count = args.n;
  options.seed = args.seed;
  options.resolution = args.resolution;
  if (args.pose == "narrow") options.labels = narrow_pose();
  if (!args.handmade_config.empty()) options.handmade = load_handmade_config(args.handmade_config);

  std::optional<GanState> state;
  if (variant_needs_checkpoint(args.variant)) {
    if (args.checkpoint.empty()) {
      std::fprintf(stderr, "error: variant %s requires --checkpoint\n", args.variant.c_str());
      return kExitUsage;
    }
    state.emplace(load_checkpoint(args.checkpoint));
  }

  const auto samples =
      generate_dataset(options, state ? &state->gen : nullptr, worker_count());
  write_samples(args.out, samples, args.variant, args.format);
  std::printf("wrote %d %s samples to %s\n", args.n, args.variant.c_str(), args.out.c_str());
  return kExitOk;
}

struct GradcheckArgs {
  int seeds = 20;
  double tolerance = 1e-4;
  bool inject_sign_flip = false;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  const auto report = run_gradient_checks(args.seeds, args.tolerance, args.inject_sign_flip);
  std::fputs(report.to_string().c_str(), stdout);
  return report.passed ? kExitOk : kExitToleranceFailure;
}

struct TrainArgs {
  std::string out;
  std::string profile = "desk";
  std::string resume;
  std::string handmade_config;
  int epochs = -1;
  int steps = -1;
  int batch = -1;
  int resolution = -1;
  double lr = -1.0;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& args) {
  TrainConfig cfg;
  cfg.seed = args.seed;
  if (args.profile == "smoke") {
    cfg.epochs = 1;
    cfg.steps_per_epoch = 8;
    cfg.batch_size = 32;
    cfg.resolution = 16;
  } else if (args.profile != "desk") {
    std::fprintf(stderr, "error: unknown profile %s\n", args.profile.c_str());
    return kExitUsage;
  }
  if (args.epochs > 0) cfg.epochs = args.epochs;
  if (args.steps > 0) cfg.steps_per_epoch = args.steps;
  if (args.batch > 0) cfg.batch_size = args.batch;
  if (args.resolution > 0) cfg.resolution = args.resolution;
  if (args.lr > 0) cfg.lr = args.lr;

  fs::create_directories(args.out);
  std::optional<GanState> state;
  if (!args.resume.empty()) {
    state.emplace(load_checkpoint(args.resume));
    state->cfg.epochs = cfg.epochs;  // run this many further epochs
  } else {
    state.emplace(cfg);
  }

  HandmadeConfig hm;
  if (!args.handmade_config.empty()) hm = load_handmade_config(args.handmade_config);
  auto source = [&](int count, Rng& rng) {
    std::vector<Imaged> batch;
    batch.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
      const TagLabel label = sample_label(rng, state->cfg.resolution, state->cfg.labels);
      const RenderOutput rendered = render(label, state->cfg.resolution);
      batch.push_back(apply_handmade(rendered, hm, rng, label, state->cfg.resolution));
    }
    return batch;
  };

  std::ofstream history_csv(fs::path(args.out) / "history.csv");
  history_csv << "epoch,d_loss,g_loss,penalty,lr\n";
  const auto history = train(*state, source, [&](const EpochStats& stats) {
    char line[256];
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g", stats.epoch, stats.d_loss,
                  stats.g_loss, stats.penalty, stats.lr);
    history_csv << line << '\n';
    history_csv.flush();
    std::printf("epoch %3d  D %.4f  G %.4f  penalty %.5f  lr %g  (step %llu)\n", stats.epoch,
                stats.d_loss, stats.g_loss, stats.penalty, stats.lr,
                static_cast<unsigned long long>(state->step));
  });

  const fs::path ckpt = fs::path(args.out) / "checkpoint.bin";
  save_checkpoint(*state, ckpt.string());
  std::printf("saved checkpoint to %s (%zu epochs, final step %llu)\n", ckpt.string().c_str(),
              history.size(), static_cast<unsigned long long>(state->step));
  return kExitOk;
}

struct EvalArgs {
  std::string test_dir;
  std::vector<std::string> train_dirs;
  std::string report;
  int epochs = -1;
  double lr = -1.0;
};

int cmd_eval(const EvalArgs& args) {
  const LabeledDataset test = load_dataset(args.test_dir);
  DecoderTrainConfig cfg;
  if (args.epochs > 0) cfg.epochs = args.epochs;
  if (args.lr > 0) cfg.lr = args.lr;

  std::ostringstream csv;
  csv << "variant,train_samples,train_mhd,test_mhd\n";
  std::printf("%-12s %-14s %-10s %s\n", "variant", "train_samples", "train_mhd", "test_mhd");
  for (const auto& dir : args.train_dirs) {
    const LabeledDataset train_data = load_dataset(dir);
    const auto result = train_reference_decoder(train_data, cfg);
    const double test_mhd = evaluate(result.decoder, test);
    std::printf("%-12s %-14zu %-10.4f %.4f\n", train_data.provenance.c_str(),
                train_data.samples.size(), result.train_mhd_history.back(), test_mhd);
    csv << train_data.provenance << ',' << train_data.samples.size() << ','
        << result.train_mhd_history.back() << ',' << test_mhd << '\n';
  }
  if (!args.report.empty()) {
    std::ofstream out(args.report);
    out << csv.str();
  }
  return kExitOk;
}

struct FilterArgs {
  std::string dataset_dir;
  std::string checkpoint;
  double quantile = 0.02;
  std::string out;
};

int cmd_filter(const FilterArgs& args) {
  const fs::path dir = args.dataset_dir;
  const auto records = read_manifest((dir / "manifest.jsonl").string());
  GanState state = load_checkpoint(args.checkpoint);

  std::vector<Imaged> images;
  images.reserve(records.size());
  for (const auto& record : records) images.push_back(load_sample_image(dir, record.path));
  const auto scores = score_images(state.disc, images);
  const auto kept = score_filter(scores, args.quantile);

  std::vector<bool> keep_flags(records.size(), false);
  for (size_t idx : kept) keep_flags[idx] = true;
  std::vector<ManifestRecord> kept_records, dropped_records;
  for (size_t i = 0; i < records.size(); ++i)
    (keep_flags[i] ? kept_records : dropped_records).push_back(records[i]);

  const fs::path out_dir = args.out.empty() ? dir : fs::path(args.out);
  fs::create_directories(out_dir);
  write_manifest((out_dir / "manifest.filtered.jsonl").string(), kept_records);
  write_manifest((out_dir / "manifest.dropped.jsonl").string(), dropped_records);
  std::printf("kept %zu of %zu samples (quantile %.3f); wrote %s\n", kept_records.size(),
              records.size(), args.quantile,
              (out_dir / "manifest.filtered.jsonl").string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rendersynth: differentiable synthetic barcode-tag data engine"};
  app.require_subcommand(1);

  RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "render clean tags to an output directory");
  render_cmd->add_option("--n", render_args.n, "number of samples")->check(CLI::PositiveNumber);
  render_cmd->add_option("--seed", render_args.seed, "dataset seed");
  render_cmd->add_option("--resolution", render_args.resolution, "canvas size in px");
  render_cmd->add_option("--out", render_args.out, "output directory")->required();
  render_cmd->add_option("--format", render_args.format, "png|f32|both")
      ->check(CLI::IsMember({"png", "f32", "both"}));
  render_cmd->add_option("--pose", render_args.pose, "default|narrow")
      ->check(CLI::IsMember({"default", "narrow"}));

  DatasetArgs dataset_args;
  auto* dataset_cmd = app.add_subcommand("dataset", "generate a labeled dataset variant");
  dataset_cmd->add_option("--variant", dataset_args.variant, "rendergan|hm_3d|hm_li|hm_bg|realaug")
      ->check(CLI::IsMember({"rendergan", "hm_3d", "hm_li", "hm_bg", "realaug"}))
      ->required();
  dataset_cmd->add_option("--n", dataset_args.n, "number of samples")->check(CLI::PositiveNumber);
  dataset_cmd->add_option("--seed", dataset_args.seed, "dataset seed");
  dataset_cmd->add_option("--resolution", dataset_args.resolution, "canvas size in px");
  dataset_cmd->add_option("--out", dataset_args.out, "output directory")->required();
  dataset_cmd->add_option("--checkpoint", dataset_args.checkpoint,
                          "trained checkpoint (learned-prefix variants)");
  dataset_cmd->add_option("--handmade-config", dataset_args.handmade_config,
                          "stage-distribution config file");
  dataset_cmd->add_option("--format", dataset_args.format, "png|f32|both")
      ->check(CLI::IsMember({"png", "f32", "both"}));
  dataset_cmd->add_option("--pose", dataset_args.pose, "default|narrow")
      ->check(CLI::IsMember({"default", "narrow"}));

  GradcheckArgs gradcheck_args;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  grad_cmd->add_option("--seeds", gradcheck_args.seeds, "random repetitions")
      ->check(CLI::PositiveNumber);
  grad_cmd->add_option("--tolerance", gradcheck_args.tolerance, "max relative error");
  grad_cmd->add_flag("--inject-sign-flip", gradcheck_args.inject_sign_flip,
                     "test fixture: corrupt one vjp to prove failures are caught");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "adversarial training against the handmade target");
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_option("--profile", train_args.profile, "smoke|desk");
  train_cmd->add_option("--epochs", train_args.epochs, "override epoch count");
  train_cmd->add_option("--steps", train_args.steps, "override steps per epoch");
  train_cmd->add_option("--batch", train_args.batch, "override batch size");
  train_cmd->add_option("--resolution", train_args.resolution, "override resolution");
  train_cmd->add_option("--lr", train_args.lr, "override starting learning rate");
  train_cmd->add_option("--seed", train_args.seed, "training seed");
  train_cmd->add_option("--resume", train_args.resume, "checkpoint to continue from");
  train_cmd->add_option("--handmade-config", train_args.handmade_config,
                        "stage-distribution config file");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "train/evaluate the reference decoder per variant");
  eval_cmd->add_option("--test", eval_args.test_dir, "held-out dataset directory")->required();
  eval_cmd->add_option("--train", eval_args.train_dirs, "training dataset directories")
      ->required()
      ->expected(-1);
  eval_cmd->add_option("--report", eval_args.report, "CSV report path");
  eval_cmd->add_option("--epochs", eval_args.epochs, "decoder training epochs");
  eval_cmd->add_option("--lr", eval_args.lr, "decoder learning rate");

  FilterArgs filter_args;
  auto* filter_cmd = app.add_subcommand("filter", "discriminator-score filtering of a dataset");
  filter_cmd->add_option("--dataset", filter_args.dataset_dir, "dataset directory")->required();
  filter_cmd->add_option("--checkpoint", filter_args.checkpoint, "trained checkpoint")->required();
  filter_cmd->add_option("--quantile", filter_args.quantile, "drop fraction (default 0.02)");
  filter_cmd->add_option("--out", filter_args.out, "output directory (default: dataset dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(render_cmd)) return cmd_render(render_args);
    if (app.got_subcommand(dataset_cmd)) return cmd_dataset(dataset_args);
    if (app.got_subcommand(grad_cmd)) return cmd_gradcheck(gradcheck_args);
    if (app.got_subcommand(train_cmd)) return cmd_train(train_args);
    if (app.got_subcommand(eval_cmd)) return cmd_eval(eval_args);
    if (app.got_subcommand(filter_cmd)) return cmd_filter(filter_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
