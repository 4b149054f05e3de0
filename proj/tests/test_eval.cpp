#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "rendersynth/eval.hpp"
#include "rendersynth/pyramid_aug.hpp"

using namespace rendersynth;

namespace {

// Narrow pose spread keeps the pooled-feature decoder's task linear enough;
// full yaw randomization is out of reach for it by design.
LabelDistribution easy_pose() {
  LabelDistribution d;
  d.yaw_min = -0.1;
  d.yaw_max = 0.1;
  d.tilt_sigma = 0.1;
  d.center_jitter = 1.0;
  d.scale_min = 0.95;
  d.scale_max = 1.05;
  return d;
}

LabeledDataset clean_dataset(int n, std::uint64_t seed, const LabelDistribution& pose) {
  LabeledDataset data;
  data.provenance = "clean";
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const TagLabel label = sample_label(rng, 64, pose);
    data.samples.push_back({render(label, 64).image, label});
  }
  return data;
}

LabeledDataset handmade_dataset(int n, std::uint64_t seed, const LabelDistribution& pose) {
  LabeledDataset data;
  data.provenance = "hm_3d";
  Rng rng(seed);
  HandmadeConfig cfg;
  for (int i = 0; i < n; ++i) {
    const TagLabel label = sample_label(rng, 64, pose);
    const auto out = render(label, 64);
    data.samples.push_back({apply_handmade(out, cfg, rng, label, 64), label});
  }
  return data;
}

}  // namespace

TEST_CASE("mhd basics") {
  const int n = 6;
  MatrixXd probs = MatrixXd::Zero(n, kNumBits);
  std::vector<std::array<bool, kNumBits>> truth(n);
  Rng rng(1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < kNumBits; ++c) {
      const bool bit = rng.bernoulli(0.5);
      truth[static_cast<size_t>(r)][static_cast<size_t>(c)] = bit;
      probs(r, c) = bit ? 0.9 : 0.1;
    }
  CHECK(mhd(probs, truth) == 0.0);

  MatrixXd inverted = (1.0 - probs.array()).matrix();
  CHECK(mhd(inverted, truth) == 12.0);

  MatrixXd bad_shape = MatrixXd::Zero(n, 5);
  CHECK_THROWS(mhd(bad_shape, truth));
}

TEST_CASE("uniform random guessing lands near MHD 6") {
  Rng rng(2);
  const int n = 10000;
  MatrixXd probs(n, kNumBits);
  std::vector<std::array<bool, kNumBits>> truth(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < kNumBits; ++c) {
      probs(r, c) = rng.uniform();
      truth[static_cast<size_t>(r)][static_cast<size_t>(c)] = rng.bernoulli(0.5);
    }
  CHECK(mhd(probs, truth) == doctest::Approx(6.0).epsilon(0.1 / 6.0));
}

TEST_CASE("mhd is permutation invariant and additive over bits") {
  Rng rng(3);
  const int n = 50;
  MatrixXd probs(n, kNumBits);
  std::vector<std::array<bool, kNumBits>> truth(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < kNumBits; ++c) {
      probs(r, c) = rng.uniform();
      truth[static_cast<size_t>(r)][static_cast<size_t>(c)] = rng.bernoulli(0.5);
    }
  const double base = mhd(probs, truth);

  std::vector<Index> perm(n);
  for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937(17));
  MatrixXd probs_p(n, kNumBits);
  std::vector<std::array<bool, kNumBits>> truth_p(n);
  for (int r = 0; r < n; ++r) {
    probs_p.row(r) = probs.row(perm[static_cast<size_t>(r)]);
    truth_p[static_cast<size_t>(r)] = truth[static_cast<size_t>(perm[static_cast<size_t>(r)])];
  }
  CHECK(mhd(probs_p, truth_p) == base);

  // additive over bit positions: per-column error rates sum to the MHD
  double per_bit_sum = 0.0;
  for (int c = 0; c < kNumBits; ++c) {
    double wrong = 0.0;
    for (int r = 0; r < n; ++r)
      if ((probs(r, c) >= 0.5) != truth[static_cast<size_t>(r)][static_cast<size_t>(c)])
        wrong += 1.0;
    per_bit_sum += wrong / n;
  }
  CHECK(per_bit_sum == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("zero-iteration decoder predicts 0.5 everywhere, MHD near 6") {
  const auto data = clean_dataset(400, 4, easy_pose());
  const ReferenceDecoder decoder;  // zero weights
  const VectorXd p = decoder.predict(data.samples.front().image);
  CHECK((p.array() == 0.5).all());
  CHECK(evaluate(decoder, data) == doctest::Approx(6.0).epsilon(0.35 / 6.0));
}

TEST_CASE("decoder training reduces MHD and separates clean renders") {
  const auto train_data = clean_dataset(1200, 5, easy_pose());
  const auto result = train_reference_decoder(train_data);
  REQUIRE_FALSE(result.train_mhd_history.empty());
  CHECK(result.train_mhd_history.back() < result.train_mhd_history.front());
  CHECK(result.train_mhd_history.back() < 0.05);

  const auto held_out = clean_dataset(400, 6, easy_pose());
  const double test_mhd = evaluate(result.decoder, held_out);
  CHECK(test_mhd < 0.05);
  CHECK(evaluate(result.decoder, train_data) <= test_mhd + 0.5);
}

TEST_CASE("evaluate is deterministic and guards degenerate features") {
  const auto data = clean_dataset(50, 7, easy_pose());
  const auto result = train_reference_decoder(data, {.epochs = 20, .lr = 0.5, .weight_decay = 0.0});
  CHECK(evaluate(result.decoder, data) == evaluate(result.decoder, data));

  LabeledDataset tiny;
  tiny.provenance = "clean";
  TagLabel label;
  tiny.samples.push_back({Imaged::Zero(4, 4), label});
  CHECK_THROWS(evaluate(result.decoder, tiny));  // cannot pool 4x4 into 8x8
  LabeledDataset empty;
  CHECK_THROWS(evaluate(result.decoder, empty));
}

TEST_CASE("preservation sweep: hard-bounded stages never flip") {
  Rng rng(8);
  const auto blur = preservation_sweep(kStageBlur, 300, rng);
  CHECK(blur.composed.tags_flipped == 0);
  CHECK(blur.composed.decode_failures == 0);

  const auto lighting = preservation_sweep(kStageLighting, 300, rng);
  CHECK(lighting.composed.tags_flipped == 0);
  CHECK(lighting.composed.decode_failures == 0);

  const auto background = preservation_sweep(kStageBackground, 300, rng);
  CHECK(background.composed.tags_flipped == 0);
  CHECK(background.composed.decode_failures == 0);
}

TEST_CASE("preservation sweep: stage selector none flips nothing") {
  Rng rng(9);
  const auto report = preservation_sweep(kStageNone, 50, rng);
  CHECK(report.composed.tags_flipped == 0);
  CHECK(report.composed.decode_failures == 0);
  CHECK(report.per_stage.empty());
}

TEST_CASE("preservation sweep: full pipeline reports monitored detail corruption") {
  Rng rng(10);
  const auto report = preservation_sweep(kStageFull, 400, rng);
  REQUIRE(report.per_stage.size() == 4);
  for (const auto& row : report.per_stage) {
    if (row.stage != "detail") {
      CHECK(row.tags_flipped == 0);
      CHECK(row.decode_failures == 0);
    }
  }
  CHECK(report.composed.corruption_rate() < 0.02);
  const std::string text = format_report(report);
  CHECK(text.find("composed") != std::string::npos);
  CHECK(report_csv(report).find("stage,n,") == 0);
}

TEST_CASE("stage selector names parse") {
  CHECK(stage_mask_from_name("blur") == kStageBlur);
  CHECK(stage_mask_from_name("full") == kStageFull);
  CHECK(stage_mask_from_name("none") == kStageNone);
  CHECK_THROWS(stage_mask_from_name("wat"));
}
