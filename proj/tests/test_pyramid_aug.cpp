#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rendersynth/pyramid_aug.hpp"
#include "rendersynth/tag_model.hpp"

using namespace rendersynth;

TEST_CASE("pyramid with all-zero weights is the zero image") {
  Rng rng(1);
  const PyramidWeights w(7, 0.0);
  CHECK(sample_pyramid(w, rng).abs().maxCoeff() == 0.0);
}

TEST_CASE("pyramid with only the coarsest weight is constant") {
  Rng rng(2);
  PyramidWeights w(7, 0.0);
  w[0] = 0.8;
  const Imaged img = sample_pyramid(w, rng);
  CHECK(img.rows() == 64);
  CHECK(img.cols() == 64);
  CHECK((img == img(0, 0)).all());
  CHECK(img(0, 0) != 0.0);  // one shared Gaussian draw, scaled
}

TEST_CASE("pyramid output size follows the level count") {
  Rng rng(3);
  CHECK(sample_pyramid(PyramidWeights(5, 1.0), rng).rows() == 16);
  CHECK(sample_pyramid(PyramidWeights(7, 1.0), rng).rows() == 64);
}

TEST_CASE("nearest-neighbor pyramid variance is the sum of squared weights") {
  // i.i.d. levels add in variance when upscaling just repeats pixels
  Rng rng(4);
  const PyramidWeights w{0.5, 0.3, 0.2, 0.4, 0.1};  // 16x16
  double expected = 0.0;
  for (double v : w) expected += v * v;

  const int samples = 30000;
  const Index px = 9, py = 6;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double v = sample_pyramid(w, rng, UpscaleMode::nearest)(py, px);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / samples;
  const double var = sum_sq / samples - mean * mean;
  CHECK(std::abs(var - expected) / expected < 0.05);
}

TEST_CASE("pyramid is zero-mean within a 3-sigma Monte Carlo bound") {
  Rng rng(5);
  const PyramidWeights w{0.5, 0.3, 0.2, 0.4, 0.1};
  const int samples = 30000;
  const Index px = 3, py = 12;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double v = sample_pyramid(w, rng)(py, px);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / samples;
  const double sd = std::sqrt(sum_sq / samples - mean * mean);
  CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(static_cast<double>(samples)));
}

TEST_CASE("handmade stage identities") {
  Rng rng(6);
  const TagLabel label = sample_label(rng, 64);
  const auto out = render(label, 64);
  const HandmadeConfig identity = HandmadeConfig::identity();

  SUBCASE("blur with zero sigma range") {
    Rng r(7);
    CHECK((hm_blur(out.image, identity, r) == out.image).all());
  }
  SUBCASE("lighting at unit scales and zero shift") {
    Rng r(8);
    CHECK((hm_lighting(out.image, identity, r) - out.image).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("noise with zero amplitude") {
    Rng r(9);
    CHECK((hm_noise(out.image, identity, r) == out.image).all());
  }
  SUBCASE("no spotlights") {
    CHECK((hm_spotlights(out.image, SpotlightParams{}) == out.image).all());
  }
  SUBCASE("apply_handmade at identity reproduces the render") {
    Rng r(10);
    CHECK((apply_handmade(out, identity, r, label, 64) - out.image).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("hm_lighting stays in bounds and preserves decode") {
  Rng rng(11);
  HandmadeConfig cfg;
  int flips = 0;
  for (int n = 0; n < 200; ++n) {
    const TagLabel label = sample_label(rng, 64);
    const auto out = render(label, 64);
    const Imaged lit = hm_lighting(out.image, cfg, rng);
    const auto decoded = decode_oracle(lit, label);
    if (!decoded.valid() || decoded.bits != label.bits) ++flips;
  }
  CHECK(flips == 0);
}

TEST_CASE("hm_blur preserves decode") {
  Rng rng(12);
  HandmadeConfig cfg;
  int flips = 0;
  for (int n = 0; n < 200; ++n) {
    const TagLabel label = sample_label(rng, 64);
    const auto out = render(label, 64);
    const auto decoded = decode_oracle(hm_blur(out.image, cfg, rng), label);
    if (!decoded.valid() || decoded.bits != label.bits) ++flips;
  }
  CHECK(flips == 0);
}

TEST_CASE("hm_background never alters foreground pixels") {
  Rng rng(13);
  HandmadeConfig cfg;
  for (int n = 0; n < 20; ++n) {
    const TagLabel label = sample_label(rng, 64);
    const auto out = render(label, 64);
    const Imaged composited = hm_background(out.image, out.bg_mask, cfg, rng);
    for (Index i = 0; i < 64; ++i)
      for (Index j = 0; j < 64; ++j)
        if (out.bg_mask(i, j) == 0.0) CHECK(composited(i, j) == out.image(i, j));
  }
}

TEST_CASE("hm_noise weights live on the two finest levels only") {
  const auto w = geometric_weights(7, 0.15, 1.0, 2);
  for (int i = 0; i < 5; ++i) CHECK(w[static_cast<size_t>(i)] == 0.0);
  CHECK(w[5] > 0.0);
  CHECK(w[6] > 0.0);
}

TEST_CASE("hm_noise keeps the image mean within a Monte Carlo bound") {
  Rng rng(14);
  HandmadeConfig cfg;
  const Imaged x = Imaged::Constant(64, 64, 0.25);
  double shift_sum = 0.0, shift_sq = 0.0;
  const int samples = 300;
  for (int s = 0; s < samples; ++s) {
    const double shift = (hm_noise(x, cfg, rng) - x).mean();
    shift_sum += shift;
    shift_sq += shift * shift;
  }
  const double mean = shift_sum / samples;
  const double sd = std::sqrt(shift_sq / samples - mean * mean);
  CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(static_cast<double>(samples)));
}

TEST_CASE("single isotropic spotlight peaks at its center") {
  Imaged x = Imaged::Zero(32, 32);
  SpotlightParams p;
  SpotlightParams::Spot spot;
  spot.center_x = 16.5;  // pixel (16, 16) center
  spot.center_y = 16.5;
  spot.covariance = 9.0 * Eigen::Matrix2d::Identity();
  spot.amplitude = 0.9;
  p.spots.push_back(spot);
  const Imaged lit = hm_spotlights(x, p);
  CHECK(lit(16, 16) == doctest::Approx(0.9));
  Index mi, mj;
  lit.maxCoeff(&mi, &mj);
  CHECK(mi == 16);
  CHECK(mj == 16);
}

TEST_CASE("spotlight amplitudes up to 1.5 keep the decode-failure rate under 5%") {
  Rng rng(15);
  HandmadeConfig cfg;
  cfg.spotlight_amp_max = 1.5;  // the bound the default (1.0) was calibrated below
  int bad = 0;
  const int n_samples = 300;
  for (int n = 0; n < n_samples; ++n) {
    const TagLabel label = sample_label(rng, 64);
    const auto out = render(label, 64);
    const Imaged lit = hm_spotlights(out.image, sample_spotlights(label, 64, cfg, rng));
    const auto decoded = decode_oracle(lit, label);
    if (!decoded.valid() || decoded.bits != label.bits) ++bad;
  }
  CHECK(static_cast<double>(bad) / n_samples < 0.05);
}

TEST_CASE("dataset variant stage partitions") {
  const auto hm3d = variant_spec("hm_3d");
  const auto hmli = variant_spec("hm_li");
  const auto hmbg = variant_spec("hm_bg");
  const auto rg = variant_spec("rendergan");

  CHECK(hm3d.learned == LearnedPrefix::none);
  CHECK((hm3d.hm_blur && hm3d.hm_lighting && hm3d.hm_background && hm3d.hm_noise &&
         hm3d.hm_spotlights));

  CHECK(hmli.learned == LearnedPrefix::through_lighting);
  CHECK_FALSE(hmli.hm_blur);
  CHECK_FALSE(hmli.hm_lighting);
  CHECK((hmli.hm_background && hmli.hm_noise && hmli.hm_spotlights));

  CHECK(hmbg.learned == LearnedPrefix::through_background);
  CHECK_FALSE(hmbg.hm_background);
  CHECK((hmbg.hm_noise && hmbg.hm_spotlights));

  CHECK(rg.learned == LearnedPrefix::full);
  CHECK_FALSE(rg.hm_noise);

  // HM LI's handmade set is a strict subset of HM 3D's
  auto set_of = [](const DatasetVariantSpec& s) {
    return std::array<bool, 5>{s.hm_blur, s.hm_lighting, s.hm_background, s.hm_noise,
                               s.hm_spotlights};
  };
  const auto a = set_of(hmli), b = set_of(hm3d);
  bool subset = true, strict = false;
  for (int i = 0; i < 5; ++i) {
    if (a[static_cast<size_t>(i)] && !b[static_cast<size_t>(i)]) subset = false;
    if (!a[static_cast<size_t>(i)] && b[static_cast<size_t>(i)]) strict = true;
  }
  CHECK(subset);
  CHECK(strict);

  CHECK_THROWS(variant_spec("nope"));
}

TEST_CASE("full handmade pipeline keeps labels decodable most of the time") {
  Rng rng(16);
  HandmadeConfig cfg;
  int bad = 0;
  const int n_samples = 200;
  for (int n = 0; n < n_samples; ++n) {
    const TagLabel label = sample_label(rng, 64);
    const auto out = render(label, 64);
    const Imaged img = apply_handmade(out, cfg, rng, label, 64);
    const auto decoded = decode_oracle(img, label);
    if (!decoded.valid() || decoded.bits != label.bits) ++bad;
  }
  CHECK(static_cast<double>(bad) / n_samples < 0.05);
}
