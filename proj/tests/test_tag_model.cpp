#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rendersynth/tag_model.hpp"

using namespace rendersynth;

namespace {

double masked_mean(const Imaged& x, const Imaged& mask) {
  return (x * mask).sum() / mask.sum();
}

}  // namespace

TEST_CASE("identity pose, all-zero bits: ring cells dark, white semicircle bright") {
  TagLabel label;
  const auto out = render(label, 64);
  const auto masks = cell_regions(label, 64);
  REQUIRE(masks.has_value());
  for (int i = 0; i < kNumBits; ++i) CHECK(masked_mean(out.image, (*masks)[i]) < 0.0);
  CHECK(masked_mean(out.image, (*masks)[12]) > 0.0);
  CHECK(masked_mean(out.image, (*masks)[13]) < 0.0);
}

TEST_CASE("decode round trip over 1000 random labels") {
  Rng rng(42);
  int failures = 0;
  for (int n = 0; n < 1000; ++n) {
    const TagLabel label = sample_label(rng, 64);
    const auto out = render(label, 64);
    const auto decoded = decode_oracle(out.image, label);
    if (!decoded.valid() || decoded.bits != label.bits) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("paper id 100110100010 decodes to itself") {
  TagLabel label;
  label.bits = bits_from_string("100110100010");
  const auto out = render(label, 64);
  const auto decoded = decode_oracle(out.image, label);
  REQUIRE(decoded.valid());
  CHECK(bits_to_string(decoded.bits) == "100110100010");
}

TEST_CASE("pitch foreshortens the tag footprint") {
  TagLabel flat;
  TagLabel tilted;
  tilted.pitch = 0.5;
  const double area_flat = (1.0 - render(flat, 64).bg_mask.array()).sum();
  const double area_tilted = (1.0 - render(tilted, 64).bg_mask.array()).sum();
  CHECK(area_tilted < area_flat);
}

TEST_CASE("render validates inputs") {
  TagLabel label;
  CHECK_THROWS_AS(render(label, 8), std::invalid_argument);
  label.pitch = 1.2;  // past pi/3
  CHECK_THROWS_AS(render(label, 64), std::invalid_argument);
  label.pitch = 0.0;
  label.scale = 0.0;
  CHECK_THROWS_AS(render(label, 64), std::invalid_argument);
}

TEST_CASE("rendering is deterministic") {
  Rng rng(7);
  const TagLabel label = sample_label(rng, 64);
  const auto a = render(label, 64);
  const auto b = render(label, 64);
  CHECK((a.image == b.image).all());
  CHECK((a.bg_mask == b.bg_mask).all());
  CHECK((a.depth == b.depth).all());
}

TEST_CASE("background mask and depth are consistent") {
  Rng rng(19);
  for (int n = 0; n < 20; ++n) {
    const TagLabel label = sample_label(rng, 64);
    const auto out = render(label, 64);
    CHECK(((out.bg_mask > 0.0) && (out.depth > 0.0)).count() == 0);
    CHECK(out.depth.minCoeff() >= 0.0);
    CHECK(out.depth.maxCoeff() <= 1.0);
    CHECK(out.image.minCoeff() >= -1.0);
    CHECK(out.image.maxCoeff() <= 1.0);
  }
}

TEST_CASE("white_mask thresholds at zero") {
  Imaged neg = Imaged::Constant(8, 8, -1.0);
  Imaged pos = Imaged::Constant(8, 8, 1.0);
  CHECK(white_mask(neg).sum() == 0.0);
  CHECK(white_mask(pos).sum() == 64.0);
}

TEST_CASE("white_mask of an all-ones render covers ring cells and white semicircle") {
  TagLabel label;
  label.bits.fill(true);
  const auto out = render(label, 64);
  const auto masks = cell_regions(label, 64);
  REQUIRE(masks.has_value());
  const Imaged w = white_mask(out.image);
  for (int i = 0; i < kNumBits; ++i) {
    const Imaged& m = (*masks)[i];
    CHECK(((w * m).sum()) == doctest::Approx(m.sum()));  // all ones inside the cell
  }
  CHECK(((w * (*masks)[12]).sum()) == doctest::Approx((*masks)[12].sum()));
  CHECK(((w * (*masks)[13]).sum()) == doctest::Approx(0.0));
}

TEST_CASE("white_mask matches bits cell by cell") {
  Rng rng(11);
  for (int n = 0; n < 20; ++n) {
    const TagLabel label = sample_label(rng, 64);
    const auto out = render(label, 64);
    const auto masks = cell_regions(label, 64);
    REQUIRE(masks.has_value());
    const Imaged w = white_mask(out.image);
    for (int i = 0; i < kNumBits; ++i) {
      const Imaged& m = (*masks)[i];
      const bool all_white = (w * m).sum() == m.sum();
      CHECK(all_white == label.bits[static_cast<size_t>(i)]);
    }
  }
}

TEST_CASE("cell regions: nonempty, disjoint, pose-only") {
  TagLabel label;
  const auto masks = cell_regions(label, 64);
  REQUIRE(masks.has_value());
  Imaged overlap = Imaged::Zero(64, 64);
  for (const auto& m : *masks) {
    CHECK(m.sum() >= 1.0);
    overlap += m;
  }
  CHECK(overlap.maxCoeff() <= 1.0);

  TagLabel other = label;
  other.bits.fill(true);
  const auto masks2 = cell_regions(other, 64);
  REQUIRE(masks2.has_value());
  for (int i = 0; i < 14; ++i) CHECK(((*masks)[i] == (*masks2)[i]).all());
}

TEST_CASE("cell regions are 2pi-periodic in yaw") {
  TagLabel label;
  label.yaw = 0.7;
  label.pitch = 0.2;
  label.roll = -0.15;
  TagLabel wrapped = label;
  wrapped.yaw += 2.0 * M_PI;
  const auto a = cell_regions(label, 64);
  const auto b = cell_regions(wrapped, 64);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  int differing = 0;
  for (int i = 0; i < 14; ++i) differing += static_cast<int>(((*a)[i] != (*b)[i]).count());
  CHECK(differing <= 2);  // only knife-edge pixels may move
}

TEST_CASE("decode is invariant to affine intensity maps") {
  Rng rng(3);
  const TagLabel label = sample_label(rng, 64);
  const auto out = render(label, 64);
  const Imaged remapped = 0.5 * out.image + 0.1;
  const auto a = decode_oracle(out.image, label);
  const auto b = decode_oracle(remapped, label);
  REQUIRE(a.valid());
  REQUIRE(b.valid());
  CHECK(a.bits == b.bits);
}

TEST_CASE("negating one cell flips exactly that bit") {
  Rng rng(5);
  const TagLabel label = sample_label(rng, 64);
  const auto out = render(label, 64);
  const auto masks = cell_regions(label, 64);
  REQUIRE(masks.has_value());
  const auto base = decode_oracle(out.image, label);
  REQUIRE(base.valid());
  for (int cell = 0; cell < kNumBits; ++cell) {
    const Imaged& m = (*masks)[cell];
    const Imaged corrupted = out.image * (1.0 - 2.0 * m);  // negates masked pixels
    const auto decoded = decode_oracle(corrupted, label);
    REQUIRE(decoded.valid());
    int flips = 0;
    for (int i = 0; i < kNumBits; ++i)
      if (decoded.bits[static_cast<size_t>(i)] != base.bits[static_cast<size_t>(i)]) ++flips;
    CHECK(flips == 1);
    CHECK(decoded.bits[static_cast<size_t>(cell)] != base.bits[static_cast<size_t>(cell)]);
  }
}

TEST_CASE("inverted references are a decode failure, not a bit flip") {
  TagLabel label;
  const auto out = render(label, 64);
  const auto decoded = decode_oracle((-out.image).eval(), label);
  CHECK(decoded.status == DecodeStatus::inverted_reference);
}

TEST_CASE("bits string round trip") {
  CHECK(bits_to_string(bits_from_string("101010101010")) == "101010101010");
  CHECK_THROWS(bits_from_string("10101"));
  CHECK_THROWS(bits_from_string("10101010101x"));
}
