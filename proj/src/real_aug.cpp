#include "rendersynth/real_aug.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace rendersynth {

RealAugParams sample_real_aug(Rng& rng) {
  RealAugParams p;
  p.intensity_scale = rng.uniform(0.9, 1.1);
  p.intensity_shift = rng.uniform(-0.2, 0.2);
  p.noise_level = std::max(0.0, rng.normal(kRealNoiseMean, kRealNoiseStd));
  p.rotation = rng.uniform(0.0, 2.0 * M_PI);
  p.scale = rng.uniform(0.7, 1.1);
  p.shear = rng.uniform(-0.3, 0.3);
  p.translate_x = rng.uniform(-4.0, 4.0);
  p.translate_y = rng.uniform(-4.0, 4.0);
  return p;
}

namespace {

double sample_bilinear_reflect(const Imaged& x, double row, double col) {
  const double fr = std::floor(row), fc = std::floor(col);
  const Index i0 = static_cast<Index>(fr), j0 = static_cast<Index>(fc);
  const double tr = row - fr, tc = col - fc;
  const Index r0 = reflect_index(i0, x.rows()), r1 = reflect_index(i0 + 1, x.rows());
  const Index c0 = reflect_index(j0, x.cols()), c1 = reflect_index(j0 + 1, x.cols());
  return (1.0 - tr) * ((1.0 - tc) * x(r0, c0) + tc * x(r0, c1)) +
         tr * ((1.0 - tc) * x(r1, c0) + tc * x(r1, c1));
}

}  // namespace

Imaged apply_real_aug(const Imaged& x, const RealAugParams& p, Rng& rng) {
  // rotation -> scale -> shear -> translation, all about the image center
  Eigen::Matrix2d rot;
  rot << std::cos(p.rotation), -std::sin(p.rotation), std::sin(p.rotation), std::cos(p.rotation);
  Eigen::Matrix2d shear;
  shear << 1.0, p.shear, 0.0, 1.0;
  const Eigen::Matrix2d fwd = shear * (p.scale * rot);
  const Eigen::Matrix2d inv = fwd.inverse();
  const Eigen::Vector2d center(x.cols() / 2.0, x.rows() / 2.0);
  const Eigen::Vector2d shift(p.translate_x, p.translate_y);

  Imaged out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const Eigen::Vector2d dst(j + 0.5, i + 0.5);
      const Eigen::Vector2d src = inv * (dst - center - shift) + center;
      out(i, j) = sample_bilinear_reflect(x, src.y() - 0.5, src.x() - 0.5);
    }
  }

  out = p.intensity_scale * out + p.intensity_shift;

  if (p.noise_level > 0.0)
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < out.cols(); ++j) out(i, j) += rng.normal(0.0, p.noise_level);
  return out;
}

}  // namespace rendersynth
