#pragma once

#include "rendersynth/image.hpp"
#include "rendersynth/rng.hpp"

namespace rendersynth {

/// Augmentation parameters for real training images: intensity scale/shift,
/// per-image noise level, and an affine warp.
struct RealAugParams {
  double intensity_scale = 1.0;  // s ~ unif(0.9, 1.1)
  double intensity_shift = 0.0;  // t ~ unif(-0.2, 0.2)
  double noise_level = 0.0;      // eps = max(0, N(0.04, 0.03)), per image
  double rotation = 0.0;         // rad ~ unif(0, 2pi)
  double scale = 1.0;            // ~ unif(0.7, 1.1)
  double shear = 0.0;            // ~ unif(-0.3, 0.3)
  double translate_x = 0.0;      // px ~ unif(-4, 4)
  double translate_y = 0.0;      // px ~ unif(-4, 4)

  static RealAugParams identity() {
    RealAugParams p;
    p.intensity_scale = 1.0;
    p.scale = 1.0;
    return p;
  }
};

inline constexpr double kRealNoiseMean = 0.04;
inline constexpr double kRealNoiseStd = 0.03;

/// Draws every field from its published range.
RealAugParams sample_real_aug(Rng& rng);

/// Affine warp (rotation, scale, shear, translation about the image center;
/// bilinear sampling with reflect padding), then s*I + t, then per-pixel
/// N(0, eps^2) noise.
Imaged apply_real_aug(const Imaged& x, const RealAugParams& params, Rng& rng);

}  // namespace rendersynth
