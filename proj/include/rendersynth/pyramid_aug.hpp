#pragma once

#include <string>
#include <vector>

#include "rendersynth/image.hpp"
#include "rendersynth/rng.hpp"
#include "rendersynth/tag_model.hpp"

namespace rendersynth {

enum class UpscaleMode { bilinear, nearest };

/// Per-level weights of the noise pyramid, coarse (1x1) to fine. Entry count
/// fixes the output size: n weights produce a 2^(n-1) square image.
using PyramidWeights = std::vector<double>;

/// I_0 = w_0 L_0, I_i = w_i L_i + upscale(I_{i-1}) with every L_i pixel drawn
/// from N(0, 1). Weighting the levels shapes the frequency content.
Imaged sample_pyramid(const PyramidWeights& weights, Rng& rng,
                      UpscaleMode mode = UpscaleMode::bilinear);

/// Weight vector for `levels` levels: value base * decay^i at level i, with
/// an optional restriction to the finest `keep_finest` levels.
PyramidWeights geometric_weights(int levels, double base, double decay, int keep_finest = -1);

struct SpotlightParams {
  struct Spot {
    double center_x = 0, center_y = 0;  // px
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
    double amplitude = 0;
  };
  std::vector<Spot> spots;
};

/// Distribution settings for the five handmade stages. Defaults are the
/// calibrated values recorded in configs/handmade.toml; all stages can also
/// be driven at their identity points for testing.
struct HandmadeConfig {
  // stage toggles
  bool blur = true;
  bool lighting = true;
  bool background = true;
  bool noise = true;
  bool spotlights = true;

  // blur: sigma ~ unif(sigma_min, sigma_max), capped to preserve labels
  double blur_sigma_min = 0.0;
  double blur_sigma_max = 2.0;

  // lighting: fields are clamp(center + amp * pyramid, bounds); amp itself is
  // drawn uniformly from [0, *_amp]
  double light_scale_center_min = 0.55;
  double light_scale_center_max = 1.0;
  double light_scale_amp = 0.15;
  double light_shift_amp = 0.15;
  double light_pyramid_decay = 0.5;  // weights w_i ~ decay^i, coarse-heavy

  // background: d = clamp(bg_offset + amp * pyramid, -1, 1), coarse-heavy
  double bg_amp_min = 0.3;
  double bg_amp_max = 1.0;
  double bg_offset_min = -0.4;
  double bg_offset_max = 0.4;
  double bg_pyramid_decay = 0.5;

  // noise: only the two finest pyramid levels, amplitude ~ unif(0, noise_amp)
  double noise_amp = 0.15;

  // spotlights: count ~ min(Poisson(mean), max), Gaussian blobs on the tag
  double spotlight_count_mean = 1.0;
  int spotlight_count_max = 3;
  double spotlight_amp_min = 0.2;
  double spotlight_amp_max = 1.0;
  double spotlight_sigma_min = 2.0;  // px at 64 px reference
  double spotlight_sigma_max = 6.0;

  /// Config with every enabled stage pinned to its identity point. The
  /// background stage has no identity parameters and is disabled.
  static HandmadeConfig identity();
};

/// Gaussian blur with sigma drawn from the configured range.
Imaged hm_blur(const Imaged& x, const HandmadeConfig& cfg, Rng& rng);

/// phi_lighting driven by pyramid-sampled fields mapped into the legal
/// bounds ([0.10, 1] scales, [-0.5, 0.5] shift).
Imaged hm_lighting(const Imaged& x, const HandmadeConfig& cfg, Rng& rng);

/// phi_bg with a coarse-weighted pyramid background.
Imaged hm_background(const Imaged& x, const Imaged& bg_mask, const HandmadeConfig& cfg, Rng& rng);

/// Adds a pyramid restricted to the two finest levels.
Imaged hm_noise(const Imaged& x, const HandmadeConfig& cfg, Rng& rng);

/// x plus a sum of 2D Gaussian blobs.
Imaged hm_spotlights(const Imaged& x, const SpotlightParams& params);

/// Spotlight parameters drawn per the config, centered on the tag disk.
SpotlightParams sample_spotlights(const TagLabel& label, int resolution, const HandmadeConfig& cfg,
                                  Rng& rng);

/// Which learned pipeline prefix a dataset variant keeps; the handmade stages
/// fill in everything after it.
enum class LearnedPrefix {
  none,              // HM 3D: model only, all five stages handmade
  through_lighting,  // HM LI: learned blur + lighting
  through_background,  // HM BG: learned blur + lighting + background
  full,              // RenderGAN: everything learned
};

struct DatasetVariantSpec {
  LearnedPrefix learned = LearnedPrefix::none;
  bool hm_blur = true;
  bool hm_lighting = true;
  bool hm_background = true;
  bool hm_noise = true;
  bool hm_spotlights = true;
};

/// Stage partitions matching the published dataset variants.
DatasetVariantSpec variant_spec(const std::string& name);

/// Applies the configured handmade stages, in the canonical stage order, to a
/// render (or to a learned-pipeline prefix output handed in as `x`).
Imaged apply_handmade(const RenderOutput& render, const HandmadeConfig& cfg, Rng& rng,
                      const TagLabel& label, int resolution);

}  // namespace rendersynth
