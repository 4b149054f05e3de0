#include "rendersynth/pyramid_aug.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rendersynth/diff_ops.hpp"

namespace rendersynth {

Imaged sample_pyramid(const PyramidWeights& weights, Rng& rng, UpscaleMode mode) {
  if (weights.empty()) throw std::invalid_argument("sample_pyramid: need at least one level");
  Imaged acc;
  for (size_t level = 0; level < weights.size(); ++level) {
    const Index n = Index(1) << level;
    Imaged noise(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) noise(i, j) = rng.normal();
    if (level == 0) {
      acc = weights[level] * noise;
    } else {
      Imaged up = mode == UpscaleMode::bilinear ? bilinear_upsample2(acc) : nearest_upsample2(acc);
      acc = weights[level] * noise + up;
    }
  }
  return acc;
}

PyramidWeights geometric_weights(int levels, double base, double decay, int keep_finest) {
  PyramidWeights w(static_cast<size_t>(levels), 0.0);
  for (int i = 0; i < levels; ++i) {
    if (keep_finest >= 0 && i < levels - keep_finest) continue;
    w[static_cast<size_t>(i)] = base * std::pow(decay, i);
  }
  return w;
}

HandmadeConfig HandmadeConfig::identity() {
  HandmadeConfig cfg;
  cfg.background = false;  // no identity point exists for the background stage
  cfg.blur_sigma_min = cfg.blur_sigma_max = 0.0;
  cfg.light_scale_center_min = cfg.light_scale_center_max = 1.0;
  cfg.light_scale_amp = 0.0;
  cfg.light_shift_amp = 0.0;
  cfg.noise_amp = 0.0;
  cfg.spotlight_count_mean = 0.0;
  cfg.spotlight_count_max = 0;
  return cfg;
}

namespace {

int pyramid_levels_for(Index resolution) {
  if (!is_pow2(resolution)) throw std::invalid_argument("pyramid stages need power-of-two sizes");
  int levels = 1;
  while ((Index(1) << (levels - 1)) < resolution) ++levels;
  return levels;
}

}  // namespace

Imaged hm_blur(const Imaged& x, const HandmadeConfig& cfg, Rng& rng) {
  const double sigma = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
  return gaussian_blur(x, std::min(sigma, 2.0));
}

Imaged hm_lighting(const Imaged& x, const HandmadeConfig& cfg, Rng& rng) {
  const int levels = pyramid_levels_for(x.rows());
  const auto weights = geometric_weights(levels, 1.0, cfg.light_pyramid_decay);

  const double center_w = rng.uniform(cfg.light_scale_center_min, cfg.light_scale_center_max);
  const double center_b = rng.uniform(cfg.light_scale_center_min, cfg.light_scale_center_max);
  const double amp_w = rng.uniform(0.0, cfg.light_scale_amp);
  const double amp_b = rng.uniform(0.0, cfg.light_scale_amp);
  const double amp_t = rng.uniform(0.0, cfg.light_shift_amp);

  Imaged s_w = (center_w + amp_w * sample_pyramid(weights, rng)).min(1.0).max(0.10);
  Imaged s_b = (center_b + amp_b * sample_pyramid(weights, rng)).min(1.0).max(0.10);
  Imaged t = (amp_t * sample_pyramid(weights, rng)).min(0.5).max(-0.5);
  return phi_lighting<double>(x, s_w, s_b, t);
}

Imaged hm_background(const Imaged& x, const Imaged& bg_mask, const HandmadeConfig& cfg, Rng& rng) {
  const int levels = pyramid_levels_for(x.rows());
  const auto weights = geometric_weights(levels, 1.0, cfg.bg_pyramid_decay);
  const double amp = rng.uniform(cfg.bg_amp_min, cfg.bg_amp_max);
  const double offset = rng.uniform(cfg.bg_offset_min, cfg.bg_offset_max);
  Imaged d = (offset + amp * sample_pyramid(weights, rng)).min(1.0).max(-1.0);
  return phi_bg<double>(x, bg_mask, d);
}

Imaged hm_noise(const Imaged& x, const HandmadeConfig& cfg, Rng& rng) {
  const int levels = pyramid_levels_for(x.rows());
  const double amp = rng.uniform(0.0, cfg.noise_amp);
  const auto weights = geometric_weights(levels, amp, 1.0, /*keep_finest=*/2);
  return x + sample_pyramid(weights, rng);
}

Imaged hm_spotlights(const Imaged& x, const SpotlightParams& params) {
  Imaged out = x;
  for (const auto& spot : params.spots) {
    const Eigen::Matrix2d inv = spot.covariance.inverse();
    for (Index i = 0; i < out.rows(); ++i) {
      for (Index j = 0; j < out.cols(); ++j) {
        const Eigen::Vector2d d(j + 0.5 - spot.center_x, i + 0.5 - spot.center_y);
        out(i, j) += spot.amplitude * std::exp(-0.5 * d.dot(inv * d));
      }
    }
  }
  return out;
}

SpotlightParams sample_spotlights(const TagLabel& label, int resolution, const HandmadeConfig& cfg,
                                  Rng& rng) {
  SpotlightParams params;
  if (cfg.spotlight_count_max <= 0 || cfg.spotlight_count_mean <= 0.0) return params;
  const int count = std::min(rng.poisson(cfg.spotlight_count_mean), cfg.spotlight_count_max);
  const double px_scale = static_cast<double>(resolution) / kReferenceResolution;
  const double tag_radius = TagGeometry{}.outer_radius * label.scale * px_scale;
  for (int s = 0; s < count; ++s) {
    SpotlightParams::Spot spot;
    // uniform position on the tag disk
    const double r = tag_radius * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    spot.center_x = label.center_x + r * std::cos(theta);
    spot.center_y = label.center_y + r * std::sin(theta);
    const double s1 = rng.uniform(cfg.spotlight_sigma_min, cfg.spotlight_sigma_max) * px_scale;
    const double s2 = rng.uniform(cfg.spotlight_sigma_min, cfg.spotlight_sigma_max) * px_scale;
    const double rot = rng.uniform(0.0, M_PI);
    Eigen::Matrix2d r_mat;
    r_mat << std::cos(rot), -std::sin(rot), std::sin(rot), std::cos(rot);
    Eigen::Vector2d diag(s1 * s1, s2 * s2);
    spot.covariance = r_mat * diag.asDiagonal() * r_mat.transpose();
    spot.amplitude = rng.uniform(cfg.spotlight_amp_min, cfg.spotlight_amp_max);
    params.spots.push_back(spot);
  }
  return params;
}

DatasetVariantSpec variant_spec(const std::string& name) {
  DatasetVariantSpec spec;
  if (name == "hm_3d") {
    spec.learned = LearnedPrefix::none;
  } else if (name == "hm_li") {
    spec.learned = LearnedPrefix::through_lighting;
    spec.hm_blur = spec.hm_lighting = false;
  } else if (name == "hm_bg") {
    spec.learned = LearnedPrefix::through_background;
    spec.hm_blur = spec.hm_lighting = spec.hm_background = false;
  } else if (name == "rendergan") {
    spec.learned = LearnedPrefix::full;
    spec.hm_blur = spec.hm_lighting = spec.hm_background = false;
    spec.hm_noise = spec.hm_spotlights = false;
  } else {
    throw std::invalid_argument("unknown dataset variant: " + name);
  }
  return spec;
}

Imaged apply_handmade(const RenderOutput& render, const HandmadeConfig& cfg, Rng& rng,
                      const TagLabel& label, int resolution) {
  Imaged x = render.image;
  if (cfg.blur) x = hm_blur(x, cfg, rng);
  if (cfg.lighting) x = hm_lighting(x, cfg, rng);
  if (cfg.background) x = hm_background(x, render.bg_mask, cfg, rng);
  if (cfg.noise) x = hm_noise(x, cfg, rng);
  if (cfg.spotlights) x = hm_spotlights(x, sample_spotlights(label, resolution, cfg, rng));
  return x;
}

}  // namespace rendersynth
