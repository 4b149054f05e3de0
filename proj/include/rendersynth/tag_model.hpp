#pragma once

#include <array>
#include <optional>
#include <string>

#include "rendersynth/image.hpp"
#include "rendersynth/rng.hpp"

namespace rendersynth {

inline constexpr int kNumBits = 12;
inline constexpr int kReferenceResolution = 64;

/// Tag geometry on the 64 px reference canvas. All radii scale linearly with
/// resolution and with the per-label scale factor.
struct TagGeometry {
  double outer_radius = 22.0;      // coding-ring outer radius at scale 1
  double ring_inner_frac = 0.55;   // ring inner radius / outer radius
  double disk_frac = 0.45;         // orientation-disk radius / outer radius
  double max_tilt = M_PI / 3.0;    // |pitch|, |roll| must stay below this
  int supersample = 4;             // subsamples per axis for antialiasing
  double erosion_px = 1.5;         // interior margin of the decode regions
};

/// Ground-truth label: 12 code bits plus pose.
struct TagLabel {
  std::array<bool, kNumBits> bits{};
  double center_x = 32.0;  // px
  double center_y = 32.0;  // px
  double yaw = 0.0;        // rad, in-plane spin
  double pitch = 0.0;      // rad
  double roll = 0.0;       // rad
  double scale = 1.0;      // radius multiplier
};

std::string bits_to_string(const std::array<bool, kNumBits>& bits);
std::array<bool, kNumBits> bits_from_string(const std::string& s);

struct RenderOutput {
  Imaged image;    // values in [-1, 1]
  Imaged bg_mask;  // 1 where no tag geometry projects, else 0
  Imaged depth;    // min-max normalized over tag pixels, 0 on background
};

/// Sampling ranges used when drawing labels for dataset generation. Bits are
/// uniform unless pinned to a fixed configuration.
struct LabelDistribution {
  double yaw_min = 0.0;
  double yaw_max = 2.0 * M_PI;
  double tilt_sigma = 0.3;      // truncated normal for pitch and roll
  double tilt_bound = M_PI / 3.0;
  double center_jitter = 4.0;   // px around canvas center at 64 px reference
  double scale_min = 0.8;
  double scale_max = 1.1;
  bool fix_bits = false;
  std::array<bool, kNumBits> bits{};
};

TagLabel sample_label(Rng& rng, int resolution, const LabelDistribution& dist = {});

/// Renders the clean tag. Throws std::invalid_argument when the resolution is
/// below 16 px or the pose violates the geometry bounds.
RenderOutput render(const TagLabel& label, int resolution, const TagGeometry& geom = {});

/// W(x): 1 where x > 0, else 0.
Imaged white_mask(const Imaged& x);

/// Interior-eroded pixel masks for cells 0-11 plus the white (12) and black
/// (13) reference semicircles. Masks are pairwise disjoint 0/1 images.
using CellMasks = std::array<Imaged, 14>;

/// Empty optional when any region vanishes after erosion (pose too extreme or
/// resolution too low for decoding).
std::optional<CellMasks> cell_regions(const TagLabel& label, int resolution,
                                      const TagGeometry& geom = {});

enum class DecodeStatus {
  ok,
  bad_geometry,        // cell regions empty after erosion
  inverted_reference,  // white reference not brighter than black reference
};

struct DecodeResult {
  DecodeStatus status = DecodeStatus::bad_geometry;
  std::array<bool, kNumBits> bits{};
  bool valid() const { return status == DecodeStatus::ok; }
};

/// Reads the 12 bits from `x` given known pose geometry: bit i is set when the
/// cell-i mean exceeds the midpoint of the two semicircle reference means.
DecodeResult decode_oracle(const Imaged& x, const TagLabel& label_geometry,
                           const TagGeometry& geom = {});

/// Same oracle with precomputed region masks (reused across augmentations of
/// one label).
DecodeResult decode_with_masks(const Imaged& x, const CellMasks& masks);

}  // namespace rendersynth
