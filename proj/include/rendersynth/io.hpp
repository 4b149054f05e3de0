#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rendersynth/image.hpp"
#include "rendersynth/tag_model.hpp"

namespace rendersynth {

/// 8-bit grayscale PNG with the linear map [-1, 1] -> [0, 255]; meant for
/// human inspection. Values outside [-1, 1] are clamped.
void write_png(const std::string& path, const Imaged& image);
Imaged read_png(const std::string& path);

/// Lossless raw blob: width u32, height u32 (little-endian), then row-major
/// float32 samples.
void write_f32(const std::string& path, const Imaged& image);
Imaged read_f32(const std::string& path);

inline std::uint8_t to_u8(double v) {
  const double scaled = (v + 1.0) * 0.5 * 255.0;
  const long rounded = std::lround(scaled);
  return static_cast<std::uint8_t>(std::min(255L, std::max(0L, rounded)));
}
inline double from_u8(std::uint8_t v) { return v / 255.0 * 2.0 - 1.0; }

/// One dataset sample: file paths plus the full ground-truth label.
struct ManifestRecord {
  std::string path;       // image file stem relative to the manifest
  TagLabel label;
  std::string provenance;
  std::uint64_t seed = 0;
};

/// JSON-lines manifest, one object per sample, written in index order.
void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records);
std::vector<ManifestRecord> read_manifest(const std::string& path);

}  // namespace rendersynth
