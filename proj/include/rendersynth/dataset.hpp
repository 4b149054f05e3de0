#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rendersynth/adversarial.hpp"
#include "rendersynth/pyramid_aug.hpp"
#include "rendersynth/real_aug.hpp"

namespace rendersynth {

struct DatasetSample {
  Imaged image;
  TagLabel label;
  std::uint64_t seed = 0;
};

struct DatasetOptions {
  std::string variant = "hm_3d";  // rendergan | hm_3d | hm_li | hm_bg | realaug
  int count = 100;
  std::uint64_t seed = 1;
  int resolution = 64;
  LabelDistribution labels;
  HandmadeConfig handmade;
};

bool variant_needs_checkpoint(const std::string& variant);

/// One sample, fully determined by (options.seed, index); `learned` supplies
/// the generator for variants with a learned prefix.
DatasetSample generate_sample(const DatasetOptions& options, std::uint64_t index,
                              const GeneratorNet* learned);

/// Deterministic fan-out over a worker pool: per-sample seed streams make the
/// result independent of the thread count.
std::vector<DatasetSample> generate_dataset(const DatasetOptions& options,
                                            const GeneratorNet* learned, int threads);

/// Worker count from RENDERSYNTH_THREADS, defaulting to the hardware.
int worker_count();

}  // namespace rendersynth
