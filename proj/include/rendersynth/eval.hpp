#pragma once

#include <string>
#include <vector>

#include "rendersynth/image.hpp"
#include "rendersynth/nets.hpp"
#include "rendersynth/tag_model.hpp"

namespace rendersynth {

struct LabeledSample {
  Imaged image;
  TagLabel label;
};

struct LabeledDataset {
  std::vector<LabeledSample> samples;
  std::string provenance;  // rendergan | hm_3d | hm_li | hm_bg | realaug
};

/// Mean Hamming distance between thresholded probabilities and true bits;
/// 0 is perfect, 6 is random guessing on 12 bits.
double mhd(const MatrixXd& probs, const std::vector<std::array<bool, kNumBits>>& truth);

/// Deliberately weak decoder: 12 independent logistic models over an 8x8
/// average-pooled feature grid, so dataset quality rather than model capacity
/// dominates comparisons.
struct ReferenceDecoder {
  static constexpr Index kGrid = 8;
  MatrixXd w;  // kNumBits x (kGrid*kGrid + 1), bias last

  ReferenceDecoder() : w(MatrixXd::Zero(kNumBits, kGrid * kGrid + 1)) {}

  /// Pooled features plus bias term. Throws when the image cannot be pooled
  /// into the 8x8 grid.
  static VectorXd features(const Imaged& image);
  VectorXd predict(const Imaged& image) const;  // per-bit probabilities
};

struct DecoderTrainConfig {
  int epochs = 600;
  double lr = 1.0;
  double weight_decay = 1e-4;
};

struct DecoderTrainResult {
  ReferenceDecoder decoder;
  std::vector<double> train_mhd_history;  // one entry per epoch
};

/// Full-batch gradient descent from zero weights; deterministic.
DecoderTrainResult train_reference_decoder(const LabeledDataset& train,
                                           const DecoderTrainConfig& cfg = {});

double evaluate(const ReferenceDecoder& decoder, const LabeledDataset& test);

// ---------------------------------------------------------------------------
// Label-preservation sweeps
// ---------------------------------------------------------------------------

enum StageMask : unsigned {
  kStageNone = 0,
  kStageBlur = 1u << 0,
  kStageLighting = 1u << 1,
  kStageBackground = 1u << 2,
  kStageDetail = 1u << 3,
  kStageFull = kStageBlur | kStageLighting | kStageBackground | kStageDetail,
};

StageMask stage_mask_from_name(const std::string& name);

struct SweepRow {
  std::string stage;
  int n = 0;
  int bit_flips = 0;        // total flipped bits
  int tags_flipped = 0;     // tags with at least one flipped bit
  int decode_failures = 0;  // inverted-reference or bad-geometry decodes
  double corruption_rate() const {
    return n == 0 ? 0.0 : static_cast<double>(tags_flipped + decode_failures) / n;
  }
};

struct SweepReport {
  std::vector<SweepRow> per_stage;  // selected stages run individually
  SweepRow composed;                // all selected stages together
};

/// In-bound random parameter distributions used by the sweeps. Field
/// construction mirrors the handmade lighting/background synthesis.
struct SweepConfig {
  int resolution = 64;
  LabelDistribution labels;
  double light_center_min = 0.55;
  double light_center_max = 1.0;
  double light_amp = 0.15;
  double shift_amp = 0.15;
  double bg_amp = 1.0;
  double detail_amp = 1.0;
};

/// Renders n random labels, pushes them through the selected stages with
/// random in-bound parameters, and decodes before/after.
SweepReport preservation_sweep(unsigned stage_mask, int n, Rng& rng, const SweepConfig& cfg = {});

std::string format_report(const SweepReport& report);
std::string report_csv(const SweepReport& report);

}  // namespace rendersynth
