#include "rendersynth/eval.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rendersynth/diff_ops.hpp"
#include "rendersynth/pyramid_aug.hpp"

namespace rendersynth {

double mhd(const MatrixXd& probs, const std::vector<std::array<bool, kNumBits>>& truth) {
  if (probs.rows() != static_cast<Index>(truth.size()) || probs.cols() != kNumBits)
    throw std::invalid_argument("mhd: shape mismatch");
  if (truth.empty()) throw std::invalid_argument("mhd: empty input");
  double wrong = 0.0;
  for (Index r = 0; r < probs.rows(); ++r)
    for (Index c = 0; c < kNumBits; ++c) {
      const bool predicted = probs(r, c) >= 0.5;
      if (predicted != truth[static_cast<size_t>(r)][static_cast<size_t>(c)]) wrong += 1.0;
    }
  return wrong / static_cast<double>(truth.size());
}

VectorXd ReferenceDecoder::features(const Imaged& image) {
  const Imaged pooled = block_mean_grid(image, kGrid, kGrid);  // throws if not divisible
  VectorXd f(kGrid * kGrid + 1);
  Index pos = 0;
  for (Index i = 0; i < kGrid; ++i)
    for (Index j = 0; j < kGrid; ++j) f(pos++) = pooled(i, j);
  f(pos) = 1.0;
  return f;
}

VectorXd ReferenceDecoder::predict(const Imaged& image) const {
  const VectorXd f = features(image);
  VectorXd p = w * f;
  for (Index i = 0; i < p.size(); ++i) p(i) = sigmoid(p(i));
  return p;
}

DecoderTrainResult train_reference_decoder(const LabeledDataset& train,
                                           const DecoderTrainConfig& cfg) {
  if (train.samples.empty()) throw std::invalid_argument("train_reference_decoder: empty dataset");
  const Index n = static_cast<Index>(train.samples.size());

  MatrixXd feats(n, ReferenceDecoder::kGrid * ReferenceDecoder::kGrid + 1);
  MatrixXd targets(n, kNumBits);
  std::vector<std::array<bool, kNumBits>> truth;
  truth.reserve(train.samples.size());
  for (Index r = 0; r < n; ++r) {
    const auto& sample = train.samples[static_cast<size_t>(r)];
    feats.row(r) = ReferenceDecoder::features(sample.image).transpose();
    for (Index c = 0; c < kNumBits; ++c)
      targets(r, c) = sample.label.bits[static_cast<size_t>(c)] ? 1.0 : 0.0;
    truth.push_back(sample.label.bits);
  }

  DecoderTrainResult result;
  MatrixXd& w = result.decoder.w;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    MatrixXd logits = feats * w.transpose();           // n x 12
    MatrixXd probs = logits.unaryExpr([](double v) { return sigmoid(v); });
    result.train_mhd_history.push_back(mhd(probs, truth));
    const MatrixXd grad =
        ((probs - targets).transpose() * feats) / static_cast<double>(n) + cfg.weight_decay * w;
    w -= cfg.lr * grad;
  }
  return result;
}

double evaluate(const ReferenceDecoder& decoder, const LabeledDataset& test) {
  if (test.samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  MatrixXd probs(static_cast<Index>(test.samples.size()), kNumBits);
  std::vector<std::array<bool, kNumBits>> truth;
  truth.reserve(test.samples.size());
  for (size_t r = 0; r < test.samples.size(); ++r) {
    probs.row(static_cast<Index>(r)) = decoder.predict(test.samples[r].image).transpose();
    truth.push_back(test.samples[r].label.bits);
  }
  return mhd(probs, truth);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

StageMask stage_mask_from_name(const std::string& name) {
  if (name == "none") return kStageNone;
  if (name == "blur") return kStageBlur;
  if (name == "lighting") return kStageLighting;
  if (name == "background") return kStageBackground;
  if (name == "detail") return kStageDetail;
  if (name == "full") return kStageFull;
  throw std::invalid_argument("unknown stage selector: " + name);
}

namespace {

int pyramid_levels_for(Index resolution) {
  int levels = 1;
  while ((Index(1) << (levels - 1)) < resolution) ++levels;
  return levels;
}

Imaged sweep_field(Rng& rng, Index res, double center, double amp, double lo, double hi,
                   double decay = 0.5) {
  const auto weights = geometric_weights(pyramid_levels_for(res), 1.0, decay);
  return (center + amp * sample_pyramid(weights, rng)).min(hi).max(lo);
}

ComposeParams<double> sample_sweep_params(unsigned mask, const RenderOutput& rendered, Rng& rng,
                                          const SweepConfig& cfg) {
  const Index res = rendered.image.rows();
  ComposeParams<double> p = identity_params(rendered.image);
  if (mask & kStageBlur) p.alpha = rng.uniform(0.0, 1.0);
  if (mask & kStageLighting) {
    p.s_w = sweep_field(rng, res, rng.uniform(cfg.light_center_min, cfg.light_center_max),
                        rng.uniform(0.0, cfg.light_amp), 0.10, 1.0);
    p.s_b = sweep_field(rng, res, rng.uniform(cfg.light_center_min, cfg.light_center_max),
                        rng.uniform(0.0, cfg.light_amp), 0.10, 1.0);
    p.t = sweep_field(rng, res, 0.0, rng.uniform(0.0, cfg.shift_amp), -0.5, 0.5);
  }
  if (mask & kStageBackground)
    p.bg = sweep_field(rng, res, rng.uniform(-0.4, 0.4), rng.uniform(0.3, cfg.bg_amp), -1.0, 1.0);
  if (mask & kStageDetail)
    p.detail = sweep_field(rng, res, 0.0, rng.uniform(0.0, cfg.detail_amp), -2.0, 2.0,
                           /*decay=*/1.0);
  return p;
}

SweepRow run_sweep(const std::string& name, unsigned mask, int n, Rng& rng,
                   const SweepConfig& cfg) {
  SweepRow row;
  row.stage = name;
  row.n = n;
  for (int i = 0; i < n; ++i) {
    // the preservation property compares decode before vs after, so labels
    // whose clean render is already undecodable (pathological joint tilt)
    // are resampled rather than charged to a stage
    TagLabel label = sample_label(rng, cfg.resolution, cfg.labels);
    RenderOutput rendered = render(label, cfg.resolution);
    std::optional<CellMasks> masks = cell_regions(label, cfg.resolution);
    while (!masks || !decode_with_masks(rendered.image, *masks).valid()) {
      label = sample_label(rng, cfg.resolution, cfg.labels);
      rendered = render(label, cfg.resolution);
      masks = cell_regions(label, cfg.resolution);
    }
    const auto params = sample_sweep_params(mask, rendered, rng, cfg);
    const auto out = compose(rendered.image, rendered.bg_mask, params);
    const DecodeResult decoded = decode_with_masks(out.image, *masks);
    if (!decoded.valid()) {
      ++row.decode_failures;
      continue;
    }
    int flips = 0;
    for (int b = 0; b < kNumBits; ++b)
      if (decoded.bits[static_cast<size_t>(b)] != label.bits[static_cast<size_t>(b)]) ++flips;
    if (flips > 0) {
      ++row.tags_flipped;
      row.bit_flips += flips;
    }
  }
  return row;
}

}  // namespace

SweepReport preservation_sweep(unsigned stage_mask, int n, Rng& rng, const SweepConfig& cfg) {
  if (n < 1) throw std::invalid_argument("preservation_sweep: n must be positive");
  SweepReport report;
  const std::pair<unsigned, const char*> stages[] = {
      {kStageBlur, "blur"},
      {kStageLighting, "lighting"},
      {kStageBackground, "background"},
      {kStageDetail, "detail"},
  };
  unsigned selected = 0;
  for (const auto& [bit, name] : stages) {
    if (stage_mask & bit) {
      report.per_stage.push_back(run_sweep(name, bit, n, rng, cfg));
      ++selected;
    }
  }
  if (selected == 1) {
    report.composed = report.per_stage.front();
    report.composed.stage = report.per_stage.front().stage;
  } else {
    report.composed = run_sweep(selected == 0 ? "none" : "composed", stage_mask, n, rng, cfg);
  }
  return report;
}

std::string format_report(const SweepReport& report) {
  std::ostringstream out;
  out << "stage        n      bit_flips  tags_flipped  decode_failures  corruption\n";
  auto line = [&](const SweepRow& row) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-12s %-6d %-10d %-13d %-16d %.4f\n", row.stage.c_str(),
                  row.n, row.bit_flips, row.tags_flipped, row.decode_failures,
                  row.corruption_rate());
    out << buf;
  };
  for (const auto& row : report.per_stage)
    if (row.stage != report.composed.stage) line(row);
  line(report.composed);
  return out.str();
}

std::string report_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "stage,n,bit_flips,tags_flipped,decode_failures,corruption\n";
  auto line = [&](const SweepRow& row) {
    out << row.stage << ',' << row.n << ',' << row.bit_flips << ',' << row.tags_flipped << ','
        << row.decode_failures << ',' << row.corruption_rate() << '\n';
  };
  for (const auto& row : report.per_stage)
    if (row.stage != report.composed.stage) line(row);
  line(report.composed);
  return out.str();
}

}  // namespace rendersynth
