#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rendersynth/diff_ops.hpp"
#include "rendersynth/nets.hpp"
#include "rendersynth/tag_model.hpp"

namespace rendersynth {

/// Layer widths of the generator nets; tests shrink these for exhaustive
/// finite-difference sweeps.
struct GenArch {
  Index n_z = 64;
  Index trunk = 96;
  Index blur_hidden = 32;
  Index light_hidden = 128;
  Index bg_hidden = 128;
  Index detail_hidden = 128;
  Index field = 8;        // lighting/background head resolution
  Index detail_field = 16;  // detail head resolution
};

struct DiscArch {
  Index c1 = 8;
  Index c2 = 16;
  Index c3 = 32;
  Index fc = 64;
};

struct GenTape {
  VectorXd z, cond, lin;
  VectorXd a1, h1, a2, h;
  VectorXd ab, hb;
  VectorXd al, hl;
  VectorXd abg, hbg;
  VectorXd ad, hd;
  Imaged model_image, bg_mask;
  ComposeTape<double> compose;
};

/// Generator: a dense trunk on z feeds four output heads (blur scalar,
/// lighting fields, background, detail), each ending in a clip layer inside
/// compose(). Lighting and background heads also see pooled render features
/// (model image + depth map). Background is predicted as a residual on the
/// model image so the zero-initialized head starts at the stage fixpoint.
struct GeneratorNet {
  GenArch arch;
  Dense trunk1, trunk2;
  Dense blur1, blur2;
  Dense light1, light2;
  Dense bg1, bg2;
  Dense det1, det2;
  ComposeBounds bounds;

  explicit GeneratorNet(const GenArch& a = {});

  /// Trunk and hidden layers random; output heads zero-weight with biases at
  /// the stage identity points, so training starts from clean renders.
  void init(Rng& rng);

  std::vector<ParamRef> params();
  void zero_grad();

  /// Runs the full pipeline for one latent vector and render.
  ComposeResult<double> forward(const VectorXd& z, const RenderOutput& render,
                                GenTape* tape = nullptr) const;

  /// Accumulates parameter gradients; returns the gradient w.r.t. z.
  VectorXd backward(const GenTape& tape, const Imaged& grad_image, double grad_penalty);

  /// Intermediate stage outputs, for dataset variants that keep only a
  /// learned prefix of the cascade.
  struct Staged {
    Imaged after_blur, after_lighting, after_background, final;
    double penalty = 0.0;
  };
  Staged forward_staged(const VectorXd& z, const RenderOutput& render) const;

 private:
  ComposeParams<double> head_params(const VectorXd& z, const RenderOutput& render,
                                    GenTape* tape) const;
};

struct DiscTape {
  Tensor3 x0, a1, h1, a2, h2, a3, h3;
  MatrixXd cols1, cols2, cols3;
  VectorXd flat, af1, hf1;
  Index input_resolution = 0;
  double logit = 0.0;
};

/// DCGAN-flavored critic over images resized to 32x32: three strided
/// convolutions, two dense layers, logistic output.
struct DiscriminatorNet {
  DiscArch arch;
  Conv2d conv1, conv2, conv3;
  Dense fc1, fc2;

  explicit DiscriminatorNet(const DiscArch& a = {});
  void init(Rng& rng);
  std::vector<ParamRef> params();
  void zero_grad();

  /// Score in (0, 1); the tape also records the pre-squash logit.
  double forward(const Imaged& image, DiscTape* tape = nullptr) const;
  /// Accumulates parameter gradients; returns the gradient w.r.t. the input
  /// image at its original resolution.
  Imaged backward(const DiscTape& tape, double grad_logit);
};

inline constexpr Index kDiscInputSize = 32;

struct TrainConfig {
  int batch_size = 32;
  int steps_per_epoch = 25;
  int epochs = 30;
  double lr = 2e-4;
  std::vector<int> decay_epochs{20, 25, 30};
  double decay_factor = 0.25;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 1;
  int resolution = 16;
  GenArch gen_arch;
  DiscArch disc_arch;
  LabelDistribution labels;

  void validate() const;
  /// Learning rate in force during the given 1-based epoch.
  double lr_at_epoch(int epoch) const;
};

struct StepLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double penalty = 0.0;
};

struct EpochStats {
  int epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double penalty = 0.0;
  double lr = 0.0;
};

struct GanState {
  TrainConfig cfg;
  GeneratorNet gen;
  DiscriminatorNet disc;
  Adam adam_g, adam_d;
  Rng rng{1};
  std::uint64_t step = 0;

  explicit GanState(const TrainConfig& c);
};

/// Batch of stand-in real images at the training resolution.
using RealSource = std::function<std::vector<Imaged>(int count, Rng& rng)>;

/// The handmade pipeline as the closed-loop target distribution.
RealSource handmade_real_source(int resolution, const LabelDistribution& labels);

/// One discriminator update (binary cross-entropy on real vs generated) and
/// one generator update (non-saturating loss plus clip penalty), both Adam.
/// Throws on non-finite losses.
StepLosses gan_step(GanState& state, const std::vector<Imaged>& real_batch);

/// Full training loop; deterministic for a fixed config.
std::vector<EpochStats> train(GanState& state, const RealSource& real_source,
                              const std::function<void(const EpochStats&)>& on_epoch = {});

/// Indices (ascending) of the ceil((1-quantile)*n) highest-scoring images.
std::vector<size_t> score_filter(const std::vector<double>& scores, double quantile);
std::vector<double> score_images(const DiscriminatorNet& disc, const std::vector<Imaged>& images);

void save_checkpoint(const GanState& state, const std::string& path);
GanState load_checkpoint(const std::string& path);

}  // namespace rendersynth
