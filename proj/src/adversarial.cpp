#include "rendersynth/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rendersynth/pyramid_aug.hpp"

namespace rendersynth {

namespace {

VectorXd image_to_vector(const Imaged& img) {
  VectorXd v(img.rows() * img.cols());
  Index pos = 0;
  for (Index i = 0; i < img.rows(); ++i)
    for (Index j = 0; j < img.cols(); ++j) v(pos++) = img(i, j);
  return v;
}

Imaged segment_to_image(const VectorXd& v, Index offset, Index rows, Index cols) {
  Imaged img(rows, cols);
  Index pos = offset;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) img(i, j) = v(pos++);
  return img;
}

void image_into_segment(const Imaged& img, VectorXd& v, Index offset) {
  Index pos = offset;
  for (Index i = 0; i < img.rows(); ++i)
    for (Index j = 0; j < img.cols(); ++j) v(pos++) = img(i, j);
}

Imaged resize_to_disc_input(const Imaged& image) {
  if (image.rows() > kDiscInputSize) return downsample_pow2_to(image, kDiscInputSize);
  if (image.rows() < kDiscInputSize) return upsample_pow2_to(image, kDiscInputSize);
  return image;
}

Imaged resize_to_disc_input_adjoint(const Imaged& grad, Index original) {
  if (original > kDiscInputSize) return downsample_pow2_to_adjoint(grad, original);
  if (original < kDiscInputSize) return upsample_pow2_to_adjoint(grad, original);
  return grad;
}

}  // namespace

// ---------------------------------------------------------------------------
// GeneratorNet
// ---------------------------------------------------------------------------

GeneratorNet::GeneratorNet(const GenArch& a) : arch(a) {
  const Index cond = 2 * a.field * a.field;
  trunk1.resize(a.trunk, a.n_z);
  trunk2.resize(a.trunk, a.trunk);
  blur1.resize(a.blur_hidden, a.trunk);
  blur2.resize(1, a.blur_hidden);
  light1.resize(a.light_hidden, a.trunk + cond);
  light2.resize(3 * a.field * a.field, a.light_hidden);
  bg1.resize(a.bg_hidden, a.trunk + cond);
  bg2.resize(a.field * a.field, a.bg_hidden);
  det1.resize(a.detail_hidden, a.trunk);
  det2.resize(a.detail_field * a.detail_field, a.detail_hidden);
}

void GeneratorNet::init(Rng& rng) {
  trunk1.init(rng);
  trunk2.init(rng);
  blur1.init(rng);
  light1.init(rng);
  bg1.init(rng);
  det1.init(rng);
  // Output heads start at the stage identity points: alpha=0, s_w=s_b=1,
  // t=0, background residual 0, detail 0.
  blur2.init_head(0.0);
  light2.init_head(0.0);
  const Index f2 = arch.field * arch.field;
  light2.b.segment(0, 2 * f2).setConstant(1.0);
  bg2.init_head(0.0);
  det2.init_head(0.0);
}

std::vector<ParamRef> GeneratorNet::params() {
  std::vector<ParamRef> out;
  trunk1.collect("g.trunk1", out);
  trunk2.collect("g.trunk2", out);
  blur1.collect("g.blur1", out);
  blur2.collect("g.blur2", out);
  light1.collect("g.light1", out);
  light2.collect("g.light2", out);
  bg1.collect("g.bg1", out);
  bg2.collect("g.bg2", out);
  det1.collect("g.det1", out);
  det2.collect("g.det2", out);
  return out;
}

void GeneratorNet::zero_grad() {
  for (Dense* d : {&trunk1, &trunk2, &blur1, &blur2, &light1, &light2, &bg1, &bg2, &det1, &det2})
    d->zero_grad();
}

ComposeParams<double> GeneratorNet::head_params(const VectorXd& z, const RenderOutput& render,
                                                GenTape* tape) const {
  const Index res = render.image.rows();
  if (!is_pow2(res) || res < arch.detail_field || res % arch.field != 0)
    throw std::invalid_argument("GeneratorNet: resolution incompatible with head fields");

  GenTape local;
  GenTape& t = tape ? *tape : local;
  t.z = z;

  VectorXd cond(2 * arch.field * arch.field);
  image_into_segment(block_mean_grid(render.image, arch.field, arch.field), cond, 0);
  image_into_segment(block_mean_grid(render.depth, arch.field, arch.field), cond,
                     arch.field * arch.field);
  t.cond = cond;

  t.a1 = trunk1.forward(z);
  t.h1 = relu(t.a1);
  t.a2 = trunk2.forward(t.h1);
  t.h = relu(t.a2);

  t.ab = blur1.forward(t.h);
  t.hb = relu(t.ab);
  const double alpha_raw = blur2.forward(t.hb)(0);

  t.lin.resize(arch.trunk + cond.size());
  t.lin << t.h, cond;
  t.al = light1.forward(t.lin);
  t.hl = relu(t.al);
  const VectorXd lraw = light2.forward(t.hl);

  t.abg = bg1.forward(t.lin);
  t.hbg = relu(t.abg);
  const VectorXd bgraw = bg2.forward(t.hbg);

  t.ad = det1.forward(t.h);
  t.hd = relu(t.ad);
  const VectorXd draw = det2.forward(t.hd);

  const Index f = arch.field, f2 = f * f;
  ComposeParams<double> p;
  p.alpha = alpha_raw;
  p.s_w = upsample_pow2_to(segment_to_image(lraw, 0, f, f), res);
  p.s_b = upsample_pow2_to(segment_to_image(lraw, f2, f, f), res);
  p.t = upsample_pow2_to(segment_to_image(lraw, 2 * f2, f, f), res);
  p.bg = render.image + upsample_pow2_to(segment_to_image(bgraw, 0, f, f), res);
  p.detail = upsample_pow2_to(segment_to_image(draw, 0, arch.detail_field, arch.detail_field), res);

  t.model_image = render.image;
  t.bg_mask = render.bg_mask;
  return p;
}

ComposeResult<double> GeneratorNet::forward(const VectorXd& z, const RenderOutput& render,
                                            GenTape* tape) const {
  const ComposeParams<double> p = head_params(z, render, tape);
  return compose(render.image, render.bg_mask, p, bounds, tape ? &tape->compose : nullptr);
}

GeneratorNet::Staged GeneratorNet::forward_staged(const VectorXd& z,
                                                  const RenderOutput& render) const {
  const ComposeParams<double> p = head_params(z, render, nullptr);
  const auto c_alpha = clip_with_penalty(Imaged::Constant(1, 1, p.alpha).eval(), bounds.alpha);
  const auto c_sw = clip_with_penalty(p.s_w, bounds.scale);
  const auto c_sb = clip_with_penalty(p.s_b, bounds.scale);
  const auto c_t = clip_with_penalty(p.t, bounds.shift);
  const auto c_bg = clip_with_penalty(p.bg, bounds.background);
  const auto c_d = clip_with_penalty(p.detail, bounds.detail);

  Staged s;
  s.penalty =
      c_alpha.penalty + c_sw.penalty + c_sb.penalty + c_t.penalty + c_bg.penalty + c_d.penalty;
  s.after_blur = phi_blur(render.image, c_alpha.value(0, 0));
  s.after_lighting = phi_lighting<double>(s.after_blur, c_sw.value, c_sb.value, c_t.value);
  s.after_background = phi_bg<double>(s.after_lighting, render.bg_mask, c_bg.value);
  s.final = phi_detail(s.after_background, c_d.value);
  return s;
}

VectorXd GeneratorNet::backward(const GenTape& t, const Imaged& grad_image, double grad_penalty) {
  const auto g = compose_vjp(t.compose, grad_image, grad_penalty);
  const Index f = arch.field, f2 = f * f;

  VectorXd d_lraw(3 * f2);
  image_into_segment(upsample_pow2_to_adjoint(g.s_w, f), d_lraw, 0);
  image_into_segment(upsample_pow2_to_adjoint(g.s_b, f), d_lraw, f2);
  image_into_segment(upsample_pow2_to_adjoint(g.t, f), d_lraw, 2 * f2);

  VectorXd d_bgraw(f2);
  image_into_segment(upsample_pow2_to_adjoint(g.bg, f), d_bgraw, 0);

  VectorXd d_draw(arch.detail_field * arch.detail_field);
  image_into_segment(upsample_pow2_to_adjoint(g.detail, arch.detail_field), d_draw, 0);

  VectorXd gh = VectorXd::Zero(arch.trunk);

  // lighting head
  {
    const VectorXd ghl = light2.backward(t.hl, d_lraw);
    const VectorXd gal = relu_backward(t.al, ghl);
    const VectorXd glin = light1.backward(t.lin, gal);
    gh += glin.head(arch.trunk);
  }
  // background head
  {
    const VectorXd ghbg = bg2.backward(t.hbg, d_bgraw);
    const VectorXd gabg = relu_backward(t.abg, ghbg);
    const VectorXd glin = bg1.backward(t.lin, gabg);
    gh += glin.head(arch.trunk);
  }
  // detail head
  {
    const VectorXd ghd = det2.backward(t.hd, d_draw);
    const VectorXd gad = relu_backward(t.ad, ghd);
    gh += det1.backward(t.h, gad);
  }
  // blur head
  {
    VectorXd galpha(1);
    galpha(0) = g.alpha;
    const VectorXd ghb = blur2.backward(t.hb, galpha);
    const VectorXd gab = relu_backward(t.ab, ghb);
    gh += blur1.backward(t.h, gab);
  }

  const VectorXd ga2 = relu_backward(t.a2, gh);
  const VectorXd gh1 = trunk2.backward(t.h1, ga2);
  const VectorXd ga1 = relu_backward(t.a1, gh1);
  return trunk1.backward(t.z, ga1);
}

// ---------------------------------------------------------------------------
// DiscriminatorNet
// ---------------------------------------------------------------------------

DiscriminatorNet::DiscriminatorNet(const DiscArch& a)
    : arch(a),
      conv1(1, a.c1, 5, 2, 2),
      conv2(a.c1, a.c2, 5, 2, 2),
      conv3(a.c2, a.c3, 3, 2, 1),
      fc1(a.fc, a.c3 * 4 * 4),
      fc2(1, a.fc) {}

void DiscriminatorNet::init(Rng& rng) {
  conv1.init(rng);
  conv2.init(rng);
  conv3.init(rng);
  fc1.init(rng);
  fc2.init(rng, 0.5);
}

std::vector<ParamRef> DiscriminatorNet::params() {
  std::vector<ParamRef> out;
  conv1.collect("d.conv1", out);
  conv2.collect("d.conv2", out);
  conv3.collect("d.conv3", out);
  fc1.collect("d.fc1", out);
  fc2.collect("d.fc2", out);
  return out;
}

void DiscriminatorNet::zero_grad() {
  conv1.zero_grad();
  conv2.zero_grad();
  conv3.zero_grad();
  fc1.zero_grad();
  fc2.zero_grad();
}

double DiscriminatorNet::forward(const Imaged& image, DiscTape* tape) const {
  if (image.rows() != image.cols() || !is_pow2(image.rows()))
    throw std::invalid_argument("DiscriminatorNet: images must be square powers of two");
  DiscTape local;
  DiscTape& t = tape ? *tape : local;
  t.input_resolution = image.rows();

  t.x0.channels = {resize_to_disc_input(image)};
  t.a1 = conv1.forward(t.x0, &t.cols1);
  t.h1 = lrelu(t.a1);
  t.a2 = conv2.forward(t.h1, &t.cols2);
  t.h2 = lrelu(t.a2);
  t.a3 = conv3.forward(t.h2, &t.cols3);
  t.h3 = lrelu(t.a3);
  t.flat = flatten(t.h3);
  t.af1 = fc1.forward(t.flat);
  t.hf1 = lrelu(t.af1);
  t.logit = fc2.forward(t.hf1)(0);
  return sigmoid(t.logit);
}

Imaged DiscriminatorNet::backward(const DiscTape& t, double grad_logit) {
  VectorXd gl(1);
  gl(0) = grad_logit;
  const VectorXd ghf1 = fc2.backward(t.hf1, gl);
  const VectorXd gaf1 = lrelu_backward(t.af1, ghf1);
  const VectorXd gflat = fc1.backward(t.flat, gaf1);

  Tensor3 gh3 = unflatten(gflat, arch.c3, 4, 4);
  Tensor3 ga3 = lrelu_backward(t.a3, gh3);
  Tensor3 gh2 = conv3.backward(t.h2, t.cols3, ga3);
  Tensor3 ga2 = lrelu_backward(t.a2, gh2);
  Tensor3 gh1 = conv2.backward(t.h1, t.cols2, ga2);
  Tensor3 ga1 = lrelu_backward(t.a1, gh1);
  Tensor3 gx0 = conv1.backward(t.x0, t.cols1, ga1);
  return resize_to_disc_input_adjoint(gx0.channels[0], t.input_resolution);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size < 1 || steps_per_epoch < 1 || epochs < 1)
    throw std::invalid_argument("TrainConfig: counts must be positive");
  if (!(lr > 0.0) || !(decay_factor > 0.0))
    throw std::invalid_argument("TrainConfig: learning rate and decay must be positive");
  if (!std::is_sorted(decay_epochs.begin(), decay_epochs.end()))
    throw std::invalid_argument("TrainConfig: decay epochs must be increasing");
  if (resolution < 16 || !is_pow2(resolution))
    throw std::invalid_argument("TrainConfig: resolution must be a power of two >= 16");
}

double TrainConfig::lr_at_epoch(int epoch) const {
  double value = lr;
  for (int d : decay_epochs)
    if (d <= epoch) value *= decay_factor;
  return value;
}

GanState::GanState(const TrainConfig& c)
    : cfg(c), gen(c.gen_arch), disc(c.disc_arch), rng(c.seed) {
  cfg.validate();
  gen.init(rng);
  disc.init(rng);
  adam_g.lr = adam_d.lr = cfg.lr;
  adam_g.beta1 = adam_d.beta1 = cfg.beta1;
  adam_g.beta2 = adam_d.beta2 = cfg.beta2;
  auto gp = gen.params();
  auto dp = disc.params();
  adam_g.attach(gp);
  adam_d.attach(dp);
}

RealSource handmade_real_source(int resolution, const LabelDistribution& labels) {
  return [resolution, labels](int count, Rng& rng) {
    HandmadeConfig cfg;
    std::vector<Imaged> batch;
    batch.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
      const TagLabel label = sample_label(rng, resolution, labels);
      const RenderOutput out = render(label, resolution);
      batch.push_back(apply_handmade(out, cfg, rng, label, resolution));
    }
    return batch;
  };
}

StepLosses gan_step(GanState& state, const std::vector<Imaged>& real_batch) {
  const int batch = static_cast<int>(real_batch.size());
  if (batch == 0) throw std::invalid_argument("gan_step: empty real batch");
  const double inv_batch = 1.0 / batch;
  StepLosses losses;

  // Fakes for the discriminator update (generator held fixed).
  std::vector<RenderOutput> renders;
  std::vector<Imaged> fakes;
  renders.reserve(static_cast<size_t>(batch));
  fakes.reserve(static_cast<size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    const TagLabel label = sample_label(state.rng, state.cfg.resolution, state.cfg.labels);
    renders.push_back(render(label, state.cfg.resolution));
    VectorXd z(state.gen.arch.n_z);
    for (Index k = 0; k < z.size(); ++k) z(k) = state.rng.uniform(-1.0, 1.0);
    fakes.push_back(state.gen.forward(z, renders.back()).image);
  }

  state.disc.zero_grad();
  for (int i = 0; i < batch; ++i) {
    DiscTape tape;
    const double score = state.disc.forward(real_batch[static_cast<size_t>(i)], &tape);
    losses.d_loss += -log_sigmoid(tape.logit) * inv_batch;
    state.disc.backward(tape, (score - 1.0) * inv_batch);
  }
  for (int i = 0; i < batch; ++i) {
    DiscTape tape;
    const double score = state.disc.forward(fakes[static_cast<size_t>(i)], &tape);
    losses.d_loss += -log_sigmoid(-tape.logit) * inv_batch;
    state.disc.backward(tape, score * inv_batch);
  }
  auto dp = state.disc.params();
  state.adam_d.step(dp);

  // Generator update on fresh latents, same labels/renders.
  state.gen.zero_grad();
  state.disc.zero_grad();
  for (int i = 0; i < batch; ++i) {
    VectorXd z(state.gen.arch.n_z);
    for (Index k = 0; k < z.size(); ++k) z(k) = state.rng.uniform(-1.0, 1.0);
    GenTape gtape;
    const auto gen_out = state.gen.forward(z, renders[static_cast<size_t>(i)], &gtape);
    DiscTape dtape;
    const double score = state.disc.forward(gen_out.image, &dtape);
    losses.g_loss += (-log_sigmoid(dtape.logit) + gen_out.penalty) * inv_batch;
    losses.penalty += gen_out.penalty * inv_batch;
    const Imaged grad_image = state.disc.backward(dtape, (score - 1.0) * inv_batch);
    state.gen.backward(gtape, grad_image, inv_batch);
  }
  auto gp = state.gen.params();
  state.adam_g.step(gp);

  ++state.step;
  if (!std::isfinite(losses.d_loss) || !std::isfinite(losses.g_loss) ||
      !std::isfinite(losses.penalty)) {
    std::ostringstream msg;
    msg << "gan_step: non-finite loss at step " << state.step << " (D=" << losses.d_loss
        << " G=" << losses.g_loss << " penalty=" << losses.penalty << ")";
    throw std::runtime_error(msg.str());
  }
  return losses;
}

std::vector<EpochStats> train(GanState& state, const RealSource& real_source,
                              const std::function<void(const EpochStats&)>& on_epoch) {
  state.cfg.validate();
  std::vector<EpochStats> history;
  history.reserve(static_cast<size_t>(state.cfg.epochs));
  for (int epoch = 1; epoch <= state.cfg.epochs; ++epoch) {
    const double lr = state.cfg.lr_at_epoch(epoch);
    state.adam_g.lr = state.adam_d.lr = lr;
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    for (int s = 0; s < state.cfg.steps_per_epoch; ++s) {
      const auto real = real_source(state.cfg.batch_size, state.rng);
      const StepLosses losses = gan_step(state, real);
      stats.d_loss += losses.d_loss;
      stats.g_loss += losses.g_loss;
      stats.penalty += losses.penalty;
    }
    stats.d_loss /= state.cfg.steps_per_epoch;
    stats.g_loss /= state.cfg.steps_per_epoch;
    stats.penalty /= state.cfg.steps_per_epoch;
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

std::vector<size_t> score_filter(const std::vector<double>& scores, double quantile) {
  if (quantile < 0.0 || quantile > 1.0)
    throw std::invalid_argument("score_filter: quantile must be in [0, 1]");
  const size_t n = scores.size();
  const size_t keep = static_cast<size_t>(std::ceil((1.0 - quantile) * static_cast<double>(n)));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<double> score_images(const DiscriminatorNet& disc, const std::vector<Imaged>& images) {
  std::vector<double> scores;
  scores.reserve(images.size());
  for (const auto& img : images) scores.push_back(disc.forward(img));
  return scores;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'S', 'Y', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto len = read_pod<std::uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

void write_params(std::ostream& out, const std::vector<ParamRef>& params) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_string(out, p.name);
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(p.size));
    out.write(reinterpret_cast<const char*>(p.value),
              static_cast<std::streamsize>(p.size * sizeof(double)));
  }
}

void read_params(std::istream& in, const std::vector<ParamRef>& params) {
  const auto count = read_pod<std::uint32_t>(in);
  if (count != params.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (const auto& p : params) {
    const std::string name = read_string(in);
    const auto size = read_pod<std::uint64_t>(in);
    if (name != p.name || size != static_cast<std::uint64_t>(p.size))
      throw std::runtime_error("checkpoint: parameter layout mismatch at " + name);
    in.read(reinterpret_cast<char*>(p.value),
            static_cast<std::streamsize>(p.size * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
  }
}

void write_adam(std::ostream& out, const Adam& adam) {
  write_pod<std::int64_t>(out, adam.step_count());
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(adam.m().size()));
  for (size_t k = 0; k < adam.m().size(); ++k) {
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(adam.m()[k].size()));
    out.write(reinterpret_cast<const char*>(adam.m()[k].data()),
              static_cast<std::streamsize>(adam.m()[k].size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(adam.v()[k].data()),
              static_cast<std::streamsize>(adam.v()[k].size() * sizeof(double)));
  }
}

void read_adam(std::istream& in, Adam& adam) {
  const auto step_count = read_pod<std::int64_t>(in);
  const auto n = read_pod<std::uint32_t>(in);
  std::vector<VectorXd> ms, vs;
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto size = read_pod<std::uint64_t>(in);
    VectorXd m(static_cast<Index>(size)), v(static_cast<Index>(size));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(size * sizeof(double)));
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(size * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    ms.push_back(std::move(m));
    vs.push_back(std::move(v));
  }
  adam.restore(step_count, std::move(ms), std::move(vs));
}

}  // namespace

void save_checkpoint(const GanState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);

  const TrainConfig& c = state.cfg;
  write_pod<std::int32_t>(out, c.batch_size);
  write_pod<std::int32_t>(out, c.steps_per_epoch);
  write_pod<std::int32_t>(out, c.epochs);
  write_pod<double>(out, c.lr);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.decay_epochs.size()));
  for (int e : c.decay_epochs) write_pod<std::int32_t>(out, e);
  write_pod<double>(out, c.decay_factor);
  write_pod<double>(out, c.beta1);
  write_pod<double>(out, c.beta2);
  write_pod<std::uint64_t>(out, c.seed);
  write_pod<std::int32_t>(out, c.resolution);
  for (Index v : {c.gen_arch.n_z, c.gen_arch.trunk, c.gen_arch.blur_hidden, c.gen_arch.light_hidden,
                  c.gen_arch.bg_hidden, c.gen_arch.detail_hidden, c.gen_arch.field,
                  c.gen_arch.detail_field})
    write_pod<std::int64_t>(out, v);
  for (Index v : {c.disc_arch.c1, c.disc_arch.c2, c.disc_arch.c3, c.disc_arch.fc})
    write_pod<std::int64_t>(out, v);

  write_pod<std::uint64_t>(out, state.step);
  write_pod<std::uint64_t>(out, state.rng.state());

  // const_cast: params() is non-const only because it hands out grad pointers
  auto& mutable_state = const_cast<GanState&>(state);
  write_params(out, mutable_state.gen.params());
  write_params(out, mutable_state.disc.params());
  write_adam(out, state.adam_g);
  write_adam(out, state.adam_d);
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

GanState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a rendersynth checkpoint: " + path);
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw std::runtime_error("unsupported checkpoint version: " + path);

  TrainConfig c;
  c.batch_size = read_pod<std::int32_t>(in);
  c.steps_per_epoch = read_pod<std::int32_t>(in);
  c.epochs = read_pod<std::int32_t>(in);
  c.lr = read_pod<double>(in);
  const auto n_decay = read_pod<std::uint32_t>(in);
  c.decay_epochs.clear();
  for (std::uint32_t i = 0; i < n_decay; ++i) c.decay_epochs.push_back(read_pod<std::int32_t>(in));
  c.decay_factor = read_pod<double>(in);
  c.beta1 = read_pod<double>(in);
  c.beta2 = read_pod<double>(in);
  c.seed = read_pod<std::uint64_t>(in);
  c.resolution = read_pod<std::int32_t>(in);
  for (Index* v : {&c.gen_arch.n_z, &c.gen_arch.trunk, &c.gen_arch.blur_hidden,
                   &c.gen_arch.light_hidden, &c.gen_arch.bg_hidden, &c.gen_arch.detail_hidden,
                   &c.gen_arch.field, &c.gen_arch.detail_field})
    *v = static_cast<Index>(read_pod<std::int64_t>(in));
  for (Index* v : {&c.disc_arch.c1, &c.disc_arch.c2, &c.disc_arch.c3, &c.disc_arch.fc})
    *v = static_cast<Index>(read_pod<std::int64_t>(in));

  GanState state(c);
  state.step = read_pod<std::uint64_t>(in);
  state.rng.set_state(read_pod<std::uint64_t>(in));
  read_params(in, state.gen.params());
  read_params(in, state.disc.params());
  read_adam(in, state.adam_g);
  read_adam(in, state.adam_d);
  return state;
}

}  // namespace rendersynth
