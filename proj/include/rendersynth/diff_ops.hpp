#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rendersynth/image.hpp"

namespace rendersynth {

// Fixed smoothing scales of the augmentation cascade.
inline constexpr double kBlurSigma = 2.0;      // phi_blur cap
inline constexpr double kLightingSigma = 4.0;  // smoothing of s_w, s_b, t
inline constexpr double kDetailSigma = 3.5;    // highpass blur
inline constexpr int kHighpassRepeats = 3;

// ---------------------------------------------------------------------------
// Gaussian blur (separable, symmetric-reflect borders) and its exact adjoint.
// ---------------------------------------------------------------------------

/// Normalized 1D kernel truncated at radius ceil(3*sigma).
template <typename Scalar>
std::vector<Scalar> gaussian_kernel(Scalar sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * static_cast<double>(sigma)));
  std::vector<Scalar> k(static_cast<size_t>(2 * radius + 1));
  Scalar sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const Scalar v = std::exp(static_cast<Scalar>(-0.5) * i * i / (sigma * sigma));
    k[static_cast<size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace detail {

template <typename Scalar>
Image<Scalar> conv1d_rows(const Image<Scalar>& x, const std::vector<Scalar>& k) {
  const Index radius = static_cast<Index>(k.size() / 2);
  Image<Scalar> out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      Scalar acc = 0;
      for (Index m = -radius; m <= radius; ++m)
        acc += k[static_cast<size_t>(m + radius)] * x(i, reflect_index(j + m, x.cols()));
      out(i, j) = acc;
    }
  }
  return out;
}

template <typename Scalar>
Image<Scalar> conv1d_cols(const Image<Scalar>& x, const std::vector<Scalar>& k) {
  const Index radius = static_cast<Index>(k.size() / 2);
  Image<Scalar> out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      Scalar acc = 0;
      for (Index m = -radius; m <= radius; ++m)
        acc += k[static_cast<size_t>(m + radius)] * x(reflect_index(i + m, x.rows()), j);
      out(i, j) = acc;
    }
  }
  return out;
}

// Adjoints scatter through the same reflected index map, which is what makes
// gradient checks pass at the borders.
template <typename Scalar>
Image<Scalar> conv1d_rows_adjoint(const Image<Scalar>& g, const std::vector<Scalar>& k) {
  const Index radius = static_cast<Index>(k.size() / 2);
  Image<Scalar> out = Image<Scalar>::Zero(g.rows(), g.cols());
  for (Index i = 0; i < g.rows(); ++i)
    for (Index j = 0; j < g.cols(); ++j)
      for (Index m = -radius; m <= radius; ++m)
        out(i, reflect_index(j + m, g.cols())) += k[static_cast<size_t>(m + radius)] * g(i, j);
  return out;
}

template <typename Scalar>
Image<Scalar> conv1d_cols_adjoint(const Image<Scalar>& g, const std::vector<Scalar>& k) {
  const Index radius = static_cast<Index>(k.size() / 2);
  Image<Scalar> out = Image<Scalar>::Zero(g.rows(), g.cols());
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < g.rows(); ++i)
      for (Index m = -radius; m <= radius; ++m)
        out(reflect_index(i + m, g.rows()), j) += k[static_cast<size_t>(m + radius)] * g(i, j);
  return out;
}

}  // namespace detail

template <typename Scalar>
Image<Scalar> gaussian_blur(const Image<Scalar>& x, Scalar sigma) {
  if (sigma < 0) throw std::invalid_argument("gaussian_blur: sigma must be non-negative");
  if (sigma == 0) return x;
  const auto k = gaussian_kernel(sigma);
  return detail::conv1d_cols(detail::conv1d_rows(x, k), k);
}

/// Adjoint of gaussian_blur under the same kernel and border handling.
template <typename Scalar>
Image<Scalar> gaussian_blur_adjoint(const Image<Scalar>& grad, Scalar sigma) {
  if (sigma == 0) return grad;
  const auto k = gaussian_kernel(sigma);
  return detail::conv1d_rows_adjoint(detail::conv1d_cols_adjoint(grad, k), k);
}

// ---------------------------------------------------------------------------
// phi_blur
// ---------------------------------------------------------------------------

template <typename Scalar>
struct PhiBlurTape {
  Image<Scalar> x;
  Image<Scalar> blurred;
  Scalar alpha = 0;
};

/// (1 - alpha) * x + alpha * b_sigma(x). The rearrangement keeps alpha = 0 an
/// exact identity.
template <typename Scalar>
Image<Scalar> phi_blur(const Image<Scalar>& x, Scalar alpha, PhiBlurTape<Scalar>* tape = nullptr,
                       Scalar sigma = static_cast<Scalar>(kBlurSigma)) {
  Image<Scalar> blurred = gaussian_blur(x, sigma);
  Image<Scalar> out = (1 - alpha) * x + alpha * blurred;
  if (tape) {
    tape->x = x;
    tape->blurred = std::move(blurred);
    tape->alpha = alpha;
  }
  return out;
}

template <typename Scalar>
Image<Scalar> phi_blur_vjp_x(const PhiBlurTape<Scalar>& tape, const Image<Scalar>& grad,
                             Scalar sigma = static_cast<Scalar>(kBlurSigma)) {
  return (1 - tape.alpha) * grad + tape.alpha * gaussian_blur_adjoint(grad, sigma);
}

template <typename Scalar>
Scalar phi_blur_vjp_alpha(const PhiBlurTape<Scalar>& tape, const Image<Scalar>& grad) {
  return (grad * (tape.blurred - tape.x)).sum();
}

// ---------------------------------------------------------------------------
// phi_lighting
// ---------------------------------------------------------------------------

template <typename Scalar>
struct PhiLightingTape {
  Image<Scalar> x;
  Image<Scalar> w;  // white mask of x, treated as constant
  Image<Scalar> bsw, bsb;
};

/// x * b(s_w) * W(x) + x * b(s_b) * (1 - W(x)) + b(t), with W thresholded at 0
/// and excluded from differentiation.
template <typename Scalar>
Image<Scalar> phi_lighting(const Image<Scalar>& x, const Image<Scalar>& s_w,
                           const Image<Scalar>& s_b, const Image<Scalar>& t,
                           PhiLightingTape<Scalar>* tape = nullptr,
                           Scalar sigma = static_cast<Scalar>(kLightingSigma)) {
  if (s_w.rows() != x.rows() || s_b.rows() != x.rows() || t.rows() != x.rows() ||
      s_w.cols() != x.cols() || s_b.cols() != x.cols() || t.cols() != x.cols())
    throw std::invalid_argument("phi_lighting: parameter shape mismatch");
  Image<Scalar> w = (x > 0).template cast<Scalar>();
  Image<Scalar> bsw = gaussian_blur(s_w, sigma);
  Image<Scalar> bsb = gaussian_blur(s_b, sigma);
  Image<Scalar> out = x * bsw * w + x * bsb * (1 - w) + gaussian_blur(t, sigma);
  if (tape) {
    tape->x = x;
    tape->w = std::move(w);
    tape->bsw = std::move(bsw);
    tape->bsb = std::move(bsb);
  }
  return out;
}

template <typename Scalar>
struct PhiLightingGrads {
  Image<Scalar> x, s_w, s_b, t;
};

template <typename Scalar>
PhiLightingGrads<Scalar> phi_lighting_vjp(const PhiLightingTape<Scalar>& tape,
                                          const Image<Scalar>& grad,
                                          Scalar sigma = static_cast<Scalar>(kLightingSigma)) {
  PhiLightingGrads<Scalar> g;
  g.x = grad * (tape.bsw * tape.w + tape.bsb * (1 - tape.w));
  g.s_w = gaussian_blur_adjoint<Scalar>(grad * tape.x * tape.w, sigma);
  g.s_b = gaussian_blur_adjoint<Scalar>(grad * tape.x * (1 - tape.w), sigma);
  g.t = gaussian_blur_adjoint(grad, sigma);
  return g;
}

// ---------------------------------------------------------------------------
// phi_bg
// ---------------------------------------------------------------------------

/// x * (1 - B) + d * B for a binary mask B; foreground pixels are copied
/// bit-exactly from x.
template <typename Scalar>
Image<Scalar> phi_bg(const Image<Scalar>& x, const Image<Scalar>& bg_mask,
                     const Image<Scalar>& d) {
  if (bg_mask.rows() != x.rows() || bg_mask.cols() != x.cols() || d.rows() != x.rows() ||
      d.cols() != x.cols())
    throw std::invalid_argument("phi_bg: shape mismatch");
  return (bg_mask != 0).select(d, x);
}

template <typename Scalar>
Image<Scalar> phi_bg_vjp_x(const Image<Scalar>& bg_mask, const Image<Scalar>& grad) {
  return grad * (1 - bg_mask);
}

template <typename Scalar>
Image<Scalar> phi_bg_vjp_d(const Image<Scalar>& bg_mask, const Image<Scalar>& grad) {
  return grad * bg_mask;
}

// ---------------------------------------------------------------------------
// highpass and phi_detail
// ---------------------------------------------------------------------------

/// H(H(H(d))) with H(v) = v - b_3.5(v); the repetition sharpens the cutoff.
template <typename Scalar>
Image<Scalar> highpass(const Image<Scalar>& d, Scalar sigma = static_cast<Scalar>(kDetailSigma),
                       int repeats = kHighpassRepeats) {
  Image<Scalar> v = d;
  for (int r = 0; r < repeats; ++r) v = (v - gaussian_blur(v, sigma)).eval();
  return v;
}

/// Adjoint of highpass (linear, self-adjoint structure up to the blur adjoint).
template <typename Scalar>
Image<Scalar> highpass_adjoint(const Image<Scalar>& grad,
                               Scalar sigma = static_cast<Scalar>(kDetailSigma),
                               int repeats = kHighpassRepeats) {
  Image<Scalar> g = grad;
  for (int r = 0; r < repeats; ++r) g = (g - gaussian_blur_adjoint(g, sigma)).eval();
  return g;
}

/// x + highpass(d). The result is intentionally not clamped to [-1, 1].
template <typename Scalar>
Image<Scalar> phi_detail(const Image<Scalar>& x, const Image<Scalar>& d) {
  if (d.rows() != x.rows() || d.cols() != x.cols())
    throw std::invalid_argument("phi_detail: shape mismatch");
  return x + highpass(d);
}

template <typename Scalar>
Image<Scalar> phi_detail_vjp_d(const Image<Scalar>& grad) {
  return highpass_adjoint(grad);
}

// ---------------------------------------------------------------------------
// Clip layer
// ---------------------------------------------------------------------------

struct ClipConfig {
  double lo = 0.0;
  double hi = 1.0;
  double gamma = 15.0;
};

template <typename Scalar>
struct Clipped {
  Image<Scalar> value;
  Scalar penalty = 0;
};

/// Elementwise clip to [lo, hi] plus gamma-weighted L1 distance to the
/// interval. Inside the interval the penalty and its gradient are exactly 0.
template <typename Scalar>
Clipped<Scalar> clip_with_penalty(const Image<Scalar>& v, const ClipConfig& cfg) {
  if (!(cfg.lo < cfg.hi) || !(cfg.gamma > 0))
    throw std::invalid_argument("clip_with_penalty: invalid config");
  const Scalar lo = static_cast<Scalar>(cfg.lo), hi = static_cast<Scalar>(cfg.hi);
  Clipped<Scalar> out;
  out.value = v.min(hi).max(lo);
  out.penalty = static_cast<Scalar>(cfg.gamma) *
                ((lo - v).max(Scalar(0)) + (v - hi).max(Scalar(0))).sum();
  return out;
}

/// VJP of the clipped value (straight-through inside the interval) plus the
/// penalty contribution, taken with upstream weight `grad_penalty`.
template <typename Scalar>
Image<Scalar> clip_vjp(const Image<Scalar>& v, const ClipConfig& cfg, const Image<Scalar>& grad_value,
                       Scalar grad_penalty) {
  const Scalar lo = static_cast<Scalar>(cfg.lo), hi = static_cast<Scalar>(cfg.hi);
  const Scalar gamma = static_cast<Scalar>(cfg.gamma);
  Image<Scalar> inside = ((v >= lo) && (v <= hi)).template cast<Scalar>();
  Image<Scalar> sign = (v > hi).template cast<Scalar>() - (v < lo).template cast<Scalar>();
  return grad_value * inside + grad_penalty * gamma * sign;
}

// ---------------------------------------------------------------------------
// Composed pipeline
// ---------------------------------------------------------------------------

/// Per-stage clip bounds; gamma = 15 everywhere by default.
struct ComposeBounds {
  ClipConfig alpha{0.0, 1.0, 15.0};
  ClipConfig scale{0.10, 1.0, 15.0};   // s_w and s_b
  ClipConfig shift{-0.5, 0.5, 15.0};   // t
  ClipConfig background{-1.0, 1.0, 15.0};
  ClipConfig detail{-2.0, 2.0, 15.0};
};

/// Raw (pre-clip) augmentation parameters, all at image resolution.
template <typename Scalar>
struct ComposeParams {
  Scalar alpha = 0;
  Image<Scalar> s_w, s_b, t;
  Image<Scalar> bg;
  Image<Scalar> detail;
};

/// Parameters that leave every stage at its fixpoint for the given render.
template <typename Scalar>
ComposeParams<Scalar> identity_params(const Image<Scalar>& image) {
  ComposeParams<Scalar> p;
  p.alpha = 0;
  p.s_w = Image<Scalar>::Constant(image.rows(), image.cols(), 1);
  p.s_b = Image<Scalar>::Constant(image.rows(), image.cols(), 1);
  p.t = Image<Scalar>::Zero(image.rows(), image.cols());
  p.bg = image;
  p.detail = Image<Scalar>::Zero(image.rows(), image.cols());
  return p;
}

template <typename Scalar>
struct ComposeTape {
  ComposeParams<Scalar> raw;
  ComposeParams<Scalar> clipped;
  Image<Scalar> bg_mask;
  PhiBlurTape<Scalar> blur;
  PhiLightingTape<Scalar> lighting;
  ComposeBounds bounds;
};

template <typename Scalar>
struct ComposeResult {
  Image<Scalar> image;
  Scalar penalty = 0;
};

/// Clips each parameter, sums the penalties, and applies
/// phi_detail . phi_bg . phi_lighting . phi_blur to the model image.
template <typename Scalar>
ComposeResult<Scalar> compose(const Image<Scalar>& model_image, const Image<Scalar>& bg_mask,
                              const ComposeParams<Scalar>& params,
                              const ComposeBounds& bounds = {},
                              ComposeTape<Scalar>* tape = nullptr) {
  Image<Scalar> alpha_img(1, 1);
  alpha_img(0, 0) = params.alpha;
  auto c_alpha = clip_with_penalty(alpha_img, bounds.alpha);
  auto c_sw = clip_with_penalty(params.s_w, bounds.scale);
  auto c_sb = clip_with_penalty(params.s_b, bounds.scale);
  auto c_t = clip_with_penalty(params.t, bounds.shift);
  auto c_bg = clip_with_penalty(params.bg, bounds.background);
  auto c_d = clip_with_penalty(params.detail, bounds.detail);

  ComposeResult<Scalar> result;
  result.penalty =
      c_alpha.penalty + c_sw.penalty + c_sb.penalty + c_t.penalty + c_bg.penalty + c_d.penalty;

  PhiBlurTape<Scalar> blur_tape;
  PhiLightingTape<Scalar> light_tape;
  Image<Scalar> x1 = phi_blur(model_image, c_alpha.value(0, 0), &blur_tape);
  Image<Scalar> x2 = phi_lighting(x1, c_sw.value, c_sb.value, c_t.value, &light_tape);
  Image<Scalar> x3 = phi_bg(x2, bg_mask, c_bg.value);
  result.image = phi_detail(x3, c_d.value);

  if (tape) {
    tape->raw = params;
    tape->clipped.alpha = c_alpha.value(0, 0);
    tape->clipped.s_w = std::move(c_sw.value);
    tape->clipped.s_b = std::move(c_sb.value);
    tape->clipped.t = std::move(c_t.value);
    tape->clipped.bg = std::move(c_bg.value);
    tape->clipped.detail = std::move(c_d.value);
    tape->bg_mask = bg_mask;
    tape->blur = std::move(blur_tape);
    tape->lighting = std::move(light_tape);
    tape->bounds = bounds;
  }
  return result;
}

/// Gradients with respect to the raw (pre-clip) parameters.
template <typename Scalar>
struct ComposeGrads {
  Scalar alpha = 0;
  Image<Scalar> s_w, s_b, t, bg, detail;
};

/// Backward pass through the whole cascade, combining the image path
/// (weighted by grad_image) and the penalty path (weighted by grad_penalty).
template <typename Scalar>
ComposeGrads<Scalar> compose_vjp(const ComposeTape<Scalar>& tape, const Image<Scalar>& grad_image,
                                 Scalar grad_penalty) {
  ComposeGrads<Scalar> g;

  // phi_detail
  Image<Scalar> gx = grad_image;  // d(out)/d(x3) = identity
  Image<Scalar> g_detail_clipped = phi_detail_vjp_d(grad_image);
  g.detail = clip_vjp(tape.raw.detail, tape.bounds.detail, g_detail_clipped, grad_penalty);

  // phi_bg
  Image<Scalar> g_bg_clipped = phi_bg_vjp_d(tape.bg_mask, gx);
  g.bg = clip_vjp(tape.raw.bg, tape.bounds.background, g_bg_clipped, grad_penalty);
  gx = phi_bg_vjp_x(tape.bg_mask, gx);

  // phi_lighting
  auto lg = phi_lighting_vjp(tape.lighting, gx);
  g.s_w = clip_vjp(tape.raw.s_w, tape.bounds.scale, lg.s_w, grad_penalty);
  g.s_b = clip_vjp(tape.raw.s_b, tape.bounds.scale, lg.s_b, grad_penalty);
  g.t = clip_vjp(tape.raw.t, tape.bounds.shift, lg.t, grad_penalty);
  gx = std::move(lg.x);

  // phi_blur
  Image<Scalar> ga(1, 1);
  ga(0, 0) = phi_blur_vjp_alpha(tape.blur, gx);
  Image<Scalar> raw_alpha(1, 1);
  raw_alpha(0, 0) = tape.raw.alpha;
  g.alpha = clip_vjp(raw_alpha, tape.bounds.alpha, ga, grad_penalty)(0, 0);

  return g;
}

}  // namespace rendersynth
