#pragma once

#include <Eigen/Core>

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace rendersynth {

/// Single-channel image: row-major dense array, row 0 = top scanline.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Imaged = Image<double>;
using Imagef = Image<float>;

using Eigen::Index;

inline bool is_pow2(Index n) { return n > 0 && (n & (n - 1)) == 0; }

/// Mirror an out-of-range index back into [0, n), repeating the edge sample
/// (symmetric extension). Folds as often as needed for short axes.
inline Index reflect_index(Index i, Index n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

namespace detail {

// Source coordinate and blend weight for one axis of the x2 bilinear
// upsample (align-corners-false convention, edges clamped).
inline void up2_taps(Index i, Index n_src, Index& i0, Index& i1, double& t) {
  const double u = (static_cast<double>(i) + 0.5) * 0.5 - 0.5;
  const double fl = std::floor(u);
  i0 = static_cast<Index>(fl);
  t = u - fl;
  i1 = i0 + 1;
  if (i0 < 0) {
    i0 = i1 = 0;
    t = 0.0;
  } else if (i1 > n_src - 1) {
    i0 = i1 = n_src - 1;
    t = 0.0;
  }
}

}  // namespace detail

/// Doubles each image dimension with bilinear interpolation. Constants map to
/// constants exactly; a 1x1 source yields a constant 2x2 output.
template <typename Scalar>
Image<Scalar> bilinear_upsample2(const Image<Scalar>& src) {
  const Index rs = src.rows(), cs = src.cols();
  Image<Scalar> out(2 * rs, 2 * cs);
  for (Index i = 0; i < out.rows(); ++i) {
    Index r0, r1;
    double tr;
    detail::up2_taps(i, rs, r0, r1, tr);
    for (Index j = 0; j < out.cols(); ++j) {
      Index c0, c1;
      double tc;
      detail::up2_taps(j, cs, c0, c1, tc);
      const double v = (1.0 - tr) * ((1.0 - tc) * src(r0, c0) + tc * src(r0, c1)) +
                       tr * ((1.0 - tc) * src(r1, c0) + tc * src(r1, c1));
      out(i, j) = static_cast<Scalar>(v);
    }
  }
  return out;
}

/// Adjoint of bilinear_upsample2: scatters output-space gradients back onto a
/// (rows x cols) source grid.
template <typename Scalar>
Image<Scalar> bilinear_upsample2_adjoint(const Image<Scalar>& grad_out, Index src_rows,
                                         Index src_cols) {
  assert(grad_out.rows() == 2 * src_rows && grad_out.cols() == 2 * src_cols);
  Image<Scalar> g = Image<Scalar>::Zero(src_rows, src_cols);
  for (Index i = 0; i < grad_out.rows(); ++i) {
    Index r0, r1;
    double tr;
    detail::up2_taps(i, src_rows, r0, r1, tr);
    for (Index j = 0; j < grad_out.cols(); ++j) {
      Index c0, c1;
      double tc;
      detail::up2_taps(j, src_cols, c0, c1, tc);
      const Scalar gv = grad_out(i, j);
      g(r0, c0) += static_cast<Scalar>((1.0 - tr) * (1.0 - tc)) * gv;
      g(r0, c1) += static_cast<Scalar>((1.0 - tr) * tc) * gv;
      g(r1, c0) += static_cast<Scalar>(tr * (1.0 - tc)) * gv;
      g(r1, c1) += static_cast<Scalar>(tr * tc) * gv;
    }
  }
  return g;
}

/// Nearest-neighbor x2 upsample. Kept alongside the bilinear version because
/// it makes per-pixel pyramid variance exactly the sum of squared weights.
template <typename Scalar>
Image<Scalar> nearest_upsample2(const Image<Scalar>& src) {
  Image<Scalar> out(2 * src.rows(), 2 * src.cols());
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = src(i / 2, j / 2);
  return out;
}

/// 2x2 average pooling; halves each dimension.
template <typename Scalar>
Image<Scalar> avgpool2(const Image<Scalar>& src) {
  assert(src.rows() % 2 == 0 && src.cols() % 2 == 0);
  Image<Scalar> out(src.rows() / 2, src.cols() / 2);
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j)
      out(i, j) = static_cast<Scalar>(0.25) * (src(2 * i, 2 * j) + src(2 * i, 2 * j + 1) +
                                               src(2 * i + 1, 2 * j) + src(2 * i + 1, 2 * j + 1));
  return out;
}

template <typename Scalar>
Image<Scalar> avgpool2_adjoint(const Image<Scalar>& grad_out) {
  Image<Scalar> g(2 * grad_out.rows(), 2 * grad_out.cols());
  for (Index i = 0; i < g.rows(); ++i)
    for (Index j = 0; j < g.cols(); ++j)
      g(i, j) = static_cast<Scalar>(0.25) * grad_out(i / 2, j / 2);
  return g;
}

/// Mean over equal rectangular blocks; the (grid_h x grid_w) result is the
/// pooled-feature grid used by the reference decoder and net conditioning.
template <typename Scalar>
Image<Scalar> block_mean_grid(const Image<Scalar>& src, Index grid_h, Index grid_w) {
  if (grid_h <= 0 || grid_w <= 0 || src.rows() % grid_h != 0 || src.cols() % grid_w != 0)
    throw std::invalid_argument("block_mean_grid: image not divisible into the requested grid");
  const Index bh = src.rows() / grid_h, bw = src.cols() / grid_w;
  Image<Scalar> out(grid_h, grid_w);
  for (Index i = 0; i < grid_h; ++i)
    for (Index j = 0; j < grid_w; ++j)
      out(i, j) = src.block(i * bh, j * bw, bh, bw).mean();
  return out;
}

/// Repeated bilinear x2 until the (square, power-of-two) target size.
template <typename Scalar>
Image<Scalar> upsample_pow2_to(Image<Scalar> src, Index size) {
  assert(src.rows() == src.cols() && is_pow2(src.rows()) && is_pow2(size) && size >= src.rows());
  while (src.rows() < size) src = bilinear_upsample2(src);
  return src;
}

template <typename Scalar>
Image<Scalar> upsample_pow2_to_adjoint(Image<Scalar> grad_out, Index src_size) {
  assert(grad_out.rows() >= src_size);
  while (grad_out.rows() > src_size)
    grad_out = bilinear_upsample2_adjoint(grad_out, grad_out.rows() / 2, grad_out.cols() / 2);
  return grad_out;
}

/// Repeated 2x2 average pooling down to the target size.
template <typename Scalar>
Image<Scalar> downsample_pow2_to(Image<Scalar> src, Index size) {
  assert(is_pow2(size) && size <= src.rows());
  while (src.rows() > size) src = avgpool2(src);
  return src;
}

template <typename Scalar>
Image<Scalar> downsample_pow2_to_adjoint(Image<Scalar> grad_out, Index src_size) {
  while (grad_out.rows() < src_size) grad_out = avgpool2_adjoint(grad_out);
  return grad_out;
}

}  // namespace rendersynth
