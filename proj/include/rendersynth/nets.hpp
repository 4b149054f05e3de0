#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "rendersynth/image.hpp"
#include "rendersynth/rng.hpp"

namespace rendersynth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Multi-channel feature map (channels of equal-sized planes).
struct Tensor3 {
  std::vector<Imaged> channels;

  Index rows() const { return channels.empty() ? 0 : channels.front().rows(); }
  Index cols() const { return channels.empty() ? 0 : channels.front().cols(); }
  Index size() const { return static_cast<Index>(channels.size()) * rows() * cols(); }
};

/// Named view of one parameter tensor and its gradient accumulator. The
/// optimizer and checkpoint code only ever see these.
struct ParamRef {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  Index size = 0;
};

struct Dense {
  MatrixXd w;
  VectorXd b;
  MatrixXd gw;
  VectorXd gb;

  Dense() = default;
  Dense(Index out, Index in) { resize(out, in); }
  void resize(Index out, Index in);

  /// He-style init scaled for the fan-in; biases zero.
  void init(Rng& rng, double gain = 1.0);
  /// Zero weights with a fixed bias; used for output heads that must start
  /// at a stage's identity point.
  void init_head(double bias_value);

  VectorXd forward(const VectorXd& x) const { return (w * x.matrix()).array() + b.array(); }
  /// Accumulates gw/gb and returns the gradient w.r.t. x.
  VectorXd backward(const VectorXd& x, const VectorXd& gy);

  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

VectorXd relu(const VectorXd& x);
VectorXd relu_backward(const VectorXd& x, const VectorXd& gy);
VectorXd lrelu(const VectorXd& x, double slope = 0.2);
VectorXd lrelu_backward(const VectorXd& x, const VectorXd& gy, double slope = 0.2);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
/// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

/// Strided 2D convolution with zero padding, stored as an im2col GEMM.
struct Conv2d {
  Index in_channels = 0, out_channels = 0, ksize = 3, stride = 1, pad = 1;
  MatrixXd w;   // out_channels x (in_channels * k * k)
  VectorXd b;
  MatrixXd gw;
  VectorXd gb;

  Conv2d() = default;
  Conv2d(Index cin, Index cout, Index k, Index s, Index p);

  void init(Rng& rng, double gain = 1.0);
  Index out_size(Index in) const { return (in + 2 * pad - ksize) / stride + 1; }

  /// im2col patch matrix for one input; kept by callers for the backward pass.
  MatrixXd unfold(const Tensor3& x) const;
  Tensor3 forward(const Tensor3& x, MatrixXd* cols_out = nullptr) const;
  /// Needs the unfold matrix of the same input; returns grad w.r.t. x.
  Tensor3 backward(const Tensor3& x, const MatrixXd& cols, const Tensor3& gy);

  void zero_grad();
  void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

Tensor3 lrelu(const Tensor3& x, double slope = 0.2);
Tensor3 lrelu_backward(const Tensor3& x, const Tensor3& gy, double slope = 0.2);

VectorXd flatten(const Tensor3& x);
Tensor3 unflatten(const VectorXd& v, Index channels, Index rows, Index cols);

/// Adam over a fixed parameter registry. Moment storage is positional, so the
/// registry order must not change between steps (checkpoints keep names to
/// verify this).
class Adam {
 public:
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  void attach(const std::vector<ParamRef>& params);
  void step(const std::vector<ParamRef>& params);

  long step_count() const { return step_count_; }
  const std::vector<VectorXd>& m() const { return m_; }
  const std::vector<VectorXd>& v() const { return v_; }
  void restore(long step_count, std::vector<VectorXd> m, std::vector<VectorXd> v);

 private:
  long step_count_ = 0;
  std::vector<VectorXd> m_, v_;
};

}  // namespace rendersynth
