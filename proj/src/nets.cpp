#include "rendersynth/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace rendersynth {

void Dense::resize(Index out, Index in) {
  w = MatrixXd::Zero(out, in);
  b = VectorXd::Zero(out);
  gw = MatrixXd::Zero(out, in);
  gb = VectorXd::Zero(out);
}

void Dense::init(Rng& rng, double gain) {
  const double scale = gain * std::sqrt(2.0 / static_cast<double>(w.cols()));
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) w(i, j) = scale * rng.normal();
  b.setZero();
}

void Dense::init_head(double bias_value) {
  w.setZero();
  b.setConstant(bias_value);
}

VectorXd Dense::backward(const VectorXd& x, const VectorXd& gy) {
  gw += gy.matrix() * x.matrix().transpose();
  gb += gy;
  return w.transpose() * gy.matrix();
}

void Dense::zero_grad() {
  gw.setZero();
  gb.setZero();
}

void Dense::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", w.data(), gw.data(), w.size()});
  out.push_back({prefix + ".b", b.data(), gb.data(), b.size()});
}

VectorXd relu(const VectorXd& x) { return x.cwiseMax(0.0); }

VectorXd relu_backward(const VectorXd& x, const VectorXd& gy) {
  return (x.array() > 0.0).select(gy.array(), 0.0);
}

VectorXd lrelu(const VectorXd& x, double slope) {
  return (x.array() > 0.0).select(x.array(), slope * x.array());
}

VectorXd lrelu_backward(const VectorXd& x, const VectorXd& gy, double slope) {
  return (x.array() > 0.0).select(gy.array(), slope * gy.array());
}

Conv2d::Conv2d(Index cin, Index cout, Index k, Index s, Index p)
    : in_channels(cin), out_channels(cout), ksize(k), stride(s), pad(p) {
  w = MatrixXd::Zero(cout, cin * k * k);
  b = VectorXd::Zero(cout);
  gw = MatrixXd::Zero(cout, cin * k * k);
  gb = VectorXd::Zero(cout);
}

void Conv2d::init(Rng& rng, double gain) {
  const double scale = gain * std::sqrt(2.0 / static_cast<double>(w.cols()));
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) w(i, j) = scale * rng.normal();
  b.setZero();
}

MatrixXd Conv2d::unfold(const Tensor3& x) const {
  const Index ho = out_size(x.rows()), wo = out_size(x.cols());
  MatrixXd cols = MatrixXd::Zero(in_channels * ksize * ksize, ho * wo);
  for (Index c = 0; c < in_channels; ++c) {
    const Imaged& plane = x.channels[static_cast<size_t>(c)];
    for (Index ki = 0; ki < ksize; ++ki) {
      for (Index kj = 0; kj < ksize; ++kj) {
        const Index row = (c * ksize + ki) * ksize + kj;
        for (Index oi = 0; oi < ho; ++oi) {
          const Index si = oi * stride + ki - pad;
          if (si < 0 || si >= plane.rows()) continue;
          for (Index oj = 0; oj < wo; ++oj) {
            const Index sj = oj * stride + kj - pad;
            if (sj < 0 || sj >= plane.cols()) continue;
            cols(row, oi * wo + oj) = plane(si, sj);
          }
        }
      }
    }
  }
  return cols;
}

Tensor3 Conv2d::forward(const Tensor3& x, MatrixXd* cols_out) const {
  if (static_cast<Index>(x.channels.size()) != in_channels)
    throw std::invalid_argument("Conv2d: channel mismatch");
  const Index ho = out_size(x.rows()), wo = out_size(x.cols());
  MatrixXd cols = unfold(x);
  MatrixXd y = w * cols;
  y.colwise() += b;
  Tensor3 out;
  out.channels.reserve(static_cast<size_t>(out_channels));
  for (Index c = 0; c < out_channels; ++c) {
    Imaged plane(ho, wo);
    for (Index i = 0; i < ho; ++i)
      for (Index j = 0; j < wo; ++j) plane(i, j) = y(c, i * wo + j);
    out.channels.push_back(std::move(plane));
  }
  if (cols_out) *cols_out = std::move(cols);
  return out;
}

Tensor3 Conv2d::backward(const Tensor3& x, const MatrixXd& cols, const Tensor3& gy) {
  const Index ho = out_size(x.rows()), wo = out_size(x.cols());
  MatrixXd gy_mat(out_channels, ho * wo);
  for (Index c = 0; c < out_channels; ++c)
    for (Index i = 0; i < ho; ++i)
      for (Index j = 0; j < wo; ++j)
        gy_mat(c, i * wo + j) = gy.channels[static_cast<size_t>(c)](i, j);

  gw += gy_mat * cols.transpose();
  gb += gy_mat.rowwise().sum();

  const MatrixXd gcols = w.transpose() * gy_mat;  // col2im scatter below
  Tensor3 gx;
  gx.channels.assign(static_cast<size_t>(in_channels), Imaged::Zero(x.rows(), x.cols()));
  for (Index c = 0; c < in_channels; ++c) {
    Imaged& plane = gx.channels[static_cast<size_t>(c)];
    for (Index ki = 0; ki < ksize; ++ki) {
      for (Index kj = 0; kj < ksize; ++kj) {
        const Index row = (c * ksize + ki) * ksize + kj;
        for (Index oi = 0; oi < ho; ++oi) {
          const Index si = oi * stride + ki - pad;
          if (si < 0 || si >= plane.rows()) continue;
          for (Index oj = 0; oj < wo; ++oj) {
            const Index sj = oj * stride + kj - pad;
            if (sj < 0 || sj >= plane.cols()) continue;
            plane(si, sj) += gcols(row, oi * wo + oj);
          }
        }
      }
    }
  }
  return gx;
}

void Conv2d::zero_grad() {
  gw.setZero();
  gb.setZero();
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", w.data(), gw.data(), w.size()});
  out.push_back({prefix + ".b", b.data(), gb.data(), b.size()});
}

Tensor3 lrelu(const Tensor3& x, double slope) {
  Tensor3 out;
  out.channels.reserve(x.channels.size());
  for (const auto& plane : x.channels)
    out.channels.push_back((plane > 0.0).select(plane, slope * plane));
  return out;
}

Tensor3 lrelu_backward(const Tensor3& x, const Tensor3& gy, double slope) {
  Tensor3 out;
  out.channels.reserve(x.channels.size());
  for (size_t c = 0; c < x.channels.size(); ++c)
    out.channels.push_back((x.channels[c] > 0.0).select(gy.channels[c], slope * gy.channels[c]));
  return out;
}

VectorXd flatten(const Tensor3& x) {
  VectorXd v(x.size());
  Index pos = 0;
  for (const auto& plane : x.channels) {
    for (Index i = 0; i < plane.rows(); ++i)
      for (Index j = 0; j < plane.cols(); ++j) v(pos++) = plane(i, j);
  }
  return v;
}

Tensor3 unflatten(const VectorXd& v, Index channels, Index rows, Index cols) {
  Tensor3 out;
  Index pos = 0;
  for (Index c = 0; c < channels; ++c) {
    Imaged plane(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) plane(i, j) = v(pos++);
    out.channels.push_back(std::move(plane));
  }
  return out;
}

void Adam::attach(const std::vector<ParamRef>& params) {
  m_.clear();
  v_.clear();
  for (const auto& p : params) {
    m_.push_back(VectorXd::Zero(p.size));
    v_.push_back(VectorXd::Zero(p.size));
  }
  step_count_ = 0;
}

void Adam::step(const std::vector<ParamRef>& params) {
  if (m_.size() != params.size()) throw std::logic_error("Adam: not attached to these params");
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count_));
  for (size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    Eigen::Map<VectorXd> value(p.value, p.size);
    Eigen::Map<const VectorXd> grad(p.grad, p.size);
    VectorXd& m = m_[k];
    VectorXd& v = v_[k];
    m = beta1 * m + (1.0 - beta1) * grad.matrix();
    v = beta2 * v + (1.0 - beta2) * grad.array().square().matrix();
    const auto m_hat = m.array() / bc1;
    const auto v_hat = v.array() / bc2;
    value.array() -= lr * m_hat / (v_hat.sqrt() + eps);
  }
}

void Adam::restore(long step_count, std::vector<VectorXd> m, std::vector<VectorXd> v) {
  step_count_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace rendersynth
