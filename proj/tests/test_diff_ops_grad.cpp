#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "rendersynth/diff_ops.hpp"
#include "rendersynth/rng.hpp"

using namespace rendersynth;

namespace {

constexpr double kStep = 1e-5;
constexpr double kTol = 1e-4;

Imaged random_image(Index rows, Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Imaged x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = rng.uniform(lo, hi);
  return x;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Central finite differences of a scalar function over every entry of `x`,
// compared against the analytic gradient.
double max_grad_err(Imaged& x, const std::function<double()>& loss, const Imaged& analytic) {
  double worst = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + kStep;
      const double up = loss();
      x(i, j) = saved - kStep;
      const double down = loss();
      x(i, j) = saved;
      worst = std::max(worst, rel_err((up - down) / (2.0 * kStep), analytic(i, j)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("gaussian blur adjoint identity <b(x), g> == <x, bT(g)>") {
  Rng rng(100);
  for (int seed = 0; seed < 20; ++seed) {
    const Imaged x = random_image(8, 8, rng);
    const Imaged g = random_image(8, 8, rng);
    for (double sigma : {1.0, 2.0, 3.5, 4.0}) {
      const double lhs = (gaussian_blur(x, sigma) * g).sum();
      const double rhs = (x * gaussian_blur_adjoint(g, sigma)).sum();
      CHECK(rel_err(lhs, rhs) < 1e-12);
    }
  }
}

TEST_CASE("phi_blur gradients match finite differences") {
  Rng rng(101);
  for (int seed = 0; seed < 20; ++seed) {
    Imaged x = random_image(8, 8, rng);
    double alpha = rng.uniform(0.05, 0.95);
    const Imaged w = random_image(8, 8, rng);

    PhiBlurTape<double> tape;
    auto loss = [&] { return (phi_blur(x, alpha) * w).sum(); };
    phi_blur(x, alpha, &tape);

    CHECK(max_grad_err(x, loss, phi_blur_vjp_x(tape, w)) < kTol);

    const double analytic_alpha = phi_blur_vjp_alpha(tape, w);
    const double a0 = alpha;
    alpha = a0 + kStep;
    const double up = loss();
    alpha = a0 - kStep;
    const double down = loss();
    alpha = a0;
    CHECK(rel_err((up - down) / (2.0 * kStep), analytic_alpha) < kTol);
  }
}

TEST_CASE("phi_lighting gradients match finite differences") {
  Rng rng(102);
  for (int seed = 0; seed < 20; ++seed) {
    Imaged x = random_image(8, 8, rng);
    Imaged s_w = random_image(8, 8, rng, 0.10, 1.0);
    Imaged s_b = random_image(8, 8, rng, 0.10, 1.0);
    Imaged t = random_image(8, 8, rng, -0.5, 0.5);
    const Imaged w = random_image(8, 8, rng);

    PhiLightingTape<double> tape;
    phi_lighting<double>(x, s_w, s_b, t, &tape);
    const auto g = phi_lighting_vjp(tape, w);
    auto loss = [&] { return (phi_lighting<double>(x, s_w, s_b, t) * w).sum(); };

    CHECK(max_grad_err(s_w, loss, g.s_w) < kTol);
    CHECK(max_grad_err(s_b, loss, g.s_b) < kTol);
    CHECK(max_grad_err(t, loss, g.t) < kTol);
    CHECK(max_grad_err(x, loss, g.x) < kTol);  // W(x) held fixed at these x
  }
}

TEST_CASE("phi_bg gradient w.r.t. d is upstream times the mask") {
  Rng rng(103);
  const Imaged x = random_image(8, 8, rng);
  Imaged mask = Imaged::Zero(8, 8);
  mask.block(3, 0, 5, 8) = 1.0;
  const Imaged w = random_image(8, 8, rng);
  CHECK((phi_bg_vjp_d(mask, w) == (w * mask)).all());
  CHECK((phi_bg_vjp_x(mask, w) == (w * (1.0 - mask))).all());

  Imaged d = random_image(8, 8, rng);
  auto loss = [&] { return (phi_bg<double>(x, mask, d) * w).sum(); };
  CHECK(max_grad_err(d, loss, phi_bg_vjp_d(mask, w)) < kTol);
}

TEST_CASE("phi_detail gradient w.r.t. d matches finite differences") {
  Rng rng(104);
  for (int seed = 0; seed < 20; ++seed) {
    const Imaged x = random_image(8, 8, rng);
    Imaged d = random_image(8, 8, rng, -2.0, 2.0);
    const Imaged w = random_image(8, 8, rng);
    auto loss = [&] { return (phi_detail(x, d) * w).sum(); };
    CHECK(max_grad_err(d, loss, phi_detail_vjp_d(w)) < kTol);
  }
}

TEST_CASE("clip gradients: pass-through inside, penalty slope outside") {
  Rng rng(105);
  const ClipConfig cfg{-0.5, 0.5, 15.0};
  for (int seed = 0; seed < 20; ++seed) {
    // keep samples safely away from the kinks at the bounds
    Imaged v(4, 4);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) {
        const double r = rng.uniform(-1.5, 1.5);
        v(i, j) = (std::abs(r) > 0.45 && std::abs(r) < 0.55) ? r + 0.2 : r;
      }
    const Imaged w = random_image(4, 4, rng);
    auto loss = [&] {
      const auto c = clip_with_penalty(v, cfg);
      return (c.value * w).sum() + c.penalty;
    };
    const Imaged analytic = clip_vjp(v, cfg, w, 1.0);
    CHECK(max_grad_err(v, loss, analytic) < kTol);
  }
}

TEST_CASE("composed pipeline gradients match finite differences on 8x8 inputs") {
  Rng rng(106);
  for (int seed = 0; seed < 20; ++seed) {
    // model image and mask stand in for a render at tiny resolution
    const Imaged model = random_image(8, 8, rng);
    Imaged mask = Imaged::Zero(8, 8);
    mask.block(0, 0, 2, 8) = 1.0;
    mask.block(6, 0, 2, 8) = 1.0;

    ComposeParams<double> p;
    p.alpha = rng.uniform(0.1, 0.9);
    p.s_w = random_image(8, 8, rng, 0.2, 0.9);
    p.s_b = random_image(8, 8, rng, 0.2, 0.9);
    p.t = random_image(8, 8, rng, -0.4, 0.4);
    p.bg = random_image(8, 8, rng, -0.9, 0.9);
    p.detail = random_image(8, 8, rng, -1.8, 1.8);
    const Imaged w = random_image(8, 8, rng);

    ComposeTape<double> tape;
    compose(model, mask, p, {}, &tape);
    const auto g = compose_vjp(tape, w, 1.0);

    auto loss = [&] {
      const auto r = compose(model, mask, p);
      return (r.image * w).sum() + r.penalty;
    };

    CHECK(max_grad_err(p.s_w, loss, g.s_w) < kTol);
    CHECK(max_grad_err(p.s_b, loss, g.s_b) < kTol);
    CHECK(max_grad_err(p.t, loss, g.t) < kTol);
    CHECK(max_grad_err(p.bg, loss, g.bg) < kTol);
    CHECK(max_grad_err(p.detail, loss, g.detail) < kTol);

    const double a0 = p.alpha;
    p.alpha = a0 + kStep;
    const double up = loss();
    p.alpha = a0 - kStep;
    const double down = loss();
    p.alpha = a0;
    CHECK(rel_err((up - down) / (2.0 * kStep), g.alpha) < kTol);
  }
}

TEST_CASE("compose gradient includes the out-of-bounds penalty path") {
  Rng rng(107);
  const Imaged model = random_image(8, 8, rng);
  const Imaged mask = Imaged::Zero(8, 8);
  ComposeParams<double> p = identity_params(model);
  p.detail = Imaged::Constant(8, 8, 2.5);  // above the [-2, 2] bound

  ComposeTape<double> tape;
  const auto result = compose(model, mask, p, {}, &tape);
  CHECK(result.penalty == doctest::Approx(15.0 * 0.5 * 64));
  const auto g = compose_vjp(tape, Imaged::Zero(8, 8).eval(), 1.0);
  CHECK((g.detail == 15.0).all());  // pure penalty slope, value path is cut
}
