#include "rendersynth/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "rendersynth/adversarial.hpp"
#include "rendersynth/diff_ops.hpp"
#include "rendersynth/rng.hpp"
#include "rendersynth/tag_model.hpp"

namespace rendersynth {

namespace {

constexpr double kStep = 1e-5;

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

Imaged random_image(Index rows, Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Imaged x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = rng.uniform(lo, hi);
  return x;
}

// Worst relative error of central differences over every entry of x.
double sweep_image(Imaged& x, const std::function<double()>& loss, const Imaged& analytic) {
  double worst = 0.0;
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + kStep;
      const double up = loss();
      x(i, j) = saved - kStep;
      const double down = loss();
      x(i, j) = saved;
      worst = std::max(worst, rel_err((up - down) / (2 * kStep), analytic(i, j)));
    }
  return worst;
}

double sweep_scalar(double& v, const std::function<double()>& loss, double analytic) {
  const double saved = v;
  v = saved + kStep;
  const double up = loss();
  v = saved - kStep;
  const double down = loss();
  v = saved;
  return rel_err((up - down) / (2 * kStep), analytic);
}

struct Accumulator {
  GradCheckRow row;
  void feed(double err) {
    row.max_rel_err = std::max(row.max_rel_err, err);
    ++row.checks;
  }
};

GenArch check_gen_arch() {
  GenArch a;
  a.n_z = 6;
  a.trunk = 8;
  a.blur_hidden = 4;
  a.light_hidden = 8;
  a.bg_hidden = 8;
  a.detail_hidden = 8;
  return a;
}

}  // namespace

std::string GradCheckReport::to_string() const {
  std::ostringstream out;
  out << "gradient check (central differences, h = 1e-5, tolerance " << tolerance << ")\n";
  out << "stage                     checks   max_rel_err\n";
  for (const auto& row : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-25s %-8d %.3e %s\n", row.stage.c_str(), row.checks,
                  row.max_rel_err, row.max_rel_err < tolerance ? "" : " FAIL");
    out << buf;
  }
  out << (passed ? "RESULT: PASS\n" : "RESULT: FAIL\n");
  return out.str();
}

GradCheckReport run_gradient_checks(int seeds, double tolerance, bool inject_sign_flip) {
  GradCheckReport report;
  report.tolerance = tolerance;

  Accumulator blur_x, blur_alpha, lighting, bg, detail, clip_acc, composed, gen_net, disc_net;
  blur_x.row.stage = "phi_blur.x";
  blur_alpha.row.stage = "phi_blur.alpha";
  lighting.row.stage = "phi_lighting.params";
  bg.row.stage = "phi_bg.d";
  detail.row.stage = "phi_detail.d";
  clip_acc.row.stage = "clip.value+penalty";
  composed.row.stage = "compose.all_params";
  gen_net.row.stage = "generator.end_to_end";
  disc_net.row.stage = "discriminator.input";

  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(1000 + static_cast<std::uint64_t>(seed));

    // per-stage checks on 8x8 tensors
    {
      Imaged x = random_image(8, 8, rng);
      double alpha = rng.uniform(0.05, 0.95);
      const Imaged w = random_image(8, 8, rng);
      PhiBlurTape<double> tape;
      phi_blur(x, alpha, &tape);
      auto loss = [&] { return (phi_blur(x, alpha) * w).sum(); };
      blur_x.feed(sweep_image(x, loss, phi_blur_vjp_x(tape, w)));
      double analytic_alpha = phi_blur_vjp_alpha(tape, w);
      if (inject_sign_flip) analytic_alpha = -analytic_alpha;
      blur_alpha.feed(sweep_scalar(alpha, loss, analytic_alpha));
    }
    {
      const Imaged x = random_image(8, 8, rng);
      Imaged s_w = random_image(8, 8, rng, 0.10, 1.0);
      Imaged s_b = random_image(8, 8, rng, 0.10, 1.0);
      Imaged t = random_image(8, 8, rng, -0.5, 0.5);
      const Imaged w = random_image(8, 8, rng);
      PhiLightingTape<double> tape;
      phi_lighting<double>(x, s_w, s_b, t, &tape);
      const auto g = phi_lighting_vjp(tape, w);
      auto loss = [&] { return (phi_lighting<double>(x, s_w, s_b, t) * w).sum(); };
      lighting.feed(sweep_image(s_w, loss, g.s_w));
      lighting.feed(sweep_image(s_b, loss, g.s_b));
      lighting.feed(sweep_image(t, loss, g.t));
    }
    {
      const Imaged x = random_image(8, 8, rng);
      Imaged mask = Imaged::Zero(8, 8);
      mask.block(0, 0, 3, 8) = 1.0;
      Imaged d = random_image(8, 8, rng);
      const Imaged w = random_image(8, 8, rng);
      auto loss = [&] { return (phi_bg<double>(x, mask, d) * w).sum(); };
      bg.feed(sweep_image(d, loss, phi_bg_vjp_d(mask, w)));
    }
    {
      const Imaged x = random_image(8, 8, rng);
      Imaged d = random_image(8, 8, rng, -1.8, 1.8);
      const Imaged w = random_image(8, 8, rng);
      auto loss = [&] { return (phi_detail(x, d) * w).sum(); };
      detail.feed(sweep_image(d, loss, phi_detail_vjp_d(w)));
    }
    {
      const ClipConfig cfg{-0.5, 0.5, 15.0};
      Imaged v(4, 4);
      for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) {
          double r = rng.uniform(-1.5, 1.5);
          if (std::abs(std::abs(r) - 0.5) < 0.05) r += 0.2;  // stay off the kinks
          v(i, j) = r;
        }
      const Imaged w = random_image(4, 4, rng);
      auto loss = [&] {
        const auto c = clip_with_penalty(v, cfg);
        return (c.value * w).sum() + c.penalty;
      };
      clip_acc.feed(sweep_image(v, loss, clip_vjp(v, cfg, w, 1.0)));
    }
    {
      const Imaged model = random_image(8, 8, rng);
      Imaged mask = Imaged::Zero(8, 8);
      mask.block(0, 0, 2, 8) = 1.0;
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
      composed.feed(sweep_image(p.s_w, loss, g.s_w));
      composed.feed(sweep_image(p.t, loss, g.t));
      composed.feed(sweep_image(p.bg, loss, g.bg));
      composed.feed(sweep_image(p.detail, loss, g.detail));
      composed.feed(sweep_scalar(p.alpha, loss, g.alpha));
    }

    // generator end to end at 16x16 (tiny net, trained-like random heads)
    {
      GeneratorNet gen(check_gen_arch());
      gen.init(rng);
      for (Dense* d : {&gen.blur2, &gen.light2, &gen.bg2, &gen.det2}) d->init(rng, 0.05);
      gen.blur2.b(0) = 0.5;
      const TagLabel label = sample_label(rng, 16);
      const auto rendered = render(label, 16);
      VectorXd z(gen.arch.n_z);
      for (Index k = 0; k < z.size(); ++k) z(k) = rng.uniform(-1.0, 1.0);
      const Imaged w = random_image(16, 16, rng);
      auto loss = [&] {
        const auto r = gen.forward(z, rendered);
        return (r.image * w).sum() + r.penalty;
      };
      GenTape tape;
      gen.forward(z, rendered, &tape);
      gen.zero_grad();
      const VectorXd gz = gen.backward(tape, w, 1.0);
      for (Index k = 0; k < z.size(); ++k) {
        const double saved = z(k);
        z(k) = saved + kStep;
        const double up = loss();
        z(k) = saved - kStep;
        const double down = loss();
        z(k) = saved;
        gen_net.feed(rel_err((up - down) / (2 * kStep), gz(k)));
      }
      auto params = gen.params();
      for (auto& p : params) {
        const Index stride = std::max<Index>(1, p.size / 6);
        for (Index k = 0; k < p.size; k += stride) {
          const double saved = p.value[k];
          p.value[k] = saved + kStep;
          const double up = loss();
          p.value[k] = saved - kStep;
          const double down = loss();
          p.value[k] = saved;
          gen_net.feed(rel_err((up - down) / (2 * kStep), p.grad[k]));
        }
      }
    }

    // discriminator input gradient at 16x16
    {
      DiscriminatorNet disc({.c1 = 4, .c2 = 6, .c3 = 8, .fc = 16});
      disc.init(rng);
      Imaged img = random_image(16, 16, rng);
      DiscTape tape;
      disc.forward(img, &tape);
      disc.zero_grad();
      const Imaged gx = disc.backward(tape, 1.0);
      for (Index i = 0; i < 16; i += 5)
        for (Index j = 0; j < 16; j += 5) {
          const double saved = img(i, j);
          img(i, j) = saved + kStep;
          DiscTape up;
          disc.forward(img, &up);
          img(i, j) = saved - kStep;
          DiscTape down;
          disc.forward(img, &down);
          img(i, j) = saved;
          disc_net.feed(rel_err((up.logit - down.logit) / (2 * kStep), gx(i, j)));
        }
    }
  }

  for (Accumulator* acc :
       {&blur_x, &blur_alpha, &lighting, &bg, &detail, &clip_acc, &composed, &gen_net, &disc_net})
    report.rows.push_back(acc->row);
  report.passed = true;
  for (const auto& row : report.rows)
    if (!(row.max_rel_err < tolerance)) report.passed = false;
  return report;
}

}  // namespace rendersynth
