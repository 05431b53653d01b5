#include "sepipe/gradsuite.hpp"

#include <deque>
#include <functional>
#include <random>

#include "sepipe/config.hpp"
#include "sepipe/nn/spectral_norm.hpp"
#include "sepipe/losses.hpp"
#include "sepipe/models/pipeline.hpp"
#include "sepipe/nn/attention.hpp"
#include "sepipe/nn/complex.hpp"
#include "sepipe/nn/mask.hpp"

namespace sepipe {

using namespace sepipe::nn;

namespace {

Tensor rand_tensor(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Tensor t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

struct Fixture {
  std::deque<Parameter> owned;
  std::vector<Parameter*> params;

  Parameter& add(const std::string& name, Tensor t) {
    owned.emplace_back(name, std::move(t));
    params.push_back(&owned.back());
    return owned.back();
  }
};

GradSuiteItem run_item(const std::string& name, double tol, double eps, Fixture& fx,
                       const std::function<Var(GradTape&)>& build, int probes_per_param = 8) {
  auto f = [&](bool with_grad) {
    GradTape t;
    Var loss = build(t);
    double v = t.value(loss)[0];
    if (with_grad) t.backward(loss);
    return v;
  };
  GradSuiteItem item;
  item.name = name;
  item.report = grad_check(f, fx.params, eps, probes_per_param, /*seed=*/7);
  item.passed = item.report.ok(tol);
  return item;
}

void add_layer_items(std::vector<GradSuiteItem>& out, double tol, double eps) {
  std::mt19937_64 rng(101);
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(Shape{2, 3, 5, 6}, rng));
    Parameter& w = fx.add("w", rand_tensor(Shape{4, 3, 3, 5}, rng, 0.5));
    Parameter& b = fx.add("b", rand_tensor(Shape{1, 4, 1, 1}, rng, 0.1));
    Tensor target = rand_tensor(Shape{2, 4, 5, 3}, rng);
    Conv2dGeom g{1, 2, 1, 2, 1, 1, 0, 0};
    out.push_back(run_item("conv2d", tol, eps, fx, [&](GradTape& t) {
      return mse(t, conv2d(t, t.leaf(x), t.leaf(w), t.leaf(b), g), t.constant(target));
    }));
  }
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(Shape{2, 4, 5, 3}, rng));
    Parameter& w = fx.add("w", rand_tensor(Shape{4, 3, 3, 5}, rng, 0.5));
    Parameter& b = fx.add("b", rand_tensor(Shape{1, 3, 1, 1}, rng, 0.1));
    Conv2dGeom g{1, 2, 1, 2, 1, 1, 0, 1};
    Tensor target = rand_tensor(Shape{2, 3, 5, 6}, rng);
    out.push_back(run_item("deconv2d", tol, eps, fx, [&](GradTape& t) {
      return mse(t, deconv2d(t, t.leaf(x), t.leaf(w), t.leaf(b), g), t.constant(target));
    }));
  }
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(Shape{2, 3, 4, 5}, rng));
    Parameter& gm = fx.add("gamma", rand_tensor(Shape{1, 3, 1, 1}, rng, 0.5));
    Parameter& bt = fx.add("beta", rand_tensor(Shape{1, 3, 1, 1}, rng, 0.5));
    Tensor target = rand_tensor(Shape{2, 3, 4, 5}, rng);
    out.push_back(run_item("instance_norm", tol, eps, fx, [&](GradTape& t) {
      return mse(t, instance_norm(t, t.leaf(x), t.leaf(gm), t.leaf(bt)), t.constant(target));
    }));
  }
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(Shape{2, 3, 4, 5}, rng));
    Parameter& a = fx.add("alpha", rand_tensor(Shape{1, 3, 1, 1}, rng, 0.4));
    Tensor target = rand_tensor(Shape{2, 3, 4, 5}, rng);
    out.push_back(run_item("prelu", tol, eps, fx, [&](GradTape& t) {
      return mse(t, prelu(t, t.leaf(x), t.leaf(a)), t.constant(target));
    }));
  }
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(Shape{2, 6, 4, 5}, rng));
    Tensor target = rand_tensor(Shape{2, 3, 4, 5}, rng);
    out.push_back(run_item("glu", tol, eps, fx, [&](GradTape& t) {
      return mse(t, glu(t, t.leaf(x)), t.constant(target));
    }));
  }
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(Shape{3, 1, 4, 6}, rng, 2.0));
    Tensor target = rand_tensor(Shape{3, 1, 4, 6}, rng);
    out.push_back(run_item("softmax", tol, eps, fx, [&](GradTape& t) {
      return mse(t, softmax_rows(t, t.leaf(x)), t.constant(target));
    }));
  }

  // Attention fixtures share one builder; lambda is nonzero so the
  // projection path carries gradient.
  auto attn_fixture = [&rng](Fixture& fx, int c) {
    TfaParams p;
    int cq = attn_proj_channels(c);
    p.wq = &fx.add("wq", rand_tensor(Shape{cq, c, 1, 1}, rng, 0.5));
    p.wk = &fx.add("wk", rand_tensor(Shape{cq, c, 1, 1}, rng, 0.5));
    p.wv = &fx.add("wv", rand_tensor(Shape{c, c, 1, 1}, rng, 0.5));
    p.lambda = &fx.add("lambda", Tensor::scalar(0.3));
    return p;
  };
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(Shape{2, 8, 3, 4}, rng));
    TfaParams p = attn_fixture(fx, 8);
    Tensor target = rand_tensor(Shape{2, 8, 3, 4}, rng);
    out.push_back(run_item("temporal_attention", tol, eps, fx, [&](GradTape& t) {
      Var v = t.leaf(x);
      return mse(t, temporal_attention(t, v, v, v, p), t.constant(target));
    }));
  }
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(Shape{2, 8, 3, 4}, rng));
    TfaParams p = attn_fixture(fx, 8);
    Tensor target = rand_tensor(Shape{2, 8, 3, 4}, rng);
    out.push_back(run_item("frequency_attention", tol, eps, fx, [&](GradTape& t) {
      Var v = t.leaf(x);
      return mse(t, frequency_attention(t, v, v, v, p), t.constant(target));
    }));
  }
  {
    Fixture fx;
    Parameter& xr = fx.add("xr", rand_tensor(Shape{1, 8, 3, 4}, rng));
    Parameter& xi = fx.add("xi", rand_tensor(Shape{1, 8, 3, 4}, rng));
    TfaParams p = attn_fixture(fx, 8);
    Tensor tr = rand_tensor(Shape{1, 8, 3, 4}, rng);
    Tensor ti = rand_tensor(Shape{1, 8, 3, 4}, rng);
    out.push_back(run_item("complex_temporal_attention", tol, eps, fx, [&](GradTape& t) {
      CVar y = complex_temporal_attention(t, {t.leaf(xr), t.leaf(xi)}, p);
      return add(t, mse(t, y.re, t.constant(tr)), mse(t, y.im, t.constant(ti)));
    }));
  }
  {
    Fixture fx;
    Parameter& xr = fx.add("xr", rand_tensor(Shape{1, 8, 3, 4}, rng));
    Parameter& xi = fx.add("xi", rand_tensor(Shape{1, 8, 3, 4}, rng));
    TfaParams p = attn_fixture(fx, 8);
    Tensor tr = rand_tensor(Shape{1, 8, 3, 4}, rng);
    Tensor ti = rand_tensor(Shape{1, 8, 3, 4}, rng);
    out.push_back(run_item("complex_frequency_attention", tol, eps, fx, [&](GradTape& t) {
      CVar y = complex_frequency_attention(t, {t.leaf(xr), t.leaf(xi)}, p);
      return add(t, mse(t, y.re, t.constant(tr)), mse(t, y.im, t.constant(ti)));
    }));
  }
  {
    Fixture fx;
    Parameter& mr = fx.add("raw_r", rand_tensor(Shape{1, 1, 4, 5}, rng));
    Parameter& mi = fx.add("raw_i", rand_tensor(Shape{1, 1, 4, 5}, rng));
    Parameter& xr = fx.add("x_r", rand_tensor(Shape{1, 1, 4, 5}, rng));
    Parameter& xi = fx.add("x_i", rand_tensor(Shape{1, 1, 4, 5}, rng));
    Tensor tr = rand_tensor(Shape{1, 1, 4, 5}, rng);
    Tensor ti = rand_tensor(Shape{1, 1, 4, 5}, rng);
    out.push_back(run_item("bound_mask.apply_mask", tol, eps, fx, [&](GradTape& t) {
      CVar m = bound_mask(t, {t.leaf(mr), t.leaf(mi)});
      CVar y = apply_mask(t, {t.leaf(xr), t.leaf(xi)}, m);
      return add(t, mse(t, y.re, t.constant(tr)), mse(t, y.im, t.constant(ti)));
    }));
  }
  {
    std::mt19937_64 sn_rng(11);
    Fixture fx;
    Parameter& w = fx.add("w", rand_tensor(Shape{4, 3, 3, 3}, rng, 0.7));
    SpectralNorm sn(w.value, sn_rng);
    for (int i = 0; i < 30; ++i) sn.update(w.value);
    Tensor target = rand_tensor(Shape{4, 3, 3, 3}, rng);
    out.push_back(run_item("spectral_norm", tol, eps, fx, [&](GradTape& t) {
      return mse(t, sn.apply(t, t.leaf(w)), t.constant(target));
    }));
  }
}

void add_loss_items(std::vector<GradSuiteItem>& out, double tol, double eps) {
  std::mt19937_64 rng(202);
  Shape score{4, 1, 1, 1};
  Shape spec{2, 1, 4, 5};
  {
    Fixture fx;
    Parameter& r = fx.add("real", rand_tensor(score, rng));
    Parameter& f = fx.add("fake", rand_tensor(score, rng));
    out.push_back(run_item("rals_d_loss", tol, eps, fx, [&](GradTape& t) {
      return losses::rals_d_loss(t, t.leaf(r), t.leaf(f));
    }));
  }
  {
    Fixture fx;
    Parameter& r = fx.add("real", rand_tensor(score, rng));
    Parameter& f = fx.add("fake", rand_tensor(score, rng));
    out.push_back(run_item("rals_g_loss", tol, eps, fx, [&](GradTape& t) {
      return losses::rals_g_loss(t, t.leaf(r), t.leaf(f));
    }));
  }
  {
    Fixture fx;
    Parameter& x = fx.add("x", rand_tensor(spec, rng));
    Parameter& xc = fx.add("x_cycled", rand_tensor(spec, rng));
    Parameter& y = fx.add("y", rand_tensor(spec, rng));
    Parameter& yc = fx.add("y_cycled", rand_tensor(spec, rng));
    out.push_back(run_item("cycle_loss", tol, eps, fx, [&](GradTape& t) {
      return losses::cycle_loss(t, t.leaf(x), t.leaf(xc), t.leaf(y), t.leaf(yc));
    }));
  }
  {
    Fixture fx;
    Parameter& fxv = fx.add("fx", rand_tensor(spec, rng));
    Parameter& x = fx.add("x", rand_tensor(spec, rng));
    Parameter& gy = fx.add("gy", rand_tensor(spec, rng));
    Parameter& y = fx.add("y", rand_tensor(spec, rng));
    out.push_back(run_item("identity_loss", tol, eps, fx, [&](GradTape& t) {
      return losses::identity_loss(t, t.leaf(fxv), t.leaf(x), t.leaf(gy), t.leaf(y));
    }));
  }
  {
    Fixture fx;
    Parameter& r1 = fx.add("real1", rand_tensor(score, rng));
    Parameter& f1 = fx.add("fake1", rand_tensor(score, rng));
    Parameter& r2 = fx.add("real2", rand_tensor(score, rng));
    Parameter& f2 = fx.add("fake2", rand_tensor(score, rng));
    Parameter& x = fx.add("x", rand_tensor(spec, rng));
    Parameter& xc = fx.add("xc", rand_tensor(spec, rng));
    losses::LossWeights w;
    out.push_back(run_item("cyclegan_total", tol, eps, fx, [&](GradTape& t) {
      Var adv_g = losses::rals_g_loss(t, t.leaf(r1), t.leaf(f1));
      Var adv_f = losses::rals_g_loss(t, t.leaf(r2), t.leaf(f2));
      Var cyc = losses::cycle_loss(t, t.leaf(x), t.leaf(xc), t.leaf(x), t.leaf(xc));
      Var id = losses::identity_loss(t, t.leaf(xc), t.leaf(x), t.leaf(xc), t.leaf(x));
      return losses::cyclegan_total(t, adv_g, adv_f, cyc, id, w, true);
    }));
  }
  {
    Fixture fx;
    Parameter& sr = fx.add("s_hat_r", rand_tensor(spec, rng));
    Parameter& si = fx.add("s_hat_i", rand_tensor(spec, rng));
    Parameter& rr = fx.add("s_ref_r", rand_tensor(spec, rng));
    Parameter& ri = fx.add("s_ref_i", rand_tensor(spec, rng));
    out.push_back(run_item("dcd_mag_loss", tol, eps, fx, [&](GradTape& t) {
      return losses::dcd_mag_loss(t, {t.leaf(sr), t.leaf(si)}, {t.leaf(rr), t.leaf(ri)});
    }));
  }
  {
    Fixture fx;
    Parameter& sr = fx.add("s_hat_r", rand_tensor(spec, rng));
    Parameter& si = fx.add("s_hat_i", rand_tensor(spec, rng));
    Parameter& rr = fx.add("s_ref_r", rand_tensor(spec, rng));
    Parameter& ri = fx.add("s_ref_i", rand_tensor(spec, rng));
    out.push_back(run_item("dcd_ri_loss", tol, eps, fx, [&](GradTape& t) {
      return losses::dcd_ri_loss(t, {t.leaf(sr), t.leaf(si)}, {t.leaf(rr), t.leaf(ri)});
    }));
  }
}

void add_model_item(std::vector<GradSuiteItem>& out, double tol, double eps) {
  RunConfig cfg = default_config();
  cfg.width_divisor = 8;
  cfg.schedule.seed = 5;
  models::ModelSpec spec = cfg.model_spec();
  models::TwoStageModel model(spec);

  // Check at a generic, locally smooth point. At init the zero biases/betas
  // put entire PReLU planes exactly on their kinks, where central differences
  // straddle the nondifferentiable set; parameter noise moves the evaluation
  // off it. Alphas sit near 1 so that a probe interval crossing a residual
  // kink changes the local slope only negligibly (the alpha gradient itself
  // is still verified), and nonzero lambdas let the attention projections
  // carry gradient.
  auto params = model.params();
  std::mt19937_64 jitter(404);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] += noise(jitter);
    if (p->name.ends_with(".lambda")) p->value[0] = 0.1;
    if (p->name.ends_with(".alpha") || p->name.ends_with(".alpha_r") ||
        p->name.ends_with(".alpha_i"))
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = 1.0 + 0.02 * noise(jitter);
  }

  const int T = 4, F = 33;
  std::mt19937_64 rng(303);
  Tensor noisy_mag = rand_tensor(Shape{1, 1, T, F}, rng, 0.5);
  for (std::size_t i = 0; i < noisy_mag.size(); ++i) noisy_mag[i] = std::abs(noisy_mag[i]);
  Tensor clean_re = rand_tensor(Shape{1, 1, T, F}, rng, 0.5);
  Tensor clean_im = rand_tensor(Shape{1, 1, T, F}, rng, 0.5);
  Tensor cos_ph = rand_tensor(Shape{1, 1, T, F}, rng, 1.0);
  Tensor sin_ph = cos_ph;
  for (std::size_t i = 0; i < cos_ph.size(); ++i) {
    cos_ph[i] = std::cos(cos_ph[i] * 3.0);
    sin_ph[i] = std::sqrt(std::max(0.0, 1.0 - cos_ph[i] * cos_ph[i]));
  }
  Tensor clean_mag = clean_re;
  for (std::size_t i = 0; i < clean_mag.size(); ++i)
    clean_mag[i] = std::hypot(clean_re[i], clean_im[i]);

  auto f = [&](bool with_grad) {
    GradTape t;
    Var x = t.constant(noisy_mag);
    Var y = t.constant(clean_mag);
    Var gx = model.g_xy.forward(t, x);
    Var fy = model.f_yx.forward(t, y);
    CVar coarse{mul(t, gx, t.constant(cos_ph)), mul(t, gx, t.constant(sin_ph))};
    auto dcd_out = model.dcd.forward(t, coarse);
    CVar clean{t.constant(clean_re), t.constant(clean_im)};
    Var ri = losses::dcd_ri_loss(t, dcd_out.enhanced, clean);
    Var mag = losses::dcd_mag_loss(t, dcd_out.enhanced, clean);
    Var cyc = losses::cycle_loss(t, x, model.f_yx.forward(t, gx), y, model.g_xy.forward(t, fy));
    Var id = losses::identity_loss(t, model.f_yx.forward(t, x), x, model.g_xy.forward(t, y), y);
    Var adv_g = losses::rals_g_loss(t, model.d_y.forward(t, y), model.d_y.forward(t, gx));
    Var adv_f = losses::rals_g_loss(t, model.d_x.forward(t, x), model.d_x.forward(t, fy));
    Var gan = losses::cyclegan_total(t, adv_g, adv_f, cyc, id, cfg.loss, true);
    Var loss = losses::full_loss(t, ri, mag, gan, cfg.loss.gamma);
    double v = t.value(loss)[0];
    if (with_grad) t.backward(loss);
    return v;
  };

  GradSuiteItem item;
  item.name = "two_stage_model";
  item.report = grad_check(f, params, eps, /*max_elems_per_param=*/2, /*seed=*/13);
  item.passed = item.report.ok(tol);
  out.push_back(item);
}

}  // namespace

std::vector<GradSuiteItem> run_grad_suite(const std::string& scope, double tol, double eps) {
  require(scope == "layers" || scope == "losses" || scope == "model" || scope == "all",
          "gradcheck scope must be layers|losses|model|all, got '" + scope + "'");
  std::vector<GradSuiteItem> out;
  if (scope == "layers" || scope == "all") add_layer_items(out, tol, eps);
  if (scope == "losses" || scope == "all") add_loss_items(out, tol, eps);
  if (scope == "model" || scope == "all") add_model_item(out, tol, eps);
  return out;
}

}  // namespace sepipe
