#include "sepipe/losses.hpp"

namespace sepipe::losses {

using namespace sepipe::nn;

namespace {

void check_scores(GradTape& t, Var scores, const char* who) {
  const Shape& s = t.shape(scores);
  require(s.b >= 1 && s.c == 1 && s.t == 1 && s.f == 1,
          std::string(who) + ": expects a non-empty (B,1,1,1) score batch, got " + s.str());
}

Var square(GradTape& t, Var x) { return mul(t, x, x); }

}  // namespace

Var rals_d_loss(GradTape& t, Var real_scores, Var fake_scores) {
  check_scores(t, real_scores, "rals_d_loss");
  check_scores(t, fake_scores, "rals_d_loss");
  Var mean_fake = mean_all(t, fake_scores);
  Var mean_real = mean_all(t, real_scores);
  Var a = mean_all(t, square(t, add_const(t, sub(t, real_scores, mean_fake), -1.0)));
  Var b = mean_all(t, square(t, add_const(t, sub(t, fake_scores, mean_real), 1.0)));
  return add(t, a, b);
}

Var rals_g_loss(GradTape& t, Var real_scores, Var fake_scores) {
  return rals_d_loss(t, fake_scores, real_scores);
}

Var cycle_loss(GradTape& t, Var x, Var x_cycled, Var y, Var y_cycled) {
  return add(t, mae(t, x_cycled, x), mae(t, y_cycled, y));
}

Var identity_loss(GradTape& t, Var fx, Var x, Var gy, Var y) {
  return add(t, mae(t, fx, x), mae(t, gy, y));
}

Var cyclegan_total(GradTape& t, Var adv_g, Var adv_f, Var cyc, Var id, const LossWeights& w,
                   bool include_identity) {
  w.validate();
  Var total = add(t, adv_g, adv_f);
  total = add(t, total, mul_const(t, cyc, w.lambda_cycle));
  total = add(t, total, mul_const(t, id, include_identity ? w.lambda_id : 0.0));
  return total;
}

Var dcd_mag_loss(GradTape& t, CVar s_hat, CVar s_ref) {
  Var m_hat = magnitude_eps(t, s_hat.re, s_hat.im, 1e-12);
  Var m_ref = magnitude_eps(t, s_ref.re, s_ref.im, 1e-12);
  return mse(t, m_hat, m_ref);
}

Var dcd_ri_loss(GradTape& t, CVar s_hat, CVar s_ref) {
  return add(t, mse(t, s_hat.re, s_ref.re), mse(t, s_hat.im, s_ref.im));
}

Var full_loss(GradTape& t, Var dcd_ri, Var dcd_mag, Var cyclegan, double gamma) {
  return add(t, add(t, dcd_ri, dcd_mag), mul_const(t, cyclegan, gamma));
}

}  // namespace sepipe::losses
