#include "sepipe/nn/complex.hpp"

namespace sepipe::nn {

namespace {

void check_pair(const GradTape& t, CVar x, const char* op) {
  require(t.shape(x.re) == t.shape(x.im),
          std::string(op) + ": real/imag shapes differ: " + t.shape(x.re).str() + " vs " +
              t.shape(x.im).str());
}

}  // namespace

CVar complex_conv2d(GradTape& t, CVar x, const ComplexKernel& w, const Conv2dGeom& g) {
  check_pair(t, x, "complex_conv2d");
  require(w.real && w.imag && w.real->value.shape() == w.imag->value.shape(),
          "complex_conv2d: kernel parts must share geometry");
  Var wr = t.leaf(*w.real);
  Var wi = t.leaf(*w.imag);
  Var rr = conv2d(t, x.re, wr, Var{}, g);
  Var ii = conv2d(t, x.im, wi, Var{}, g);
  Var ri = conv2d(t, x.im, wr, Var{}, g);
  Var ir = conv2d(t, x.re, wi, Var{}, g);
  return {sub(t, rr, ii), add(t, ri, ir)};
}

CVar complex_deconv2d(GradTape& t, CVar x, const ComplexKernel& w, const Conv2dGeom& g) {
  check_pair(t, x, "complex_deconv2d");
  require(w.real && w.imag && w.real->value.shape() == w.imag->value.shape(),
          "complex_deconv2d: kernel parts must share geometry");
  Var wr = t.leaf(*w.real);
  Var wi = t.leaf(*w.imag);
  Var rr = deconv2d(t, x.re, wr, Var{}, g);
  Var ii = deconv2d(t, x.im, wi, Var{}, g);
  Var ri = deconv2d(t, x.im, wr, Var{}, g);
  Var ir = deconv2d(t, x.re, wi, Var{}, g);
  return {sub(t, rr, ii), add(t, ri, ir)};
}

CVar complex_instance_norm(GradTape& t, CVar x, Var gamma_r, Var beta_r, Var gamma_i, Var beta_i,
                           double eps) {
  check_pair(t, x, "complex_instance_norm");
  return {instance_norm(t, x.re, gamma_r, beta_r, eps),
          instance_norm(t, x.im, gamma_i, beta_i, eps)};
}

CVar cprelu(GradTape& t, CVar x, Var alpha_r, Var alpha_i) {
  check_pair(t, x, "cprelu");
  return {prelu(t, x.re, alpha_r), prelu(t, x.im, alpha_i)};
}

CVar complex_concat_c(GradTape& t, CVar a, CVar b) {
  return {concat_c(t, a.re, b.re), concat_c(t, a.im, b.im)};
}

namespace {

using AttnFn = Var (*)(GradTape&, Var, Var, Var, const TfaParams&);

CVar complex_attention(GradTape& t, CVar x, const TfaParams& p, AttnFn attn) {
  check_pair(t, x, "complex_attention");
  Var r = x.re, i = x.im;
  Var re = sub(t, sub(t, sub(t, attn(t, r, r, r, p), attn(t, r, i, i, p)),
                      attn(t, i, r, i, p)),
               attn(t, i, i, r, p));
  Var im = sub(t, add(t, add(t, attn(t, r, r, i, p), attn(t, r, i, r, p)),
                      attn(t, i, r, r, p)),
               attn(t, i, i, i, p));
  return {re, im};
}

}  // namespace

CVar complex_temporal_attention(GradTape& t, CVar x, const TfaParams& p) {
  return complex_attention(t, x, p, &temporal_attention);
}

CVar complex_frequency_attention(GradTape& t, CVar x, const TfaParams& p) {
  return complex_attention(t, x, p, &frequency_attention);
}

CVar ct_f_sa(GradTape& t, CVar x, const TfaParams& p_t, const TfaParams& p_f) {
  return complex_frequency_attention(t, complex_temporal_attention(t, x, p_t), p_f);
}

}  // namespace sepipe::nn
