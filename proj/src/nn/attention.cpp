#include "sepipe/nn/attention.hpp"

namespace sepipe::nn {

namespace {

enum class Axis { time, freq };

Var project(GradTape& t, Var x, Parameter& w) {
  return conv2d(t, x, t.leaf(w), Var{}, Conv2dGeom{});
}

// (B,C,T,F) -> (B*F,1,T,C) for time attention, (B*T,1,F,C) for frequency.
Var flatten_rows(GradTape& t, Var x, Axis axis) {
  Shape s = t.shape(x);
  if (axis == Axis::time) {
    Var p = permute(t, x, {0, 3, 2, 1});  // (B,F,T,C)
    return reshape(t, p, Shape{s.b * s.f, 1, s.t, s.c});
  }
  Var p = permute(t, x, {0, 2, 3, 1});  // (B,T,F,C)
  return reshape(t, p, Shape{s.b * s.t, 1, s.f, s.c});
}

Var unflatten_rows(GradTape& t, Var x, Axis axis, Shape target) {
  if (axis == Axis::time) {
    Var r = reshape(t, x, Shape{target.b, target.f, target.t, target.c});
    return permute(t, r, {0, 3, 2, 1});
  }
  Var r = reshape(t, x, Shape{target.b, target.t, target.f, target.c});
  return permute(t, r, {0, 3, 1, 2});
}

Var axis_attention(GradTape& t, Var q, Var k, Var v, const TfaParams& p, Axis axis) {
  Shape s = t.shape(q);
  require(t.shape(k) == s && t.shape(v) == s, "attention: Q, K, V must share shape");
  require(p.wq && p.wk && p.wv && p.lambda, "attention: params not initialized");
  require(p.wq->value.shape().c == s.c,
          "attention: projection built for " + std::to_string(p.wq->value.shape().c) +
              " channels, input has " + std::to_string(s.c));

  Var qp = flatten_rows(t, project(t, q, *p.wq), axis);
  Var kp = flatten_rows(t, project(t, k, *p.wk), axis);
  Var vp = flatten_rows(t, project(t, v, *p.wv), axis);

  Var beta = softmax_rows(t, bmm(t, qp, kp, /*trans_b=*/true));
  Var o = unflatten_rows(t, bmm(t, beta, vp), axis, s);
  return scalar_gate(t, t.leaf(*p.lambda), o, k);
}

}  // namespace

Var temporal_attention(GradTape& t, Var q, Var k, Var v, const TfaParams& p) {
  return axis_attention(t, q, k, v, p, Axis::time);
}

Var frequency_attention(GradTape& t, Var q, Var k, Var v, const TfaParams& p) {
  return axis_attention(t, q, k, v, p, Axis::freq);
}

Var tf_self_attention(GradTape& t, Var x, const TfaParams& p_t, const TfaParams& p_f) {
  Var h = temporal_attention(t, x, x, x, p_t);
  return frequency_attention(t, x, h, x, p_f);
}

Var tf_attention_gate(GradTape& t, Var skip, Var gate, const TfaParams& p_t,
                      const TfaParams& p_f) {
  require(t.shape(skip) == t.shape(gate), "attention gate: skip/gate shape mismatch " +
                                              t.shape(skip).str() + " vs " + t.shape(gate).str());
  Var h = temporal_attention(t, skip, gate, skip, p_t);
  return frequency_attention(t, skip, h, skip, p_f);
}

}  // namespace sepipe::nn
