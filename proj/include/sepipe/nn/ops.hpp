#pragma once

#include <array>

#include "sepipe/nn/tape.hpp"

namespace sepipe::nn {

struct Conv2dGeom {
  int stride_t = 1, stride_f = 1;
  int pad_t = 0, pad_f = 0;
  int dil_t = 1, dil_f = 1;
  // Transposed convolutions only: extra rows/cols appended to the output.
  int out_pad_t = 0, out_pad_f = 0;
};

// Elementwise. Binary ops accept equal shapes, or a scalar-shaped `b` which
// broadcasts; the broadcast grad sum-reduces back into the scalar.
Var add(GradTape& t, Var a, Var b);
Var sub(GradTape& t, Var a, Var b);
Var mul(GradTape& t, Var a, Var b);
Var div(GradTape& t, Var a, Var b);  // b elementwise, must stay away from 0
Var neg(GradTape& t, Var a);
Var add_const(GradTape& t, Var a, double k);
Var mul_const(GradTape& t, Var a, double k);
Var min_const(GradTape& t, Var a, double k);  // elementwise min(a, k)

Var sqrt_op(GradTape& t, Var a);  // callers keep the argument bounded away from 0
Var tanh_op(GradTape& t, Var a);
Var sigmoid_op(GradTape& t, Var a);
Var relu_op(GradTape& t, Var a);
Var softplus_op(GradTape& t, Var a);

// sqrt(re^2 + im^2 + eps), fused.
Var magnitude_eps(GradTape& t, Var re, Var im, double eps);

// x if x >= 0 else alpha_c * x; alpha is per-channel (1,C,1,1).
Var prelu(GradTape& t, Var x, Var alpha);

// Splits channels in half: value half (first C/2) gated by sigmoid of the rest.
Var glu(GradTape& t, Var x);

// Per (batch, channel) plane standardization over (T,F), then gamma/beta.
Var instance_norm(GradTape& t, Var x, Var gamma, Var beta, double eps = 1e-5);

// x: (B,Ci,T,F), w: (Co,Ci,kT,kF), bias: (1,Co,1,1) or invalid Var for none.
Var conv2d(GradTape& t, Var x, Var w, Var bias, const Conv2dGeom& g);

// Transposed convolution, the adjoint of conv2d with matching geometry.
// x: (B,Ci,T,F), w: (Ci,Co,kT,kF), bias over the Co output channels.
Var deconv2d(GradTape& t, Var x, Var w, Var bias, const Conv2dGeom& g);

// Softmax over the last (f) axis with per-row max subtraction.
Var softmax_rows(GradTape& t, Var x);

// Batched matmul over the leading axis: a (G,1,R,K) times b (G,1,K,C), or
// b (G,1,C,K) when trans_b, giving (G,1,R,C).
Var bmm(GradTape& t, Var a, Var b, bool trans_b = false);

// out dim k = in dim order[k]; data is copied into the permuted layout.
Var permute(GradTape& t, Var x, std::array<int, 4> order);

Var reshape(GradTape& t, Var x, Shape s);

// Concatenate along channels.
Var concat_c(GradTape& t, Var a, Var b);

Var sum_all(GradTape& t, Var a);
Var mean_all(GradTape& t, Var a);
Var mean_keep_b(GradTape& t, Var a);  // -> (B,1,1,1)

Var mse(GradTape& t, Var a, Var b);  // mean squared error
Var mae(GradTape& t, Var a, Var b);  // mean absolute error

// lambda * o + k with a scalar-shaped lambda var (the attention gate).
Var scalar_gate(GradTape& t, Var lambda, Var o, Var k);

// Output spatial size helpers shared by layers and tests.
int conv_out_dim(int in, int k, int stride, int pad, int dil);
int deconv_out_dim(int in, int k, int stride, int pad, int dil, int out_pad);

}  // namespace sepipe::nn
