#pragma once

#include "sepipe/nn/attention.hpp"
#include "sepipe/nn/ops.hpp"

namespace sepipe::nn {

// Complex kernel as two equally shaped real kernels.
struct ComplexKernel {
  Parameter* real = nullptr;
  Parameter* imag = nullptr;
};

// Four real convolutions: (Wr*Xr - Wi*Xi) + j(Wr*Xi + Wi*Xr).
CVar complex_conv2d(GradTape& t, CVar x, const ComplexKernel& w, const Conv2dGeom& g);

// Same combination built on transposed convolutions.
CVar complex_deconv2d(GradTape& t, CVar x, const ComplexKernel& w, const Conv2dGeom& g);

// Instance norm applied independently to the real and imaginary parts, each
// with its own gamma/beta.
CVar complex_instance_norm(GradTape& t, CVar x, Var gamma_r, Var beta_r, Var gamma_i, Var beta_i,
                           double eps = 1e-5);

// PReLU per part.
CVar cprelu(GradTape& t, CVar x, Var alpha_r, Var alpha_i);

CVar complex_concat_c(GradTape& t, CVar a, CVar b);

// Complex attention as eight real attention evaluations sharing one
// projection/lambda set:
//   re: TA(r,r,r) - TA(r,i,i) - TA(i,r,i) - TA(i,i,r)
//   im: TA(r,r,i) + TA(r,i,r) + TA(i,r,r) - TA(i,i,i)
// With lambda = 0 every call returns its K argument and the block reduces to
// 2j * X.
CVar complex_temporal_attention(GradTape& t, CVar x, const TfaParams& p);
CVar complex_frequency_attention(GradTape& t, CVar x, const TfaParams& p);

// CFA after CTA. Note this is not a real-embedding extension: a purely real
// X still produces cross terms (the K-substitution alone gives 2j * X per
// block), so it intentionally does not reduce to tf_self_attention.
CVar ct_f_sa(GradTape& t, CVar x, const TfaParams& p_t, const TfaParams& p_f);

}  // namespace sepipe::nn
