#pragma once

#include <deque>

#include "sepipe/nn/ops.hpp"

namespace sepipe::nn {

// Projection kernels and the learnable gate of one attention block. Queries
// and keys project to C/8 channels (floored at 1 for very thin models),
// values keep C. lambda starts at 0, making the block the identity on K.
struct TfaParams {
  Parameter* wq = nullptr;  // (Cq, C, 1, 1)
  Parameter* wk = nullptr;  // (Cq, C, 1, 1)
  Parameter* wv = nullptr;  // (C,  C, 1, 1)
  Parameter* lambda = nullptr;  // scalar
};

inline int attn_proj_channels(int c) { return c < 8 ? 1 : c / 8; }

// Attention over the time axis: project Q/K/V with 1x1 convs, flatten to
// (B*F') groups of T rows, row-softmax(Q'K'^T), apply to V', then
// lambda * O + K. The residual adds the unprojected K.
Var temporal_attention(GradTape& t, Var q, Var k, Var v, const TfaParams& p);

// Same with the roles of T and F' swapped: (B*T) groups of F' rows.
Var frequency_attention(GradTape& t, Var q, Var k, Var v, const TfaParams& p);

// FA after TA; Q and V stay the block input, K chains through the TA output.
// With both lambdas at 0 this is the identity on x.
Var tf_self_attention(GradTape& t, Var x, const TfaParams& p_t, const TfaParams& p_f);

// Skip-connection gate: queries/values from the homologous encoder skip,
// keys from the decoder path. With lambdas at 0 the gate passes `gate`.
Var tf_attention_gate(GradTape& t, Var skip, Var gate, const TfaParams& p_t,
                      const TfaParams& p_f);

}  // namespace sepipe::nn
