#pragma once

#include "sepipe/dsp/stft.hpp"
#include "sepipe/nn/ops.hpp"

namespace sepipe::nn {

// Ideal complex ratio mask M with X * M = S, computed cellwise with a floor
// on |X|^2 to keep silent cells defined:
//   M_r = (Xr Sr + Xi Si) / (Xr^2 + Xi^2 + floor)
//   M_i = (Xr Si - Xi Sr) / (Xr^2 + Xi^2 + floor)
dsp::ComplexSpectrogram ideal_crm(const dsp::ComplexSpectrogram& x,
                                  const dsp::ComplexSpectrogram& s, double floor = 1e-10);

// Bounds a raw complex output into the open unit disc: magnitude tanh(|raw|),
// phase preserved. Computed in Cartesian form as raw * tanh(m)/m with
// m = sqrt(re^2 + im^2 + eps), which is smooth at 0 and maps 0 to 0.
CVar bound_mask(GradTape& t, CVar raw, double eps = 1e-12);

// Elementwise complex multiplication X * M (the Cartesian equivalent of
// |X| * M_mag * exp(j(theta_X + theta_M))).
CVar apply_mask(GradTape& t, CVar x, CVar m);

// Plain (non-tape) form for evaluation paths.
dsp::ComplexSpectrogram apply_mask(const dsp::ComplexSpectrogram& x,
                                   const dsp::ComplexSpectrogram& m);

}  // namespace sepipe::nn
