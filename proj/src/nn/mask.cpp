#include "sepipe/nn/mask.hpp"

namespace sepipe::nn {

dsp::ComplexSpectrogram ideal_crm(const dsp::ComplexSpectrogram& x,
                                  const dsp::ComplexSpectrogram& s, double floor) {
  require(x.frames == s.frames && x.bins == s.bins, "ideal_crm: shape mismatch");
  dsp::ComplexSpectrogram m = x;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    double xr = x.data[i].real(), xi = x.data[i].imag();
    double sr = s.data[i].real(), si = s.data[i].imag();
    double den = xr * xr + xi * xi + floor;
    m.data[i] = {(xr * sr + xi * si) / den, (xr * si - xi * sr) / den};
  }
  return m;
}

CVar bound_mask(GradTape& t, CVar raw, double eps) {
  Var m = magnitude_eps(t, raw.re, raw.im, eps);
  // tanh capped a hair below 1 so the mask magnitude stays strictly inside
  // the unit circle even where double rounding would saturate tanh to 1.
  Var bounded = min_const(t, tanh_op(t, m), 1.0 - 1e-12);
  Var scale = div(t, bounded, m);
  return {mul(t, raw.re, scale), mul(t, raw.im, scale)};
}

CVar apply_mask(GradTape& t, CVar x, CVar m) {
  Var rr = mul(t, x.re, m.re);
  Var ii = mul(t, x.im, m.im);
  Var ri = mul(t, x.re, m.im);
  Var ir = mul(t, x.im, m.re);
  return {sub(t, rr, ii), add(t, ri, ir)};
}

dsp::ComplexSpectrogram apply_mask(const dsp::ComplexSpectrogram& x,
                                   const dsp::ComplexSpectrogram& m) {
  require(x.frames == m.frames && x.bins == m.bins, "apply_mask: shape mismatch");
  dsp::ComplexSpectrogram out = x;
  for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] * m.data[i];
  return out;
}

}  // namespace sepipe::nn
