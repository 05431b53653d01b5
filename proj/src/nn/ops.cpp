#include "sepipe/nn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace sepipe::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

namespace {

void check_same_shape(const GradTape& t, Var a, Var b, const char* op) {
  require(t.shape(a) == t.shape(b), std::string(op) + ": shape mismatch " + t.shape(a).str() +
                                        " vs " + t.shape(b).str());
}

bool scalar_b(const GradTape& t, Var b) { return t.value(b).is_scalar(); }

}  // namespace

Var add(GradTape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  if (!scalar_b(t, b)) check_same_shape(t, a, b, "add");
  Tensor out = va;
  if (vb.is_scalar()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[0];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  }
  int ia = a.id, ib = b.id;
  return t.make(std::move(out), {ia, ib}, [ia, ib](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    Tensor& gb = tp.grad(ib);
    const Tensor& g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (gb.is_scalar()) {
      double s = 0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g[i];
      gb[0] += s;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Var sub(GradTape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  if (!scalar_b(t, b)) check_same_shape(t, a, b, "sub");
  Tensor out = va;
  if (vb.is_scalar()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[0];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  }
  int ia = a.id, ib = b.id;
  return t.make(std::move(out), {ia, ib}, [ia, ib](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    Tensor& gb = tp.grad(ib);
    const Tensor& g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (gb.is_scalar()) {
      double s = 0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g[i];
      gb[0] -= s;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(GradTape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  if (!scalar_b(t, b)) check_same_shape(t, a, b, "mul");
  Tensor out = va;
  if (vb.is_scalar()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[0];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  }
  int ia = a.id, ib = b.id;
  return t.make(std::move(out), {ia, ib}, [ia, ib](GradTape& tp, GradTape::Node& n) {
    const Tensor& va = tp.value(Var{ia});
    const Tensor& vb = tp.value(Var{ib});
    Tensor& ga = tp.grad(ia);
    Tensor& gb = tp.grad(ib);
    const Tensor& g = n.grad;
    if (vb.is_scalar()) {
      double s = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * vb[0];
        s += g[i] * va[i];
      }
      gb[0] += s;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * vb[i];
        gb[i] += g[i] * va[i];
      }
    }
  });
}

Var div(GradTape& t, Var a, Var b) {
  check_same_shape(t, a, b, "div");
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] / vb[i];
  int ia = a.id, ib = b.id;
  return t.make(std::move(out), {ia, ib}, [ia, ib](GradTape& tp, GradTape::Node& n) {
    const Tensor& vb = tp.value(Var{ib});
    Tensor& ga = tp.grad(ia);
    Tensor& gb = tp.grad(ib);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      double inv = 1.0 / vb[i];
      ga[i] += n.grad[i] * inv;
      gb[i] -= n.grad[i] * n.value[i] * inv;  // -a/b^2 = -value/b
    }
  });
}

Var neg(GradTape& t, Var a) { return mul_const(t, a, -1.0); }

Var add_const(GradTape& t, Var a, double k) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += k;
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i];
  });
}

Var mul_const(GradTape& t, Var a, double k) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= k;
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia, k](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * k;
  });
}

Var min_const(GradTape& t, Var a, double k) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], k);
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia, k](GradTape& tp, GradTape::Node& n) {
    const Tensor& x = tp.value(Var{ia});
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (x[i] <= k) ga[i] += n.grad[i];
  });
}

Var sqrt_op(GradTape& t, Var a) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]);
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * 0.5 / n.value[i];
  });
}

Var tanh_op(GradTape& t, Var a) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      ga[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
  });
}

Var sigmoid_op(GradTape& t, Var a) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      ga[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
  });
}

Var relu_op(GradTape& t, Var a) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia](GradTape& tp, GradTape::Node& n) {
    const Tensor& x = tp.value(Var{ia});
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (x[i] >= 0.0) ga[i] += n.grad[i];
  });
}

Var softplus_op(GradTape& t, Var a) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = out[i];
    out[i] = x > 30.0 ? x : std::log1p(std::exp(x));
  }
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia](GradTape& tp, GradTape::Node& n) {
    const Tensor& x = tp.value(Var{ia});
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      ga[i] += n.grad[i] / (1.0 + std::exp(-x[i]));
  });
}

Var magnitude_eps(GradTape& t, Var re, Var im, double eps) {
  check_same_shape(t, re, im, "magnitude_eps");
  const Tensor& r = t.value(re);
  const Tensor& c = t.value(im);
  Tensor out(r.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(r[i] * r[i] + c[i] * c[i] + eps);
  int ir = re.id, ii = im.id;
  return t.make(std::move(out), {ir, ii}, [ir, ii](GradTape& tp, GradTape::Node& n) {
    const Tensor& r = tp.value(Var{ir});
    const Tensor& c = tp.value(Var{ii});
    Tensor& gr = tp.grad(ir);
    Tensor& gi = tp.grad(ii);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      double inv = n.grad[i] / n.value[i];
      gr[i] += inv * r[i];
      gi[i] += inv * c[i];
    }
  });
}

Var prelu(GradTape& t, Var x, Var alpha) {
  const Tensor& vx = t.value(x);
  const Tensor& va = t.value(alpha);
  Shape s = vx.shape();
  require(va.shape() == Shape{1, s.c, 1, 1},
          "prelu: alpha must be (1,C,1,1) matching input channels");
  Tensor out(s);
  std::size_t plane = static_cast<std::size_t>(s.t) * s.f;
  for (int b = 0; b < s.b; ++b)
    for (int c = 0; c < s.c; ++c) {
      const double* src = vx.data() + (static_cast<std::size_t>(b) * s.c + c) * plane;
      double* dst = out.data() + (static_cast<std::size_t>(b) * s.c + c) * plane;
      double al = va[c];
      for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] >= 0.0 ? src[i] : al * src[i];
    }
  int ix = x.id, ia = alpha.id;
  return t.make(std::move(out), {ix, ia}, [ix, ia](GradTape& tp, GradTape::Node& n) {
    const Tensor& vx = tp.value(Var{ix});
    const Tensor& va = tp.value(Var{ia});
    Tensor& gx = tp.grad(ix);
    Tensor& ga = tp.grad(ia);
    Shape s = vx.shape();
    std::size_t plane = static_cast<std::size_t>(s.t) * s.f;
    for (int b = 0; b < s.b; ++b)
      for (int c = 0; c < s.c; ++c) {
        std::size_t off = (static_cast<std::size_t>(b) * s.c + c) * plane;
        double al = va[c];
        double acc = 0;
        for (std::size_t i = 0; i < plane; ++i) {
          double g = n.grad[off + i];
          double xv = vx[off + i];
          if (xv >= 0.0) {
            gx[off + i] += g;
          } else {
            gx[off + i] += g * al;
            acc += g * xv;
          }
        }
        ga[c] += acc;
      }
  });
}

Var glu(GradTape& t, Var x) {
  const Tensor& vx = t.value(x);
  Shape s = vx.shape();
  require(s.c % 2 == 0, "glu: channel count must be even, got " + std::to_string(s.c));
  int hc = s.c / 2;
  Tensor out(Shape{s.b, hc, s.t, s.f});
  std::size_t plane = static_cast<std::size_t>(s.t) * s.f;
  for (int b = 0; b < s.b; ++b)
    for (int c = 0; c < hc; ++c) {
      const double* a = vx.data() + (static_cast<std::size_t>(b) * s.c + c) * plane;
      const double* g = vx.data() + (static_cast<std::size_t>(b) * s.c + hc + c) * plane;
      double* dst = out.data() + (static_cast<std::size_t>(b) * hc + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = a[i] / (1.0 + std::exp(-g[i]));
    }
  int ix = x.id;
  return t.make(std::move(out), {ix}, [ix, hc](GradTape& tp, GradTape::Node& n) {
    const Tensor& vx = tp.value(Var{ix});
    Tensor& gx = tp.grad(ix);
    Shape s = vx.shape();
    std::size_t plane = static_cast<std::size_t>(s.t) * s.f;
    for (int b = 0; b < s.b; ++b)
      for (int c = 0; c < hc; ++c) {
        std::size_t offa = (static_cast<std::size_t>(b) * s.c + c) * plane;
        std::size_t offg = (static_cast<std::size_t>(b) * s.c + hc + c) * plane;
        std::size_t offo = (static_cast<std::size_t>(b) * hc + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          double sg = 1.0 / (1.0 + std::exp(-vx[offg + i]));
          double g = n.grad[offo + i];
          gx[offa + i] += g * sg;
          gx[offg + i] += g * vx[offa + i] * sg * (1.0 - sg);
        }
      }
  });
}

Var instance_norm(GradTape& t, Var x, Var gamma, Var beta, double eps) {
  const Tensor& vx = t.value(x);
  Shape s = vx.shape();
  require(t.value(gamma).shape() == Shape{1, s.c, 1, 1} &&
              t.value(beta).shape() == Shape{1, s.c, 1, 1},
          "instance_norm: gamma/beta must be (1,C,1,1)");
  std::size_t plane = static_cast<std::size_t>(s.t) * s.f;
  Tensor out(s);
  // Per-plane statistics are recomputed in the backward pass from the cached
  // mean and inverse std.
  auto mean = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.b) * s.c);
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.b) * s.c);
  const Tensor& vg = t.value(gamma);
  const Tensor& vb = t.value(beta);
  for (int b = 0; b < s.b; ++b)
    for (int c = 0; c < s.c; ++c) {
      std::size_t off = (static_cast<std::size_t>(b) * s.c + c) * plane;
      double m = 0;
      for (std::size_t i = 0; i < plane; ++i) m += vx[off + i];
      m /= static_cast<double>(plane);
      double var = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        double d = vx[off + i] - m;
        var += d * d;
      }
      var /= static_cast<double>(plane);
      double is = 1.0 / std::sqrt(var + eps);
      (*mean)[b * s.c + c] = m;
      (*inv_std)[b * s.c + c] = is;
      for (std::size_t i = 0; i < plane; ++i)
        out[off + i] = (vx[off + i] - m) * is * vg[c] + vb[c];
    }
  int ix = x.id, ig = gamma.id, ib = beta.id;
  return t.make(std::move(out), {ix, ig, ib},
                [ix, ig, ib, mean, inv_std](GradTape& tp, GradTape::Node& n) {
    const Tensor& vx = tp.value(Var{ix});
    const Tensor& vg = tp.value(Var{ig});
    Tensor& gx = tp.grad(ix);
    Tensor& gg = tp.grad(ig);
    Tensor& gb = tp.grad(ib);
    Shape s = vx.shape();
    std::size_t plane = static_cast<std::size_t>(s.t) * s.f;
    double inv_p = 1.0 / static_cast<double>(plane);
    for (int b = 0; b < s.b; ++b)
      for (int c = 0; c < s.c; ++c) {
        std::size_t off = (static_cast<std::size_t>(b) * s.c + c) * plane;
        double m = (*mean)[b * s.c + c];
        double is = (*inv_std)[b * s.c + c];
        double sum_dy = 0, sum_dy_xhat = 0;
        for (std::size_t i = 0; i < plane; ++i) {
          double xhat = (vx[off + i] - m) * is;
          double dy = n.grad[off + i];
          sum_dy += dy;
          sum_dy_xhat += dy * xhat;
        }
        gb[c] += sum_dy;
        gg[c] += sum_dy_xhat;
        double k1 = sum_dy * inv_p;
        double k2 = sum_dy_xhat * inv_p;
        for (std::size_t i = 0; i < plane; ++i) {
          double xhat = (vx[off + i] - m) * is;
          gx[off + i] += vg[c] * is * (n.grad[off + i] - k1 - xhat * k2);
        }
      }
  });
}

int conv_out_dim(int in, int k, int stride, int pad, int dil) {
  return (in + 2 * pad - dil * (k - 1) - 1) / stride + 1;
}

int deconv_out_dim(int in, int k, int stride, int pad, int dil, int out_pad) {
  return (in - 1) * stride - 2 * pad + dil * (k - 1) + 1 + out_pad;
}

namespace {

// cols[(i,a,c), (gt,gf)] = img[i, gt*sT - pT + dT*a, gf*sF - pF + dF*c], with
// out-of-range taps reading 0. img is one batch member, (C, H, W) row-major.
void im2col_gather(const double* img, int C, int H, int W, const Conv2dGeom& g, int kT, int kF,
                   int gT, int gF, RowMat& cols) {
  cols.setZero();
  for (int i = 0; i < C; ++i) {
    const double* ch = img + static_cast<std::size_t>(i) * H * W;
    for (int a = 0; a < kT; ++a)
      for (int c = 0; c < kF; ++c) {
        int row = (i * kT + a) * kF + c;
        double* dst = cols.data() + static_cast<std::size_t>(row) * gT * gF;
        for (int gt = 0; gt < gT; ++gt) {
          int ht = gt * g.stride_t - g.pad_t + g.dil_t * a;
          if (ht < 0 || ht >= H) continue;
          const double* src = ch + static_cast<std::size_t>(ht) * W;
          int base = gt * gF;
          for (int gf = 0; gf < gF; ++gf) {
            int wf = gf * g.stride_f - g.pad_f + g.dil_f * c;
            if (wf < 0 || wf >= W) continue;
            dst[base + gf] = src[wf];
          }
        }
      }
  }
}

// Adjoint of im2col_gather: scatter-add cols back into img.
void col2im_scatter(double* img, int C, int H, int W, const Conv2dGeom& g, int kT, int kF, int gT,
                    int gF, const RowMat& cols) {
  for (int i = 0; i < C; ++i) {
    double* ch = img + static_cast<std::size_t>(i) * H * W;
    for (int a = 0; a < kT; ++a)
      for (int c = 0; c < kF; ++c) {
        int row = (i * kT + a) * kF + c;
        const double* src = cols.data() + static_cast<std::size_t>(row) * gT * gF;
        for (int gt = 0; gt < gT; ++gt) {
          int ht = gt * g.stride_t - g.pad_t + g.dil_t * a;
          if (ht < 0 || ht >= H) continue;
          double* dst = ch + static_cast<std::size_t>(ht) * W;
          int base = gt * gF;
          for (int gf = 0; gf < gF; ++gf) {
            int wf = gf * g.stride_f - g.pad_f + g.dil_f * c;
            if (wf < 0 || wf >= W) continue;
            dst[wf] += src[base + gf];
          }
        }
      }
  }
}

}  // namespace

Var conv2d(GradTape& t, Var x, Var w, Var bias, const Conv2dGeom& g) {
  const Tensor& vx = t.value(x);
  const Tensor& vw = t.value(w);
  Shape xs = vx.shape();
  Shape ws = vw.shape();  // (Co, Ci, kT, kF)
  require(ws.c == xs.c, "conv2d: kernel expects " + std::to_string(ws.c) + " input channels, got " +
                            std::to_string(xs.c));
  int Co = ws.b, Ci = ws.c, kT = ws.t, kF = ws.f;
  int outT = conv_out_dim(xs.t, kT, g.stride_t, g.pad_t, g.dil_t);
  int outF = conv_out_dim(xs.f, kF, g.stride_f, g.pad_f, g.dil_f);
  require(outT >= 1 && outF >= 1, "conv2d: output dims collapse to zero for input " + xs.str());
  if (bias.valid())
    require(t.value(bias).shape() == Shape{1, Co, 1, 1}, "conv2d: bias must be (1,Cout,1,1)");

  int K = Ci * kT * kF;
  std::size_t L = static_cast<std::size_t>(outT) * outF;
  Tensor out(Shape{xs.b, Co, outT, outF});
  {
    RowMat cols(K, static_cast<Eigen::Index>(L));
    CMapRM W(vw.data(), Co, K);
    for (int n = 0; n < xs.b; ++n) {
      im2col_gather(vx.data() + static_cast<std::size_t>(n) * Ci * xs.t * xs.f, Ci, xs.t, xs.f, g,
                    kT, kF, outT, outF, cols);
      MapRM O(out.data() + static_cast<std::size_t>(n) * Co * L, Co, static_cast<Eigen::Index>(L));
      O.noalias() = W * cols;
    }
  }
  if (bias.valid()) {
    const Tensor& vb = t.value(bias);
    for (int n = 0; n < xs.b; ++n)
      for (int o = 0; o < Co; ++o) {
        double* dst = out.data() + (static_cast<std::size_t>(n) * Co + o) * L;
        for (std::size_t i = 0; i < L; ++i) dst[i] += vb[o];
      }
  }

  int ix = x.id, iw = w.id, ib = bias.valid() ? bias.id : -1;
  std::vector<int> parents{ix, iw};
  if (ib >= 0) parents.push_back(ib);
  Conv2dGeom geom = g;
  return t.make(std::move(out), std::move(parents),
                [ix, iw, ib, geom](GradTape& tp, GradTape::Node& n) {
    const Tensor& vx = tp.value(Var{ix});
    const Tensor& vw = tp.value(Var{iw});
    Shape xs = vx.shape(), ws = vw.shape(), os = n.value.shape();
    int Co = ws.b, Ci = ws.c, kT = ws.t, kF = ws.f;
    int K = Ci * kT * kF;
    std::size_t L = static_cast<std::size_t>(os.t) * os.f;
    Tensor& gx = tp.grad(ix);
    Tensor& gw = tp.grad(iw);
    CMapRM W(vw.data(), Co, K);
    MapRM GW(gw.data(), Co, K);
    RowMat cols(K, static_cast<Eigen::Index>(L));
    RowMat dcols(K, static_cast<Eigen::Index>(L));
    for (int b = 0; b < xs.b; ++b) {
      CMapRM GO(n.grad.data() + static_cast<std::size_t>(b) * Co * L, Co,
                static_cast<Eigen::Index>(L));
      dcols.noalias() = W.transpose() * GO;
      col2im_scatter(gx.data() + static_cast<std::size_t>(b) * Ci * xs.t * xs.f, Ci, xs.t, xs.f,
                     geom, kT, kF, os.t, os.f, dcols);
      im2col_gather(vx.data() + static_cast<std::size_t>(b) * Ci * xs.t * xs.f, Ci, xs.t, xs.f,
                    geom, kT, kF, os.t, os.f, cols);
      GW.noalias() += GO * cols.transpose();
    }
    if (ib >= 0) {
      Tensor& gb = tp.grad(ib);
      for (int b = 0; b < os.b; ++b)
        for (int o = 0; o < Co; ++o) {
          const double* src = n.grad.data() + (static_cast<std::size_t>(b) * Co + o) * L;
          double acc = 0;
          for (std::size_t i = 0; i < L; ++i) acc += src[i];
          gb[o] += acc;
        }
    }
  });
}

Var deconv2d(GradTape& t, Var x, Var w, Var bias, const Conv2dGeom& g) {
  const Tensor& vx = t.value(x);
  const Tensor& vw = t.value(w);
  Shape xs = vx.shape();
  Shape ws = vw.shape();  // (Ci, Co, kT, kF)
  require(ws.b == xs.c, "deconv2d: kernel expects " + std::to_string(ws.b) +
                            " input channels, got " + std::to_string(xs.c));
  int Ci = ws.b, Co = ws.c, kT = ws.t, kF = ws.f;
  int outT = deconv_out_dim(xs.t, kT, g.stride_t, g.pad_t, g.dil_t, g.out_pad_t);
  int outF = deconv_out_dim(xs.f, kF, g.stride_f, g.pad_f, g.dil_f, g.out_pad_f);
  require(outT >= 1 && outF >= 1, "deconv2d: output dims collapse to zero");
  if (bias.valid())
    require(t.value(bias).shape() == Shape{1, Co, 1, 1}, "deconv2d: bias must be (1,Cout,1,1)");

  int K = Co * kT * kF;
  std::size_t Lin = static_cast<std::size_t>(xs.t) * xs.f;
  Tensor out(Shape{xs.b, Co, outT, outF});
  {
    CMapRM W(vw.data(), Ci, K);
    RowMat z(K, static_cast<Eigen::Index>(Lin));
    for (int n = 0; n < xs.b; ++n) {
      CMapRM U(vx.data() + static_cast<std::size_t>(n) * Ci * Lin, Ci,
               static_cast<Eigen::Index>(Lin));
      z.noalias() = W.transpose() * U;
      col2im_scatter(out.data() + static_cast<std::size_t>(n) * Co * outT * outF, Co, outT, outF,
                     g, kT, kF, xs.t, xs.f, z);
    }
  }
  if (bias.valid()) {
    const Tensor& vb = t.value(bias);
    std::size_t Lo = static_cast<std::size_t>(outT) * outF;
    for (int n = 0; n < xs.b; ++n)
      for (int o = 0; o < Co; ++o) {
        double* dst = out.data() + (static_cast<std::size_t>(n) * Co + o) * Lo;
        for (std::size_t i = 0; i < Lo; ++i) dst[i] += vb[o];
      }
  }

  int ix = x.id, iw = w.id, ib = bias.valid() ? bias.id : -1;
  std::vector<int> parents{ix, iw};
  if (ib >= 0) parents.push_back(ib);
  Conv2dGeom geom = g;
  return t.make(std::move(out), std::move(parents),
                [ix, iw, ib, geom](GradTape& tp, GradTape::Node& n) {
    const Tensor& vx = tp.value(Var{ix});
    const Tensor& vw = tp.value(Var{iw});
    Shape xs = vx.shape(), ws = vw.shape(), os = n.value.shape();
    int Ci = ws.b, Co = ws.c, kT = ws.t, kF = ws.f;
    int K = Co * kT * kF;
    std::size_t Lin = static_cast<std::size_t>(xs.t) * xs.f;
    Tensor& gx = tp.grad(ix);
    Tensor& gw = tp.grad(iw);
    CMapRM W(vw.data(), Ci, K);
    MapRM GW(gw.data(), Ci, K);
    RowMat dz(K, static_cast<Eigen::Index>(Lin));
    for (int b = 0; b < xs.b; ++b) {
      dz.setZero();
      im2col_gather(n.grad.data() + static_cast<std::size_t>(b) * Co * os.t * os.f, Co, os.t,
                    os.f, geom, kT, kF, xs.t, xs.f, dz);
      MapRM GX(gx.data() + static_cast<std::size_t>(b) * Ci * Lin, Ci,
               static_cast<Eigen::Index>(Lin));
      GX.noalias() += W * dz;
      CMapRM U(vx.data() + static_cast<std::size_t>(b) * Ci * Lin, Ci,
               static_cast<Eigen::Index>(Lin));
      GW.noalias() += U * dz.transpose();
    }
    if (ib >= 0) {
      Tensor& gb = tp.grad(ib);
      std::size_t Lo = static_cast<std::size_t>(os.t) * os.f;
      for (int b = 0; b < os.b; ++b)
        for (int o = 0; o < Co; ++o) {
          const double* src = n.grad.data() + (static_cast<std::size_t>(b) * Co + o) * Lo;
          double acc = 0;
          for (std::size_t i = 0; i < Lo; ++i) acc += src[i];
          gb[o] += acc;
        }
    }
  });
}

Var softmax_rows(GradTape& t, Var x) {
  const Tensor& vx = t.value(x);
  Shape s = vx.shape();
  Tensor out(s);
  std::size_t rows = s.size() / s.f;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = vx.data() + r * s.f;
    double* dst = out.data() + r * s.f;
    double mx = src[0];
    for (int i = 1; i < s.f; ++i) mx = std::max(mx, src[i]);
    double z = 0;
    for (int i = 0; i < s.f; ++i) {
      dst[i] = std::exp(src[i] - mx);
      z += dst[i];
    }
    double inv = 1.0 / z;
    for (int i = 0; i < s.f; ++i) dst[i] *= inv;
  }
  int ix = x.id;
  return t.make(std::move(out), {ix}, [ix](GradTape& tp, GradTape::Node& n) {
    Tensor& gx = tp.grad(ix);
    Shape s = n.value.shape();
    std::size_t rows = s.size() / s.f;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * s.f;
      const double* dy = n.grad.data() + r * s.f;
      double* dst = gx.data() + r * s.f;
      double dot = 0;
      for (int i = 0; i < s.f; ++i) dot += dy[i] * y[i];
      for (int i = 0; i < s.f; ++i) dst[i] += (dy[i] - dot) * y[i];
    }
  });
}

Var bmm(GradTape& t, Var a, Var b, bool trans_b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  Shape as = va.shape(), bs = vb.shape();
  require(as.c == 1 && bs.c == 1 && as.b == bs.b, "bmm: expects (G,1,R,K) operands");
  int G = as.b, R = as.t, K = as.f;
  int C = trans_b ? bs.t : bs.f;
  require((trans_b ? bs.f : bs.t) == K, "bmm: inner dims mismatch");
  Tensor out(Shape{G, 1, R, C});
  for (int g = 0; g < G; ++g) {
    CMapRM A(va.data() + static_cast<std::size_t>(g) * R * K, R, K);
    MapRM O(out.data() + static_cast<std::size_t>(g) * R * C, R, C);
    if (trans_b) {
      CMapRM B(vb.data() + static_cast<std::size_t>(g) * C * K, C, K);
      O.noalias() = A * B.transpose();
    } else {
      CMapRM B(vb.data() + static_cast<std::size_t>(g) * K * C, K, C);
      O.noalias() = A * B;
    }
  }
  int ia = a.id, ib = b.id;
  return t.make(std::move(out), {ia, ib}, [ia, ib, trans_b](GradTape& tp, GradTape::Node& n) {
    const Tensor& va = tp.value(Var{ia});
    const Tensor& vb = tp.value(Var{ib});
    Shape as = va.shape(), os = n.value.shape();
    int G = as.b, R = as.t, K = as.f, C = os.f;
    Tensor& ga = tp.grad(ia);
    Tensor& gb = tp.grad(ib);
    for (int g = 0; g < G; ++g) {
      CMapRM GO(n.grad.data() + static_cast<std::size_t>(g) * R * C, R, C);
      CMapRM A(va.data() + static_cast<std::size_t>(g) * R * K, R, K);
      MapRM GA(ga.data() + static_cast<std::size_t>(g) * R * K, R, K);
      if (trans_b) {
        CMapRM B(vb.data() + static_cast<std::size_t>(g) * C * K, C, K);
        MapRM GB(gb.data() + static_cast<std::size_t>(g) * C * K, C, K);
        GA.noalias() += GO * B;
        GB.noalias() += GO.transpose() * A;
      } else {
        CMapRM B(vb.data() + static_cast<std::size_t>(g) * K * C, K, C);
        MapRM GB(gb.data() + static_cast<std::size_t>(g) * K * C, K, C);
        GA.noalias() += GO * B.transpose();
        GB.noalias() += A.transpose() * GO;
      }
    }
  });
}

namespace {

void permute_copy(const Tensor& in, const std::array<int, 4>& order, Tensor& out) {
  std::array<int, 4> in_dims{in.shape().b, in.shape().c, in.shape().t, in.shape().f};
  std::array<std::size_t, 4> in_strides;
  in_strides[3] = 1;
  in_strides[2] = static_cast<std::size_t>(in_dims[3]);
  in_strides[1] = in_strides[2] * in_dims[2];
  in_strides[0] = in_strides[1] * in_dims[1];
  std::array<int, 4> od{out.shape().b, out.shape().c, out.shape().t, out.shape().f};
  std::size_t idx = 0;
  for (int i0 = 0; i0 < od[0]; ++i0)
    for (int i1 = 0; i1 < od[1]; ++i1)
      for (int i2 = 0; i2 < od[2]; ++i2) {
        std::size_t base = static_cast<std::size_t>(i0) * in_strides[order[0]] +
                           static_cast<std::size_t>(i1) * in_strides[order[1]] +
                           static_cast<std::size_t>(i2) * in_strides[order[2]];
        std::size_t st = in_strides[order[3]];
        const double* src = in.data();
        for (int i3 = 0; i3 < od[3]; ++i3) out[idx++] = src[base + st * i3];
      }
}

}  // namespace

Var permute(GradTape& t, Var x, std::array<int, 4> order) {
  const Tensor& vx = t.value(x);
  std::array<int, 4> in_dims{vx.shape().b, vx.shape().c, vx.shape().t, vx.shape().f};
  Tensor out(Shape{in_dims[order[0]], in_dims[order[1]], in_dims[order[2]], in_dims[order[3]]});
  permute_copy(vx, order, out);
  int ix = x.id;
  std::array<int, 4> inv{};
  for (int i = 0; i < 4; ++i) inv[order[i]] = i;
  return t.make(std::move(out), {ix}, [ix, inv](GradTape& tp, GradTape::Node& n) {
    Tensor& gx = tp.grad(ix);
    Tensor tmp(gx.shape());
    permute_copy(n.grad, inv, tmp);
    for (std::size_t i = 0; i < tmp.size(); ++i) gx[i] += tmp[i];
  });
}

Var reshape(GradTape& t, Var x, Shape s) {
  Tensor out = t.value(x).reshaped(s);
  int ix = x.id;
  return t.make(std::move(out), {ix}, [ix](GradTape& tp, GradTape::Node& n) {
    Tensor& gx = tp.grad(ix);
    for (std::size_t i = 0; i < n.grad.size(); ++i) gx[i] += n.grad[i];
  });
}

Var concat_c(GradTape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  Shape as = va.shape(), bs = vb.shape();
  require(as.b == bs.b && as.t == bs.t && as.f == bs.f,
          "concat_c: non-channel dims must match: " + as.str() + " vs " + bs.str());
  Tensor out(Shape{as.b, as.c + bs.c, as.t, as.f});
  std::size_t plane = static_cast<std::size_t>(as.t) * as.f;
  for (int n = 0; n < as.b; ++n) {
    std::copy(va.data() + static_cast<std::size_t>(n) * as.c * plane,
              va.data() + static_cast<std::size_t>(n + 1) * as.c * plane,
              out.data() + static_cast<std::size_t>(n) * (as.c + bs.c) * plane);
    std::copy(vb.data() + static_cast<std::size_t>(n) * bs.c * plane,
              vb.data() + static_cast<std::size_t>(n + 1) * bs.c * plane,
              out.data() + static_cast<std::size_t>(n) * (as.c + bs.c) * plane +
                  static_cast<std::size_t>(as.c) * plane);
  }
  int ia = a.id, ib = b.id;
  int ca = as.c;
  return t.make(std::move(out), {ia, ib}, [ia, ib, ca](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    Tensor& gb = tp.grad(ib);
    Shape os = n.value.shape();
    int cb = os.c - ca;
    std::size_t plane = static_cast<std::size_t>(os.t) * os.f;
    for (int b = 0; b < os.b; ++b) {
      const double* src = n.grad.data() + static_cast<std::size_t>(b) * os.c * plane;
      double* da = ga.data() + static_cast<std::size_t>(b) * ca * plane;
      double* db = gb.data() + static_cast<std::size_t>(b) * cb * plane;
      for (std::size_t i = 0; i < static_cast<std::size_t>(ca) * plane; ++i) da[i] += src[i];
      for (std::size_t i = 0; i < static_cast<std::size_t>(cb) * plane; ++i)
        db[i] += src[static_cast<std::size_t>(ca) * plane + i];
    }
  });
}

Var sum_all(GradTape& t, Var a) {
  const Tensor& va = t.value(a);
  double s = 0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i];
  int ia = a.id;
  return t.make(Tensor::scalar(s), {ia}, [ia](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    double g = n.grad[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean_all(GradTape& t, Var a) {
  const Tensor& va = t.value(a);
  double s = 0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i];
  double inv = 1.0 / static_cast<double>(va.size());
  int ia = a.id;
  return t.make(Tensor::scalar(s * inv), {ia}, [ia, inv](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    double g = n.grad[0] * inv;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean_keep_b(GradTape& t, Var a) {
  const Tensor& va = t.value(a);
  Shape s = va.shape();
  std::size_t per = va.size() / s.b;
  Tensor out(Shape{s.b, 1, 1, 1});
  for (int b = 0; b < s.b; ++b) {
    const double* src = va.data() + static_cast<std::size_t>(b) * per;
    double acc = 0;
    for (std::size_t i = 0; i < per; ++i) acc += src[i];
    out[b] = acc / static_cast<double>(per);
  }
  int ia = a.id;
  return t.make(std::move(out), {ia}, [ia, per](GradTape& tp, GradTape::Node& n) {
    Tensor& ga = tp.grad(ia);
    double inv = 1.0 / static_cast<double>(per);
    for (int b = 0; b < n.value.shape().b; ++b) {
      double g = n.grad[b] * inv;
      double* dst = ga.data() + static_cast<std::size_t>(b) * per;
      for (std::size_t i = 0; i < per; ++i) dst[i] += g;
    }
  });
}

Var mse(GradTape& t, Var a, Var b) {
  check_same_shape(t, a, b, "mse");
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  double s = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    double d = va[i] - vb[i];
    s += d * d;
  }
  double inv = 1.0 / static_cast<double>(va.size());
  int ia = a.id, ib = b.id;
  return t.make(Tensor::scalar(s * inv), {ia, ib}, [ia, ib, inv](GradTape& tp, GradTape::Node& n) {
    const Tensor& va = tp.value(Var{ia});
    const Tensor& vb = tp.value(Var{ib});
    Tensor& ga = tp.grad(ia);
    Tensor& gb = tp.grad(ib);
    double g = 2.0 * n.grad[0] * inv;
    for (std::size_t i = 0; i < va.size(); ++i) {
      double d = g * (va[i] - vb[i]);
      ga[i] += d;
      gb[i] -= d;
    }
  });
}

Var mae(GradTape& t, Var a, Var b) {
  check_same_shape(t, a, b, "mae");
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  double s = 0;
  for (std::size_t i = 0; i < va.size(); ++i) s += std::abs(va[i] - vb[i]);
  double inv = 1.0 / static_cast<double>(va.size());
  int ia = a.id, ib = b.id;
  return t.make(Tensor::scalar(s * inv), {ia, ib}, [ia, ib, inv](GradTape& tp, GradTape::Node& n) {
    const Tensor& va = tp.value(Var{ia});
    const Tensor& vb = tp.value(Var{ib});
    Tensor& ga = tp.grad(ia);
    Tensor& gb = tp.grad(ib);
    double g = n.grad[0] * inv;
    for (std::size_t i = 0; i < va.size(); ++i) {
      double d = va[i] - vb[i];
      double sg = d > 0 ? g : (d < 0 ? -g : 0.0);
      ga[i] += sg;
      gb[i] -= sg;
    }
  });
}

Var scalar_gate(GradTape& t, Var lambda, Var o, Var k) {
  check_same_shape(t, o, k, "scalar_gate");
  const Tensor& vl = t.value(lambda);
  require(vl.is_scalar(), "scalar_gate: lambda must be scalar");
  const Tensor& vo = t.value(o);
  const Tensor& vk = t.value(k);
  Tensor out(vo.shape());
  double l = vl[0];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = l * vo[i] + vk[i];
  int il = lambda.id, io = o.id, ik = k.id;
  return t.make(std::move(out), {il, io, ik}, [il, io, ik](GradTape& tp, GradTape::Node& n) {
    const Tensor& vo = tp.value(Var{io});
    double l = tp.value(Var{il})[0];
    Tensor& gl = tp.grad(il);
    Tensor& go = tp.grad(io);
    Tensor& gk = tp.grad(ik);
    double acc = 0;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      double g = n.grad[i];
      acc += g * vo[i];
      go[i] += g * l;
      gk[i] += g;
    }
    gl[0] += acc;
  });
}

}  // namespace sepipe::nn
