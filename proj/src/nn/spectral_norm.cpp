#include "sepipe/nn/spectral_norm.hpp"

#include <cmath>

namespace sepipe::nn {

namespace {

constexpr double kNormEps = 1e-12;

void normalize(Tensor& x) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * x[i];
  s = std::sqrt(s) + kNormEps;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] /= s;
}

}  // namespace

SpectralNorm::SpectralNorm(const Tensor& w, std::mt19937_64& rng) {
  int rows = w.shape().b;
  int cols = static_cast<int>(w.size()) / rows;
  u = Tensor(Shape{1, 1, 1, rows});
  v = Tensor(Shape{1, 1, 1, cols});
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = dist(rng);
  normalize(u);
  update(w);
}

void SpectralNorm::update(const Tensor& w) {
  int rows = w.shape().b;
  int cols = static_cast<int>(w.size()) / rows;
  // v <- normalize(W^T u); u <- normalize(W v)
  for (int c = 0; c < cols; ++c) {
    double s = 0;
    for (int r = 0; r < rows; ++r) s += w[static_cast<std::size_t>(r) * cols + c] * u[r];
    v[c] = s;
  }
  normalize(v);
  for (int r = 0; r < rows; ++r) {
    double s = 0;
    for (int c = 0; c < cols; ++c) s += w[static_cast<std::size_t>(r) * cols + c] * v[c];
    u[r] = s;
  }
  normalize(u);
}

double SpectralNorm::sigma(const Tensor& w) const {
  int rows = w.shape().b;
  int cols = static_cast<int>(w.size()) / rows;
  double s = 0;
  for (int r = 0; r < rows; ++r) {
    double acc = 0;
    for (int c = 0; c < cols; ++c) acc += w[static_cast<std::size_t>(r) * cols + c] * v[c];
    s += u[r] * acc;
  }
  return s;
}

Var SpectralNorm::apply(GradTape& t, Var w) const {
  const Tensor& vw = t.value(w);
  double sg = sigma(vw);
  require_runtime(std::abs(sg) > kNormEps, "spectral_norm: vanishing sigma estimate");
  Tensor out = vw;
  double inv = 1.0 / sg;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
  int iw = w.id;
  Tensor uc = u, vc = v;
  return t.make(std::move(out), {iw}, [iw, sg, uc, vc](GradTape& tp, GradTape::Node& n) {
    const Tensor& vw = tp.value(Var{iw});
    Tensor& gw = tp.grad(iw);
    int rows = vw.shape().b;
    int cols = static_cast<int>(vw.size()) / rows;
    double inv = 1.0 / sg;
    // d(w/sigma) = g/sigma - (sum g .* w) / sigma^2 * u v^T
    double dot = 0;
    for (std::size_t i = 0; i < vw.size(); ++i) dot += n.grad[i] * vw[i];
    double coef = dot * inv * inv;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        std::size_t i = static_cast<std::size_t>(r) * cols + c;
        gw[i] += n.grad[i] * inv - coef * uc[r] * vc[c];
      }
  });
}

}  // namespace sepipe::nn
