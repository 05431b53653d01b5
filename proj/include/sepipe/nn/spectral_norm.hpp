#pragma once

#include <random>

#include "sepipe/nn/tape.hpp"

namespace sepipe::nn {

// Power-iteration estimate of the largest singular value of a kernel viewed
// as a (Cout x rest) matrix. u and v persist across steps and are part of
// the checkpoint; update() is called by the trainer outside the graph so
// that a recorded forward stays a deterministic function of the parameters.
class SpectralNorm {
 public:
  SpectralNorm() = default;
  SpectralNorm(const Tensor& w, std::mt19937_64& rng);

  // One power iteration on the current kernel value.
  void update(const Tensor& w);

  // sigma estimate u^T W v for the current vectors.
  double sigma(const Tensor& w) const;

  // Tape node for w / sigma; u and v enter as constants, so the gradient of
  // sigma with respect to w is the rank-one matrix u v^T.
  Var apply(GradTape& t, Var w) const;

  Tensor u, v;  // (1,1,1,Cout) and (1,1,1,rest)
};

}  // namespace sepipe::nn
