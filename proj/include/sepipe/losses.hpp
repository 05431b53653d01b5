#pragma once

#include "sepipe/nn/ops.hpp"

namespace sepipe::losses {

struct LossWeights {
  double lambda_cycle = 5.0;
  double lambda_id = 10.0;
  double gamma = 0.5;

  void validate() const {
    require(lambda_cycle >= 0 && lambda_id >= 0 && gamma >= 0,
            "loss weights must be nonnegative");
  }
};

// Relativistic average least-squares discriminator loss:
//   mean[(D(real) - mean(D(fake)) - 1)^2] + mean[(D(fake) - mean(D(real)) + 1)^2]
nn::Var rals_d_loss(nn::GradTape& t, nn::Var real_scores, nn::Var fake_scores);

// Generator counterpart; identically rals_d_loss with the roles swapped.
nn::Var rals_g_loss(nn::GradTape& t, nn::Var real_scores, nn::Var fake_scores);

// L1 reconstruction error of both cycles, summed.
nn::Var cycle_loss(nn::GradTape& t, nn::Var x, nn::Var x_cycled, nn::Var y, nn::Var y_cycled);

// L1 penalty pulling each generator toward the identity on same-domain input.
nn::Var identity_loss(nn::GradTape& t, nn::Var fx, nn::Var x, nn::Var gy, nn::Var y);

// adv_g + adv_f + lambda_cycle * cyc + lambda_id * id; the identity term is
// weighted by zero once the schedule turns it off.
nn::Var cyclegan_total(nn::GradTape& t, nn::Var adv_g, nn::Var adv_f, nn::Var cyc, nn::Var id,
                       const LossWeights& w, bool include_identity);

// MSE between magnitudes, with sqrt(x^2 + y^2 + 1e-12) for differentiability.
nn::Var dcd_mag_loss(nn::GradTape& t, nn::CVar s_hat, nn::CVar s_ref);

// MSE on the real parts plus MSE on the imaginary parts.
nn::Var dcd_ri_loss(nn::GradTape& t, nn::CVar s_hat, nn::CVar s_ref);

// ri + mag + gamma * cyclegan.
nn::Var full_loss(nn::GradTape& t, nn::Var dcd_ri, nn::Var dcd_mag, nn::Var cyclegan,
                  double gamma);

}  // namespace sepipe::losses
