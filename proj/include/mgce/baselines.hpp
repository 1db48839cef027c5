#pragma once

// Baseline losses over margins (softmax-link CE and GCE, minimax MAE) so
// every loss can run under the identical model and optimizer.

#include "mgce/gradients.hpp"
#include "mgce/loss_core.hpp"

#include <utility>

namespace mgce {

enum class BaselineKind { ce, gce, mae_minimax };

// loss = logsumexp(f) - f_label, grad = softmax(f) - onehot(label)
std::pair<double, MarginGradient> ce_loss_and_grad(const MarginVector& margins,
                                                   int label);

// Softmax-link generalized cross-entropy:
//   loss  = beta * (1 - e^(f_y/beta) / (sum_j e^(f_j))^(1/beta))
//   grad_j = s_y^(1/beta) * (s_j - delta_jy),  s = softmax(f)
std::pair<double, MarginGradient> gce_loss_and_grad(
    const MarginVector& margins, int label, double beta);

// Minimax MAE: the implicit margin loss at beta = 1.
std::pair<double, MarginGradient> mae_loss_and_grad(
    const MarginVector& margins, int label, const LossParams& params);

} // namespace mgce
