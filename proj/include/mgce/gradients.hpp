#pragma once

// Implicit-differentiation gradients for the minimax loss, plus a central
// finite-difference oracle for checking them.

#include "mgce/loss_core.hpp"
#include "mgce/models.hpp"
#include "mgce/objective.hpp"

#include <functional>
#include <vector>

namespace mgce {

using MarginGradient = std::vector<double>; // d loss / d f_y, sums to 0
using ParamGradient = std::vector<double>;  // d objective / d mu

// d phi / d f_y = -p(y|x), with p the worst-case distribution.
std::vector<double> phi_grad_margins(const MarginVector& margins,
                                     const LossParams& params);

// Gradient of margin_loss: p(.|x) - onehot(label).
MarginGradient margin_loss_grad(const MarginVector& margins, int label,
                                const LossParams& params);

// Per-sample stochastic gradient of the minimax objective over the
// final-layer coefficients mu:
//   g = lambda (.) sign(mu) - Phi(x, y) + sum_y p(y|x) Phi(x, y),
// with sign(0) := 0 and p the worst-case distribution at the current
// margins.
ParamGradient stochastic_param_gradient(const std::vector<double>& x,
                                        int label, const Model& model,
                                        const UncertaintyStats& stats,
                                        const LossParams& params);

// Central differences (fn(x + h e_i) - fn(x - h e_i)) / (2h) per coordinate.
std::vector<double> finite_difference_oracle(
    const std::function<double(const std::vector<double>&)>& fn,
    const std::vector<double>& point, double step);

struct GradCheckReport {
    double max_rel_err = 0.0;
    int trials = 0;
    double threshold = 0.0;
    bool pass = false;
};

// Margin-loss gradient against central differences at `trials` random points
// (margins uniform in [-3, 3]^k, uniform labels). Per-point relative error is
// the max-norm gap over max(max-norm of the oracle, 1). Bisection runs at
// kGradCheckBisectTol so solver discretization sits far below the
// finite-difference step.
GradCheckReport gradcheck_margin_loss(double beta, int k, int trials,
                                      std::uint64_t seed,
                                      double threshold = 1e-5);

// Same check for the per-sample parameter gradient of a random linear model
// with a random nonnegative lambda vector.
GradCheckReport gradcheck_param(double beta, int k, int d, int trials,
                                std::uint64_t seed, double threshold = 1e-5);

} // namespace mgce
