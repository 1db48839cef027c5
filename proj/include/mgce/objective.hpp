#pragma once

// Uncertainty-set statistics, the full minimax objective value and its
// decomposition, the risk upper bound report, and the single-instance
// calibration fit.

#include "mgce/loss_core.hpp"
#include "mgce/models.hpp"

#include <vector>

namespace mgce {

struct UncertaintyStats {
    std::vector<double> tau;    // feature-mean estimate, length m
    std::vector<double> s;      // component-wise sample std (divisor n)
    std::vector<double> lambda; // lambda0 * s
    double lambda0 = 1e-5;
    double delta = 0.05;
    int m = 0;
};

// Sample mean and population standard deviation of the feature-map samples
// Phi(x_i, y_i); lambda = lambda0 * s.
UncertaintyStats estimate_stats(const std::vector<std::vector<double>>& phis,
                                double lambda0);

// lambda0 = sqrt((log m + log(2/delta)) / 2); with this choice the true
// distribution lies in the uncertainty set with probability 1 - delta.
double lambda0_from_confidence(int m, double delta);

struct ObjectiveValue {
    double v_beta = 0.0;
    double term_tau = 0.0;      // -tau . mu
    double term_lambda = 0.0;   // lambda . |mu|
    double term_phi_mean = 0.0; // -(1/n) sum_i phi(f(x_i))
};

// V_beta = -tau.mu + lambda.|mu| - E[phi]; the three terms are returned and
// sum to v_beta exactly. instances are raw feature rows of dimension d.
ObjectiveValue evaluate_objective(const Model& model,
                                  const UncertaintyStats& stats,
                                  const std::vector<std::vector<double>>& xs,
                                  const LossParams& params);

struct RiskBoundReport {
    double v_beta = 0.0;
    double empirical_mae_risk = 0.0;
    bool bound_holds = false;
};

// Empirical test MAE risk (mean of 1 - h(x)_y) against the objective value,
// which upper bounds it whenever the true distribution lies in the
// uncertainty set.
RiskBoundReport risk_bound_report(const Model& model,
                                  const UncertaintyStats& stats,
                                  const std::vector<std::vector<double>>& train_xs,
                                  const std::vector<std::vector<double>>& test_xs,
                                  const std::vector<int>& test_labels,
                                  const LossParams& params);

struct CalibrationFit {
    std::vector<double> mu_star;
    ProbabilityVector h_star;
    bool argmax_match = false;
    int iterations = 0;
};

// Minimize sum_y p*(y) * margin_loss(mu, y) for a single one-hot-feature
// instance by gradient descent to gradient norm < grad_tol; at the optimum
// the worst-case distribution equals p* and h* is proportional to
// p*^(beta/(beta-1)). Throws on non-convergence.
CalibrationFit calibration_fit(const ProbabilityVector& p_star, double beta,
                               double grad_tol = 1e-7,
                               int max_iterations = 200000);

} // namespace mgce
