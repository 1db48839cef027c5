#pragma once

// Minimax generalized cross-entropy loss core: the implicit potential phi,
// its bisection solver, the beta-tailored link from margins to
// probabilities, worst-case distributions, and the raw probability losses.
//
// Conventions used throughout:
//  - class indices are 0-based in code (the CLI prints 1-based where noted)
//  - beta >= 1 always; beta at or above LossParams::ce_threshold switches to
//    the exact log-sum-exp / softmax closed form ("CE mode")

#include <cstdint>
#include <utility>
#include <vector>

namespace mgce {

struct LossParams {
    double beta = 1.4;
    double bisect_tol = 1e-4;
    double ce_threshold = 1e6;

    bool ce_mode() const { return beta >= ce_threshold; }
    void validate() const; // throws std::invalid_argument on bad fields
};

// Tight default for gradient-check utilities, where bisection
// discretization must sit far below the finite-difference step.
inline constexpr double kGradCheckBisectTol = 1e-10;

using MarginVector = std::vector<double>;
using ProbabilityVector = std::vector<double>;

struct ImplicitPotential {
    double phi = 0.0;
    std::uint32_t iterations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

// beta = alpha / (alpha - 1). alpha == 1 maps to CE mode by convention and
// returns LossParams{}.ce_threshold; alpha < 1 or non-finite throws.
double beta_from_alpha(double alpha);

// beta * (1 - h^(1/beta)); -log h in CE mode (with +inf at h == 0).
double alpha_probability_loss(double h_y, double beta,
                              double ce_threshold = LossParams{}.ce_threshold);

// Lower and upper bound of sum_y loss over all classes:
// (beta * (k - k^((beta-1)/beta)), beta * (k - 1)).
std::pair<double, double> class_sum_bounds(double beta, int k);

// C_beta = beta * (k^(-1/beta) - 1); the -log(k) limit in CE mode.
double c_beta(double beta, int k,
              double ce_threshold = LossParams{}.ce_threshold);

// F(f, nu) = sum_y ((f_y + nu)/beta + 1)_+^beta, nondecreasing in nu.
double constraint_value(const MarginVector& margins, double beta, double nu);

// Root bracket (C_beta - max f, C_beta - min f) with F(lo) <= 1 <= F(hi).
std::pair<double, double> phi_bracket(const MarginVector& margins,
                                      double beta);

// Solve F(f, phi) = 1 by bisection on the bracket above; the returned
// bracket has width < params.bisect_tol. CE mode returns the closed-form
// -logsumexp(f) with zero iterations.
ImplicitPotential solve_phi(const MarginVector& margins,
                            const LossParams& params);

// h_y = ((f_y + phi)/beta + 1)_+^beta, renormalized to an exact simplex
// point; softmax in CE mode.
ProbabilityVector link_probabilities(const MarginVector& margins,
                                     const LossParams& params);
ProbabilityVector link_probabilities(const MarginVector& margins,
                                     const LossParams& params,
                                     const ImplicitPotential& pot);

// Margin loss  -f_label - phi(f).  label is a 0-based class index.
double margin_loss(const MarginVector& margins, int label,
                   const LossParams& params);

// Worst-case distribution p_y proportional to ((f_y + phi)/beta + 1)_+^(beta-1).
// For beta == 1 the distribution is uniform over classes with a strictly
// positive part; softmax in CE mode.
ProbabilityVector worst_case_from_margins(const MarginVector& margins,
                                          const LossParams& params);
ProbabilityVector worst_case_from_margins(const MarginVector& margins,
                                          const LossParams& params,
                                          const ImplicitPotential& pot);

// p proportional to h^((beta-1)/beta); requires beta > 1.
ProbabilityVector worst_case_from_probs(const ProbabilityVector& h,
                                        double beta);

// h proportional to p^(beta/(beta-1)); inverse of the map above on the
// open simplex. Requires beta > 1.
ProbabilityVector probs_from_worst_case(const ProbabilityVector& p,
                                        double beta);

// Numerically stable softmax / log-sum-exp helpers (max-subtraction).
ProbabilityVector softmax(const MarginVector& margins);
double logsumexp(const MarginVector& margins);

// argmax with ties broken toward the lowest index
int argmax_lowest(const std::vector<double>& v);

} // namespace mgce
