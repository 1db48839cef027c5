#include "mgce/loss_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mgce {

namespace {

void check_margins(const MarginVector& margins) {
    if (margins.size() < 2)
        throw std::invalid_argument("margin vector needs at least 2 classes");
    for (double f : margins)
        if (!std::isfinite(f))
            throw std::domain_error("non-finite margin");
}

// d/dnu of sum_y ((f_y + nu)/beta + 1)_+^beta
double constraint_slope(const MarginVector& margins, double beta, double nu) {
    double acc = 0.0;
    for (double f : margins) {
        const double base = (f + nu) / beta + 1.0;
        if (base > 0.0) acc += std::pow(base, beta - 1.0);
    }
    return acc;
}

} // namespace

void LossParams::validate() const {
    if (!(beta >= 1.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be >= 1");
    if (!(bisect_tol > 0.0))
        throw std::invalid_argument("bisect_tol must be > 0");
    if (!std::isfinite(ce_threshold))
        throw std::invalid_argument("ce_threshold must be finite");
}

double beta_from_alpha(double alpha) {
    if (alpha == 1.0) return LossParams{}.ce_threshold;
    if (!(alpha > 1.0))
        throw std::domain_error("alpha must be > 1 (alpha == 1 selects CE)");
    return alpha / (alpha - 1.0);
}

double alpha_probability_loss(double h_y, double beta, double ce_threshold) {
    if (h_y < -1e-12 || h_y > 1.0 + 1e-12)
        throw std::domain_error("probability outside [0, 1]");
    h_y = std::clamp(h_y, 0.0, 1.0);
    if (beta >= ce_threshold) {
        if (h_y == 0.0) return std::numeric_limits<double>::infinity();
        return -std::log(h_y);
    }
    return beta * (1.0 - std::pow(h_y, 1.0 / beta));
}

std::pair<double, double> class_sum_bounds(double beta, int k) {
    const double kk = static_cast<double>(k);
    return {beta * (kk - std::pow(kk, (beta - 1.0) / beta)),
            beta * (kk - 1.0)};
}

double c_beta(double beta, int k, double ce_threshold) {
    if (beta >= ce_threshold) return -std::log(static_cast<double>(k));
    return beta * (std::pow(static_cast<double>(k), -1.0 / beta) - 1.0);
}

double constraint_value(const MarginVector& margins, double beta, double nu) {
    double acc = 0.0;
    for (double f : margins) {
        const double base = (f + nu) / beta + 1.0;
        if (base > 0.0) acc += std::pow(base, beta);
    }
    return acc;
}

std::pair<double, double> phi_bracket(const MarginVector& margins,
                                      double beta) {
    const auto [lo_it, hi_it] =
        std::minmax_element(margins.begin(), margins.end());
    const double c = c_beta(beta, static_cast<int>(margins.size()));
    return {c - *hi_it, c - *lo_it};
}

ImplicitPotential solve_phi(const MarginVector& margins,
                            const LossParams& params) {
    params.validate();
    check_margins(margins);

    ImplicitPotential pot;
    if (params.ce_mode()) {
        pot.phi = -logsumexp(margins);
        pot.bracket_lo = pot.bracket_hi = pot.phi;
        return pot;
    }

    auto [lo, hi] = phi_bracket(margins, params.beta);
    if (hi - lo < params.bisect_tol) {
        // Degenerate bracket (all margins equal): the bracket endpoints
        // already coincide with the root.
        pot.phi = lo;
        pot.bracket_lo = lo;
        pot.bracket_hi = hi;
        return pot;
    }

    double mid = 0.5 * (lo + hi);
    while (hi - lo >= params.bisect_tol) {
        mid = 0.5 * (lo + hi);
        if (constraint_value(margins, params.beta, mid) > 1.0)
            hi = mid;
        else
            lo = mid;
        ++pot.iterations;
    }

    // One clamped Newton correction inside the final bracket tightens the
    // residual F(phi) - 1 well below the bracket-width guarantee, so the
    // link probabilities sum to 1 up to rounding before renormalization.
    double phi = mid;
    const double slope = constraint_slope(margins, params.beta, phi);
    if (slope > 0.0 && std::isfinite(slope)) {
        const double step =
            (constraint_value(margins, params.beta, phi) - 1.0) / slope;
        phi = std::clamp(phi - step, lo, hi);
    }
    pot.phi = phi;
    pot.bracket_lo = lo;
    pot.bracket_hi = hi;
    return pot;
}

ProbabilityVector link_probabilities(const MarginVector& margins,
                                     const LossParams& params) {
    if (params.ce_mode()) return softmax(margins);
    return link_probabilities(margins, params, solve_phi(margins, params));
}

ProbabilityVector link_probabilities(const MarginVector& margins,
                                     const LossParams& params,
                                     const ImplicitPotential& pot) {
    if (params.ce_mode()) return softmax(margins);
    ProbabilityVector h(margins.size());
    double sum = 0.0;
    for (std::size_t y = 0; y < margins.size(); ++y) {
        const double base = (margins[y] + pot.phi) / params.beta + 1.0;
        h[y] = base > 0.0 ? std::pow(base, params.beta) : 0.0;
        sum += h[y];
    }
    for (double& v : h) v /= sum;
    return h;
}

double margin_loss(const MarginVector& margins, int label,
                   const LossParams& params) {
    if (label < 0 || static_cast<std::size_t>(label) >= margins.size())
        throw std::out_of_range("label index out of range");
    return -margins[label] - solve_phi(margins, params).phi;
}

ProbabilityVector worst_case_from_margins(const MarginVector& margins,
                                          const LossParams& params) {
    if (params.ce_mode()) return softmax(margins);
    return worst_case_from_margins(margins, params,
                                   solve_phi(margins, params));
}

ProbabilityVector worst_case_from_margins(const MarginVector& margins,
                                          const LossParams& params,
                                          const ImplicitPotential& pot) {
    if (params.ce_mode()) return softmax(margins);
    const std::size_t k = margins.size();
    ProbabilityVector p(k, 0.0);
    double sum = 0.0;
    if (params.beta == 1.0) {
        // Uniform over the strictly positive support; a base within the
        // bisection tolerance of 0 counts as excluded.
        for (std::size_t y = 0; y < k; ++y) {
            const double base = margins[y] + pot.phi + 1.0;
            if (base > params.bisect_tol) {
                p[y] = 1.0;
                sum += 1.0;
            }
        }
    } else {
        for (std::size_t y = 0; y < k; ++y) {
            const double base = (margins[y] + pot.phi) / params.beta + 1.0;
            if (base > 0.0) {
                p[y] = std::pow(base, params.beta - 1.0);
                sum += p[y];
            }
        }
    }
    for (double& v : p) v /= sum;
    return p;
}

ProbabilityVector worst_case_from_probs(const ProbabilityVector& h,
                                        double beta) {
    if (!(beta > 1.0))
        throw std::domain_error(
            "worst_case_from_probs requires beta > 1; use the margin-based "
            "path for beta == 1");
    ProbabilityVector p(h.size());
    const double c = (beta - 1.0) / beta;
    double sum = 0.0;
    for (std::size_t y = 0; y < h.size(); ++y) {
        p[y] = h[y] > 0.0 ? std::pow(h[y], c) : 0.0;
        sum += p[y];
    }
    for (double& v : p) v /= sum;
    return p;
}

ProbabilityVector probs_from_worst_case(const ProbabilityVector& p,
                                        double beta) {
    if (!(beta > 1.0))
        throw std::domain_error("probs_from_worst_case requires beta > 1");
    ProbabilityVector h(p.size());
    const double c = beta / (beta - 1.0);
    double sum = 0.0;
    for (std::size_t y = 0; y < p.size(); ++y) {
        h[y] = p[y] > 0.0 ? std::pow(p[y], c) : 0.0;
        sum += h[y];
    }
    for (double& v : h) v /= sum;
    return h;
}

ProbabilityVector softmax(const MarginVector& margins) {
    const double m = *std::max_element(margins.begin(), margins.end());
    ProbabilityVector s(margins.size());
    double sum = 0.0;
    for (std::size_t y = 0; y < margins.size(); ++y) {
        s[y] = std::exp(margins[y] - m);
        sum += s[y];
    }
    for (double& v : s) v /= sum;
    return s;
}

double logsumexp(const MarginVector& margins) {
    const double m = *std::max_element(margins.begin(), margins.end());
    double sum = 0.0;
    for (double f : margins) sum += std::exp(f - m);
    return m + std::log(sum);
}

int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

} // namespace mgce
