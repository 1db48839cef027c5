#include "mgce/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace mgce {

namespace {

void check_label(const MarginVector& margins, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= margins.size())
        throw std::out_of_range("label index out of range");
}

} // namespace

std::pair<double, MarginGradient> ce_loss_and_grad(const MarginVector& margins,
                                                   int label) {
    check_label(margins, label);
    const double loss = logsumexp(margins) - margins[label];
    MarginGradient grad = softmax(margins);
    grad[label] -= 1.0;
    return {loss, std::move(grad)};
}

std::pair<double, MarginGradient> gce_loss_and_grad(
    const MarginVector& margins, int label, double beta) {
    check_label(margins, label);
    if (!(beta >= 1.0)) throw std::invalid_argument("beta must be >= 1");
    const auto s = softmax(margins);
    // s_y^(1/beta) = e^((f_y - logsumexp(f)) / beta), stable for any margins
    const double sy_pow = std::exp((margins[label] - logsumexp(margins)) /
                                   beta);
    const double loss = beta * (1.0 - sy_pow);
    MarginGradient grad(margins.size());
    for (std::size_t j = 0; j < margins.size(); ++j)
        grad[j] = sy_pow * (s[j] - (static_cast<int>(j) == label ? 1.0 : 0.0));
    return {loss, std::move(grad)};
}

std::pair<double, MarginGradient> mae_loss_and_grad(
    const MarginVector& margins, int label, const LossParams& params) {
    LossParams mae = params;
    mae.beta = 1.0;
    return {margin_loss(margins, label, mae),
            margin_loss_grad(margins, label, mae)};
}

} // namespace mgce
