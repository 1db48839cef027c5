#include "mgce/gradients.hpp"

#include "mgce/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mgce {

std::vector<double> phi_grad_margins(const MarginVector& margins,
                                     const LossParams& params) {
    auto p = worst_case_from_margins(margins, params);
    for (double& v : p) v = -v;
    return p;
}

MarginGradient margin_loss_grad(const MarginVector& margins, int label,
                                const LossParams& params) {
    if (label < 0 || static_cast<std::size_t>(label) >= margins.size())
        throw std::out_of_range("label index out of range");
    MarginGradient g = worst_case_from_margins(margins, params);
    g[label] -= 1.0;
    return g;
}

ParamGradient stochastic_param_gradient(const std::vector<double>& x,
                                        int label, const Model& model,
                                        const UncertaintyStats& stats,
                                        const LossParams& params) {
    if (label < 0 || label >= model.k)
        throw std::out_of_range("label index out of range");
    const std::size_t m = model.mu.size();
    if (stats.lambda.size() != m)
        throw std::invalid_argument("stats dimension mismatch");

    const std::vector<double> psi = feature_vector(model, x);
    const std::size_t fd = psi.size();
    MarginVector f(model.k);
    for (int y = 0; y < model.k; ++y)
        f[y] = kernels::dot(psi.data(), model.mu.data() + y * fd, fd);
    const auto g_margin = margin_loss_grad(f, label, params);

    ParamGradient g(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double mu_j = model.mu[j];
        g[j] = stats.lambda[j] *
               (mu_j > 0.0 ? 1.0 : (mu_j < 0.0 ? -1.0 : 0.0));
    }
    // -Phi(x, y) + sum_y p_y Phi(x, y) is the margin-loss gradient pushed
    // through the block-sparse feature map.
    for (int y = 0; y < model.k; ++y)
        kernels::axpy(g_margin[y], psi.data(), g.data() + y * fd, fd);
    return g;
}

std::vector<double> finite_difference_oracle(
    const std::function<double(const std::vector<double>&)>& fn,
    const std::vector<double>& point, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
    std::vector<double> grad(point.size());
    std::vector<double> probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        probe[i] = point[i] + step;
        const double hi = fn(probe);
        probe[i] = point[i] - step;
        const double lo = fn(probe);
        probe[i] = point[i];
        if (!std::isfinite(hi) || !std::isfinite(lo))
            throw std::runtime_error("non-finite function value");
        grad[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

namespace {

constexpr double kFdStep = 1e-6;

double rel_err(const std::vector<double>& got,
               const std::vector<double>& want) {
    double gap = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        gap = std::max(gap, std::abs(got[i] - want[i]));
        mag = std::max(mag, std::abs(want[i]));
    }
    return gap / std::max(mag, 1.0);
}

} // namespace

GradCheckReport gradcheck_margin_loss(double beta, int k, int trials,
                                      std::uint64_t seed, double threshold) {
    LossParams params;
    params.beta = beta;
    params.bisect_tol = kGradCheckBisectTol;
    params.validate();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> margin_dist(-3.0, 3.0);
    std::uniform_int_distribution<int> label_dist(0, k - 1);

    GradCheckReport report;
    report.trials = trials;
    report.threshold = threshold;
    MarginVector f(k);
    for (int t = 0; t < trials; ++t) {
        for (double& v : f) v = margin_dist(rng);
        const int y = label_dist(rng);
        const auto analytic = margin_loss_grad(f, y, params);
        const auto oracle = finite_difference_oracle(
            [&](const std::vector<double>& m) {
                return margin_loss(m, y, params);
            },
            f, kFdStep);
        report.max_rel_err =
            std::max(report.max_rel_err, rel_err(analytic, oracle));
    }
    report.pass = report.max_rel_err < threshold;
    return report;
}

GradCheckReport gradcheck_param(double beta, int k, int d, int trials,
                                std::uint64_t seed, double threshold) {
    LossParams params;
    params.beta = beta;
    params.bisect_tol = kGradCheckBisectTol;
    params.validate();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> lam_dist(0.0, 0.01);
    std::uniform_int_distribution<int> label_dist(0, k - 1);

    Model model = make_linear_model(d, k);
    UncertaintyStats stats;
    stats.m = model.param_dim_mu();
    stats.lambda.resize(stats.m);

    GradCheckReport report;
    report.trials = trials;
    report.threshold = threshold;
    std::vector<double> x(d);
    for (int t = 0; t < trials; ++t) {
        for (double& v : model.mu) v = 0.3 * gauss(rng);
        for (double& v : stats.lambda) v = lam_dist(rng);
        for (double& v : x) v = gauss(rng);
        const int y = label_dist(rng);

        const auto analytic =
            stochastic_param_gradient(x, y, model, stats, params);
        const auto oracle = finite_difference_oracle(
            [&](const std::vector<double>& mu) {
                Model probe = model;
                probe.mu = mu;
                double reg = 0.0;
                for (std::size_t j = 0; j < mu.size(); ++j)
                    reg += stats.lambda[j] * std::abs(mu[j]);
                return reg + margin_loss(forward_margins(probe, x), y, params);
            },
            model.mu, kFdStep);
        report.max_rel_err =
            std::max(report.max_rel_err, rel_err(analytic, oracle));
    }
    report.pass = report.max_rel_err < threshold;
    return report;
}

} // namespace mgce
