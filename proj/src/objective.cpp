#include "mgce/objective.hpp"

#include "mgce/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgce {

UncertaintyStats estimate_stats(const std::vector<std::vector<double>>& phis,
                                double lambda0) {
    if (phis.empty())
        throw std::invalid_argument("estimate_stats needs at least 1 sample");
    const std::size_t m = phis.front().size();
    UncertaintyStats st;
    st.m = static_cast<int>(m);
    st.lambda0 = lambda0;
    st.tau.assign(m, 0.0);
    st.s.assign(m, 0.0);
    const double n = static_cast<double>(phis.size());
    for (const auto& phi : phis) {
        if (phi.size() != m)
            throw std::invalid_argument("feature-map dimension mismatch");
        kernels::axpy(1.0, phi.data(), st.tau.data(), m);
    }
    kernels::scale(1.0 / n, st.tau.data(), m);
    for (const auto& phi : phis)
        for (std::size_t j = 0; j < m; ++j) {
            const double dev = phi[j] - st.tau[j];
            st.s[j] += dev * dev;
        }
    for (std::size_t j = 0; j < m; ++j) st.s[j] = std::sqrt(st.s[j] / n);
    st.lambda.resize(m);
    for (std::size_t j = 0; j < m; ++j) st.lambda[j] = lambda0 * st.s[j];
    return st;
}

double lambda0_from_confidence(int m, double delta) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (!(delta > 0.0) || delta > 1.0)
        throw std::domain_error("delta must lie in (0, 1]");
    return std::sqrt((std::log(static_cast<double>(m)) +
                      std::log(2.0 / delta)) /
                     2.0);
}

ObjectiveValue evaluate_objective(const Model& model,
                                  const UncertaintyStats& stats,
                                  const std::vector<std::vector<double>>& xs,
                                  const LossParams& params) {
    const std::size_t m = model.mu.size();
    if (stats.tau.size() != m || stats.lambda.size() != m)
        throw std::invalid_argument("stats dimension mismatch");
    if (xs.empty()) throw std::invalid_argument("no instances");

    ObjectiveValue v;
    v.term_tau = -kernels::dot(stats.tau.data(), model.mu.data(), m);
    for (std::size_t j = 0; j < m; ++j)
        v.term_lambda += stats.lambda[j] * std::abs(model.mu[j]);
    double phi_sum = 0.0;
    for (const auto& x : xs)
        phi_sum += solve_phi(forward_margins(model, x), params).phi;
    v.term_phi_mean = -phi_sum / static_cast<double>(xs.size());
    v.v_beta = v.term_tau + v.term_lambda + v.term_phi_mean;
    return v;
}

RiskBoundReport risk_bound_report(
    const Model& model, const UncertaintyStats& stats,
    const std::vector<std::vector<double>>& train_xs,
    const std::vector<std::vector<double>>& test_xs,
    const std::vector<int>& test_labels, const LossParams& params) {
    if (test_xs.size() != test_labels.size())
        throw std::invalid_argument("test set length mismatch");
    RiskBoundReport rep;
    rep.v_beta = evaluate_objective(model, stats, train_xs, params).v_beta;
    double risk = 0.0;
    for (std::size_t i = 0; i < test_xs.size(); ++i) {
        const auto h = link_probabilities(forward_margins(model, test_xs[i]),
                                          params);
        risk += 1.0 - h[test_labels[i]];
    }
    rep.empirical_mae_risk = risk / static_cast<double>(test_xs.size());
    rep.bound_holds = rep.empirical_mae_risk <= rep.v_beta;
    return rep;
}

CalibrationFit calibration_fit(const ProbabilityVector& p_star, double beta,
                               double grad_tol, int max_iterations) {
    const int k = static_cast<int>(p_star.size());
    if (k < 2) throw std::invalid_argument("need at least 2 classes");
    for (double p : p_star)
        if (!(p > 0.0))
            throw std::domain_error("p_star must lie on the open simplex");
    if (!(beta > 1.0)) throw std::domain_error("beta must be > 1");

    LossParams params{beta, 1e-14, LossParams{}.ce_threshold};

    // With a one-hot feature map the margins are the parameters themselves
    // and the objective's gradient in margin space is p_beta(mu) - p*. The
    // iteration works in shifted coordinates t with
    // mu_y = beta * (exp(t_y - lse) - 1), lse = (1/beta) log sum exp(beta t),
    // which pins phi(mu) = 0 and keeps every base strictly positive; there
    // p_beta = softmax((beta-1) t), so the gradient is evaluated stably even
    // for targets whose optimal bases underflow the direct margin
    // parametrization. Each step solves the damped stationarity system
    // (Jacobian (beta-1)(diag p - p p^T), singular only along the all-ones
    // shift) and backtracks on the squared gradient norm; a plain
    // gradient step is the fallback.
    std::vector<double> t(k, 0.0), p(k), r(k), dir(k), trial(k),
        p_trial(k);
    std::vector<double> jac(static_cast<std::size_t>(k) * k);

    const auto worst_case_t = [&](const std::vector<double>& tv,
                                  std::vector<double>& out) {
        double tmax = tv[0];
        for (double v : tv) tmax = std::max(tmax, v);
        double z = 0.0;
        for (int y = 0; y < k; ++y) {
            out[y] = std::exp((beta - 1.0) * (tv[y] - tmax));
            z += out[y];
        }
        for (int y = 0; y < k; ++y) out[y] /= z;
    };
    const auto residual_sq = [&](const std::vector<double>& pv) {
        double s = 0.0;
        for (int y = 0; y < k; ++y) {
            const double e = pv[y] - p_star[y];
            s += e * e;
        }
        return s;
    };

    // Gaussian elimination with partial pivoting; solves a x = b in place.
    const auto dense_solve = [k](std::vector<double>& a,
                                 std::vector<double>& x) {
        for (int col = 0; col < k; ++col) {
            int piv = col;
            for (int row = col + 1; row < k; ++row)
                if (std::abs(a[static_cast<std::size_t>(row) * k + col]) >
                    std::abs(a[static_cast<std::size_t>(piv) * k + col]))
                    piv = row;
            if (a[static_cast<std::size_t>(piv) * k + col] == 0.0)
                return false;
            if (piv != col) {
                for (int c = 0; c < k; ++c)
                    std::swap(a[static_cast<std::size_t>(piv) * k + c],
                              a[static_cast<std::size_t>(col) * k + c]);
                std::swap(x[piv], x[col]);
            }
            const double inv =
                1.0 / a[static_cast<std::size_t>(col) * k + col];
            for (int row = col + 1; row < k; ++row) {
                const double m =
                    a[static_cast<std::size_t>(row) * k + col] * inv;
                if (m == 0.0) continue;
                for (int c = col; c < k; ++c)
                    a[static_cast<std::size_t>(row) * k + c] -=
                        m * a[static_cast<std::size_t>(col) * k + c];
                x[row] -= m * x[col];
            }
        }
        for (int row = k - 1; row >= 0; --row) {
            for (int c = row + 1; c < k; ++c)
                x[row] -= a[static_cast<std::size_t>(row) * k + c] * x[c];
            x[row] /= a[static_cast<std::size_t>(row) * k + row];
        }
        return true;
    };

    CalibrationFit fit;
    worst_case_t(t, p);
    double err_sq = residual_sq(p);
    for (int it = 0; it < max_iterations; ++it) {
        if (std::sqrt(err_sq) < grad_tol) {
            // Reconstruct the margins: base = exp(t - lse), mu = beta(base-1).
            double tmax = t[0];
            for (double v : t) tmax = std::max(tmax, v);
            double z = 0.0;
            for (int y = 0; y < k; ++y)
                z += std::exp(beta * (t[y] - tmax));
            const double lse = tmax + std::log(z) / beta;
            fit.iterations = it;
            fit.mu_star.resize(k);
            for (int y = 0; y < k; ++y)
                fit.mu_star[y] = beta * (std::exp(t[y] - lse) - 1.0);
            fit.h_star = link_probabilities(fit.mu_star, params);
            fit.argmax_match =
                argmax_lowest(fit.mu_star) ==
                argmax_lowest(std::vector<double>(p_star.begin(),
                                                  p_star.end()));
            return fit;
        }

        for (int y = 0; y < k; ++y) r[y] = p[y] - p_star[y];
        const double shift_penalty = (beta - 1.0) / k;
        bool accepted = false;
        for (double damp = 1e-13; damp < 1.0 && !accepted; damp *= 1e4) {
            for (int y = 0; y < k; ++y)
                for (int j = 0; j < k; ++j) {
                    double v = -(beta - 1.0) * p[y] * p[j] + shift_penalty;
                    if (y == j) v += (beta - 1.0) * p[y] + damp;
                    jac[static_cast<std::size_t>(y) * k + j] = v;
                }
            dir = r;
            if (!dense_solve(jac, dir)) continue;
            double step = 1.0;
            while (step >= 1e-18) {
                for (int y = 0; y < k; ++y)
                    trial[y] = t[y] - step * dir[y];
                worst_case_t(trial, p_trial);
                const double err_trial = residual_sq(p_trial);
                if (err_trial <= err_sq * (1.0 - 1e-4 * step)) {
                    t.swap(trial);
                    p.swap(p_trial);
                    err_sq = err_trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        if (!accepted) {
            // Fallback: step along the gradient itself. The Jacobian is
            // positive semidefinite, so this always decreases the residual.
            double step = 1.0;
            while (step >= 1e-18) {
                for (int y = 0; y < k; ++y)
                    trial[y] = t[y] - step * r[y];
                worst_case_t(trial, p_trial);
                const double err_trial = residual_sq(p_trial);
                if (err_trial < err_sq) {
                    t.swap(trial);
                    p.swap(p_trial);
                    err_sq = err_trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        if (!accepted)
            throw std::runtime_error("calibration_fit: line search stalled");
    }
    throw std::runtime_error("calibration_fit: did not converge");
}

} // namespace mgce
