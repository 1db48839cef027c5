// Acceptance suite: numeric and analytic criteria. Each criterion prints a
// single PASS/FAIL line; the process exits nonzero if any fail.

#include "mgce/baselines.hpp"
#include "mgce/data.hpp"
#include "mgce/gradients.hpp"
#include "mgce/objective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace mgce;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("%s  criterion %2d  %-28s %s\n", pass ? "PASS" : "FAIL", id,
                name, detail.c_str());
    if (!pass) ++failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
}

std::vector<double> dirichlet(int k, std::mt19937_64& rng,
                              double floor = 0.0) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(k);
    double sum = 0.0;
    for (double& v : p) sum += v = e(rng) + floor;
    for (double& v : p) v /= sum;
    return p;
}

char buf[256];

// 1. analytic gradients vs central differences
void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0, worst_loose = 0.0;
    bool pass = true;
    for (double beta : {1.05, 1.2, 1.4, 2.0, 5.0, 20.0}) {
        const double threshold = beta == 1.05 ? 1e-4 : 1e-5;
        for (int k : {2, 5, 26, 100}) {
            const auto rep = gradcheck_margin_loss(
                beta, k, 100, 1000 + static_cast<int>(beta * 100) + k,
                threshold);
            pass = pass && rep.pass;
            (beta == 1.05 ? worst_loose : worst) =
                std::max(beta == 1.05 ? worst_loose : worst, rep.max_rel_err);
        }
        const auto prep = gradcheck_param(beta, 5, 8, 50, 77, threshold);
        pass = pass && prep.pass;
        (beta == 1.05 ? worst_loose : worst) =
            std::max(beta == 1.05 ? worst_loose : worst, prep.max_rel_err);
    }
    const double secs = elapsed_s(t0);
    pass = pass && secs < 60.0;
    std::snprintf(buf, sizeof buf,
                  "max rel err %.2e (beta 1.05: %.2e), %.1fs", worst,
                  worst_loose, secs);
    report(1, "gradient correctness", pass, buf);
}

// 2. bisection bracket, width and iteration bound on 1e5 random cases
void criterion_bisection() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> margin_dist(-4.0, 4.0);
    std::uniform_real_distribution<double> log_beta(0.0, std::log(16.0));
    std::uniform_int_distribution<int> k_dist(2, 100);
    const double tols[] = {1e-3, 1e-4, 1e-6, 1e-8};

    int violations = 0;
    for (int t = 0; t < 100000; ++t) {
        LossParams params;
        params.beta = t % 17 == 0 ? 1.0 : std::exp(log_beta(rng));
        params.bisect_tol = tols[t % 4];
        MarginVector f(k_dist(rng));
        for (double& v : f) v = margin_dist(rng);

        const auto [lo, hi] = phi_bracket(f, params.beta);
        const bool bracket_ok =
            lo <= hi && constraint_value(f, params.beta, lo) <= 1.0 + 1e-12 &&
            constraint_value(f, params.beta, hi) >= 1.0 - 1e-12;
        const auto pot = solve_phi(f, params);
        const double width = hi - lo;
        const std::uint32_t bound =
            width < params.bisect_tol
                ? 0
                : static_cast<std::uint32_t>(
                      std::ceil(std::log2(width / params.bisect_tol))) +
                      1;
        if (!bracket_ok || pot.bracket_hi - pot.bracket_lo >= params.bisect_tol ||
            pot.iterations > bound || pot.phi < pot.bracket_lo ||
            pot.phi > pot.bracket_hi)
            ++violations;
    }
    const double secs = elapsed_s(t0);
    const bool pass = violations == 0 && secs < 60.0;
    std::snprintf(buf, sizeof buf, "%d violations / 1e5 cases, %.1fs",
                  violations, secs);
    report(2, "bisection contract", pass, buf);
}

// 3. worst-case <-> link round trip and the flattening sign property
void criterion_roundtrip() {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> k_dist(2, 10);
    int violations = 0;
    double worst = 0.0;
    for (double beta : {1.2, 2.0, 5.0}) {
        for (int t = 0; t < 10000; ++t) {
            const auto h = dirichlet(k_dist(rng), rng, 1e-3);
            const auto p = worst_case_from_probs(h, beta);
            const auto back = probs_from_worst_case(p, beta);
            double z = 0.0;
            for (double v : h) z += std::pow(v, (beta - 1.0) / beta);
            const double threshold = std::pow(z, -beta);
            for (std::size_t j = 0; j < h.size(); ++j) {
                worst = std::max(worst, std::abs(back[j] - h[j]));
                if (std::abs(back[j] - h[j]) > 1e-10) ++violations;
                if (std::abs(h[j] - threshold) > 1e-12 &&
                    (p[j] - h[j]) * (threshold - h[j]) <= 0.0)
                    ++violations;
            }
        }
    }
    std::snprintf(buf, sizeof buf,
                  "%d violations / 3x1e4 points, max gap %.1e", violations,
                  worst);
    report(3, "theorem-1 round trip", violations == 0, buf);
}

// 4. loss inequalities, class-sum bounds, shift invariance, convexity
void criterion_properties() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_real_distribution<double> beta_dist(1.0, 20.0);
    std::uniform_real_distribution<double> margin_dist(-3.0, 3.0);
    std::uniform_int_distribution<int> k_dist(2, 10);

    const double eps = 1e-6; // bisection tolerance for margin-based suites
    const double tol = 4.0 * eps;
    int v_ineq = 0, v_sum = 0, v_shift = 0, v_convex = 0;

    for (int t = 0; t < 10000; ++t) {
        // Theorem 2: l_beta/beta <= l_MAE <= l_beta <= l_MAE + beta - 1
        const double h = uni(rng);
        const double beta = beta_dist(rng);
        const double lb = alpha_probability_loss(h, beta);
        const double lmae = 1.0 - h;
        if (lb / beta > lmae + tol || lmae > lb + tol ||
            lb - lmae > beta - 1.0 + tol)
            ++v_ineq;

        // class-sum bounds over the simplex
        const int k = k_dist(rng);
        const auto probs = dirichlet(k, rng);
        double sum = 0.0;
        for (double p : probs) sum += alpha_probability_loss(p, beta);
        const auto [lo, hi] = class_sum_bounds(beta, k);
        if (sum < lo - tol || sum > hi + tol) ++v_sum;

        // shift invariance of the margin loss
        LossParams params;
        params.beta = 1.0 + beta / 4.0;
        params.bisect_tol = eps;
        MarginVector f(k);
        for (double& m : f) m = margin_dist(rng);
        const double c = margin_dist(rng);
        MarginVector g = f;
        for (double& m : g) m += c;
        const int y = t % k;
        if (std::abs(margin_loss(f, y, params) -
                     margin_loss(g, y, params)) > tol)
            ++v_shift;

        // midpoint convexity of the loss, concavity of the potential
        MarginVector f2(k), mid(k);
        for (int j = 0; j < k; ++j) {
            f2[j] = margin_dist(rng);
            mid[j] = 0.5 * (f[j] + f2[j]);
        }
        const double lm = margin_loss(mid, y, params);
        const double la = margin_loss(f, y, params);
        const double lb2 = margin_loss(f2, y, params);
        if (lm > 0.5 * (la + lb2) + tol) ++v_convex;
        const double pm = solve_phi(mid, params).phi;
        if (pm < 0.5 * (solve_phi(f, params).phi +
                        solve_phi(f2, params).phi) -
                     tol)
            ++v_convex;
    }
    const bool pass = v_ineq + v_sum + v_shift + v_convex == 0;
    std::snprintf(buf, sizeof buf,
                  "violations: ineq %d, class-sum %d, shift %d, convexity %d",
                  v_ineq, v_sum, v_shift, v_convex);
    report(4, "loss property suites", pass, buf);
}

// 5. link converges to softmax for large beta
void criterion_softmax_limit() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> margin_dist(-3.0, 3.0);
    std::uniform_int_distribution<int> k_dist(2, 100);
    double worst = 0.0;
    int monotone_violations = 0;
    for (int t = 0; t < 300; ++t) {
        MarginVector f(k_dist(rng));
        for (double& v : f) v = margin_dist(rng);
        const auto s = softmax(f);
        double prev = 1e100;
        for (double beta : {10.0, 100.0, 1000.0, 10000.0}) {
            LossParams params;
            params.beta = beta;
            params.bisect_tol = 1e-12;
            const auto h = link_probabilities(f, params);
            double dev = 0.0;
            for (std::size_t j = 0; j < f.size(); ++j)
                dev = std::max(dev, std::abs(h[j] - s[j]));
            if (dev > prev + 1e-12) ++monotone_violations;
            prev = dev;
            if (beta == 10000.0) worst = std::max(worst, dev);
        }
    }
    const bool pass = worst < 1e-3 && monotone_violations == 0;
    std::snprintf(buf, sizeof buf,
                  "max |h - softmax| = %.2e at beta 1e4, %d monotonicity "
                  "violations",
                  worst, monotone_violations);
    report(5, "softmax limit", pass, buf);
}

// 6. calibration fit reaches the target worst case
void criterion_calibration() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> k_dist(2, 10);
    double worst = 0.0;
    int matches = 0, total = 0;
    for (double beta : {1.2, 2.0, 5.0}) {
        for (int t = 0; t < 50; ++t) {
            const auto p_star = dirichlet(k_dist(rng), rng, 0.05);
            const auto fit = calibration_fit(p_star, beta);
            ++total;
            if (fit.argmax_match) ++matches;
            // target h* proportional to p*^(beta/(beta-1))
            const auto target = probs_from_worst_case(p_star, beta);
            for (std::size_t j = 0; j < p_star.size(); ++j)
                worst = std::max(worst,
                                 std::abs(fit.h_star[j] - target[j]));
        }
    }
    const double secs = elapsed_s(t0);
    const bool pass = matches == total && worst < 1e-4 && secs < 120.0;
    std::snprintf(buf, sizeof buf,
                  "argmax match %d/%d, max |h* - target| %.1e, %.1fs",
                  matches, total, worst, secs);
    report(6, "calibration fit", pass, buf);
}

// 7. objective value upper bounds the test MAE risk on mixtures
void criterion_risk_bound() {
    std::mt19937_64 seed_rng(7);
    int holds = 0;
    LossParams params;
    params.beta = 2.0;
    params.bisect_tol = 1e-6;
    const double lambda0 = lambda0_from_confidence(2 * 10, 0.05);

    for (int run = 0; run < 100; ++run) {
        const Dataset pool =
            synth_gaussian_mixture(2, 10, 3000, 2.0, seed_rng());
        std::vector<std::vector<double>> train_xs, test_xs;
        std::vector<int> train_ys, test_ys;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (i < 2000) {
                train_xs.push_back(pool.row_vec(i));
                train_ys.push_back(pool.labels[i]);
            } else {
                test_xs.push_back(pool.row_vec(i));
                test_ys.push_back(pool.labels[i]);
            }
        }

        Model model = make_linear_model(10, 2);
        std::vector<std::vector<double>> phis;
        phis.reserve(train_xs.size());
        for (std::size_t i = 0; i < train_xs.size(); ++i)
            phis.push_back(feature_map(model, train_xs[i], train_ys[i]));
        const auto stats = estimate_stats(phis, lambda0);

        // a few passes of the stochastic gradient on the full objective
        for (int epoch = 0; epoch < 3; ++epoch)
            for (std::size_t i = 0; i < train_xs.size(); ++i) {
                const auto g = stochastic_param_gradient(
                    train_xs[i], train_ys[i], model, stats, params);
                for (std::size_t j = 0; j < g.size(); ++j)
                    model.mu[j] -= 0.01 * g[j];
            }

        const auto rep = risk_bound_report(model, stats, train_xs, test_xs,
                                           test_ys, params);
        if (rep.bound_holds) ++holds;
    }
    std::snprintf(buf, sizeof buf, "bound held in %d/100 seeded runs",
                  holds);
    report(7, "risk upper bound", holds >= 95, buf);
}

// 10. GCE is not midpoint-convex in margins; the implicit loss is
void criterion_nonconvexity() {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> margin_dist(-3.0, 3.0);
    LossParams params;
    params.beta = 1.4;
    params.bisect_tol = 1e-8;
    int gce_violations = 0, mgce_violations = 0;
    for (int t = 0; t < 10000; ++t) {
        MarginVector a(4), b(4), mid(4);
        for (int j = 0; j < 4; ++j) {
            a[j] = margin_dist(rng);
            b[j] = margin_dist(rng);
            mid[j] = 0.5 * (a[j] + b[j]);
        }
        const int y = t % 4;
        const double gm = gce_loss_and_grad(mid, y, 1.4).first;
        const double ga = gce_loss_and_grad(a, y, 1.4).first;
        const double gb = gce_loss_and_grad(b, y, 1.4).first;
        if (gm > 0.5 * (ga + gb) + 1e-9) ++gce_violations;

        const double mm = margin_loss(mid, y, params);
        const double ma = margin_loss(a, y, params);
        const double mb = margin_loss(b, y, params);
        if (mm > 0.5 * (ma + mb) + 4.0 * params.bisect_tol)
            ++mgce_violations;
    }
    const bool pass = gce_violations >= 1 && mgce_violations == 0;
    std::snprintf(buf, sizeof buf,
                  "gce violations %d (>=1 expected), implicit-loss "
                  "violations %d",
                  gce_violations, mgce_violations);
    report(10, "gce non-convexity exhibit", pass, buf);
}

} // namespace

int main() {
    criterion_gradients();
    criterion_bisection();
    criterion_roundtrip();
    criterion_properties();
    criterion_softmax_limit();
    criterion_calibration();
    criterion_risk_bound();
    criterion_nonconvexity();
    if (failures) {
        std::printf("%d criterion(s) FAILED\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
