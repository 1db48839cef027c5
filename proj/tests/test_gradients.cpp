#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mgce/gradients.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace mgce;

namespace {

LossParams tight(double beta) {
    LossParams p;
    p.beta = beta;
    p.bisect_tol = kGradCheckBisectTol;
    return p;
}

} // namespace

TEST_CASE("finite_difference_oracle on a quadratic") {
    const auto grad = finite_difference_oracle(
        [](const std::vector<double>& x) {
            return x[0] * x[0] + 3.0 * x[1];
        },
        {2.0, -1.0}, 1e-6);
    CHECK(grad[0] == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(grad[1] == doctest::Approx(3.0).epsilon(1e-8));
    CHECK_THROWS_AS(finite_difference_oracle([](const std::vector<double>&) {
                        return 0.0;
                    },
                                             {0.0}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("phi gradient is minus the worst-case distribution") {
    const MarginVector f = {0.4, -0.2, 0.9};
    for (double beta : {1.3, 2.0, 6.0}) {
        const auto g = phi_grad_margins(f, tight(beta));
        const auto p = worst_case_from_margins(f, tight(beta));
        for (int j = 0; j < 3; ++j) CHECK(g[j] == -p[j]);

        const auto fd = finite_difference_oracle(
            [&](const MarginVector& m) {
                return solve_phi(m, tight(beta)).phi;
            },
            f, 1e-5);
        for (int j = 0; j < 3; ++j)
            CHECK(g[j] == doctest::Approx(fd[j]).epsilon(1e-6));
    }
}

TEST_CASE("margin-loss gradient sums to zero and matches differences") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (double beta : {1.0, 1.2, 2.0, 5.0, 1e7}) {
        for (int t = 0; t < 20; ++t) {
            MarginVector f(5);
            for (double& v : f) v = dist(rng);
            const int y = t % 5;
            const auto g = margin_loss_grad(f, y, tight(beta));
            CHECK(std::accumulate(g.begin(), g.end(), 0.0) ==
                  doctest::Approx(0.0).epsilon(1e-10));
            const auto fd = finite_difference_oracle(
                [&](const MarginVector& m) {
                    return margin_loss(m, y, tight(beta));
                },
                f, 1e-5);
            for (int j = 0; j < 5; ++j)
                CHECK(g[j] == doctest::Approx(fd[j]).epsilon(2e-5));
        }
    }
}

TEST_CASE("gradcheck harness passes across beta and k") {
    for (double beta : {1.2, 2.0, 20.0}) {
        const auto rep = gradcheck_margin_loss(beta, 5, 25, 99);
        CHECK(rep.pass);
        CHECK(rep.max_rel_err < 1e-5);
    }
    const auto rep = gradcheck_param(2.0, 4, 6, 25, 99);
    CHECK(rep.pass);
}

TEST_CASE("stochastic parameter gradient structure") {
    Model model = make_linear_model(3, 2);
    model.mu = {0.5, -0.2, 0.0, 0.1, 0.3, -0.4};
    UncertaintyStats stats;
    stats.m = 6;
    stats.lambda.assign(6, 0.01);

    const std::vector<double> x = {1.0, 2.0, -1.0};
    const auto g = stochastic_param_gradient(x, 0, model, stats, tight(2.0));
    REQUIRE(g.size() == 6);

    const auto f = forward_margins(model, x);
    const auto mg = margin_loss_grad(f, 0, tight(2.0));
    // block y of the gradient is lambda*sign(mu) + mg[y] * x; sign(0) = 0
    CHECK(g[0] == doctest::Approx(0.01 + mg[0] * x[0]));
    CHECK(g[1] == doctest::Approx(-0.01 + mg[0] * x[1]));
    CHECK(g[2] == doctest::Approx(0.0 + mg[0] * x[2]));
    CHECK(g[3] == doctest::Approx(0.01 + mg[1] * x[0]));

    CHECK_THROWS_AS(stochastic_param_gradient(x, 5, model, stats, tight(2.0)),
                    std::out_of_range);
}
