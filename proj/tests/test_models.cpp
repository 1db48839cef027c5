#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mgce/gradients.hpp"
#include "mgce/models.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace mgce;

namespace {

std::vector<double> randomize(std::size_t n, std::mt19937_64& rng,
                              double scale = 0.5) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

} // namespace

TEST_CASE("linear forward is block dot products") {
    Model m = make_linear_model(2, 2);
    m.mu = {1.0, 2.0, -1.0, 0.5};
    const auto f = forward_margins(m, {3.0, -1.0});
    CHECK(f[0] == doctest::Approx(1.0));  // 1*3 + 2*(-1)
    CHECK(f[1] == doctest::Approx(-3.5)); // -1*3 + 0.5*(-1)
    CHECK_THROWS_AS(forward_margins(m, {1.0}), std::invalid_argument);
}

TEST_CASE("mlp forward matches a manual computation") {
    Model m = make_mlp_model(2, 2, 2, 0);
    m.w1 = {1.0, -1.0, 0.5, 2.0}; // rows are inputs, cols hidden units
    m.b1 = {0.1, -0.2};
    m.mu = {1.0, 0.0, 0.0, 1.0};
    const std::vector<double> x = {2.0, 1.0};
    // pre = {2*1 + 1*0.5 + 0.1, 2*(-1) + 1*2 - 0.2} = {2.6, -0.2}
    // psi = {2.6, 0}; margins = {2.6, 0}
    const auto f = forward_margins(m, x);
    CHECK(f[0] == doctest::Approx(2.6));
    CHECK(f[1] == doctest::Approx(0.0));

    const auto psi = feature_vector(m, x);
    CHECK(psi[0] == doctest::Approx(2.6));
    CHECK(psi[1] == 0.0);

    const auto phi = feature_map(m, x, 1);
    REQUIRE(phi.size() == 4);
    CHECK(phi[0] == 0.0);
    CHECK(phi[2] == doctest::Approx(2.6));
    CHECK_THROWS_AS(feature_map(m, x, 2), std::out_of_range);
}

TEST_CASE("mlp init is seeded and within the fan bound") {
    const Model a = make_mlp_model(6, 3, 10, 42);
    const Model b = make_mlp_model(6, 3, 10, 42);
    const Model c = make_mlp_model(6, 3, 10, 43);
    CHECK(a.w1 == b.w1);
    CHECK(a.w1 != c.w1);
    const double bound = std::sqrt(6.0 / (6 + 10));
    for (double w : a.w1) CHECK(std::abs(w) <= bound);
    for (double v : a.b1) CHECK(v == 0.0);
    for (double v : a.mu) CHECK(v == 0.0);
}

TEST_CASE("backward matches finite differences for all parameters") {
    std::mt19937_64 rng(31);
    Model m = make_mlp_model(4, 3, 5, 7);
    m.mu = randomize(m.mu.size(), rng);
    m.b1 = randomize(m.b1.size(), rng, 0.1);
    const std::vector<double> x = randomize(4, rng, 1.0);
    const std::vector<double> c = randomize(3, rng, 1.0); // d loss / d f

    ModelGrads grads;
    grads.resize_like(m);
    backward(m, x, c, grads);

    auto loss_at = [&](const Model& probe) {
        const auto f = forward_margins(probe, x);
        double acc = 0.0;
        for (int y = 0; y < 3; ++y) acc += c[y] * f[y];
        return acc;
    };
    auto fd_check = [&](std::vector<double> Model::*field,
                        const std::vector<double>& got) {
        const auto fd = finite_difference_oracle(
            [&](const std::vector<double>& theta) {
                Model probe = m;
                probe.*field = theta;
                return loss_at(probe);
            },
            m.*field, 1e-6);
        REQUIRE(got.size() == fd.size());
        for (std::size_t i = 0; i < fd.size(); ++i)
            CHECK(got[i] == doctest::Approx(fd[i]).epsilon(1e-6));
    };
    fd_check(&Model::mu, grads.mu);
    fd_check(&Model::w1, grads.w1);
    fd_check(&Model::b1, grads.b1);
}

TEST_CASE("batched forward/backward equals the per-sample loop") {
    std::mt19937_64 rng(5);
    Model m = make_mlp_model(3, 2, 4, 1);
    m.mu = randomize(m.mu.size(), rng);
    const std::size_t batch = 7;
    const auto xs = randomize(batch * 3, rng, 1.0);
    const auto gs = randomize(batch * 2, rng, 1.0);

    ForwardBatch fwd;
    forward_batch(m, xs.data(), batch, fwd);
    ModelGrads batched;
    batched.resize_like(m);
    backward_batch(m, xs.data(), fwd, gs.data(), batched);

    ModelGrads looped;
    looped.resize_like(m);
    for (std::size_t s = 0; s < batch; ++s) {
        const std::vector<double> x(xs.begin() + s * 3,
                                    xs.begin() + (s + 1) * 3);
        const auto f = forward_margins(m, x);
        for (int y = 0; y < 2; ++y)
            CHECK(fwd.margins[s * 2 + y] == doctest::Approx(f[y]).epsilon(1e-12));
        backward(m, x, {gs[s * 2], gs[s * 2 + 1]}, looped);
    }
    for (std::size_t i = 0; i < batched.mu.size(); ++i)
        CHECK(batched.mu[i] == doctest::Approx(looped.mu[i]).epsilon(1e-10));
    for (std::size_t i = 0; i < batched.w1.size(); ++i)
        CHECK(batched.w1[i] == doctest::Approx(looped.w1[i]).epsilon(1e-10));
    for (std::size_t i = 0; i < batched.b1.size(); ++i)
        CHECK(batched.b1[i] == doctest::Approx(looped.b1[i]).epsilon(1e-10));
}

TEST_CASE("sgd_step clips by global norm and applies momentum") {
    Model m = make_linear_model(1, 2);
    m.mu = {0.0, 0.0};
    SgdState st;
    st.resize_like(m);
    ModelGrads g;
    g.resize_like(m);
    g.mu = {3.0, 4.0}; // norm 5 -> exactly at the clip threshold with 5.0

    sgd_step(m, g, st, 0.1, 0.9, 5.0);
    CHECK(m.mu[0] == doctest::Approx(-0.3));
    CHECK(m.mu[1] == doctest::Approx(-0.4));

    // second step: v = 0.9*g + g_clipped; clip now scales by 5/norm
    g.mu = {30.0, 40.0}; // norm 50 -> scaled to {3, 4}
    sgd_step(m, g, st, 0.1, 0.9, 5.0);
    CHECK(st.v_mu[0] == doctest::Approx(0.9 * 3.0 + 3.0));
    CHECK(m.mu[0] == doctest::Approx(-0.3 - 0.1 * 5.7));
}

TEST_CASE("checkpoint round trip preserves every value") {
    std::mt19937_64 rng(77);
    Model m = make_mlp_model(4, 3, 5, 3);
    m.mu = randomize(m.mu.size(), rng);
    m.b1 = randomize(m.b1.size(), rng);

    const auto path =
        (std::filesystem::temp_directory_path() / "mgce_ckpt_test.txt")
            .string();
    save_checkpoint(m, 1.75, path);
    double beta = 0.0;
    const Model r = load_checkpoint(path, &beta);
    CHECK(beta == 1.75);
    CHECK(r.kind == ModelKind::mlp);
    CHECK(r.d == 4);
    CHECK(r.k == 3);
    CHECK(r.hidden == 5);
    CHECK(r.mu == m.mu); // 17 significant digits round-trip exactly
    CHECK(r.w1 == m.w1);
    CHECK(r.b1 == m.b1);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt"), std::runtime_error);
}
