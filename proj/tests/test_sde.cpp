#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tacos/envs.hpp"
#include "tacos/errors.hpp"
#include "tacos/sde.hpp"

using namespace tacos;

namespace {

ControlledSde still_sde(std::function<double(const Vec&, const Vec&)> reward) {
    ControlledSde sde;
    sde.name = "still";
    sde.dim_x = 1;
    sde.dim_u = 1;
    sde.dim_noise = 1;
    sde.drift = [](const Vec&, const Vec&) { return Vec::Zero(1); };
    sde.diffusion = [](const Vec&, const Vec&) { return Mat::Zero(1, 1); };
    sde.reward_rate = std::move(reward);
    sde.interaction_cost = [](const Vec&, const Vec&) { return 0.0; };
    sde.action_low = Vec::Constant(1, -1);
    sde.action_high = Vec::Constant(1, 1);
    sde.duration_min = 0.01;
    sde.duration_max = 1.0;
    sde.horizon = 1.0;
    sde.initial_state = Vec::Zero(1);
    return sde;
}

} // namespace

TEST_CASE("identity flow with constant reward") {
    auto sde = still_sde([](const Vec&, const Vec&) { return 1.0; });
    RngStream rng(1, 0);
    auto fs = integrate_flow(sde, Vec::Constant(1, 0.7), Vec::Zero(1), 0.5, 1e-3, rng);
    CHECK(fs.x_next[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(fs.delta_reward == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("deterministic linear decay matches the closed form") {
    auto lin = make_linear_test({1.0, 0.0, 1.0, 0.1, 1.0, 1.0, 0.0});
    RngStream rng(2, 0);
    auto fs = integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0, 1e-4, rng);
    CHECK(std::abs(fs.x_next[0] - std::exp(-1.0)) < 1e-3);

    // halved-step cross-check: the error must shrink
    RngStream rng2(2, 0);
    auto fs2 = integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0, 5e-5, rng2);
    CHECK(std::abs(fs2.x_next[0] - std::exp(-1.0)) < std::abs(fs.x_next[0] - std::exp(-1.0)));
}

TEST_CASE("stochastic flow reproduces the process moments") {
    auto lin = make_linear_test(); // sigma = 0.5
    const int n = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        RngStream rng(7, static_cast<std::uint64_t>(i));
        auto fs = integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0, 1e-3, rng);
        sum += fs.x_next[0];
        sumsq += fs.x_next[0] * fs.x_next[0];
    }
    const double mean = sum / n;
    const double var = (sumsq - n * mean * mean) / (n - 1);
    const double se = std::sqrt(var / n);
    CHECK(std::abs(mean - std::exp(-1.0)) <= 3.0 * se);
    CHECK(std::abs(var - lin.flow_variance(1.0)) <= 0.10 * lin.flow_variance(1.0));
}

TEST_CASE("mean flow oracle") {
    SUBCASE("deterministic system gives zero standard error") {
        auto lin = make_linear_test({1.0, 0.0, 1.0, 0.1, 1.0, 1.0, 0.0});
        auto r = mean_flow_oracle(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0, 1e-3, 16,
                                  RngStream(3, 0));
        RngStream rng(3, 99);
        auto single = integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0, 1e-3, rng);
        CHECK(r.mean_x_next[0] == doctest::Approx(single.x_next[0]).epsilon(1e-14));
        CHECK(r.std_err.maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("stochastic mean within three standard errors") {
        auto lin = make_linear_test();
        auto r = mean_flow_oracle(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0, 1e-3, 10000,
                                  RngStream(4, 0));
        CHECK(std::abs(r.mean_x_next[0] - std::exp(-1.0)) <= 3.0 * r.std_err[0] + 1e-3);
    }
    SUBCASE("integrated reward matches the closed form") {
        auto lin = make_linear_test({1.0, 0.0, 1.0, 0.1, 1.0, 1.0, 0.0});
        auto r = mean_flow_oracle(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0, 1e-4, 4,
                                  RngStream(5, 0));
        CHECK(std::abs(r.mean_delta_reward - (1.0 - std::exp(-1.0))) < 1e-3);
    }
}

TEST_CASE("weak convergence order of the integrator") {
    auto lin = make_linear_test({1.0, 0.0, 1.0, 0.1, 1.0, 1.0, 0.0});
    auto exact = [&lin](const Vec& x, const Vec&, double tau) {
        return Vec::Constant(1, lin.mean_flow(x[0], tau));
    };

    SUBCASE("halving dt halves the error") {
        auto rows = convergence_order_check(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0,
                                            {4e-3, 2e-3, 1e-3}, exact, RngStream(6, 0));
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            const double ratio = rows[i].second / rows[i + 1].second;
            CHECK(ratio > 1.6);
            CHECK(ratio < 2.4);
        }
    }
    SUBCASE("single-step error has the known value") {
        auto rows = convergence_order_check(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 0.1,
                                            {0.1}, exact, RngStream(6, 1));
        CHECK(rows[0].second == doctest::Approx(std::abs(0.9 - std::exp(-0.1))).epsilon(1e-9));
    }
    SUBCASE("a motionless system has zero weak error") {
        auto sde = still_sde([](const Vec&, const Vec&) { return 0.0; });
        auto exact_still = [](const Vec& x, const Vec&, double) { return x; };
        auto rows = convergence_order_check(sde, Vec::Constant(1, 0.3), Vec::Zero(1), 0.5,
                                            {1e-2, 1e-3}, exact_still, RngStream(6, 2));
        for (auto& [dt, err] : rows) CHECK(err == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("dt list must decrease") {
        CHECK_THROWS_AS(convergence_order_check(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0,
                                                {1e-3, 2e-3}, exact, RngStream(6, 3)),
                        InvalidStepError);
    }
}

TEST_CASE("identical streams reproduce identical samples bit-exactly") {
    auto lin = make_linear_test();
    RngStream a(99, 7), b(99, 7);
    auto fa = integrate_flow(lin.sde, Vec::Constant(1, 0.4), Vec::Zero(1), 0.73, 1e-3, a);
    auto fb = integrate_flow(lin.sde, Vec::Constant(1, 0.4), Vec::Zero(1), 0.73, 1e-3, b);
    CHECK(fa.x_next[0] == fb.x_next[0]);
    CHECK(fa.delta_reward == fb.delta_reward);

    RngStream c(99, 8); // different stream, different path
    auto fc = integrate_flow(lin.sde, Vec::Constant(1, 0.4), Vec::Zero(1), 0.73, 1e-3, c);
    CHECK(fa.x_next[0] != fc.x_next[0]);
}

TEST_CASE("time additivity on an aligned binary partition") {
    // dt and durations exactly representable so the partitions coincide
    const double dt = 0.0009765625; // 2^-10
    auto lin = make_linear_test({1.0, 0.5, 1.0, 0.1, 1.0, 1.0, 0.0});
    const double tau1 = 256 * dt, tau2 = 512 * dt;

    RngStream chained(12, 0);
    auto f1 = integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), tau1, dt, chained);
    auto f2 = integrate_flow(lin.sde, f1.x_next, Vec::Zero(1), tau2, dt, chained);

    RngStream whole(12, 0);
    auto f = integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), tau1 + tau2, dt, whole);
    CHECK(std::abs(f.x_next[0] - f2.x_next[0]) < 1e-9);
    CHECK(std::abs(f.delta_reward - (f1.delta_reward + f2.delta_reward)) < 1e-9);
}

TEST_CASE("bounded reward rates bound the integrated reward") {
    // reward rate in [0, 1]
    ControlledSde sde = still_sde([](const Vec& x, const Vec&) {
        return 0.5 * (1.0 + std::sin(x[0]));
    });
    sde.drift = [](const Vec& x, const Vec& u) { return Vec::Constant(1, -x[0] + u[0]); };
    sde.diffusion = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 0.3); };
    RngStream rng(13, 0);
    for (int i = 0; i < 50; ++i) {
        const double tau = rng.uniform(0.05, 1.0);
        Vec x = Vec::Constant(1, rng.uniform(-2, 2));
        Vec u = Vec::Constant(1, rng.uniform(-1, 1));
        auto fs = integrate_flow(sde, x, u, tau, 1e-3, rng);
        CHECK(fs.delta_reward >= -1e-12);
        CHECK(fs.delta_reward <= tau + 1e-12);
    }
}

TEST_CASE("mean flow displacement obeys the exponential growth bound") {
    auto lin = make_linear_test(); // L_f = 1, L_g = 0 (constant diffusion)
    const double factor = std::exp(0.5 * (2.0 * 1.0 + 0.0) * 1.0);
    RngStream base(14, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const double x1 = base.uniform(-2, 2), x2 = base.uniform(-2, 2);
        auto m1 = mean_flow_oracle(lin.sde, Vec::Constant(1, x1), Vec::Zero(1), 1.0, 1e-3, 1000,
                                   base.substream(2 * trial));
        auto m2 = mean_flow_oracle(lin.sde, Vec::Constant(1, x2), Vec::Zero(1), 1.0, 1e-3, 1000,
                                   base.substream(2 * trial + 1));
        const double lhs = std::abs(m1.mean_x_next[0] - m2.mean_x_next[0]);
        CHECK(lhs <= std::abs(x1 - x2) * factor + 3.0 * (m1.std_err[0] + m2.std_err[0]));
    }
}

TEST_CASE("divergence carries the last finite state") {
    ControlledSde sde = still_sde([](const Vec&, const Vec&) { return 0.0; });
    sde.drift = [](const Vec& x, const Vec&) { return Vec::Constant(1, x[0] * x[0] * x[0]); };
    RngStream rng(15, 0);
    try {
        integrate_flow(sde, Vec::Constant(1, 3.0), Vec::Zero(1), 1.0, 1e-2, rng);
        FAIL("expected divergence");
    } catch (const DivergedError& e) {
        CHECK(e.last_finite_state.allFinite());
        CHECK(e.time > 0.0);
        CHECK(e.time <= 1.0);
        CHECK(std::isfinite(e.reward));
    }
}

TEST_CASE("bad step setups are rejected") {
    auto lin = make_linear_test();
    RngStream rng(16, 0);
    CHECK_THROWS_AS(integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1e-4, 1e-3, rng),
                    InvalidStepError);
    CHECK_THROWS_AS(integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 1.0, -1.0, rng),
                    InvalidStepError);
}

TEST_CASE("path trace starts at zero and increases strictly") {
    auto lin = make_linear_test();
    RngStream rng(17, 0);
    auto fs =
        integrate_flow(lin.sde, Vec::Constant(1, 1.0), Vec::Zero(1), 0.25, 1e-3, rng, true);
    REQUIRE(fs.path_trace.has_value());
    CHECK(fs.path_trace->front().first == 0.0);
    CHECK(fs.path_trace->front().second[0] == doctest::Approx(1.0));
    for (std::size_t i = 0; i + 1 < fs.path_trace->size(); ++i)
        CHECK(fs.path_trace->at(i).first < fs.path_trace->at(i + 1).first);
    CHECK(fs.path_trace->back().first == doctest::Approx(0.25).epsilon(1e-12));
}
