#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tacos/envs.hpp"
#include "tacos/errors.hpp"

using namespace tacos;

TEST_CASE("pendulum drift") {
    auto sde = make_pendulum(PendulumTask::swing_up);
    SUBCASE("hanging rest is an equilibrium") {
        Vec x(2);
        x << M_PI, 0.0;
        Vec d = sde.drift(x, Vec::Zero(1));
        CHECK(d[0] == doctest::Approx(0.0));
        CHECK(std::abs(d[1]) < 1e-12);
    }
    SUBCASE("gravity term at the horizontal") {
        Vec x(2);
        x << M_PI / 2.0, 0.0;
        Vec d = sde.drift(x, Vec::Zero(1));
        CHECK(d[1] == doctest::Approx(9.81));
    }
    SUBCASE("reward is maximal exactly at the goal") {
        Vec up(2);
        up << 0.0, 0.0;
        CHECK(sde.reward_rate(up, Vec::Zero(1)) == doctest::Approx(0.0));
        Vec off(2);
        off << 0.3, 0.0;
        CHECK(sde.reward_rate(off, Vec::Zero(1)) < 0.0);
    }
    SUBCASE("under-actuated by construction") {
        PendulumParams p;
        CHECK(p.torque_max < p.mass * p.gravity * p.length);
    }
}

TEST_CASE("pendulum angle stays wrapped after integration") {
    auto sde = make_env("pendulum-up", {{"sigma_env", 0.3}});
    RngStream rng(1, 0);
    Vec x = sde.initial_state;
    for (int i = 0; i < 40; ++i) {
        const double u = rng.uniform(-2.5, 2.5);
        auto fs = integrate_flow(sde, x, Vec::Constant(1, u), 0.5, 1e-3, rng);
        CHECK(fs.x_next[0] > -M_PI);
        CHECK(fs.x_next[0] <= M_PI);
        x = fs.x_next;
    }
}

TEST_CASE("swing-up needs pumping at the default torque bound") {
    auto sde = make_pendulum(PendulumTask::swing_up);
    // constant full torque cannot raise the pendulum anywhere near the top
    RngStream rng(2, 0);
    Vec x = sde.initial_state;
    double closest_const = M_PI;
    for (int i = 0; i < 2000; ++i) {
        auto fs = integrate_flow(sde, x, Vec::Constant(1, 2.5), 0.005, 0.005, rng);
        x = fs.x_next;
        closest_const = std::min(closest_const, std::abs(angle_dist(x[0], 0.0)));
    }
    CHECK(closest_const > 1.5);

    // energy pumping with the same bound gets close to upright
    x = sde.initial_state;
    double closest_pump = M_PI;
    for (int i = 0; i < 2000; ++i) {
        const double omega = x[1];
        const double u = (i < 10) ? 2.5 : (omega >= 0 ? 2.5 : -2.5);
        auto fs = integrate_flow(sde, x, Vec::Constant(1, u), 0.005, 0.005, rng);
        x = fs.x_next;
        closest_pump = std::min(closest_pump, std::abs(angle_dist(x[0], 0.0)));
    }
    CHECK(closest_pump < 0.5);
}

TEST_CASE("swing-down starts upright with the hanging goal") {
    auto sde = make_pendulum(PendulumTask::swing_down);
    CHECK(sde.initial_state[0] == doctest::Approx(0.0));
    Vec down(2);
    down << M_PI, 0.0;
    CHECK(sde.reward_rate(down, Vec::Zero(1)) == doctest::Approx(0.0));
    CHECK(sde.reward_rate(sde.initial_state, Vec::Zero(1)) < -9.0); // pi^2 away
}

TEST_CASE("greenhouse drift and reward") {
    auto sde = make_greenhouse();
    SUBCASE("no flow at the outside temperature with heating off") {
        CHECK(sde.drift(Vec::Constant(1, 5.0), Vec::Zero(1))[0] == doctest::Approx(0.0));
    }
    SUBCASE("zero penalty at the target") {
        CHECK(sde.reward_rate(Vec::Constant(1, 20.0), Vec::Zero(1)) == doctest::Approx(0.0));
    }
    SUBCASE("steady state under full heating matches a long simulation") {
        // u* to hold the target would be a*(T_ref - T_out)/h = 3, clipped to 1,
        // so the best reachable steady state is T_out + h*u_max/a = 10
        RngStream rng(3, 0);
        Vec x = sde.initial_state;
        for (int i = 0; i < 40; ++i)
            x = integrate_flow(sde, x, Vec::Constant(1, 1.0), 1.0, 1e-3, rng).x_next;
        CHECK(std::abs(x[0] - 10.0) <= 0.01 * 10.0);
    }
}

TEST_CASE("linear test system closed forms") {
    auto lin = make_linear_test();
    CHECK(lin.mean_flow(1.0, 0.0) == doctest::Approx(1.0));
    CHECK(lin.flow_variance(0.0) == doctest::Approx(0.0));
    CHECK(lin.mean_flow(1.0, 1.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(lin.mean_reward(2.0, 1.0) == doctest::Approx(2.0 * (1.0 - std::exp(-1.0))));
}

TEST_CASE("environment registry") {
    for (const char* name : {"pendulum-up", "pendulum-down", "greenhouse", "linear-test"}) {
        CHECK(is_known_env(name));
        auto sde = make_env(name);
        CHECK(sde.dim_x >= 1);
        CHECK(sde.name == name);
    }
    CHECK_FALSE(is_known_env("cartpole"));
    CHECK_THROWS_AS(make_env("cartpole"), ConfigError);

    SUBCASE("overrides reach the parameters") {
        auto sde = make_env("pendulum-up", {{"torque_max", 3.0}, {"cost", 0.25}});
        CHECK(sde.action_high[0] == doctest::Approx(3.0));
        CHECK(sde.interaction_cost(sde.initial_state, Vec::Zero(1)) == doctest::Approx(0.25));
    }
    SUBCASE("unknown override names are rejected with the field") {
        try {
            make_env("greenhouse", {{"heater_power", 2.0}});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.field).find("heater_power") != std::string::npos);
        }
    }
    SUBCASE("negative interaction cost is rejected") {
        CHECK_THROWS_AS(make_env("linear-test", {{"cost", -0.1}}), ConfigError);
    }
}

TEST_CASE("pendulum reward rates are never positive") {
    auto sde = make_env("pendulum-up", {});
    RngStream rng(4, 0);
    for (int i = 0; i < 200; ++i) {
        Vec x(2);
        x << rng.uniform(-M_PI, M_PI), rng.uniform(-8, 8);
        Vec u = Vec::Constant(1, rng.uniform(-2.5, 2.5));
        CHECK(sde.reward_rate(x, u) <= 0.0);
    }
}
