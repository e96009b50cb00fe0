#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tacos/envs.hpp"
#include "tacos/errors.hpp"
#include "tacos/mdp.hpp"

using namespace tacos;

namespace {

ControlledSde flat_sde(double reward_rate_value, double cost_value, double t_min = 0.05,
                       double t_max = 2.0, double horizon = 1.0) {
    ControlledSde sde;
    sde.name = "flat";
    sde.dim_x = 1;
    sde.dim_u = 1;
    sde.dim_noise = 1;
    sde.drift = [](const Vec&, const Vec&) { return Vec::Zero(1); };
    sde.diffusion = [](const Vec&, const Vec&) { return Mat::Zero(1, 1); };
    sde.reward_rate = [reward_rate_value](const Vec&, const Vec&) { return reward_rate_value; };
    sde.interaction_cost = [cost_value](const Vec&, const Vec&) { return cost_value; };
    sde.action_low = Vec::Constant(1, -1);
    sde.action_high = Vec::Constant(1, 1);
    sde.duration_min = t_min;
    sde.duration_max = t_max;
    sde.horizon = horizon;
    sde.initial_state = Vec::Zero(1);
    return sde;
}

TimedAction act(double u, double tau) {
    TimedAction a;
    a.u = Vec::Constant(1, u);
    a.tau = tau;
    return a;
}

} // namespace

TEST_CASE("cost-mode step") {
    SUBCASE("pure interaction cost") {
        auto sde = flat_sde(0.0, 0.1);
        TacosMdp mdp(sde, Mode::cost, 1e-3);
        RngStream rng(1, 0);
        auto r = mdp.step(mdp.reset(), act(0.0, 0.3), rng);
        CHECK(r.reward == doctest::Approx(-0.1));
        CHECK(r.info.cost_paid == doctest::Approx(0.1));
    }
    SUBCASE("requested duration clamps to the remaining budget") {
        auto sde = flat_sde(0.0, 0.0);
        TacosMdp mdp(sde, Mode::cost, 1e-3);
        AugmentedState s = mdp.reset();
        s.t_to_go = 0.5;
        RngStream rng(1, 1);
        auto r = mdp.step(s, act(0.0, 0.9), rng);
        CHECK(r.info.applied_tau == doctest::Approx(0.5));
        CHECK(r.next_state.t_to_go == 0.0);
        CHECK(r.done);
        CHECK(r.info.clamped);
    }
    SUBCASE("integrated reward accumulates over the applied duration") {
        auto sde = flat_sde(1.0, 0.0);
        TacosMdp mdp(sde, Mode::cost, 1e-3);
        RngStream rng(1, 2);
        auto r = mdp.step(mdp.reset(), act(0.0, 0.3), rng);
        CHECK(r.reward == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(r.next_state.t_to_go == doctest::Approx(0.7));
        CHECK(r.next_state.b_last == doctest::Approx(0.3).epsilon(1e-9));
    }
    SUBCASE("final fractional step below t_min still pays the cost") {
        auto sde = flat_sde(1.0, 0.25);
        TacosMdp mdp(sde, Mode::cost, 1e-3);
        AugmentedState s = mdp.reset();
        s.t_to_go = 0.02; // below t_min = 0.05
        RngStream rng(1, 3);
        auto r = mdp.step(s, act(0.0, 1.0), rng);
        CHECK(r.info.applied_tau == doctest::Approx(0.02));
        CHECK(r.done);
        CHECK(r.info.cost_paid == doctest::Approx(0.25));
    }
    SUBCASE("stepping a finished episode is a usage error") {
        auto sde = flat_sde(0.0, 0.0);
        TacosMdp mdp(sde, Mode::cost, 1e-3);
        AugmentedState s = mdp.reset();
        s.t_to_go = 0.0;
        RngStream rng(1, 4);
        CHECK_THROWS_AS(mdp.step(s, act(0.0, 0.1), rng), UsageError);
    }
}

TEST_CASE("feasible duration intervals") {
    SUBCASE("fresh budget") {
        auto [lo, hi] = feasible_duration_interval(10.0, 0, 5, 0.1, 10.0);
        CHECK(lo == doctest::Approx(0.1));
        CHECK(hi == doctest::Approx(9.6));
    }
    SUBCASE("final interaction is forced onto the remaining time") {
        auto [lo, hi] = feasible_duration_interval(3.7, 4, 5, 0.1, 10.0);
        CHECK(lo == doctest::Approx(3.7));
        CHECK(hi == doctest::Approx(3.7));
    }
    SUBCASE("tight tail pins the duration") {
        auto [lo, hi] = feasible_duration_interval(0.3, 2, 5, 0.1, 10.0);
        CHECK(lo == doctest::Approx(0.1));
        CHECK(hi == doctest::Approx(0.1));
    }
    SUBCASE("empty intervals throw") {
        CHECK_THROWS_AS(feasible_duration_interval(0.3, 0, 2, 0.4, 0.5),
                        InfeasibleDurationError);
    }
    SUBCASE("feasible initial budgets never hit an empty interval") {
        RngStream rng(2, 0);
        for (int trial = 0; trial < 50; ++trial) {
            const int K = 2 + static_cast<int>(rng.index(8));
            const double t_min = rng.uniform(0.01, 0.2);
            const double t_max = rng.uniform(1.0, 3.0);
            const double T = rng.uniform(K * t_min, K * t_max);
            auto sde = flat_sde(0.0, 0.0, t_min, t_max, T);
            TacosMdp mdp(sde, Mode::bounded, 1e-3, K);
            RngStream ep_rng(3, trial);
            Policy p = [&](const AugmentedState&) {
                return act(0.0, rng.uniform(0.0, 2.0 * t_max));
            };
            auto ep = rollout(mdp, p, ep_rng); // throws on infeasibility
            CHECK(ep.interactions == K);
            CHECK(std::abs(ep.physical_time - T) < 1e-9);
        }
    }
}

TEST_CASE("bounded-mode step") {
    SUBCASE("a single interaction covers the whole horizon") {
        auto sde = flat_sde(1.0, 0.0, 0.05, 1.0, 1.0);
        TacosMdp mdp(sde, Mode::bounded, 1e-3, 1);
        RngStream rng(4, 0);
        auto r = mdp.step(mdp.reset(), act(0.0, 0.3), rng);
        CHECK(r.info.applied_tau == doctest::Approx(1.0));
        CHECK(r.done);
        CHECK(r.next_state.t_to_go == 0.0);
    }
    SUBCASE("equidistant requests cover the horizon exactly") {
        auto sde = flat_sde(1.0, 0.0, 0.05, 2.0, 1.0);
        TacosMdp mdp(sde, Mode::bounded, 1e-3, 5);
        RngStream rng(4, 1);
        Policy p = [&](const AugmentedState&) { return act(0.0, 0.2); };
        auto ep = rollout(mdp, p, rng);
        CHECK(ep.interactions == 5);
        for (auto& st : ep.steps) CHECK(st.applied_tau == doctest::Approx(0.2));
        CHECK(ep.steps.back().next_state.t_to_go == 0.0);
    }
    SUBCASE("no cost term in the bounded reward") {
        auto sde = flat_sde(1.0, 7.0, 0.05, 1.0, 1.0);
        TacosMdp mdp(sde, Mode::bounded, 1e-3, 2);
        RngStream rng(4, 2);
        auto r = mdp.step(mdp.reset(), act(0.0, 0.5), rng);
        CHECK(r.reward == doctest::Approx(0.5).epsilon(1e-9));
    }
}

TEST_CASE("rollout accounting") {
    SUBCASE("unit reward rate telescopes to the horizon") {
        auto sde = flat_sde(1.0, 0.0);
        TacosMdp mdp(sde, Mode::cost, 1e-3);
        RngStream pol(5, 0);
        RngStream rng(5, 1);
        Policy p = [&](const AugmentedState&) { return act(0.0, pol.uniform(0.05, 2.0)); };
        auto ep = rollout(mdp, p, rng);
        CHECK(ep.episode_return == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(ep.physical_time - 1.0) < 1e-9);
    }
    SUBCASE("interaction counts stay inside the duration bounds") {
        auto sde = flat_sde(0.0, 0.0, 0.05, 0.4, 1.0);
        TacosMdp mdp(sde, Mode::cost, 1e-3);
        RngStream pol(5, 2), rng(5, 3);
        Policy p = [&](const AugmentedState&) { return act(0.0, pol.uniform(0.01, 1.0)); };
        for (int e = 0; e < 10; ++e) {
            auto ep = rollout(mdp, p, rng);
            CHECK(ep.interactions >= static_cast<int>(std::ceil(1.0 / 0.4)));
            CHECK(ep.interactions <= static_cast<int>(std::ceil(1.0 / 0.05)));
        }
    }
    SUBCASE("fixed minimal durations pay the full interaction count") {
        auto lin = make_linear_test({1.0, 0.0, 1.0, 0.1, 1.0, 1.0, 0.3});
        TacosMdp mdp(lin.sde, Mode::cost, 1e-4);
        RngStream rng(5, 4);
        Policy p = [&](const AugmentedState&) { return act(0.0, 0.1); };
        auto ep = rollout(mdp, p, rng);
        const int count = static_cast<int>(std::ceil(1.0 / 0.1));
        CHECK(ep.interactions == count);
        CHECK(ep.episode_return ==
              doctest::Approx((1.0 - std::exp(-1.0)) - 0.3 * count).epsilon(2e-3));
    }
    SUBCASE("bounded episodes always use exactly K interactions") {
        auto sde = flat_sde(0.0, 0.0, 0.05, 2.0, 1.0);
        TacosMdp mdp(sde, Mode::bounded, 1e-3, 7);
        RngStream pol(5, 5), rng(5, 6);
        Policy p = [&](const AugmentedState&) { return act(0.0, pol.uniform(0.05, 2.0)); };
        auto ep = rollout(mdp, p, rng);
        CHECK(ep.interactions == 7);
        CHECK(std::abs(ep.physical_time - 1.0) < 1e-9);
    }
    SUBCASE("divergence truncates the episode and keeps the partial return") {
        ControlledSde sde = flat_sde(1.0, 0.0);
        sde.drift = [](const Vec& x, const Vec&) {
            return Vec::Constant(1, x[0] * x[0] * x[0]);
        };
        sde.initial_state = Vec::Constant(1, 3.0);
        TacosMdp mdp(sde, Mode::cost, 1e-2);
        RngStream rng(5, 7);
        Policy p = [&](const AugmentedState&) { return act(0.0, 1.0); };
        auto ep = rollout(mdp, p, rng);
        CHECK(ep.truncated);
        CHECK(std::isfinite(ep.episode_return));
    }
}

TEST_CASE("clamping is monotone in the request") {
    auto sde = flat_sde(0.0, 0.0, 0.05, 0.7, 1.0);
    for (Mode mode : {Mode::cost, Mode::bounded}) {
        double prev = 0.0;
        for (double req = 0.0; req <= 2.0; req += 0.05) {
            const double applied = clamp_duration(mode, sde, 4, 0.9, 1, req);
            CHECK(applied >= prev - 1e-12);
            prev = applied;
        }
    }
}

TEST_CASE("value equivalence of the reduced MDP") {
    SUBCASE("deterministic aligned partitions agree to 1e-9") {
        auto lin = make_linear_test({1.0, 0.0, 1.0, 0.1, 1.0, 1.0, 0.2});
        TacosMdp mdp(lin.sde, Mode::cost, 1e-3);
        RngStream pol(6, 0);
        Policy p = [&pol](const AugmentedState&) {
            return act(0.0, 1e-3 * static_cast<double>(100 + pol.index(150)));
        };
        auto rep = proposition1_check(mdp, p, 4, RngStream(6, 1));
        CHECK(rep.mean_abs_diff <= 1e-9);
        CHECK(rep.pass);
    }
    SUBCASE("stochastic values agree within three standard errors") {
        auto lin = make_linear_test({1.0, 0.5, 1.0, 0.1, 1.0, 1.0, 0.2});
        TacosMdp mdp(lin.sde, Mode::cost, 1e-3);
        RngStream pol(6, 2);
        Policy p = [&pol, &lin](const AugmentedState&) {
            return act(0.0, std::exp(pol.uniform(std::log(lin.sde.duration_min),
                                                 std::log(lin.sde.duration_max))));
        };
        auto rep = proposition1_check(mdp, p, 400, RngStream(6, 3));
        CHECK(rep.pass);
    }
    SUBCASE("a zero horizon yields zero on both routes") {
        auto sde = flat_sde(1.0, 0.5, 0.05, 0.05, 0.0);
        TacosMdp mdp(sde, Mode::cost, 1e-3);
        Policy p = [](const AugmentedState&) { return act(0.0, 0.05); };
        auto rep = proposition1_check(mdp, p, 2, RngStream(6, 4));
        CHECK(rep.mean_mdp == 0.0);
        CHECK(rep.mean_direct == 0.0);
        CHECK(rep.pass);
    }
}

TEST_CASE("cost-mode returns respect the shifted objective bounds") {
    // reward rate in [-B, 0] with B = 1, constant cost C
    ControlledSde sde = flat_sde(0.0, 0.2, 0.1, 1.0, 2.0);
    sde.reward_rate = [](const Vec& x, const Vec&) {
        return -0.5 * (1.0 + std::tanh(x[0]));
    };
    sde.drift = [](const Vec& x, const Vec& u) { return Vec::Constant(1, -x[0] + u[0]); };
    sde.diffusion = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 0.2); };
    TacosMdp mdp(sde, Mode::cost, 1e-3);
    const double B = 1.0, C = 0.2, T = 2.0, t_min = 0.1;
    RngStream pol(7, 0);
    for (int e = 0; e < 30; ++e) {
        RngStream rng(7, 1 + e);
        Policy p = [&](const AugmentedState&) {
            return act(pol.uniform(-1, 1), pol.uniform(0.05, 1.2));
        };
        auto ep = rollout(mdp, p, rng);
        const double shifted = ep.episode_return + B * T; // reward rate shifted into [0, B]
        CHECK(shifted >= -(C / t_min) * T - 1e-9);
        CHECK(shifted <= B * T + 1e-9);
    }
}

TEST_CASE("episode step lines round-trip") {
    auto sde = flat_sde(1.0, 0.1);
    TacosMdp mdp(sde, Mode::cost, 1e-3);
    RngStream pol(8, 0), rng(8, 1);
    Policy p = [&](const AugmentedState&) {
        return act(pol.uniform(-1, 1), pol.uniform(0.05, 0.4));
    };
    auto ep = rollout(mdp, p, rng);
    std::stringstream ss;
    write_episode_steps(ss, ep);
    auto steps = read_episode_steps(ss, sde.dim_x, sde.dim_u);
    REQUIRE(steps.size() == ep.steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        CHECK(steps[i].state.k == ep.steps[i].state.k);
        CHECK(steps[i].state.t_to_go == doctest::Approx(ep.steps[i].state.t_to_go));
        CHECK(steps[i].applied_tau == doctest::Approx(ep.steps[i].applied_tau));
        CHECK(steps[i].reward == doctest::Approx(ep.steps[i].reward));
        CHECK(steps[i].action.u[0] == doctest::Approx(ep.steps[i].action.u[0]));
    }
}

TEST_CASE("transition rows carry the model targets") {
    auto lin = make_linear_test();
    TacosMdp mdp(lin.sde, Mode::cost, 1e-3);
    RngStream rng(9, 0);
    Policy p = [](const AugmentedState&) { return act(0.0, 0.25); };
    auto ep = rollout(mdp, p, rng);
    REQUIRE(ep.transitions.size() == static_cast<std::size_t>(ep.interactions));
    for (std::size_t i = 0; i < ep.transitions.rows.size(); ++i) {
        const auto& row = ep.transitions.rows[i];
        CHECK(row.tau == doctest::Approx(ep.steps[i].applied_tau));
        CHECK(row.x_next_raw.allFinite());
        CHECK(row.delta_reward == doctest::Approx(ep.steps[i].state.b_last + row.delta_reward -
                                                  ep.steps[i].state.b_last)); // finite, recorded
    }
}

TEST_CASE("actions outside the bounds are rejected") {
    auto sde = flat_sde(0.0, 0.0);
    TacosMdp mdp(sde, Mode::cost, 1e-3);
    RngStream rng(10, 0);
    CHECK_THROWS_AS(mdp.step(mdp.reset(), act(1.5, 0.1), rng), UsageError);
}
