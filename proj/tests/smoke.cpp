#include "tacos/sac.hpp"
#include "tacos/envs.hpp"
#include <cstdio>
using namespace tacos;
int main(int argc, char** argv) {
    long budget = argc > 1 ? atol(argv[1]) : 60000;
    int seed = argc > 2 ? atoi(argv[2]) : 42;
    auto pend = make_env("pendulum-up", {{"duration_max", 3.0}});
    SacConfig cfg; cfg.hidden = {64, 64}; cfg.batch = 128;
    cfg.warmup_interactions = 5000; cfg.reward_scale = 0.3; cfg.lr = 1e-3;
    cfg.init_alpha = 0.2; cfg.updates_per_interaction = 2; cfg.warmup_bang_bang = true;
    cfg.eval_every_episodes = 400; cfg.eval_episodes = 5;
    SacTrainer tr(pend, Mode::bounded, 5, 1e-3, cfg, seed);
    auto curve = tr.train(budget);
    for (auto& p : curve.points)
        if (p.has_eval) std::printf("ep %5d steps %6ld | eval %8.2f\n", p.episode, p.env_steps, p.eval_return);
    RngStream rng(999, 0);
    auto ep = rollout(tr.mdp(), [&](const AugmentedState& st){ return tr.greedy_action(st); }, rng);
    auto& last = ep.steps.back().next_state;
    std::printf("terminal: angle %.3f omega %.3f ret %.2f | taus:", angle_dist(last.x[0], 0.0), last.x[1], ep.episode_return);
    for (auto& stp : ep.steps) std::printf(" (%.2f, u %.1f)", stp.applied_tau, stp.action.u[0]);
    std::printf("\n");
    return 0;
}
