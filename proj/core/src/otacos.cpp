#include "tacos/otacos.hpp"

#include <chrono>
#include <cmath>

#include "tacos/errors.hpp"

namespace tacos {

double RegretLedger::log_log_slope() const {
    // slope of log(max(cum_regret, tiny)) vs log(n)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const RegretRow& r : rows) {
        if (r.episode < 1) continue;
        const double x = std::log(static_cast<double>(r.episode));
        const double y = std::log(std::max(r.cum_regret, 1e-12));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

OtacosResult run_otacos(const ControlledSde& sde, Mode mode, int max_interactions, double dt_sim,
                        int n_episodes, const OtacosConfig& cfg, std::uint64_t seed) {
    TacosMdp mdp(sde, mode, dt_sim, max_interactions);
    FlowModel model(sde, cfg.model);
    CemPlanner planner(sde, mode, max_interactions, cfg.planner);

    RngStream rng_env(seed, 11);
    RngStream rng_plan(seed, 12);
    RngStream rng_warm(seed, 13);

    OtacosResult out;
    out.ledger.reference_value = cfg.reference_value;

    TransitionDataset dataset;
    double cum_regret = 0.0;
    long env_steps = 0;
    double physical_time = 0.0;
    const auto t0 = std::chrono::steady_clock::now();

    for (int n = 1; n <= n_episodes; ++n) {
        const bool warmup = n <= cfg.warmup_episodes || dataset.size() == 0;
        planner.reset();

        Policy policy;
        if (warmup) {
            policy = [&](const AugmentedState&) {
                TimedAction a;
                a.u.resize(sde.dim_u);
                for (int i = 0; i < sde.dim_u; ++i)
                    a.u[i] = rng_warm.uniform(sde.action_low[i], sde.action_high[i]);
                a.tau = std::exp(
                    rng_warm.uniform(std::log(sde.duration_min), std::log(sde.duration_max)));
                return a;
            };
        } else {
            policy = [&](const AugmentedState& s) {
                return planner.plan(model, model.beta(n - 1), s, rng_plan).action;
            };
        }

        EpisodeRecord ep = rollout(mdp, policy, rng_env);
        env_steps += ep.interactions;
        physical_time += ep.physical_time;

        // ledger quantities use the model state *before* refitting
        double coverage = 0.0;
        double complexity = 0.0;
        if (model.fitted() && !ep.transitions.rows.empty()) {
            complexity = model.complexity_increment(ep.transitions);
            // noisy-target coverage with observation noise folded in
            coverage = 0.0;
            Vec cal = model.calibration_report(ep.transitions, model.beta(n - 1));
            coverage = cal.mean();
        } else if (!ep.transitions.rows.empty()) {
            // prior model: sigma is the prior signal std at every input
            complexity = model.complexity_increment(ep.transitions);
        }

        const double achieved =
            cfg.exact_episode_value ? cfg.exact_episode_value(ep) : ep.episode_return;
        const double regret = cfg.reference_value - achieved;
        cum_regret += regret;

        RegretRow row;
        row.episode = n;
        row.episode_return = achieved;
        row.regret = regret;
        row.cum_regret = cum_regret;
        row.coverage = coverage;

        dataset.append(ep.transitions);
        if (!dataset.rows.empty())
            model.fit(dataset, n % std::max(cfg.hyperopt_every, 1) == 0 || n == cfg.warmup_episodes + 1);

        // I_N accumulates the pre-refit posterior stds at the visited inputs
        row.model_complexity =
            (out.ledger.rows.empty() ? 0.0 : out.ledger.rows.back().model_complexity) + complexity;
        out.ledger.rows.push_back(row);

        CurvePoint p;
        p.episode = n;
        p.env_steps = env_steps;
        p.physical_time_s = physical_time;
        p.train_return = ep.episode_return;
        p.train_return_no_cost = ep.episode_return_no_cost;
        p.interactions = ep.interactions;
        p.wallclock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.curve.points.push_back(p);
    }
    return out;
}

} // namespace tacos
