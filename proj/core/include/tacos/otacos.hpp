#pragma once

#include <functional>
#include <optional>

#include "tacos/flow_model.hpp"
#include "tacos/planner.hpp"
#include "tacos/sac.hpp"

namespace tacos {

struct RegretRow {
    int episode = 0;
    double episode_return = 0.0;
    double regret = 0.0;
    double cum_regret = 0.0;
    double model_complexity = 0.0; // I_N, cumulative
    double coverage = 0.0;         // fraction of this episode's targets in the beta band
};

struct RegretLedger {
    double reference_value = 0.0; // V*
    std::vector<RegretRow> rows;

    /// Least-squares slope of log cum_regret against log episode index.
    double log_log_slope() const;
};

struct OtacosConfig {
    PlannerConfig planner;
    FlowModelConfig model;
    int warmup_episodes = 3;      // uniform random (u, tau) episodes
    int hyperopt_every = 5;       // fit hyperparameters every E episodes
    double reference_value = 0.0; // V*, precomputed best-known policy value
    /// Optional exact evaluation of an executed episode (closed-form systems);
    /// used for the regret column in place of the noisy return when set.
    std::function<double(const EpisodeRecord&)> exact_episode_value;
};

struct OtacosResult {
    LearningCurve curve;
    RegretLedger ledger;
};

/// Episodic model-based training: plan (optimistic / mean / trajectory
/// sampling per config), execute on the real system, append the transition
/// dataset, refit the model, update the regret ledger.
OtacosResult run_otacos(const ControlledSde& sde, Mode mode, int max_interactions, double dt_sim,
                        int n_episodes, const OtacosConfig& cfg, std::uint64_t seed);

} // namespace tacos
