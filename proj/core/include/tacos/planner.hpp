#pragma once

#include <optional>

#include "tacos/flow_model.hpp"
#include "tacos/mdp.hpp"

namespace tacos {

enum class PlannerKind {
    optimistic,          // hallucinated controls pick a member of the model set
    mean,                // plans on the posterior mean
    trajectory_sampling  // ranks candidates on posterior-sampled rollouts
};

struct PlannerConfig {
    PlannerKind kind = PlannerKind::optimistic;
    int population = 256;
    int elites = 32;
    int iterations = 5;
    int horizon = 8;     // planned interactions per decision
    int ts_samples = 10; // posterior samples for trajectory sampling
    double init_std = 1.0;
    double min_std = 0.05;
    bool warm_start = true; // shift the previous solution one step
};

/// Receding-horizon cross-entropy planner over (u, tau) sequences, extended
/// with per-step hallucinated controls eta in [-1, 1]^(dim_x + 1) whose
/// transitions follow mu(z) + beta * eta .* sigma(z). Rollouts that stop
/// short of the remaining budget are completed by holding the final state's
/// reward rate. Falls back to the mean planner for a step when the
/// optimization returns a non-finite value.
class CemPlanner {
public:
    CemPlanner(const ControlledSde& sde, Mode mode, int max_interactions, PlannerConfig cfg);

    struct PlanResult {
        TimedAction action;
        double planned_value = 0.0;
        bool fallback = false; // planner diverged, mean plan used
    };

    PlanResult plan(const FlowModel& model, double beta, const AugmentedState& s, RngStream& rng);

    /// Model value of a fixed decision sequence with eta = 0 (used for
    /// optimism-dominance checks and warm starts).
    double evaluate_mean_sequence(const FlowModel& model, const AugmentedState& s,
                                  const Mat& decisions) const;

    void reset();
    const Mat& last_plan() const { return last_plan_; }
    const PlannerConfig& config() const { return cfg_; }

    /// Optional externally supplied candidate injected into every iteration.
    void inject_candidate(const Mat& decisions) { injected_ = decisions; }

private:
    int decision_dim() const;
    double rollout_value(const FlowModel& model, double beta, const AugmentedState& s,
                         const Mat& decisions, RngStream* ts_rng) const;

    const ControlledSde* sde_;
    Mode mode_;
    int max_interactions_;
    PlannerConfig cfg_;
    Mat last_plan_; // decision_dim x horizon
    bool have_last_plan_ = false;
    std::optional<Mat> injected_;
};

} // namespace tacos
