#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tacos/adam.hpp"
#include "tacos/mdp.hpp"
#include "tacos/mlp.hpp"
#include "tacos/policy_head.hpp"
#include "tacos/replay.hpp"

namespace tacos {

struct SacConfig {
    double gamma = 0.99;           // per-interaction discount
    double polyak = 0.005;         // target smoothing
    double lr = 3e-4;
    int batch = 256;
    int updates_per_interaction = 1; // raised for the more-compute comparison
    int warmup_interactions = 1000;  // random-policy interactions before updates
    /// Warmup controls: uniform over the action box, or uniform over its
    /// corners (bang-bang). Corner sampling excites under-actuated systems
    /// that uniform torques cannot reach within desk-scale budgets.
    bool warmup_bang_bang = false;
    std::vector<int> hidden = {256, 256};
    std::size_t replay_capacity = 1000000;
    double reward_scale = 1.0;
    double init_alpha = 0.1;
    double entropy_target_scale = 1.0; // target = -scale * action_dim
    int eval_every_episodes = 25;
    int eval_episodes = 10;

    /// When set, the duration head is dropped and every action is applied for
    /// this fixed grid duration (the equidistant baseline).
    std::optional<double> fixed_tau;

    void validate() const;
};

struct CurvePoint {
    int episode = 0;
    long env_steps = 0; // cumulative interactions
    double physical_time_s = 0.0;
    double train_return = 0.0;
    double train_return_no_cost = 0.0;
    int interactions = 0; // this episode
    double wallclock_s = 0.0;
    bool has_eval = false;
    double eval_return = 0.0;
    double eval_return_no_cost = 0.0;
    double eval_interactions = 0.0;
};

struct LearningCurve {
    std::vector<CurvePoint> points;

    /// Mean eval return over the last `n_points` evaluation entries.
    double converged_eval_return(int n_points = 3, bool include_cost = true) const;
    double converged_eval_interactions(int n_points = 3) const;
};

struct UpdateLosses {
    double critic1 = 0.0;
    double critic2 = 0.0;
    double actor = 0.0;
    double alpha = 0.0;
};

/// Soft actor-critic over the augmented MDP: squashed-Gaussian policy
/// emitting (u, tau), twin critics with target smoothing and automatic
/// temperature tuning toward a fixed entropy target.
class SacTrainer {
public:
    SacTrainer(const ControlledSde& sde, Mode mode, int max_interactions, double dt_sim,
               SacConfig config, std::uint64_t seed);

    /// Interleaves rollouts and updates until `budget_interactions` system
    /// interactions have been consumed. Diverged episodes are logged and
    /// skipped for updates.
    LearningCurve train(long budget_interactions);

    /// Greedy (squashed-mean) action for an augmented state.
    TimedAction greedy_action(const AugmentedState& s) const;
    /// Stochastic action used during training.
    TimedAction explore_action(const AugmentedState& s);

    /// One gradient update on a sampled batch. Exposed for tests.
    UpdateLosses update_once();

    /// Value of the current twin-critic minimum at (s, a).
    double critic_value(const AugmentedState& s, const TimedAction& a) const;

    double alpha() const { return std::exp(log_alpha_); }
    long updates_done() const { return updates_; }
    const TacosMdp& mdp() const { return mdp_; }
    const SacConfig& config() const { return cfg_; }

    Mlp& actor() { return actor_; }
    Mlp& critic1() { return critic1_; }
    Mlp& critic2() { return critic2_; }
    ReplayBuffer& replay() { return replay_; }
    const SquashedGaussian& head() const { return head_; }

    struct EvalResult {
        double mean_return = 0.0;
        double mean_return_no_cost = 0.0;
        double mean_interactions = 0.0;
    };
    /// Deterministic evaluation: greedy policy on a dedicated stream.
    EvalResult evaluate(int n_episodes, std::uint64_t eval_stream) const;

    void push_transition(const AugmentedState& s, const TimedAction& executed, double applied_tau,
                         double reward, const AugmentedState& s_next, bool done);

private:
    int action_dim() const { return head_.dim(); }
    Eigen::VectorXd stored_action(const TimedAction& a, double applied_tau) const;
    Eigen::MatrixXd normalize_batch(const Eigen::MatrixXd& actions_env) const;
    TimedAction to_timed_action(const Eigen::VectorXd& head_action) const;

    ControlledSde sde_;
    TacosMdp mdp_;
    SacConfig cfg_;
    SquashedGaussian head_;
    Mlp actor_, critic1_, critic2_, target1_, target2_;
    Adam opt_actor_, opt_critic1_, opt_critic2_, opt_alpha_;
    double log_alpha_;
    double entropy_target_;
    ReplayBuffer replay_;
    RngStream rng_env_, rng_policy_, rng_batch_;
    long updates_ = 0;

    // scratch buffers reused across updates
    Eigen::MatrixXd batch_s_, batch_a_, batch_s2_;
    Eigen::VectorXd batch_r_, batch_done_;
};

/// Convenience wrapper used by the experiment harness.
LearningCurve train_sac_tacos(const ControlledSde& sde, Mode mode, int max_interactions,
                              double dt_sim, const SacConfig& cfg, long budget,
                              std::uint64_t seed);

} // namespace tacos
