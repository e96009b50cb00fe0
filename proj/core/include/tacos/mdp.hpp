#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "tacos/sde.hpp"

namespace tacos {

enum class Mode { cost, bounded };

/// State of the reduced discrete-time MDP: system state, last integrated
/// reward, remaining time budget, and (bounded mode) interactions used.
struct AugmentedState {
    Vec x;
    double b_last = 0.0;
    double t_to_go = 0.0;
    int k = 0;
};

/// Control together with the requested application duration.
struct TimedAction {
    Vec u;
    double tau = 0.0;
};

struct StepInfo {
    double applied_tau = 0.0;
    bool clamped = false;
    double raw_delta_reward = 0.0;
    double cost_paid = 0.0;
};

struct StepResult {
    AugmentedState next_state;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
    Vec info_raw_next; // pre-canonicalization next state, kept for model targets
};

/// One recorded interaction: z = (x, u, applied_tau) -> y = (x'_raw, db).
struct TransitionRow {
    Vec x;
    Vec u;
    double tau = 0.0;
    Vec x_next_raw;
    double delta_reward = 0.0;
};

struct TransitionDataset {
    std::vector<TransitionRow> rows;
    void append(const TransitionDataset& other) {
        rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    }
    std::size_t size() const { return rows.size(); }
};

struct EpisodeStep {
    AugmentedState state;
    TimedAction action;
    double applied_tau = 0.0;
    double reward = 0.0;
    AugmentedState next_state;
    bool done = false;
};

struct EpisodeRecord {
    std::vector<EpisodeStep> steps;
    double episode_return = 0.0;         // sum of MDP rewards (cost included in cost mode)
    double episode_return_no_cost = 0.0; // integrated reward only
    int interactions = 0;
    double physical_time = 0.0;
    bool truncated = false; // diverged integration aborted the episode
    TransitionDataset transitions;
};

/// Duration interval that keeps a bounded-interaction episode completable:
/// every continuation can still spend exactly t_to_go over the remaining
/// K - k interactions with each duration in [t_min, t_max]. Throws
/// InfeasibleDurationError when empty.
std::pair<double, double> feasible_duration_interval(double t_to_go, int k, int K, double t_min,
                                                     double t_max);

/// Duration actually applied for a requested tau, replicating the step clamp
/// rules of the given mode (K is ignored in cost mode).
double clamp_duration(Mode mode, const ControlledSde& sde, int K, double t_to_go, int k,
                      double requested);

/// The reduced MDP over augmented states. Stateless apart from the wrapped
/// SDE; safe to share across workers that own their RngStreams.
class TacosMdp {
public:
    TacosMdp(const ControlledSde& sde, Mode mode, double dt_sim, int max_interactions = 0);

    AugmentedState reset() const;
    StepResult step(const AugmentedState& s, const TimedAction& a, RngStream& rng) const;

    const ControlledSde& sde() const { return *sde_; }
    Mode mode() const { return mode_; }
    double dt_sim() const { return dt_sim_; }
    int max_interactions() const { return max_interactions_; }

    /// Policy input features: state_features(x), t_to_go/T and, in bounded
    /// mode, k/K.
    Vec features(const AugmentedState& s) const;
    int feature_dim() const;

private:
    StepResult step_cost_mode(const AugmentedState& s, const TimedAction& a, RngStream& rng) const;
    StepResult step_bounded_mode(const AugmentedState& s, const TimedAction& a,
                                 RngStream& rng) const;

    const ControlledSde* sde_;
    Mode mode_;
    double dt_sim_;
    int max_interactions_; // K, bounded mode only
};

using Policy = std::function<TimedAction(const AugmentedState&)>;

/// Runs one full episode. Diverged integration truncates the episode and
/// keeps the reward accumulated so far.
EpisodeRecord rollout(const TacosMdp& mdp, const Policy& policy, RngStream& rng);

struct Proposition1Report {
    double mean_mdp = 0.0;
    double mean_direct = 0.0;
    double mean_abs_diff = 0.0; // |mean_mdp - mean_direct|
    double std_err = 0.0;       // SE of the difference of means
    bool pass = false;          // within 3 standard errors
};

/// Compares the augmented-MDP Monte-Carlo value against a direct
/// continuous-time simulation of the same policy: one global fine grid,
/// rewards integrated continuously, interaction costs charged at decision
/// instants. The two routes agree in expectation when the reduction is
/// value-preserving.
Proposition1Report proposition1_check(const TacosMdp& mdp, const Policy& policy, int n_episodes,
                                      const RngStream& base);

/// Episode-step serialization: one step per line,
/// "k,t_to_go,x...,u...,applied_tau,reward".
void write_episode_steps(std::ostream& os, const EpisodeRecord& episode);
std::vector<EpisodeStep> read_episode_steps(std::istream& is, int dim_x, int dim_u);

} // namespace tacos
