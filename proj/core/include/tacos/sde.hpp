#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tacos/rng.hpp"

namespace tacos {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A controlled stochastic differential equation together with its running
/// reward rate, per-interaction cost and the box bounds on actions and
/// control-application durations. Instances are immutable once built and
/// safe to share across rollout workers.
struct ControlledSde {
    std::string name;
    int dim_x = 0;
    int dim_u = 0;
    int dim_noise = 0;

    std::function<Vec(const Vec&, const Vec&)> drift;              // state per unit time
    std::function<Mat(const Vec&, const Vec&)> diffusion;          // dim_x x dim_noise, per sqrt-time
    std::function<double(const Vec&, const Vec&)> reward_rate;     // reward per unit time
    std::function<double(const Vec&, const Vec&)> interaction_cost; // charged once per interaction

    Vec action_low;
    Vec action_high;
    double duration_min = 0.0;  // minimal control-application time, > 0
    double duration_max = 0.0;
    double horizon = 0.0;       // episode length T

    Vec initial_state;

    /// Maps a raw integrated state to its canonical representation (e.g. angle
    /// wrapping). Identity when unset. Dynamics must be invariant under it.
    std::function<Vec(const Vec&)> canonicalize;

    /// Features handed to function approximators in place of the raw state
    /// (e.g. (sin th, cos th, omega) for angles). Identity when unset.
    std::function<Vec(const Vec&)> state_features;
    int dim_features = 0; // length of state_features output (dim_x when identity)

    Vec canonical(const Vec& x) const { return canonicalize ? canonicalize(x) : x; }
    Vec features(const Vec& x) const { return state_features ? state_features(x) : x; }
    int feature_dim() const { return state_features ? dim_features : dim_x; }

    /// Basic shape/bound consistency; throws InvalidStepError on violation.
    void validate() const;
};

/// One realization of the state and integrated-reward flow over a held control.
struct FlowSample {
    Vec x_next;                 // canonical final state
    Vec x_next_raw;             // final state before canonicalization (model target)
    double delta_reward = 0.0;  // integrated reward along the realized path
    std::optional<std::vector<std::pair<double, Vec>>> path_trace;
};

struct MeanFlowResult {
    Vec mean_x_next;
    double mean_delta_reward = 0.0;
    Vec std_err; // dim_x state components followed by the reward component
};

/// Euler-Maruyama integration of `sde` from state `x` under constant control
/// `u` for exactly `tau` seconds with inner step `dt_sim` (last step shorter
/// when tau is not a multiple). The integrated reward is the left-Riemann sum
/// of reward_rate on the same partition. Throws DivergedError when any
/// component becomes non-finite and InvalidStepError on a bad step setup.
FlowSample integrate_flow(const ControlledSde& sde, const Vec& x, const Vec& u, double tau,
                          double dt_sim, RngStream& rng, bool keep_trace = false);

/// Monte-Carlo estimate of the expected state and reward flow over
/// `n_samples` independent streams derived from `base`. std_err is the
/// sample standard error per output component.
MeanFlowResult mean_flow_oracle(const ControlledSde& sde, const Vec& x, const Vec& u, double tau,
                                double dt_sim, int n_samples, const RngStream& base);

/// Weak errors of the integrator mean against a known exact mean flow, one
/// entry per dt in `dt_list` (which must be strictly decreasing and <= tau).
/// Intended for closed-form verification systems.
std::vector<std::pair<double, double>> convergence_order_check(
    const ControlledSde& sde, const Vec& x, const Vec& u, double tau,
    const std::vector<double>& dt_list,
    const std::function<Vec(const Vec&, const Vec&, double)>& exact_mean,
    const RngStream& rng, int n_samples = 1);

} // namespace tacos
