#pragma once

#include <map>
#include <string>

#include "tacos/sde.hpp"

namespace tacos {

/// Signed angular distance wrapped to (-pi, pi].
double angle_dist(double a, double b);
/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

struct PendulumParams {
    double mass = 1.0;       // kg
    double length = 1.0;     // m
    double gravity = 9.81;   // m/s^2
    double damping = 0.05;   // 1/s
    double torque_max = 2.5; // N*m, deliberately < m*g*l (under-actuated)
    double sigma_env = 0.0;  // diffusion on the angular-velocity channel
    double horizon = 10.0;   // s
    double duration_min = 0.05;
    double duration_max = 10.0; // defaults to horizon
};

enum class PendulumTask { swing_up, swing_down };

/// State (theta, omega); theta = 0 is upright and is wrapped to (-pi, pi].
/// swing_up starts hanging (theta = pi) with goal 0; swing_down starts
/// upright with goal pi. reward_rate = -(angle_dist(theta, goal)^2
/// + 0.1 omega^2 + 0.02 u^2), maximal (0) exactly at the goal.
ControlledSde make_pendulum(PendulumTask task, const PendulumParams& params = {});

struct GreenhouseParams {
    double leak = 0.2;        // thermal leak per s
    double heater_gain = 1.0; // K per unit input per s
    double t_outside = 5.0;
    double t_target = 20.0;
    double input_low = 0.0;
    double input_high = 1.0;
    double sigma_env = 0.0;
    double horizon = 20.0;
    double duration_min = 0.1;
    double duration_max = 20.0;
    double initial_temp = 25.0;
};

/// One-state thermal model: dT = (-leak*(T - t_outside) + heater_gain*u) dt
/// + sigma_env dB, reward_rate = -(T - t_target)^2.
ControlledSde make_greenhouse(const GreenhouseParams& params = {});

struct LinearTestParams {
    double decay = 1.0; // a
    double sigma = 0.5;
    double horizon = 1.0;
    double duration_min = 0.1;
    double duration_max = 1.0;
    double initial_x = 1.0;
    double cost = 0.0;
};

/// dx = -a x dt + sigma dB with reward_rate = x. The control input is inert;
/// all flow moments are known in closed form, which makes this the
/// verification oracle for the integrator, the model layer and the planners.
struct LinearTestSystem {
    ControlledSde sde;
    double decay;
    double sigma;

    double mean_flow(double x, double tau) const { return x * std::exp(-decay * tau); }
    double flow_variance(double tau) const {
        return sigma * sigma * (1.0 - std::exp(-2.0 * decay * tau)) / (2.0 * decay);
    }
    double mean_reward(double x, double tau) const {
        return x * (1.0 - std::exp(-decay * tau)) / decay;
    }
};

LinearTestSystem make_linear_test(const LinearTestParams& params = {});

/// Environment registry ("pendulum-up", "pendulum-down", "greenhouse",
/// "linear-test"). Overrides are keyed by the parameter names below; unknown
/// keys throw ConfigError.
///
///   pendulum:   mass length gravity damping torque_max sigma_env horizon
///               duration_min duration_max cost
///   greenhouse: leak heater_gain t_outside t_target input_low input_high
///               sigma_env horizon duration_min duration_max initial_temp cost
///   linear:     decay sigma horizon duration_min duration_max initial_x cost
///
/// "cost" installs a constant per-interaction cost c(x,u) = C.
ControlledSde make_env(const std::string& name, const std::map<std::string, double>& overrides = {});

bool is_known_env(const std::string& name);

} // namespace tacos
