#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace tacos {

/// A state component became non-finite during integration. Carries the last
/// finite state, the elapsed time within the current flow, and the reward
/// accumulated up to that point so callers can score truncated episodes.
class DivergedError : public std::runtime_error {
public:
    DivergedError(Eigen::VectorXd last_state, double at_time, double reward_so_far)
        : std::runtime_error("integration diverged at t=" + std::to_string(at_time)),
          last_finite_state(std::move(last_state)),
          time(at_time),
          reward(reward_so_far) {}

    Eigen::VectorXd last_finite_state;
    double time;
    double reward;
};

class InvalidStepError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Duration interval (lo, hi) came out empty in bounded-interaction mode.
class InfeasibleDurationError : public std::runtime_error {
public:
    InfeasibleDurationError(double lo, double hi)
        : std::runtime_error("empty duration interval [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]"),
          lo(lo), hi(hi) {}
    double lo;
    double hi;
};

class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field_name, const std::string& message)
        : std::runtime_error(field_name + ": " + message), field(std::move(field_name)) {}
    std::string field;
};

} // namespace tacos
