#include "tacos/envs.hpp"

#include <cmath>
#include <set>

#include "tacos/errors.hpp"

namespace tacos {

double wrap_angle(double a) {
    double w = std::fmod(a + M_PI, 2.0 * M_PI);
    if (w <= 0.0) w += 2.0 * M_PI;
    return w - M_PI; // (-pi, pi]
}

double angle_dist(double a, double b) { return wrap_angle(a - b); }

namespace {

double take(std::map<std::string, double>& m, const std::string& key, double fallback) {
    auto it = m.find(key);
    if (it == m.end()) return fallback;
    double v = it->second;
    m.erase(it);
    return v;
}

void expect_empty(const std::map<std::string, double>& m, const std::string& env) {
    if (!m.empty())
        throw ConfigError("env." + m.begin()->first, "unknown override for " + env);
}

void install_constant_cost(ControlledSde& sde, double c) {
    if (c < 0.0) throw ConfigError("env.cost", "interaction cost must be >= 0");
    sde.interaction_cost = [c](const Vec&, const Vec&) { return c; };
}

} // namespace

ControlledSde make_pendulum(PendulumTask task, const PendulumParams& p) {
    const double g_over_l = p.gravity / p.length;
    const double inv_inertia = 1.0 / (p.mass * p.length * p.length);
    const double damping = p.damping;
    const double sigma = p.sigma_env;
    const double goal = (task == PendulumTask::swing_up) ? 0.0 : M_PI;

    ControlledSde sde;
    sde.name = (task == PendulumTask::swing_up) ? "pendulum-up" : "pendulum-down";
    sde.dim_x = 2;
    sde.dim_u = 1;
    sde.dim_noise = 1;
    sde.drift = [g_over_l, damping, inv_inertia](const Vec& x, const Vec& u) {
        Vec dx(2);
        dx[0] = x[1];
        dx[1] = g_over_l * std::sin(x[0]) - damping * x[1] + u[0] * inv_inertia;
        return dx;
    };
    sde.diffusion = [sigma](const Vec&, const Vec&) {
        Mat g(2, 1);
        g << 0.0, sigma;
        return g;
    };
    sde.reward_rate = [goal](const Vec& x, const Vec& u) {
        const double a = angle_dist(x[0], goal);
        return -(a * a + 0.1 * x[1] * x[1] + 0.02 * u[0] * u[0]);
    };
    sde.interaction_cost = [](const Vec&, const Vec&) { return 0.0; };
    sde.action_low = Vec::Constant(1, -p.torque_max);
    sde.action_high = Vec::Constant(1, p.torque_max);
    sde.duration_min = p.duration_min;
    sde.duration_max = std::min(p.duration_max, p.horizon);
    sde.horizon = p.horizon;
    sde.initial_state = Vec::Zero(2);
    sde.initial_state[0] = (task == PendulumTask::swing_up) ? M_PI : 0.0;
    sde.canonicalize = [](const Vec& x) {
        Vec c = x;
        c[0] = wrap_angle(c[0]);
        return c;
    };
    sde.state_features = [](const Vec& x) {
        Vec f(3);
        f << std::sin(x[0]), std::cos(x[0]), x[1];
        return f;
    };
    sde.dim_features = 3;
    sde.validate();
    return sde;
}

ControlledSde make_greenhouse(const GreenhouseParams& p) {
    if (!(p.leak > 0.0)) throw ConfigError("env.leak", "thermal leak must be > 0");
    const double leak = p.leak, gain = p.heater_gain, t_out = p.t_outside;
    const double t_ref = p.t_target, sigma = p.sigma_env;

    ControlledSde sde;
    sde.name = "greenhouse";
    sde.dim_x = 1;
    sde.dim_u = 1;
    sde.dim_noise = 1;
    sde.drift = [leak, gain, t_out](const Vec& x, const Vec& u) {
        return Vec::Constant(1, -leak * (x[0] - t_out) + gain * u[0]);
    };
    sde.diffusion = [sigma](const Vec&, const Vec&) { return Mat::Constant(1, 1, sigma); };
    sde.reward_rate = [t_ref](const Vec& x, const Vec&) {
        const double d = x[0] - t_ref;
        return -d * d;
    };
    sde.interaction_cost = [](const Vec&, const Vec&) { return 0.0; };
    sde.action_low = Vec::Constant(1, p.input_low);
    sde.action_high = Vec::Constant(1, p.input_high);
    sde.duration_min = p.duration_min;
    sde.duration_max = std::min(p.duration_max, p.horizon);
    sde.horizon = p.horizon;
    sde.initial_state = Vec::Constant(1, p.initial_temp);
    sde.state_features = [t_ref](const Vec& x) {
        return Vec::Constant(1, (x[0] - t_ref) / 10.0);
    };
    sde.dim_features = 1;
    sde.validate();
    return sde;
}

LinearTestSystem make_linear_test(const LinearTestParams& p) {
    if (!(p.decay > 0.0)) throw ConfigError("env.decay", "decay must be > 0");
    const double a = p.decay, sigma = p.sigma;

    ControlledSde sde;
    sde.name = "linear-test";
    sde.dim_x = 1;
    sde.dim_u = 1;
    sde.dim_noise = 1;
    sde.drift = [a](const Vec& x, const Vec&) { return Vec::Constant(1, -a * x[0]); };
    sde.diffusion = [sigma](const Vec&, const Vec&) { return Mat::Constant(1, 1, sigma); };
    sde.reward_rate = [](const Vec& x, const Vec&) { return x[0]; };
    sde.interaction_cost = [](const Vec&, const Vec&) { return 0.0; };
    sde.action_low = Vec::Constant(1, -1.0);
    sde.action_high = Vec::Constant(1, 1.0);
    sde.duration_min = p.duration_min;
    sde.duration_max = std::min(p.duration_max, p.horizon);
    sde.horizon = p.horizon;
    sde.initial_state = Vec::Constant(1, p.initial_x);
    sde.validate();
    install_constant_cost(sde, p.cost);

    return LinearTestSystem{std::move(sde), a, sigma};
}

ControlledSde make_env(const std::string& name, const std::map<std::string, double>& overrides) {
    std::map<std::string, double> m = overrides;
    if (name == "pendulum-up" || name == "pendulum-down") {
        PendulumParams p;
        p.mass = take(m, "mass", p.mass);
        p.length = take(m, "length", p.length);
        p.gravity = take(m, "gravity", p.gravity);
        p.damping = take(m, "damping", p.damping);
        p.torque_max = take(m, "torque_max", p.torque_max);
        p.sigma_env = take(m, "sigma_env", p.sigma_env);
        p.horizon = take(m, "horizon", p.horizon);
        p.duration_min = take(m, "duration_min", p.duration_min);
        p.duration_max = take(m, "duration_max", std::min(p.duration_max, p.horizon));
        const double cost = take(m, "cost", 0.0);
        expect_empty(m, name);
        ControlledSde sde = make_pendulum(
            name == "pendulum-up" ? PendulumTask::swing_up : PendulumTask::swing_down, p);
        install_constant_cost(sde, cost);
        return sde;
    }
    if (name == "greenhouse") {
        GreenhouseParams p;
        p.leak = take(m, "leak", p.leak);
        p.heater_gain = take(m, "heater_gain", p.heater_gain);
        p.t_outside = take(m, "t_outside", p.t_outside);
        p.t_target = take(m, "t_target", p.t_target);
        p.input_low = take(m, "input_low", p.input_low);
        p.input_high = take(m, "input_high", p.input_high);
        p.sigma_env = take(m, "sigma_env", p.sigma_env);
        p.horizon = take(m, "horizon", p.horizon);
        p.duration_min = take(m, "duration_min", p.duration_min);
        p.duration_max = take(m, "duration_max", std::min(p.duration_max, p.horizon));
        p.initial_temp = take(m, "initial_temp", p.initial_temp);
        const double cost = take(m, "cost", 0.0);
        expect_empty(m, name);
        ControlledSde sde = make_greenhouse(p);
        install_constant_cost(sde, cost);
        return sde;
    }
    if (name == "linear-test") {
        LinearTestParams p;
        p.decay = take(m, "decay", p.decay);
        p.sigma = take(m, "sigma", p.sigma);
        p.horizon = take(m, "horizon", p.horizon);
        p.duration_min = take(m, "duration_min", p.duration_min);
        p.duration_max = take(m, "duration_max", std::min(p.duration_max, p.horizon));
        p.initial_x = take(m, "initial_x", p.initial_x);
        p.cost = take(m, "cost", p.cost);
        expect_empty(m, name);
        return make_linear_test(p).sde;
    }
    throw ConfigError("env.name", "unknown environment '" + name + "'");
}

bool is_known_env(const std::string& name) {
    static const std::set<std::string> known = {"pendulum-up", "pendulum-down", "greenhouse",
                                                "linear-test"};
    return known.count(name) > 0;
}

} // namespace tacos
