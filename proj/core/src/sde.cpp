#include "tacos/sde.hpp"

#include <cmath>

#include "tacos/errors.hpp"

namespace tacos {

void ControlledSde::validate() const {
    if (dim_x <= 0 || dim_u <= 0 || dim_noise <= 0)
        throw InvalidStepError("sde dimensions must be positive");
    if (!(duration_min > 0.0))
        throw InvalidStepError("duration_min must be > 0");
    // horizon 0 is a legal degenerate episode (nothing ever happens)
    if (!(duration_min <= duration_max && (horizon == 0.0 || duration_max <= horizon)))
        throw InvalidStepError("need duration_min <= duration_max <= horizon");
    if (action_low.size() != dim_u || action_high.size() != dim_u)
        throw InvalidStepError("action bound size mismatch");
    if ((action_low.array() > action_high.array()).any())
        throw InvalidStepError("action_low must be <= action_high elementwise");
    if (initial_state.size() != dim_x)
        throw InvalidStepError("initial_state size mismatch");
}

FlowSample integrate_flow(const ControlledSde& sde, const Vec& x, const Vec& u, double tau,
                          double dt_sim, RngStream& rng, bool keep_trace) {
    if (!(dt_sim > 0.0)) throw InvalidStepError("dt_sim must be positive");
    if (tau < dt_sim) throw InvalidStepError("tau must be at least dt_sim");
    if (x.size() != sde.dim_x) throw InvalidStepError("state size mismatch");
    if (u.size() != sde.dim_u) throw InvalidStepError("action size mismatch");

    // ceil with a relative guard: tau arriving as (k + eps)*dt_sim must not
    // create a spurious negative-length final step
    int n_steps = static_cast<int>(std::ceil(tau / dt_sim * (1.0 - 1e-12)));
    if (n_steps < 1) n_steps = 1;

    FlowSample out;
    if (keep_trace) {
        out.path_trace.emplace();
        out.path_trace->reserve(static_cast<std::size_t>(n_steps) + 1);
        out.path_trace->emplace_back(0.0, sde.canonical(x));
    }

    Vec cur = x;
    Vec noise(sde.dim_noise);
    double reward = 0.0;
    double elapsed = 0.0;
    for (int i = 0; i < n_steps; ++i) {
        const double dt = (i + 1 == n_steps) ? std::max(tau - elapsed, 0.0) : dt_sim;
        reward += sde.reward_rate(cur, u) * dt;
        for (int j = 0; j < sde.dim_noise; ++j) noise[j] = rng.normal();
        cur += sde.drift(cur, u) * dt + sde.diffusion(cur, u) * (std::sqrt(dt) * noise);
        elapsed = (i + 1 == n_steps) ? tau : elapsed + dt;
        if (!cur.allFinite()) {
            Vec last = keep_trace && !out.path_trace->empty() ? out.path_trace->back().second
                                                              : sde.canonical(x);
            throw DivergedError(std::move(last), elapsed, reward);
        }
        if (keep_trace) out.path_trace->emplace_back(elapsed, sde.canonical(cur));
    }

    out.x_next_raw = cur;
    out.x_next = sde.canonical(cur);
    out.delta_reward = reward;
    return out;
}

MeanFlowResult mean_flow_oracle(const ControlledSde& sde, const Vec& x, const Vec& u, double tau,
                                double dt_sim, int n_samples, const RngStream& base) {
    if (n_samples < 2) throw InvalidStepError("mean_flow_oracle needs n_samples >= 2");

    const int d = sde.dim_x + 1;
    Vec sum = Vec::Zero(d);
    Vec sum_sq = Vec::Zero(d);
    for (int i = 0; i < n_samples; ++i) {
        RngStream stream = base.substream(static_cast<std::uint64_t>(i));
        FlowSample s = integrate_flow(sde, x, u, tau, dt_sim, stream);
        Vec y(d);
        y.head(sde.dim_x) = s.x_next;
        y[sde.dim_x] = s.delta_reward;
        sum += y;
        sum_sq += y.cwiseProduct(y);
    }

    const double n = static_cast<double>(n_samples);
    Vec mean = sum / n;
    Vec var = (sum_sq - n * mean.cwiseProduct(mean)) / (n - 1.0);
    var = var.cwiseMax(0.0);

    MeanFlowResult r;
    r.mean_x_next = mean.head(sde.dim_x);
    r.mean_delta_reward = mean[sde.dim_x];
    r.std_err = (var / n).cwiseSqrt();
    return r;
}

std::vector<std::pair<double, double>> convergence_order_check(
    const ControlledSde& sde, const Vec& x, const Vec& u, double tau,
    const std::vector<double>& dt_list,
    const std::function<Vec(const Vec&, const Vec&, double)>& exact_mean,
    const RngStream& rng, int n_samples) {
    for (std::size_t i = 0; i + 1 < dt_list.size(); ++i)
        if (!(dt_list[i] > dt_list[i + 1]))
            throw InvalidStepError("dt_list must be strictly decreasing");
    for (double dt : dt_list)
        if (dt > tau) throw InvalidStepError("dt entries must be <= tau");

    const Vec truth = exact_mean(x, u, tau);
    std::vector<std::pair<double, double>> out;
    out.reserve(dt_list.size());
    for (std::size_t i = 0; i < dt_list.size(); ++i) {
        Vec mean = Vec::Zero(sde.dim_x);
        for (int s = 0; s < n_samples; ++s) {
            RngStream stream = rng.substream(i * 1000003ULL + static_cast<std::uint64_t>(s));
            mean += integrate_flow(sde, x, u, tau, dt_list[i], stream).x_next;
        }
        mean /= static_cast<double>(n_samples);
        out.emplace_back(dt_list[i], (mean - truth).norm());
    }
    return out;
}

} // namespace tacos
