#include "tacos/mdp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "tacos/errors.hpp"

namespace tacos {

namespace {
constexpr double kTimeSnap = 1e-9;
} // namespace

std::pair<double, double> feasible_duration_interval(double t_to_go, int k, int K, double t_min,
                                                     double t_max) {
    if (k < 0 || k >= K) throw UsageError("feasible_duration_interval: need 0 <= k < K");
    const int remaining_after = K - 1 - k;
    double lo = std::max(t_min, t_to_go - remaining_after * t_max);
    double hi = std::min(t_max, t_to_go - remaining_after * t_min);
    if (lo > hi) {
        if (lo - hi < kTimeSnap) return {hi, hi}; // numerically degenerate interval
        throw InfeasibleDurationError(lo, hi);
    }
    return {lo, hi};
}

TacosMdp::TacosMdp(const ControlledSde& sde, Mode mode, double dt_sim, int max_interactions)
    : sde_(&sde), mode_(mode), dt_sim_(dt_sim), max_interactions_(max_interactions) {
    if (!(dt_sim > 0.0)) throw UsageError("dt_sim must be positive");
    if (mode == Mode::bounded) {
        if (max_interactions < 1) throw UsageError("bounded mode needs K >= 1");
        // A feasible initial budget: K durations in [t_min, t_max] must cover T.
        if (max_interactions * sde.duration_max < sde.horizon - kTimeSnap ||
            max_interactions * sde.duration_min > sde.horizon + kTimeSnap)
            throw UsageError("bounded mode: K durations in [t_min, t_max] cannot sum to T");
    }
}

AugmentedState TacosMdp::reset() const {
    AugmentedState s;
    s.x = sde_->initial_state;
    s.b_last = 0.0;
    s.t_to_go = sde_->horizon;
    s.k = 0;
    return s;
}

Vec TacosMdp::features(const AugmentedState& s) const {
    const Vec xf = sde_->features(s.x);
    const int extra = (mode_ == Mode::bounded) ? 2 : 1;
    Vec f(xf.size() + extra);
    f.head(xf.size()) = xf;
    f[xf.size()] = s.t_to_go / sde_->horizon;
    if (mode_ == Mode::bounded)
        f[xf.size() + 1] = static_cast<double>(s.k) / static_cast<double>(max_interactions_);
    return f;
}

int TacosMdp::feature_dim() const {
    return sde_->feature_dim() + ((mode_ == Mode::bounded) ? 2 : 1);
}

StepResult TacosMdp::step(const AugmentedState& s, const TimedAction& a, RngStream& rng) const {
    if ((a.u.array() < sde_->action_low.array() - 1e-9).any() ||
        (a.u.array() > sde_->action_high.array() + 1e-9).any())
        throw UsageError("action outside bounds");
    return mode_ == Mode::cost ? step_cost_mode(s, a, rng) : step_bounded_mode(s, a, rng);
}

StepResult TacosMdp::step_cost_mode(const AugmentedState& s, const TimedAction& a,
                                    RngStream& rng) const {
    if (!(s.t_to_go > 0.0)) throw UsageError("step on a finished episode");

    // final fractional steps (t_to_go < t_min) run at t_to_go, full cost
    const double applied = clamp_duration(Mode::cost, *sde_, 0, s.t_to_go, s.k, a.tau);

    const double dt = std::min(dt_sim_, applied);
    FlowSample flow = integrate_flow(*sde_, s.x, a.u, applied, dt, rng);
    const double cost = sde_->interaction_cost(s.x, a.u);

    StepResult r;
    r.next_state.x = flow.x_next;
    r.next_state.b_last = flow.delta_reward;
    r.next_state.t_to_go = s.t_to_go - applied;
    if (r.next_state.t_to_go < kTimeSnap) r.next_state.t_to_go = 0.0;
    r.next_state.k = s.k + 1;
    r.reward = flow.delta_reward - cost;
    r.done = r.next_state.t_to_go == 0.0;
    r.info = {applied, std::abs(applied - a.tau) > kTimeSnap, flow.delta_reward, cost};
    r.info_raw_next = flow.x_next_raw;
    return r;
}

StepResult TacosMdp::step_bounded_mode(const AugmentedState& s, const TimedAction& a,
                                       RngStream& rng) const {
    if (s.k >= max_interactions_) throw UsageError("step on a finished episode");

    const double applied =
        clamp_duration(Mode::bounded, *sde_, max_interactions_, s.t_to_go, s.k, a.tau);

    const double dt = std::min(dt_sim_, applied);
    FlowSample flow = integrate_flow(*sde_, s.x, a.u, applied, dt, rng);

    StepResult r;
    r.next_state.x = flow.x_next;
    r.next_state.b_last = flow.delta_reward;
    r.next_state.t_to_go = s.t_to_go - applied;
    if (std::abs(r.next_state.t_to_go) < kTimeSnap) r.next_state.t_to_go = 0.0;
    r.next_state.k = s.k + 1;
    r.reward = flow.delta_reward;
    r.done = r.next_state.k == max_interactions_;
    r.info = {applied, std::abs(applied - a.tau) > kTimeSnap, flow.delta_reward, 0.0};
    r.info_raw_next = flow.x_next_raw;
    return r;
}

EpisodeRecord rollout(const TacosMdp& mdp, const Policy& policy, RngStream& rng) {
    EpisodeRecord ep;
    AugmentedState s = mdp.reset();
    // A zero-length horizon means the episode is already over.
    bool done = (mdp.mode() == Mode::cost) ? !(s.t_to_go > 0.0) : mdp.max_interactions() == 0;
    while (!done) {
        TimedAction a = policy(s);
        StepResult r;
        try {
            r = mdp.step(s, a, rng);
        } catch (const DivergedError& e) {
            ep.episode_return += e.reward - mdp.sde().interaction_cost(s.x, a.u);
            ep.episode_return_no_cost += e.reward;
            ep.truncated = true;
            break;
        }
        EpisodeStep step{s, a, r.info.applied_tau, r.reward, r.next_state, r.done};
        ep.steps.push_back(step);
        ep.transitions.rows.push_back(
            {s.x, a.u, r.info.applied_tau, r.info_raw_next, r.info.raw_delta_reward});
        ep.episode_return += r.reward;
        ep.episode_return_no_cost += r.info.raw_delta_reward;
        ep.physical_time += r.info.applied_tau;
        ep.interactions += 1;
        s = r.next_state;
        done = r.done;
    }
    return ep;
}

double clamp_duration(Mode mode, const ControlledSde& sde, int K, double t_to_go, int k,
                      double requested) {
    if (mode == Mode::cost) {
        if (t_to_go < sde.duration_min) return t_to_go;
        return std::clamp(requested, sde.duration_min, std::min(sde.duration_max, t_to_go));
    }
    auto [lo, hi] = feasible_duration_interval(t_to_go, k, K, sde.duration_min, sde.duration_max);
    return std::clamp(requested, lo, hi);
}

namespace {

/// Continuous-time value of one episode on a single global grid of step
/// dt_sim, with segment boundaries at the policy's decision instants.
double direct_continuous_value(const TacosMdp& mdp, const Policy& policy, RngStream& rng) {
    const ControlledSde& sde = mdp.sde();
    const double dt_sim = mdp.dt_sim();
    const double T = sde.horizon;

    double value = 0.0;
    double t = 0.0;
    Vec x = sde.initial_state;
    double b_last = 0.0;
    int k = 0;
    Vec noise(sde.dim_noise);

    const bool bounded = mdp.mode() == Mode::bounded;
    while (bounded ? k < mdp.max_interactions() : t < T - kTimeSnap) {
        AugmentedState s{sde.canonical(x), b_last, T - t, k};
        TimedAction a = policy(s);
        const double applied =
            clamp_duration(mdp.mode(), sde, mdp.max_interactions(), s.t_to_go, s.k, a.tau);
        if (mdp.mode() == Mode::cost) value -= sde.interaction_cost(s.x, a.u);

        double seg_reward = 0.0;
        double remaining = applied;
        while (remaining > kTimeSnap) {
            const double in_cell = std::fmod(t, dt_sim);
            double to_boundary = dt_sim - in_cell;
            if (to_boundary < kTimeSnap) to_boundary = dt_sim;
            const double dt = std::min(to_boundary, remaining);
            seg_reward += sde.reward_rate(x, a.u) * dt;
            for (int j = 0; j < sde.dim_noise; ++j) noise[j] = rng.normal();
            x += sde.drift(x, a.u) * dt + sde.diffusion(x, a.u) * (std::sqrt(dt) * noise);
            if (!x.allFinite()) throw DivergedError(s.x, t, value + seg_reward);
            t += dt;
            remaining -= dt;
        }
        value += seg_reward;
        b_last = seg_reward;
        k += 1;
    }
    return value;
}

} // namespace

Proposition1Report proposition1_check(const TacosMdp& mdp, const Policy& policy, int n_episodes,
                                      const RngStream& base) {
    double sum_m = 0.0, sumsq_m = 0.0, sum_d = 0.0, sumsq_d = 0.0;
    for (int i = 0; i < n_episodes; ++i) {
        RngStream rng_m = base.substream(2 * static_cast<std::uint64_t>(i));
        RngStream rng_d = base.substream(2 * static_cast<std::uint64_t>(i) + 1);
        const double vm = rollout(mdp, policy, rng_m).episode_return;
        const double vd = direct_continuous_value(mdp, policy, rng_d);
        sum_m += vm;
        sumsq_m += vm * vm;
        sum_d += vd;
        sumsq_d += vd * vd;
    }
    const double n = n_episodes;
    Proposition1Report rep;
    rep.mean_mdp = sum_m / n;
    rep.mean_direct = sum_d / n;
    rep.mean_abs_diff = std::abs(rep.mean_mdp - rep.mean_direct);
    const double var_m = std::max(0.0, (sumsq_m - n * rep.mean_mdp * rep.mean_mdp) / (n - 1.0));
    const double var_d = std::max(0.0, (sumsq_d - n * rep.mean_direct * rep.mean_direct) / (n - 1.0));
    rep.std_err = std::sqrt(var_m / n + var_d / n);
    rep.pass = rep.mean_abs_diff <= std::max(3.0 * rep.std_err, 1e-9);
    return rep;
}

void write_episode_steps(std::ostream& os, const EpisodeRecord& episode) {
    os.precision(17);
    for (const EpisodeStep& st : episode.steps) {
        os << st.state.k << ',' << st.state.t_to_go;
        for (int i = 0; i < st.state.x.size(); ++i) os << ',' << st.state.x[i];
        for (int i = 0; i < st.action.u.size(); ++i) os << ',' << st.action.u[i];
        os << ',' << st.applied_tau << ',' << st.reward << '\n';
    }
}

std::vector<EpisodeStep> read_episode_steps(std::istream& is, int dim_x, int dim_u) {
    std::vector<EpisodeStep> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() != static_cast<std::size_t>(4 + dim_x + dim_u))
            throw ConfigError("episode_line", "unexpected field count");
        EpisodeStep st;
        st.state.k = static_cast<int>(vals[0]);
        st.state.t_to_go = vals[1];
        st.state.x = Eigen::Map<const Vec>(vals.data() + 2, dim_x);
        st.action.u = Eigen::Map<const Vec>(vals.data() + 2 + dim_x, dim_u);
        st.applied_tau = vals[2 + dim_x + dim_u];
        st.reward = vals[3 + dim_x + dim_u];
        st.action.tau = st.applied_tau;
        out.push_back(std::move(st));
    }
    return out;
}

} // namespace tacos
