#include "tacos/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tacos/errors.hpp"

namespace tacos {

CemPlanner::CemPlanner(const ControlledSde& sde, Mode mode, int max_interactions,
                       PlannerConfig cfg)
    : sde_(&sde), mode_(mode), max_interactions_(max_interactions), cfg_(cfg) {
    if (cfg_.population < 2 || cfg_.elites < 1 || cfg_.elites > cfg_.population)
        throw UsageError("CemPlanner: bad population/elite sizes");
    reset();
}

int CemPlanner::decision_dim() const {
    // (u, tau) plus one hallucinated control per model output; the eta rows
    // are sampled for every planner kind so that equal seeds give identical
    // candidate (u, tau) draws across kinds.
    return sde_->dim_u + 1 + sde_->dim_x + 1;
}

void CemPlanner::reset() {
    last_plan_ = Mat::Zero(decision_dim(), cfg_.horizon);
    have_last_plan_ = false;
    injected_.reset();
}

namespace {

inline double decode_tau(double v, const ControlledSde& sde) {
    const double lo = std::log(sde.duration_min), hi = std::log(sde.duration_max);
    return std::exp(lo + 0.5 * (std::clamp(v, -1.0, 1.0) + 1.0) * (hi - lo));
}

inline double decode_u(double v, const ControlledSde& sde, int i) {
    const double c = 0.5 * (sde.action_high[i] + sde.action_low[i]);
    const double h = 0.5 * (sde.action_high[i] - sde.action_low[i]);
    return c + h * std::clamp(v, -1.0, 1.0);
}

} // namespace

double CemPlanner::rollout_value(const FlowModel& model, double beta, const AugmentedState& s0,
                                 const Mat& decisions, RngStream* ts_rng) const {
    const int du = sde_->dim_u;
    const int dout = sde_->dim_x + 1;
    Vec x = s0.x;
    double t_to_go = s0.t_to_go;
    int k = s0.k;
    double value = 0.0;
    Vec u(du), mu, sigma;
    Vec last_u = Vec::Zero(du);

    for (int j = 0; j < decisions.cols(); ++j) {
        const bool done = (mode_ == Mode::cost) ? t_to_go <= 1e-9 : k >= max_interactions_;
        if (done) return value;
        for (int i = 0; i < du; ++i) u[i] = decode_u(decisions(i, j), *sde_, i);
        const double tau =
            clamp_duration(mode_, *sde_, max_interactions_, t_to_go, k, decode_tau(decisions(du, j), *sde_));
        model.posterior(x, u, tau, mu, sigma);
        Vec offset = Vec::Zero(dout);
        if (beta != 0.0) {
            for (int d = 0; d < dout; ++d) {
                const double eta = std::clamp(decisions(du + 1 + d, j), -1.0, 1.0);
                offset[d] = beta * eta * sigma[d];
            }
        }
        if (ts_rng) {
            for (int d = 0; d < dout; ++d) offset[d] = ts_rng->normal() * sigma[d];
        }
        if (mode_ == Mode::cost) value -= sde_->interaction_cost(x, u);
        value += mu[dout - 1] + offset[dout - 1];
        x = sde_->canonical(mu.head(sde_->dim_x) + offset.head(sde_->dim_x));
        t_to_go -= tau;
        if (t_to_go < 1e-9) t_to_go = 0.0;
        k += 1;
        last_u = u;
    }

    // Tail beyond the horizon: hold the last control and extrapolate the
    // model's reward rate over the uncovered time.
    const bool active = (mode_ == Mode::cost) ? t_to_go > 1e-9 : k < max_interactions_;
    if (active && t_to_go > 1e-9) {
        const double tau_hold = std::clamp(t_to_go, sde_->duration_min, sde_->duration_max);
        model.posterior(x, last_u, tau_hold, mu, sigma);
        value += mu[dout - 1] * (t_to_go / tau_hold);
        if (mode_ == Mode::cost) value -= sde_->interaction_cost(x, last_u);
    }
    return value;
}

double CemPlanner::evaluate_mean_sequence(const FlowModel& model, const AugmentedState& s,
                                          const Mat& decisions) const {
    return rollout_value(model, 0.0, s, decisions, nullptr);
}

CemPlanner::PlanResult CemPlanner::plan(const FlowModel& model, double beta,
                                        const AugmentedState& s, RngStream& rng) {
    const int dims = decision_dim();
    const int H = cfg_.horizon;
    const int du = sde_->dim_u;
    const int dout = sde_->dim_x + 1;
    const int pop = cfg_.population;
    const bool optimistic = cfg_.kind == PlannerKind::optimistic;
    const bool ts = cfg_.kind == PlannerKind::trajectory_sampling;
    const double beta_eff = optimistic ? beta : 0.0;
    const int particles = ts ? cfg_.ts_samples : 1;

    Mat mean;
    if (cfg_.warm_start && have_last_plan_) {
        mean = Mat::Zero(dims, H);
        mean.leftCols(H - 1) = last_plan_.rightCols(H - 1); // shift one step
    } else {
        mean = Mat::Zero(dims, H);
    }
    Mat stddev = Mat::Constant(dims, H, cfg_.init_std);

    std::vector<Mat> cands(pop, Mat(dims, H));
    Vec values(pop);
    Mat best_seq;
    double best_value = -std::numeric_limits<double>::infinity();

    // batched per-step rollout state across the population x particles
    const Eigen::Index cols = static_cast<Eigen::Index>(pop) * particles;
    Mat states(sde_->dim_x, cols), controls(du, cols), mu, sigma;
    Vec taus(cols), t_to_go(cols), part_value(cols);
    Eigen::VectorXi ks(cols);
    std::vector<char> done(cols);
    Mat last_controls(du, cols);

    for (int iter = 0; iter < cfg_.iterations; ++iter) {
        for (int c = 0; c < pop; ++c) {
            if (c == 0) {
                cands[c] = mean;
            } else if (c == 1 && injected_ && injected_->rows() == dims &&
                       injected_->cols() == H) {
                cands[c] = *injected_;
            } else {
                for (int jj = 0; jj < H; ++jj)
                    for (int d = 0; d < dims; ++d)
                        cands[c](d, jj) =
                            std::clamp(mean(d, jj) + stddev(d, jj) * rng.normal(), -1.0, 1.0);
            }
        }

        for (Eigen::Index c = 0; c < cols; ++c) {
            states.col(c) = s.x;
            t_to_go[c] = s.t_to_go;
            ks[c] = s.k;
            part_value[c] = 0.0;
            done[c] = 0;
        }
        for (int j = 0; j < H; ++j) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                const int ci = static_cast<int>(c) / particles;
                const bool fin = (mode_ == Mode::cost) ? t_to_go[c] <= 1e-9
                                                       : ks[c] >= max_interactions_;
                done[c] = fin ? 1 : 0;
                for (int i = 0; i < du; ++i) controls(i, c) = decode_u(cands[ci](i, j), *sde_, i);
                taus[c] = fin ? sde_->duration_min
                              : clamp_duration(mode_, *sde_, max_interactions_, t_to_go[c], ks[c],
                                               decode_tau(cands[ci](du, j), *sde_));
            }
            model.posterior_batch(states, controls, taus, mu, sigma);
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (done[c]) continue;
                const int ci = static_cast<int>(c) / particles;
                Vec offset = Vec::Zero(dout);
                if (beta_eff != 0.0)
                    for (int d = 0; d < dout; ++d)
                        offset[d] = beta_eff * std::clamp(cands[ci](du + 1 + d, j), -1.0, 1.0) *
                                    sigma(d, c);
                if (ts)
                    for (int d = 0; d < dout; ++d) offset[d] = rng.normal() * sigma(d, c);
                if (mode_ == Mode::cost)
                    part_value[c] -= sde_->interaction_cost(states.col(c), controls.col(c));
                part_value[c] += mu(dout - 1, c) + offset[dout - 1];
                states.col(c) =
                    sde_->canonical(mu.col(c).head(sde_->dim_x) + offset.head(sde_->dim_x));
                t_to_go[c] -= taus[c];
                if (t_to_go[c] < 1e-9) t_to_go[c] = 0.0;
                ks[c] += 1;
                last_controls.col(c) = controls.col(c);
            }
        }
        // tail completion for rollouts that did not exhaust the budget
        {
            bool any_active = false;
            for (Eigen::Index c = 0; c < cols; ++c) {
                const bool active = (mode_ == Mode::cost) ? t_to_go[c] > 1e-9
                                                          : ks[c] < max_interactions_;
                done[c] = active && t_to_go[c] > 1e-9 ? 0 : 1;
                if (!done[c]) any_active = true;
                taus[c] = std::clamp(std::max(t_to_go[c], sde_->duration_min),
                                     sde_->duration_min, sde_->duration_max);
            }
            if (any_active) {
                model.posterior_batch(states, last_controls, taus, mu, sigma);
                for (Eigen::Index c = 0; c < cols; ++c) {
                    if (done[c]) continue;
                    part_value[c] += mu(dout - 1, c) * (t_to_go[c] / taus[c]);
                    if (mode_ == Mode::cost)
                        part_value[c] -=
                            sde_->interaction_cost(states.col(c), last_controls.col(c));
                }
            }
        }
        for (int c = 0; c < pop; ++c) {
            double v = 0.0;
            for (int p = 0; p < particles; ++p) v += part_value[c * particles + p];
            values[c] = v / particles;
        }

        std::vector<int> order(pop);
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + cfg_.elites, order.end(),
                          [&](int a, int b) { return values[a] > values[b]; });
        if (values[order[0]] > best_value) {
            best_value = values[order[0]];
            best_seq = cands[order[0]];
        }
        for (int jj = 0; jj < H; ++jj) {
            for (int d = 0; d < dims; ++d) {
                double m = 0.0;
                for (int e = 0; e < cfg_.elites; ++e) m += cands[order[e]](d, jj);
                m /= cfg_.elites;
                double var = 0.0;
                for (int e = 0; e < cfg_.elites; ++e) {
                    const double diff = cands[order[e]](d, jj) - m;
                    var += diff * diff;
                }
                mean(d, jj) = m;
                stddev(d, jj) = std::max(std::sqrt(var / cfg_.elites), cfg_.min_std);
            }
        }
    }

    PlanResult out;
    if (!std::isfinite(best_value)) {
        // fall back to planning on the mean for this step
        CemPlanner fallback(*sde_, mode_, max_interactions_, cfg_);
        fallback.cfg_.kind = PlannerKind::mean;
        out = fallback.plan(model, 0.0, s, rng);
        out.fallback = true;
        return out;
    }

    last_plan_ = best_seq;
    have_last_plan_ = true;
    injected_.reset();

    out.planned_value = best_value;
    out.action.u.resize(du);
    for (int i = 0; i < du; ++i) out.action.u[i] = decode_u(best_seq(i, 0), *sde_, i);
    out.action.tau = decode_tau(best_seq(du, 0), *sde_);
    return out;
}

} // namespace tacos
